import math

import numpy as np
import pytest

from wcss.occupancy import OccupancyRealization
from wcss.sensing import (
    MeasurementRecord,
    SensingSystem,
    epsilon_for_noise,
    generate_sensing_matrix,
    measure,
    sensing_snr,
)
from wcss.signal import NoiseModel, SpectrumVector, idft, synthesize_spectrum


class TestGenerateSensingMatrix:
    def test_entries(self):
        s = generate_sensing_matrix(4, 16, np.random.default_rng(0))
        assert set(np.unique(s.psi)) <= {-0.5, 0.5}

    def test_entry_mean(self):
        m, n = 64, 256
        s = generate_sensing_matrix(m, n, np.random.default_rng(1))
        assert abs(s.psi.mean()) <= 3 * (1 / math.sqrt(m)) / math.sqrt(m * n)

    def test_row_and_column_norms(self):
        m, n = 35, 256
        s = generate_sensing_matrix(m, n, np.random.default_rng(2))
        # every entry squares to 1/m: rows sum n of them, columns m of them
        np.testing.assert_allclose(np.sum(s.psi**2, axis=1), n / m, rtol=1e-12)
        np.testing.assert_allclose(np.sum(s.psi**2, axis=0), 1.0, rtol=1e-12)

    def test_full_rank(self):
        s = generate_sensing_matrix(35, 256, np.random.default_rng(3))
        assert np.linalg.svd(s.psi, compute_uv=False).min() > 1e-8

    def test_operator_is_psi_times_inverse_dft(self):
        m, n = 12, 32
        s = generate_sensing_matrix(m, n, np.random.default_rng(4))
        finv = idft(np.eye(n), axis=0)  # columns are idft of unit vectors
        np.testing.assert_allclose(s.operator, s.psi @ finv, atol=1e-10)
        x = np.random.default_rng(5).standard_normal(n) + 0j
        np.testing.assert_allclose(s.apply(x), s.psi @ idft(x), atol=1e-10)

    def test_adjoint(self):
        s = generate_sensing_matrix(10, 32, np.random.default_rng(6))
        rng = np.random.default_rng(7)
        x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        r = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        assert np.vdot(r, s.apply(x)) == pytest.approx(np.vdot(s.adjoint(r), x), abs=1e-10)

    @pytest.mark.parametrize("m, n", [(0, 8), (9, 8)])
    def test_domain(self, m, n):
        with pytest.raises(ValueError):
            generate_sensing_matrix(m, n, np.random.default_rng(0))

    def test_deterministic(self):
        a = generate_sensing_matrix(8, 32, np.random.default_rng(9))
        b = generate_sensing_matrix(8, 32, np.random.default_rng(9))
        np.testing.assert_array_equal(a.psi, b.psi)


def _x0(n, rng, k=5):
    occ = np.zeros(n, bool)
    occ[rng.choice(n, k, replace=False)] = True
    real = OccupancyRealization(occ)
    return synthesize_spectrum(real, (1.0, 2.0), rng), real


class TestMeasure:
    def test_noiseless(self):
        rng = np.random.default_rng(0)
        s = generate_sensing_matrix(16, 64, rng)
        x0, real = _x0(64, rng)
        rec = measure(s, x0, NoiseModel(0.0), rng, realization=real)
        np.testing.assert_array_equal(rec.eta, 0)
        np.testing.assert_array_equal(rec.y, s.apply(x0.values))
        assert rec.realization is real

    def test_zero_input(self):
        rng = np.random.default_rng(1)
        s = generate_sensing_matrix(16, 64, rng)
        rec = measure(s, SpectrumVector(np.zeros(64)), NoiseModel(0.0), rng)
        np.testing.assert_array_equal(rec.y, 0)

    def test_y_is_signal_plus_eta(self):
        rng = np.random.default_rng(2)
        s = generate_sensing_matrix(16, 64, rng)
        x0, _ = _x0(64, rng)
        rec = measure(s, x0, NoiseModel(0.3), rng)
        np.testing.assert_array_equal(rec.y, s.apply(x0.values) + rec.eta)

    def test_noise_energy(self):
        rng = np.random.default_rng(3)
        n, sigma2 = 256, 0.5
        s = generate_sensing_matrix(35, n, rng)
        zero = SpectrumVector(np.zeros(n))
        energy = np.mean([np.linalg.norm(measure(s, zero, NoiseModel(sigma2), rng).eta) ** 2 for _ in range(10_000)])
        assert abs(energy / (n * sigma2) - 1) < 0.02

    def test_reproducible(self):
        s = generate_sensing_matrix(16, 64, np.random.default_rng(4))
        x0, _ = _x0(64, np.random.default_rng(5))
        a = measure(s, x0, NoiseModel(1.0), np.random.default_rng(6))
        b = measure(s, x0, NoiseModel(1.0), np.random.default_rng(6))
        np.testing.assert_array_equal(a.y, b.y)

    def test_dimension_mismatch(self):
        s = generate_sensing_matrix(4, 16, np.random.default_rng(0))
        with pytest.raises(ValueError):
            measure(s, SpectrumVector(np.zeros(8)), NoiseModel(0.0), np.random.default_rng(0))


class TestSensingSnr:
    def _record(self, signal_energy, noise_energy):
        # identity psi makes ||A x0|| = ||x0||
        s = SensingSystem.from_psi(np.eye(4))
        x0 = SpectrumVector(np.array([math.sqrt(signal_energy), 0, 0, 0]))
        eta = np.array([math.sqrt(noise_energy), 0, 0, 0], dtype=complex)
        return MeasurementRecord(y=s.apply(x0.values) + eta, eta=eta, x0=x0), s

    def test_twenty_db(self):
        rec, s = self._record(100.0, 1.0)
        assert sensing_snr(rec, s) == pytest.approx(20.0, abs=1e-12)

    def test_equal_powers(self):
        rec, s = self._record(3.0, 3.0)
        assert sensing_snr(rec, s) == pytest.approx(0.0, abs=1e-12)

    def test_homogeneity(self):
        rng = np.random.default_rng(0)
        s = generate_sensing_matrix(16, 64, rng)
        x0, _ = _x0(64, rng)
        rec = measure(s, x0, NoiseModel(0.1), rng)
        louder = MeasurementRecord(y=rec.y, eta=rec.eta, x0=SpectrumVector(10 * x0.values))
        assert sensing_snr(louder, s) - sensing_snr(rec, s) == pytest.approx(20.0, abs=1e-9)

    def test_noiseless_is_infinite(self):
        rec, s = self._record(1.0, 0.0)
        assert sensing_snr(rec, s) == math.inf


class TestEpsilonForNoise:
    def test_no_noise(self):
        assert epsilon_for_noise(NoiseModel(0.0), 256) == 0.0

    def test_concentrates_at_sqrt_n_sigma2(self):
        eps = epsilon_for_noise(NoiseModel(1.0), 256, quantile=0.5, trials=2000)
        assert abs(eps / 16.0 - 1) < 0.05

    def test_default_quantile_near_sqrt_n(self):
        eps = epsilon_for_noise(NoiseModel(1.0), 256)
        # 95th percentile of a chi distribution with 512 real degrees of freedom
        assert 16.0 < eps < 16.0 * 1.06

    def test_quantile_ordering(self):
        lo = epsilon_for_noise(NoiseModel(1.0), 64, quantile=0.5, trials=500, rng=1)
        hi = epsilon_for_noise(NoiseModel(1.0), 64, quantile=0.99, trials=500, rng=1)
        assert lo < hi

    def test_coverage_with_projection(self):
        n, m = 256, 35
        eps = epsilon_for_noise(NoiseModel(1.0), n, 0.95, 2000, m=m, rng=10)
        rng = np.random.default_rng(11)
        zero = SpectrumVector(np.zeros(n))
        hits = 0
        draws = 2000
        for _ in range(draws):
            s = generate_sensing_matrix(m, n, rng)
            hits += np.linalg.norm(measure(s, zero, NoiseModel(1.0), rng).eta) <= eps
        assert abs(hits / draws - 0.95) <= 0.02

    def test_bad_quantile(self):
        with pytest.raises(ValueError):
            epsilon_for_noise(NoiseModel(1.0), 8, quantile=1.0)
