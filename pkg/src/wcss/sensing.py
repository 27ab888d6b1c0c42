"""Bernoulli sensing matrix, measurement operator and noisy measurements."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .occupancy import OccupancyRealization
from .signal import NoiseModel, SpectrumVector, idft, sample_time_noise

__all__ = [
    "SensingSystem",
    "MeasurementRecord",
    "generate_sensing_matrix",
    "measure",
    "sensing_snr",
    "epsilon_for_noise",
]


@dataclass(frozen=True)
class SensingSystem:
    """Real ``m x n`` sensing matrix ``psi`` and the complex operator ``psi @ F^-1``.

    Use :func:`generate_sensing_matrix` for random Bernoulli systems or
    :meth:`from_psi` to wrap an arbitrary real matrix.
    """

    psi: np.ndarray
    operator: np.ndarray

    @classmethod
    def from_psi(cls, psi: np.ndarray) -> "SensingSystem":
        psi = np.array(psi, dtype=float)
        if psi.ndim != 2:
            raise ValueError(f"psi must be 2-D, got shape {psi.shape}")
        # F^-1 is symmetric, so row i of psi @ F^-1 is idft(psi[i])
        operator = idft(psi, axis=1)
        psi.setflags(write=False)
        operator.setflags(write=False)
        return cls(psi, operator)

    @property
    def m(self) -> int:
        return self.psi.shape[0]

    @property
    def n(self) -> int:
        return self.psi.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.operator @ x

    def adjoint(self, r: np.ndarray) -> np.ndarray:
        return self.operator.conj().T @ r


@dataclass(frozen=True)
class MeasurementRecord:
    """Compressed measurements together with the ground truth that produced them."""

    y: np.ndarray
    eta: np.ndarray
    x0: SpectrumVector
    realization: OccupancyRealization | None = None


def generate_sensing_matrix(m: int, n: int, rng: np.random.Generator) -> SensingSystem:
    """Draw an ``m x n`` matrix of equiprobable ``+-1/sqrt(m)`` entries."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    signs = rng.integers(0, 2, size=(m, n)) * 2 - 1
    return SensingSystem.from_psi(signs / np.sqrt(m))


def measure(
    system: SensingSystem,
    x0: SpectrumVector,
    noise: NoiseModel,
    rng: np.random.Generator,
    realization: OccupancyRealization | None = None,
) -> MeasurementRecord:
    """Compress ``x0`` plus frequency-domain noise: ``y = A x0 + psi F^-1 w_f``.

    White noise is drawn in the time domain; under the unitary DFT that is
    the same law as drawing ``w_f`` and transforming it back.
    """
    if x0.n != system.n:
        raise ValueError(f"spectrum has {x0.n} bands, system expects {system.n}")
    w = sample_time_noise(system.n, noise, rng)
    eta = system.psi @ w
    y = system.apply(x0.values) + eta
    return MeasurementRecord(y=y, eta=eta, x0=x0, realization=realization)


def sensing_snr(record: MeasurementRecord, system: SensingSystem) -> float:
    """``10 log10(||A x0||^2 / ||eta||^2)`` in dB; ``inf`` for noiseless records."""
    signal = float(np.linalg.norm(system.apply(record.x0.values)) ** 2)
    noise = float(np.linalg.norm(record.eta) ** 2)
    if noise == 0:
        return float("inf")
    if signal == 0:
        return float("-inf")
    return 10.0 * np.log10(signal / noise)


def epsilon_for_noise(
    noise: NoiseModel,
    n: int,
    quantile: float = 0.95,
    trials: int = 2000,
    m: int | None = None,
    rng: np.random.Generator | int | None = 0,
) -> float:
    """Empirical ``quantile`` of the sensing-noise norm ``||eta||_2``.

    With ``m`` set, each draw uses a fresh ``m x n`` Bernoulli matrix, so the
    quantile reflects the norm spread of ``psi @ w``. With ``m=None`` the
    projection is taken as norm-preserving and the quantile is that of the
    ``n``-dimensional noise vector itself. Both have ``E||eta||^2 = n sigma2``.
    """
    if not 0 < quantile < 1:
        raise ValueError(f"quantile must lie in (0, 1), got {quantile}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if noise.sigma2 == 0:
        return 0.0
    rng = np.random.default_rng(rng)
    norms = np.empty(trials)
    for t in range(trials):
        w = sample_time_noise(n, noise, rng)
        if m is not None:
            signs = rng.integers(0, 2, size=(m, n)) * 2 - 1
            w = (signs @ w) / np.sqrt(m)
        norms[t] = np.linalg.norm(w)
    return float(np.quantile(norms, quantile))
