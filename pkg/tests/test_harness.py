import math
from pathlib import Path

import numpy as np
import pytest

from wcss.harness import (
    SCHEMAS,
    ConfigError,
    ResultTable,
    emit_csv,
    load_config,
    parse_config,
    read_csv,
    run_bound_curve,
    run_mse_sweep,
    run_roc,
    run_weights,
    trial_rng,
)
from wcss.occupancy import occupancy_pmf
from wcss.recovery import SolverOptions

from oracles import closed_form_bound

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """
[occupancy]
n = 32
block_sizes = 16, 16
block_prob = 0.2, 0.05

[sensing]
m = 16
epsilon_trials = 200

[signal]
snr_grid = 10, 30

[experiment]
trials = 6
master_seed = 7
"""


def small(**changes):
    return parse_config(SMALL).replace(**changes)


class TestConfig:
    def test_reference_config(self):
        cfg = load_config(CONFIGS / "paper.cfg")
        assert cfg.n == 256
        assert cfg.block_sizes == (64, 64, 64, 64)
        np.testing.assert_array_equal(cfg.band_prob, [0.1] * 64 + [0.01] * 64 + [0.1] * 64 + [0.01] * 64)
        assert cfg.resolved_m() == 35
        assert cfg.resolved_k0() == 25
        assert cfg.snr_grid == (5, 10, 15, 20, 25)
        assert cfg.trials == 200

    def test_roc_config(self):
        cfg = load_config(CONFIGS / "paper_roc.cfg")
        assert cfg.resolved_m() == 27
        assert cfg.snr_grid == (16.5,)
        assert cfg.trials == 500
        assert cfg.pf_grid == tuple(round(0.05 * i, 2) for i in range(1, 11))

    def test_block_sum_mismatch(self):
        with pytest.raises(ConfigError, match="block_sizes"):
            parse_config(SMALL.replace("16, 16", "16, 10"))

    def test_zero_trials(self):
        with pytest.raises(ConfigError, match="trials"):
            parse_config(SMALL.replace("trials = 6", "trials = 0"))

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config(SMALL + "bogus = 1\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="extra"):
            parse_config(SMALL + "[extra]\nx = 1\n")

    def test_parse_error_has_line(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("[occupancy]\nn = 4\nthis line has no separator\n", "broken.cfg")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="m"):
            parse_config(SMALL.replace("m = 16", "m = lots"))

    def test_m_out_of_range(self):
        with pytest.raises(ConfigError):
            parse_config(SMALL.replace("m = 16", "m = 40"))

    def test_probability_forms_exclusive(self):
        with pytest.raises(ConfigError):
            parse_config(SMALL.replace("block_prob = 0.2, 0.05", "block_prob = 0.2, 0.05\nband_prob = 0.1"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")

    def test_derived_m(self):
        cfg = parse_config(SMALL.replace("m = 16", "k0 = 4\nc = 1.0"))
        assert cfg.resolved_m() == math.ceil(4 * math.log(32 / 4))

    def test_solver_section(self):
        cfg = parse_config(SMALL + "[solver]\npenalty = 2.5\nmax_iterations = 10\n")
        assert cfg.solver == SolverOptions(max_iterations=10, penalty=2.5)

    def test_resolved_ini_round_trips(self):
        cfg = load_config(CONFIGS / "paper.cfg")
        text = cfg.to_ini()
        assert text.startswith("# resolved: m = 35, k0 = 25")
        assert parse_config(text) == cfg


class TestAnalyticTables:
    def test_bound_curve(self):
        cfg = load_config(CONFIGS / "paper.cfg")
        t = run_bound_curve(cfg)
        assert t.columns == SCHEMAS["bound"]
        assert t.column("k0") == list(range(15, 46))
        row = t.where(k0=25)[0]
        assert row["bound"] == pytest.approx(closed_form_bound(14.08, 25), rel=1e-12)
        assert abs(row["bound"] - 0.9678) < 2e-4
        b = t.column("bound")
        assert all(y >= x for x, y in zip(b, b[1:]))
        assert all(e >= bnd for e, bnd in zip(t.column("exact_tail"), b))
        cdf = np.cumsum(occupancy_pmf(cfg.profile))
        np.testing.assert_allclose(t.column("exact_tail"), np.minimum(cdf[15:46], 1.0), rtol=1e-12)

    def test_bound_needs_positive_mean(self):
        with pytest.raises(ValueError):
            run_bound_curve(small(band_prob=(0.0,) * 32))

    def test_weights_reference(self):
        t = run_weights(load_config(CONFIGS / "paper.cfg"))
        assert t.column("block") == [1, 2, 3, 4]
        np.testing.assert_allclose(t.column("k_bar"), [6.4, 0.64, 6.4, 0.64], rtol=1e-12)
        np.testing.assert_allclose(t.column("omega"), [0.0455, 0.4545, 0.0455, 0.4545], atol=1e-4)

    def test_weights_uniform(self):
        t = run_weights(small(band_prob=(0.1,) * 32))
        np.testing.assert_allclose(t.column("omega"), [0.5, 0.5], rtol=1e-12)

    def test_weights_single_block(self):
        t = run_weights(small(block_sizes=(32,)))
        assert t.column("omega") == [1.0]


class TestTrialStreams:
    def test_independent_of_order(self):
        a = trial_rng(1, "mse", 3).random(4)
        trial_rng(1, "mse", 2).random(100)
        np.testing.assert_array_equal(a, trial_rng(1, "mse", 3).random(4))

    def test_distinct(self):
        base = trial_rng(1, "mse", 0).random()
        assert base != trial_rng(1, "mse", 1).random()
        assert base != trial_rng(2, "mse", 0).random()
        assert base != trial_rng(1, "roc", 0).random()


class TestMseSweep:
    def test_noiseless_overdetermined(self):
        cfg = small(m=32, snr_grid=(), sigma2=0.0, trials=1, methods=("weighted_l1",))
        t = run_mse_sweep(cfg)
        assert len(t.rows) == 1
        assert t.rows[0][3] < 1e-6

    def test_schema_and_shape(self):
        cfg = small()
        t = run_mse_sweep(cfg)
        assert t.columns == SCHEMAS["mse"]
        assert len(t.rows) == 2 * 4
        assert set(t.column("trials")) == {6}
        assert all(e >= 0 for e in t.column("std_error"))

    def test_paired_draws(self):
        # a method's errors do not depend on which other methods run alongside it
        a = run_mse_sweep(small(methods=("l1",)))
        b = run_mse_sweep(small(methods=("omp", "l1")))
        assert a.where(method="l1") == b.where(method="l1")

    def test_frozen_matrix(self):
        t = run_mse_sweep(small(freeze_sensing_matrix=True, trials=3))
        assert len(t.rows) == 8

    def test_needs_noise_level(self):
        with pytest.raises(ValueError):
            run_mse_sweep(small(snr_grid=()))

    def test_parallel_matches_serial(self):
        cfg = small(trials=4, methods=("l1", "omp"))
        assert run_mse_sweep(cfg, workers=1).rows == run_mse_sweep(cfg, workers=2).rows


class TestRoc:
    def test_permissive_threshold(self):
        cfg = small(m=32, snr_grid=(40.0,), pf_grid=(0.999,), trials=10)
        t = run_roc(cfg)
        assert t.columns == SCHEMAS["roc"]
        assert all(pd > 0.95 for pd in t.column("pd_mean"))

    def test_pd_nondecreasing_in_pf(self):
        cfg = small(snr_grid=(15.0,), trials=40, methods=("weighted_l1", "l1"))
        t = run_roc(cfg)
        for method in cfg.methods:
            pd = [r["pd_mean"] for r in t.where(method=method)]
            assert all(b >= a - 0.02 for a, b in zip(pd, pd[1:]))

    def test_single_level_only(self):
        with pytest.raises(ValueError):
            run_roc(small())


class TestCsv:
    def test_empty_table_header_only(self, tmp_path):
        p = tmp_path / "t.csv"
        emit_csv(ResultTable(SCHEMAS["mse"]), p)
        assert p.read_text() == "snr_db,method,trials,mean_error,std_error\n"

    def test_round_trip_bit_exact(self, tmp_path):
        p = tmp_path / "t.csv"
        t = ResultTable(SCHEMAS["mse"])
        t.add(5.0, "weighted_l1", 200, 0.1 + 0.2, 1 / 3)
        emit_csv(t, p)
        assert read_csv(p) == t

    def test_schemas(self):
        assert ",".join(SCHEMAS["bound"]) == "k0,bound,exact_tail"
        assert ",".join(SCHEMAS["mse"]) == "snr_db,method,trials,mean_error,std_error"
        assert ",".join(SCHEMAS["roc"]) == "pf_target,method,trials,pd_mean,pf_empirical"
        assert ",".join(SCHEMAS["weights"]) == "block,k_bar,omega"

    def test_incomplete_row_rejected(self):
        with pytest.raises(ValueError):
            ResultTable(("a", "b")).add(1)
        with pytest.raises(ValueError):
            ResultTable(("a", "b")).add(1, None)

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            emit_csv(ResultTable(("a",)), tmp_path / "missing" / "t.csv")

    def test_deterministic_bytes(self, tmp_path):
        cfg = small(trials=3, methods=("l1", "cosamp"))
        emit_csv(run_mse_sweep(cfg), tmp_path / "a.csv")
        emit_csv(run_mse_sweep(cfg), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
