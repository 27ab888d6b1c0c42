"""Seeded Monte-Carlo experiments and their CSV tables.

Every trial draws its own random stream from ``(master_seed, experiment,
trial_index)``, so results do not depend on how trials are scheduled across
workers. Within a trial all methods (and, for the MSE sweep, all SNR points)
share the same occupancy draw, spectrum, sensing matrix and noise direction.
"""

from __future__ import annotations

import csv
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from ..detection import decide_bands, detection_threshold, evaluate_detection
from ..occupancy import block_averages, occupancy_pmf, sample_realization, tail_lower_bound
from ..recovery import (
    compute_weights,
    recovery_error,
    solve_cosamp,
    solve_l1,
    solve_omp,
    solve_weighted_l1,
)
from ..sensing import SensingSystem, epsilon_for_noise, generate_sensing_matrix
from ..signal import NoiseModel, sample_time_noise, synthesize_spectrum
from .config import ExperimentConfig

__all__ = [
    "ResultTable",
    "SCHEMAS",
    "run_bound_curve",
    "run_mse_sweep",
    "run_roc",
    "run_weights",
    "emit_csv",
    "read_csv",
    "trial_rng",
]

log = logging.getLogger(__name__)

SCHEMAS = {
    "bound": ("k0", "bound", "exact_tail"),
    "mse": ("snr_db", "method", "trials", "mean_error", "std_error"),
    "roc": ("pf_target", "method", "trials", "pd_mean", "pf_empirical"),
    "weights": ("block", "k_bar", "omega"),
}

DEFAULT_TRIALS = {"mse": 200, "roc": 500}


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, table has {len(self.columns)} columns")
        if any(cell is None for cell in row):
            raise ValueError("rows must be complete")
        self.rows.append(tuple(row))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(zip(self.columns, r))
            if all(d[k] == v for k, v in match.items()):
                out.append(d)
        return out


def _stream_id(name: str) -> int:
    return zlib.crc32(name.encode())


def trial_rng(master_seed: int, experiment: str, index: int) -> np.random.Generator:
    """Independent generator for one trial of one experiment."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(_stream_id(experiment), index))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# analytic tables


def run_weights(config: ExperimentConfig) -> ResultTable:
    kbar = block_averages(config.profile)
    omega = compute_weights(kbar, floor=config.weight_floor).weights
    table = ResultTable(SCHEMAS["weights"])
    for i, (k, w) in enumerate(zip(kbar, omega), start=1):
        table.add(i, float(k), float(w))
    return table


def run_bound_curve(config: ExperimentConfig) -> ResultTable:
    """Tail lower bound and exact ``Pr(X <= k0)`` for ``k0 = ceil(mu) .. bound_k_max``."""
    profile = config.profile
    mu = profile.mean_occupied
    if mu <= 0:
        raise ValueError("bound curve needs a profile with positive expected occupancy")
    cdf = np.cumsum(occupancy_pmf(profile))
    k_lo = max(1, math.ceil(mu))
    k_hi = config.bound_k_max if config.bound_k_max is not None else min(config.n, 3 * k_lo)
    table = ResultTable(SCHEMAS["bound"])
    for k0 in range(k_lo, max(k_lo, k_hi) + 1):
        table.add(k0, tail_lower_bound(mu, k0), float(min(1.0, cdf[k0])))
    return table


# ---------------------------------------------------------------------------
# Monte-Carlo machinery


@dataclass(frozen=True)
class _Context:
    config: ExperimentConfig
    experiment: str
    m: int
    weights: object
    eps_unit: float
    greedy_k: int
    levels: tuple  # SNR targets in dB, or (None,) for fixed sigma2
    psi: np.ndarray | None


def _context(config: ExperimentConfig, experiment: str) -> _Context:
    m = config.resolved_m()
    weights = compute_weights(block_averages(config.profile), floor=config.weight_floor)
    eps_rng = np.random.default_rng(
        np.random.SeedSequence(config.master_seed, spawn_key=(_stream_id(experiment + "/epsilon"),))
    )
    eps_unit = epsilon_for_noise(
        NoiseModel(1.0), config.n, config.epsilon_quantile, config.epsilon_trials, m=m, rng=eps_rng
    )
    psi = None
    if config.freeze_sensing_matrix:
        psi_rng = np.random.default_rng(
            np.random.SeedSequence(config.master_seed, spawn_key=(_stream_id(experiment + "/psi"),))
        )
        psi = generate_sensing_matrix(m, config.n, psi_rng).psi
    if config.greedy_k is not None:
        greedy_k = config.greedy_k
    elif config.profile.mean_occupied > 0:
        greedy_k = config.resolved_k0()
    else:
        greedy_k = 1
    levels = tuple(config.snr_grid) if config.snr_grid else (None,)
    return _Context(config, experiment, m, weights, eps_unit, greedy_k, levels, psi)


def _recover(ctx: _Context, method: str, system: SensingSystem, y: np.ndarray, eps: float):
    cfg = ctx.config
    if method == "weighted_l1":
        return solve_weighted_l1(system, y, ctx.weights, cfg.partition, eps, cfg.solver).x_hat
    if method == "l1":
        return solve_l1(system, y, eps, cfg.solver).x_hat
    if method == "omp":
        return solve_omp(system, y, min(ctx.greedy_k, system.m), eps).x_hat
    if method == "cosamp":
        # keep the merged least-squares fit (up to 3k columns) overdetermined
        k = max(1, min(ctx.greedy_k, system.m // 3, system.n // 3))
        return solve_cosamp(system, y, k, eps, cfg.solver).x_hat
    raise ValueError(f"unknown method {method!r}")


def _run_trial(ctx: _Context, index: int) -> list[dict]:
    """One paired trial; returns one record per noise level."""
    cfg = ctx.config
    rng = trial_rng(cfg.master_seed, ctx.experiment, index)
    realization = sample_realization(cfg.profile, rng)
    x0 = synthesize_spectrum(realization, cfg.mag_range, rng).values
    if ctx.psi is not None:
        system = SensingSystem.from_psi(ctx.psi)
    else:
        system = generate_sensing_matrix(ctx.m, cfg.n, rng)
    eta_unit = system.psi @ sample_time_noise(cfg.n, NoiseModel(1.0), rng)
    clean = system.apply(x0)
    signal_norm = float(np.linalg.norm(clean))
    unit_norm = float(np.linalg.norm(eta_unit))

    records = []
    for level in ctx.levels:
        if level is None:
            sigma = math.sqrt(cfg.sigma2 or 0.0)
        elif signal_norm == 0 or unit_norm == 0:
            sigma = 0.0
        else:
            # scale the noise draw so ||A x0||^2 / ||eta||^2 hits the target exactly
            sigma = signal_norm / (unit_norm * 10 ** (level / 20))
        eta = sigma * eta_unit
        y = clean + eta
        eps = sigma * ctx.eps_unit
        noise_power = float(np.linalg.norm(eta) ** 2)
        snr = 10 * math.log10(signal_norm**2 / noise_power) if noise_power > 0 and signal_norm > 0 else math.inf
        rec = {"level": level, "snr": snr, "errors": {}, "pd": {}, "pf": {}}
        for method in cfg.methods:
            x_hat = _recover(ctx, method, system, y, eps)
            rec["errors"][method] = recovery_error(x_hat, x0)
            if ctx.experiment == "roc":
                pds, pfs = [], []
                for pf_target in cfg.pf_grid:
                    lam = detection_threshold(cfg.n * sigma**2, ctx.m, cfg.n, pf_target)
                    pd, pf = evaluate_detection(decide_bands(x_hat, lam), realization)
                    pds.append(pd)
                    pfs.append(pf)
                rec["pd"][method] = pds
                rec["pf"][method] = pfs
        records.append(rec)
    return records


def _run_trials(ctx: _Context, trials: int, workers: int) -> list[list[dict]]:
    job = partial(_run_trial, ctx)
    if workers <= 1:
        return [job(i) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves trial order, so aggregation is schedule-independent
        return list(pool.map(job, range(trials), chunksize=max(1, trials // (4 * workers))))


def _trials(config: ExperimentConfig, experiment: str) -> int:
    return config.trials if config.trials is not None else DEFAULT_TRIALS[experiment]


def run_mse_sweep(config: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Mean recovery error of every method at every SNR grid point."""
    if not config.snr_grid and config.sigma2 is None:
        raise ValueError("mse sweep needs snr_grid (or a fixed sigma2)")
    ctx = _context(config, "mse")
    trials = _trials(config, "mse")
    log.info("mse sweep: m=%d, %d trials, levels=%s", ctx.m, trials, ctx.levels)
    results = _run_trials(ctx, trials, workers)
    table = ResultTable(SCHEMAS["mse"])
    for li, level in enumerate(ctx.levels):
        if level is None:
            snrs = np.array([res[li]["snr"] for res in results])
            snr_db = float(np.mean(snrs)) if np.all(np.isfinite(snrs)) else math.inf
        else:
            snr_db = float(level)
        for method in config.methods:
            errs = np.array([res[li]["errors"][method] for res in results])
            std_error = float(errs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
            table.add(snr_db, method, trials, float(errs.mean()), std_error)
    return table


def run_roc(config: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Detection vs false-alarm rate at a fixed sensing SNR."""
    if len(config.snr_grid) > 1:
        raise ValueError("roc runs at a single SNR; snr_grid must have one entry")
    if not config.snr_grid and config.sigma2 is None:
        raise ValueError("roc needs a single-entry snr_grid or a fixed sigma2")
    if not config.pf_grid:
        raise ValueError("roc needs a nonempty pf_grid")
    ctx = _context(config, "roc")
    trials = _trials(config, "roc")
    log.info("roc: m=%d, %d trials, level=%s", ctx.m, trials, ctx.levels[0])
    results = [res[0] for res in _run_trials(ctx, trials, workers)]
    table = ResultTable(SCHEMAS["roc"])
    for j, pf_target in enumerate(config.pf_grid):
        for method in config.methods:
            pds = [r["pd"][method][j] for r in results if r["pd"][method][j] is not None]
            pfs = [r["pf"][method][j] for r in results if r["pf"][method][j] is not None]
            pd_mean = float(np.mean(pds)) if pds else math.nan
            pf_emp = float(np.mean(pfs)) if pfs else math.nan
            table.add(float(pf_target), method, trials, pd_mean, pf_emp)
    return table


# ---------------------------------------------------------------------------
# CSV


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(table: ResultTable, path) -> None:
    """Write ``table`` with a header row; floats use shortest round-trip repr."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_csv(path) -> ResultTable:
    """Read a table written by :func:`emit_csv`, converting numeric cells."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        table = ResultTable(header)
        for row in reader:
            table.add(*(_parse_cell(c) for c in row))
    return table


def _parse_cell(c: str):
    try:
        return int(c)
    except ValueError:
        pass
    try:
        return float(c)
    except ValueError:
        return c
