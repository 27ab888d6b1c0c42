"""Experiment configuration: INI-style sections of flat ``key = value`` pairs.

Lists are comma-separated. See ``configs/paper.cfg`` for a complete example;
:data:`SCHEMA` lists every accepted key.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..occupancy import (
    BlockPartition,
    OccupancyProfile,
    measurement_count,
    select_sparsity_level,
)
from ..recovery import SolverOptions

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "METHODS"]

METHODS = ("weighted_l1", "l1", "omp", "cosamp")


class ConfigError(ValueError):
    """Raised for unparsable or inconsistent configuration files."""


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.split(",") if v.strip())


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _strs(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# section -> key -> parser
SCHEMA = {
    "occupancy": {
        "n": int,
        "block_sizes": _ints,
        "band_prob": _floats,
        "block_prob": _floats,
    },
    "sensing": {
        "m": int,
        "k0": int,
        "c": float,
        "alpha": float,
        "epsilon_quantile": float,
        "epsilon_trials": int,
        "freeze_sensing_matrix": _bool,
    },
    "signal": {
        "mag_range": _floats,
        "sigma2": float,
        "snr_grid": _floats,
    },
    "solver": {
        "max_iterations": int,
        "primal_tolerance": float,
        "dual_tolerance": float,
        "penalty": float,
        "feasibility_slack": float,
    },
    "experiment": {
        "trials": int,
        "master_seed": int,
        "methods": _strs,
        "pf_grid": _floats,
        "bound_k_max": int,
        "greedy_k": int,
        "weight_floor": float,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    block_sizes: tuple[int, ...]
    band_prob: tuple[float, ...]
    m: int | None = None
    k0: int | None = None
    c: float = 1.0
    alpha: float = 0.04
    epsilon_quantile: float = 0.95
    epsilon_trials: int = 2000
    freeze_sensing_matrix: bool = False
    mag_range: tuple[float, float] = (1.0, 2.0)
    sigma2: float | None = None
    snr_grid: tuple[float, ...] = ()
    trials: int | None = None
    master_seed: int = 0
    methods: tuple[str, ...] = METHODS
    pf_grid: tuple[float, ...] = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
    bound_k_max: int | None = None
    greedy_k: int | None = None
    weight_floor: float = 1e-6
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        try:
            self.profile  # validates partition and probabilities
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.m is not None and not 1 <= self.m <= self.n:
            raise ConfigError(f"m must satisfy 1 <= m <= n={self.n}, got {self.m}")
        if self.k0 is not None and not 1 <= self.k0 < self.n:
            raise ConfigError(f"k0 must satisfy 1 <= k0 < n, got {self.k0}")
        if not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.epsilon_quantile < 1:
            raise ConfigError(f"epsilon_quantile must lie in (0, 1), got {self.epsilon_quantile}")
        if self.epsilon_trials < 1:
            raise ConfigError("epsilon_trials must be >= 1")
        if len(self.mag_range) != 2 or not 0 < self.mag_range[0] <= self.mag_range[1]:
            raise ConfigError(f"mag_range must be 'lo, hi' with 0 < lo <= hi, got {self.mag_range}")
        if self.sigma2 is not None and self.sigma2 < 0:
            raise ConfigError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.sigma2 is not None and self.snr_grid:
            raise ConfigError("give either sigma2 or snr_grid, not both")
        if self.trials is not None and self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        unknown = [mth for mth in self.methods if mth not in METHODS]
        if unknown or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if any(not 0 < p < 1 for p in self.pf_grid):
            raise ConfigError("pf_grid values must lie in (0, 1)")
        if self.bound_k_max is not None and not 1 <= self.bound_k_max <= self.n:
            raise ConfigError(f"bound_k_max must lie in [1, n], got {self.bound_k_max}")
        if self.greedy_k is not None and self.greedy_k < 1:
            raise ConfigError("greedy_k must be >= 1")
        if not self.weight_floor > 0:
            raise ConfigError("weight_floor must be positive")

    @property
    def partition(self) -> BlockPartition:
        return BlockPartition(self.n, self.block_sizes)

    @property
    def profile(self) -> OccupancyProfile:
        return OccupancyProfile(self.partition, np.asarray(self.band_prob))

    def resolved_k0(self) -> int:
        if self.k0 is not None:
            return self.k0
        return select_sparsity_level(self.profile, self.alpha)

    def resolved_m(self) -> int:
        """Measurement count: the explicit ``m`` or one derived from ``k0`` and ``c``."""
        if self.m is not None:
            return self.m
        m = measurement_count(self.resolved_k0(), self.n, self.c)
        if m > self.n:
            raise ConfigError(f"derived measurement count {m} exceeds n={self.n}")
        return m

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_ini(self) -> str:
        """Render the configuration with every default spelled out."""
        cp = configparser.ConfigParser(interpolation=None)

        def fmt(v):
            if isinstance(v, (tuple, list)):
                return ", ".join(fmt(x) for x in v)
            if isinstance(v, bool):
                return "true" if v else "false"
            return repr(v) if isinstance(v, float) else str(v)

        for section, keys in SCHEMA.items():
            cp.add_section(section)
            for key in keys:
                if key == "block_prob":
                    continue
                if section == "solver":
                    value = getattr(self.solver, key)
                else:
                    value = getattr(self, key)
                if value is None or value == ():
                    continue
                cp.set(section, key, fmt(value))
        try:
            k0 = str(self.resolved_k0())
        except ValueError:
            k0 = "n/a"
        buf = io.StringIO()
        buf.write(f"# resolved: m = {self.resolved_m()}, k0 = {k0}\n")
        cp.write(buf)
        return buf.getvalue()


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None

    values: dict = {}
    solver: dict = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in cp.items(section):
            parser = SCHEMA[section].get(key)
            if parser is None:
                raise ConfigError(f"{source}: unknown key '{key}' in section [{section}]")
            try:
                value = parser(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for '{key}': {exc}") from None
            (solver if section == "solver" else values)[key] = value

    if "n" not in values or "block_sizes" not in values:
        raise ConfigError(f"{source}: [occupancy] needs 'n' and 'block_sizes'")
    has_band = "band_prob" in values
    has_block = "block_prob" in values
    if has_band == has_block:
        raise ConfigError(f"{source}: give exactly one of 'band_prob' or 'block_prob'")
    if has_block:
        block_prob = values.pop("block_prob")
        if len(block_prob) != len(values["block_sizes"]):
            raise ConfigError(
                f"{source}: block_prob has {len(block_prob)} entries for "
                f"{len(values['block_sizes'])} blocks"
            )
        values["band_prob"] = tuple(
            float(p) for p, s in zip(block_prob, values["block_sizes"]) for _ in range(s)
        )
    if sum(values["block_sizes"]) != values["n"]:
        raise ConfigError(
            f"{source}: block_sizes sum to {sum(values['block_sizes'])}, expected n={values['n']}"
        )
    try:
        values["solver"] = SolverOptions(**solver)
    except ValueError as exc:
        raise ConfigError(f"{source}: solver options: {exc}") from None
    if "mag_range" in values and len(values["mag_range"]) != 2:
        raise ConfigError(f"{source}: mag_range needs exactly two values")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))
