"""Energy detection on recovered spectra and scoring against ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .occupancy import OccupancyRealization

__all__ = [
    "DetectionReport",
    "q_function",
    "inverse_q",
    "detection_threshold",
    "decide_bands",
    "evaluate_detection",
    "detect",
]


@dataclass(frozen=True)
class DetectionReport:
    """Band decisions at one threshold. ``pd``/``pf`` are None when undefined."""

    threshold: float
    decisions: np.ndarray
    pd: float | None
    pf: float | None


def q_function(z):
    """Standard normal upper-tail probability."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def inverse_q(p: float) -> float:
    """``z`` such that ``Q(z) = p``."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return float(-ndtri(p))


def detection_threshold(noise_energy_mean: float, m: int, n: int, pf_target: float) -> float:
    """Energy threshold ``(E||eta||^2 / m) * (1 + Qinv(pf) / sqrt(n / 2))``."""
    if m < 1 or n < 1:
        raise ValueError(f"need m, n >= 1, got m={m}, n={n}")
    if noise_energy_mean < 0:
        raise ValueError("noise energy must be nonnegative")
    return noise_energy_mean / m * (1.0 + inverse_q(pf_target) / math.sqrt(n / 2.0))


def decide_bands(x_hat, lam: float) -> np.ndarray:
    """Declare band ``i`` occupied iff ``|x_hat_i|^2 >= lam``."""
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    x = np.asarray(getattr(x_hat, "values", x_hat))
    energy = np.abs(x) ** 2
    if lam == 0:
        return energy > 0
    return energy >= lam


def evaluate_detection(decisions, truth) -> tuple[float | None, float | None]:
    """Empirical ``(pd, pf)``; either is None if its denominator is zero."""
    d = np.asarray(decisions, dtype=bool)
    t = np.asarray(getattr(truth, "occupied", truth), dtype=bool)
    if d.shape != t.shape:
        raise ValueError(f"shape mismatch: {d.shape} vs {t.shape}")
    n_occ = int(t.sum())
    n_vac = t.size - n_occ
    pd = float(np.sum(d & t)) / n_occ if n_occ else None
    pf = float(np.sum(d & ~t)) / n_vac if n_vac else None
    return pd, pf


def detect(x_hat, truth: OccupancyRealization, lam: float) -> DetectionReport:
    decisions = decide_bands(x_hat, lam)
    pd, pf = evaluate_detection(decisions, truth)
    return DetectionReport(threshold=lam, decisions=decisions, pd=pd, pf=pf)
