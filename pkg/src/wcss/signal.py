"""Frequency-domain PU signals, time-domain noise and the unitary DFT pair."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .occupancy import OccupancyRealization

__all__ = [
    "SpectrumVector",
    "NoiseModel",
    "synthesize_spectrum",
    "dft",
    "idft",
    "sample_time_noise",
]


@dataclass(frozen=True)
class SpectrumVector:
    """One complex coefficient per band."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)


@dataclass(frozen=True)
class NoiseModel:
    """Additive white Gaussian noise with per-sample variance ``sigma2``."""

    sigma2: float = 0.0

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be nonnegative, got {self.sigma2}")


def synthesize_spectrum(
    realization: OccupancyRealization,
    mag_range: Sequence[float],
    rng: np.random.Generator,
) -> SpectrumVector:
    """Random-magnitude, random-phase coefficients on the occupied bands.

    Magnitudes are uniform on ``mag_range`` and phases uniform on
    ``[0, 2*pi)``; vacant bands are exactly zero. Per-PU channel gains are
    absorbed into the magnitude draw.
    """
    lo, hi = float(mag_range[0]), float(mag_range[1])
    if not 0 < lo <= hi:
        raise ValueError(f"magnitude range must satisfy 0 < lo <= hi, got {mag_range}")
    occ = realization.occupied
    k = int(np.count_nonzero(occ))
    rho = rng.uniform(lo, hi, size=k)
    theta = rng.uniform(0.0, 2 * np.pi, size=k)
    x = np.zeros(occ.size, dtype=complex)
    x[occ] = rho * np.exp(1j * theta)
    return SpectrumVector(x)


def dft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unitary DFT (``1/sqrt(n)`` scaling)."""
    return np.fft.fft(np.asarray(v, dtype=complex), axis=axis, norm="ortho")


def idft(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unitary inverse DFT, the exact inverse of :func:`dft`."""
    return np.fft.ifft(np.asarray(v, dtype=complex), axis=axis, norm="ortho")


def sample_time_noise(n: int, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian noise, variance ``sigma2`` per entry."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    scale = np.sqrt(noise.sigma2 / 2.0)
    z = rng.standard_normal((2, n))
    return scale * (z[0] + 1j * z[1])
