"""Block-structured band occupancy and the statistics used to size a sensor.

Bands are independent Bernoulli variables grouped into contiguous blocks.
The count of occupied bands is Poisson-binomial; its exact PMF, a
Chernoff-style lower bound on its CDF, and the sparsity level / measurement
count derived from that bound all live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import binom

__all__ = [
    "BlockPartition",
    "OccupancyProfile",
    "OccupancyRealization",
    "block_averages",
    "sample_realization",
    "occupancy_pmf",
    "tail_lower_bound",
    "select_sparsity_level",
    "measurement_count",
    "block_inversion_probability",
]


@dataclass(frozen=True)
class BlockPartition:
    """Contiguous, disjoint grouping of ``total_bands`` bands into blocks."""

    total_bands: int
    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if self.total_bands < 1:
            raise ValueError(f"total_bands must be positive, got {self.total_bands}")
        if len(sizes) == 0:
            raise ValueError("a partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be >= 1, got {list(sizes)}")
        if sum(sizes) != self.total_bands:
            raise ValueError(
                f"block sizes sum to {sum(sizes)}, expected total_bands={self.total_bands}"
            )

    @classmethod
    def equal(cls, n: int, g: int) -> "BlockPartition":
        if g < 1 or n % g:
            raise ValueError(f"cannot split {n} bands into {g} equal blocks")
        return cls(n, (n // g,) * g)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.block_sizes)[:-1]]))

    def slices(self) -> list[slice]:
        return [slice(o, o + s) for o, s in zip(self.offsets, self.block_sizes)]

    def block_index(self) -> np.ndarray:
        """Block label of every band, shape ``(total_bands,)``."""
        return np.repeat(np.arange(self.num_blocks), self.block_sizes)

    def expand(self, per_block: Sequence[float]) -> np.ndarray:
        """Broadcast one value per block to one value per band."""
        per_block = np.asarray(per_block, dtype=float)
        if per_block.shape != (self.num_blocks,):
            raise ValueError(
                f"expected {self.num_blocks} per-block values, got {per_block.shape}"
            )
        return per_block[self.block_index()]


@dataclass(frozen=True)
class OccupancyProfile:
    """Per-band occupancy probabilities over a block partition."""

    partition: BlockPartition
    band_prob: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.band_prob, dtype=float).copy()
        p.setflags(write=False)
        object.__setattr__(self, "band_prob", p)
        if p.shape != (self.partition.total_bands,):
            raise ValueError(
                f"band_prob has length {p.size}, expected {self.partition.total_bands}"
            )
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ValueError("band probabilities must lie in [0, 1]")

    @classmethod
    def from_block_probs(cls, partition: BlockPartition, block_prob: Sequence[float]):
        """Profile where every band in block ``l`` has probability ``block_prob[l]``."""
        return cls(partition, partition.expand(block_prob))

    @property
    def n(self) -> int:
        return self.partition.total_bands

    @property
    def mean_occupied(self) -> float:
        """Expected number of occupied bands, the sum of all ``p_i``."""
        return float(np.sum(self.band_prob))


@dataclass(frozen=True)
class OccupancyRealization:
    """One draw of the band states; ``occupied[i]`` is True if band i is in use."""

    occupied: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupied, dtype=bool).copy()
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.occupied)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.occupied))


def block_averages(profile: OccupancyProfile) -> np.ndarray:
    """Average number of occupied bands in each block (sum of ``p_i`` over the block)."""
    p = profile.band_prob
    return np.array([p[s].sum() for s in profile.partition.slices()])


def sample_realization(profile: OccupancyProfile, rng: np.random.Generator) -> OccupancyRealization:
    """Draw independent Bernoulli band states. Consumes ``n`` uniforms from ``rng``."""
    u = rng.random(profile.n)
    return OccupancyRealization(u < profile.band_prob)


def occupancy_pmf(profile: OccupancyProfile | Sequence[float]) -> np.ndarray:
    """Exact PMF of the number of occupied bands.

    Convolves the per-band Bernoulli laws one band at a time, which costs
    O(n^2) and is numerically stable (all terms nonnegative).

    Parameters
    ----------
    profile : OccupancyProfile or sequence of float
        The band probabilities.

    Returns
    -------
    pmf : ndarray, shape (n + 1,)
        ``pmf[k]`` is the probability that exactly ``k`` bands are occupied.
    """
    p = profile.band_prob if isinstance(profile, OccupancyProfile) else np.asarray(profile, float)
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for i, pi in enumerate(p):
        # update in place from the top so pmf[k-1] is still the old value
        pmf[1 : i + 2] = pmf[1 : i + 2] * (1.0 - pi) + pmf[0 : i + 1] * pi
        pmf[0] *= 1.0 - pi
    return pmf


def tail_lower_bound(profile: OccupancyProfile | float, k0: float) -> float:
    """Lower bound on ``Pr(X <= k0)`` for the occupied-band count ``X``.

    Evaluates ``1 - exp(k0 - mu) / (k0 / mu)**k0`` with ``mu`` the expected
    count, in log space. For ``k0 <= mu`` the expression carries no
    information and 0 is returned.

    ``profile`` may also be given directly as the mean ``mu``.
    """
    mu = profile.mean_occupied if isinstance(profile, OccupancyProfile) else float(profile)
    if mu <= 0:
        raise ValueError("tail bound undefined for a profile with zero expected occupancy")
    if k0 <= 0:
        raise ValueError(f"k0 must be positive, got {k0}")
    if k0 <= mu:
        return 0.0
    log_excess = (k0 - mu) - k0 * math.log(k0 / mu)
    return min(1.0, max(0.0, -math.expm1(log_excess)))


def select_sparsity_level(profile: OccupancyProfile, alpha: float) -> int:
    """Smallest integer ``k0 > mu`` whose tail bound reaches ``1 - alpha``.

    Raises
    ------
    ValueError
        If ``alpha`` is outside (0, 1), the profile is empty, or no
        ``k0 <= n`` meets the target.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    mu = profile.mean_occupied
    if mu <= 0:
        raise ValueError("cannot select a sparsity level for a profile with zero expected occupancy")
    k0 = math.floor(mu) + 1
    while k0 <= profile.n:
        if tail_lower_bound(mu, k0) >= 1.0 - alpha:
            return k0
        k0 += 1
    raise ValueError(f"no sparsity level k0 <= {profile.n} reaches confidence {1 - alpha}")


def measurement_count(k0: int, n: int, c: float = 1.0) -> int:
    """Number of measurements ``max(1, ceil(c * k0 * ln(n / k0)))``."""
    if not 1 <= k0 < n:
        raise ValueError(f"need 1 <= k0 < n, got k0={k0}, n={n}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    return max(1, math.ceil(c * k0 * math.log(n / k0)))


def block_inversion_probability(n1: int, q1: float, n2: int, q2: float) -> float:
    """Probability that block 2 shows strictly more occupied bands than block 1.

    Each block's count is binomial with per-band probability ``q1`` / ``q2``.
    The outer sum runs only to ``min(n1, n2)``, as in the closed form.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("block sizes must be >= 1")
    kmax = min(n1, n2)
    k = np.arange(1, kmax + 1)
    # Pr(X1 <= k-1) for each k, then weight by Pr(X2 = k)
    below = binom.cdf(k - 1, n1, q1)
    total = float(np.sum(below * binom.pmf(k, n2, q2)))
    return min(1.0, max(0.0, total))
