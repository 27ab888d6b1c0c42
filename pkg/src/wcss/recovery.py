"""Sparse spectrum recovery: block-weighted l1, plain l1, OMP and CoSaMP.

The l1 problems are solved in their constrained form

    minimize    sum_l w_l * ||x_l||_1
    subject to  ||A x - y||_2 <= eps

with an alternating-direction splitting that keeps the l1 term and the
residual-ball constraint in separate variables (x = v, A x = z). Every step
is closed form: a regularized least-squares solve (factored once per call),
complex soft-thresholding, and projection onto the ball.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .occupancy import BlockPartition
from .sensing import SensingSystem

__all__ = [
    "WeightVector",
    "SolverOptions",
    "SolverStatus",
    "RecoveryResult",
    "compute_weights",
    "weighted_objective",
    "soft_threshold",
    "solve_weighted_l1",
    "solve_l1",
    "solve_omp",
    "solve_cosamp",
    "recovery_error",
    "sparsity_index",
]

AVERAGE_FLOOR = 1e-6


@dataclass(frozen=True)
class WeightVector:
    """Per-block l1 weights, positive and summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D vector")
        if np.any(~(w > 0)):
            raise ValueError("weights must be strictly positive")

    @classmethod
    def uniform(cls, g: int) -> "WeightVector":
        return cls(np.full(g, 1.0 / g))

    def per_band(self, partition: BlockPartition) -> np.ndarray:
        return partition.expand(self.weights)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 2000
    primal_tolerance: float = 1e-6
    dual_tolerance: float = 1e-6
    penalty: float = 3.0
    feasibility_slack: float = 1e-3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (self.primal_tolerance > 0 and self.dual_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if self.feasibility_slack < 0:
            raise ValueError("feasibility_slack must be nonnegative")


class SolverStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class RecoveryResult:
    x_hat: np.ndarray
    residual_norm: float
    iterations: int
    status: SolverStatus

    @property
    def converged(self) -> bool:
        return self.status is SolverStatus.CONVERGED


def _result(system: SensingSystem, y: np.ndarray, x: np.ndarray, it: int, status) -> RecoveryResult:
    x = np.asarray(x, dtype=complex)
    res = float(np.linalg.norm(system.apply(x) - y))
    return RecoveryResult(x_hat=x, residual_norm=res, iterations=it, status=SolverStatus(status))


def compute_weights(block_averages: Sequence[float], floor: float | None = None) -> WeightVector:
    """Block weights inversely proportional to the block average occupancies.

    ``w_i = (1/k_i) / sum_j (1/k_j)``. Nonpositive averages are an error
    unless ``floor`` is given, in which case averages are clamped up to it.
    """
    k = np.asarray(block_averages, dtype=float)
    if k.ndim != 1 or k.size == 0:
        raise ValueError("need at least one block average")
    if floor is not None:
        k = np.maximum(k, floor)
    if np.any(~(k > 0)):
        raise ValueError(f"block averages must be positive, got {k.tolist()}")
    inv = 1.0 / k
    return WeightVector(inv / inv.sum())


def weighted_objective(x: np.ndarray, weights: WeightVector, partition: BlockPartition) -> float:
    """``sum_l w_l ||x_l||_1`` with the complex modulus as the l1 element norm."""
    return float(np.sum(weights.per_band(partition) * np.abs(x)))


def soft_threshold(v: np.ndarray, tau) -> np.ndarray:
    """Complex soft-thresholding: shrink each modulus by ``tau``, keep the phase."""
    mag = np.abs(v)
    scale = np.maximum(mag - tau, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mag > 0, v * (scale / np.where(mag > 0, mag, 1.0)), 0.0)
    return out


def _project_ball(u: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = u - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return u
    return center + d * (radius / nd)


def _support_polish(system: SensingSystem, y: np.ndarray, v: np.ndarray) -> np.ndarray | None:
    """Least-squares refit on the support of ``v`` for the equality-constrained case."""
    support = np.flatnonzero(v)
    if support.size == 0 or support.size > system.m:
        return None
    a_s = system.operator[:, support]
    coef, *_ = np.linalg.lstsq(a_s, y, rcond=None)
    x = np.zeros(system.n, dtype=complex)
    x[support] = coef
    return x


def solve_weighted_l1(
    system: SensingSystem,
    y: np.ndarray,
    weights: WeightVector,
    partition: BlockPartition,
    epsilon: float,
    opts: SolverOptions | None = None,
) -> RecoveryResult:
    """Block-weighted l1 recovery under a residual-norm constraint.

    Parameters
    ----------
    system : SensingSystem
        Provides the ``m x n`` operator ``A``.
    y : ndarray, shape (m,)
        Measurements.
    weights : WeightVector
        One weight per block of ``partition``; applied to every band of the block.
    partition : BlockPartition
    epsilon : float
        Radius of the residual ball, ``||A x - y||_2 <= epsilon``.
    opts : SolverOptions, optional

    Returns
    -------
    RecoveryResult
        ``status`` is ``converged`` only when the tolerances are met *and*
        the residual is within ``epsilon * (1 + feasibility_slack)`` (for
        ``epsilon = 0``: within ``1e-9 * max(1, ||y||)``).
    """
    opts = opts or SolverOptions()
    y = np.asarray(y, dtype=complex)
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if y.shape != (system.m,):
        raise ValueError(f"y has shape {y.shape}, expected ({system.m},)")
    if partition.total_bands != system.n:
        raise ValueError("partition does not match the number of bands")
    if weights.weights.size != partition.num_blocks:
        raise ValueError("one weight per block required")

    n = system.n
    ynorm = float(np.linalg.norm(y))
    if ynorm <= epsilon:
        return _result(system, y, np.zeros(n, dtype=complex), 0, SolverStatus.CONVERGED)

    A = system.operator
    AH = A.conj().T
    # The minimizer is invariant to a positive rescaling of the objective and
    # scales linearly with (y, eps); normalize both so one penalty fits all.
    wb = weights.per_band(partition)
    wb = wb / wb.mean()
    scale = float(np.max(np.abs(AH @ y))) or ynorm
    yn = y / scale
    eps = epsilon / scale
    rho = opts.penalty
    tau = wb / rho

    # (I + A^H A)^{-1} b = b - A^H (I + A A^H)^{-1} A b
    gram = np.eye(system.m) + A @ AH
    chol = scipy.linalg.cho_factor(gram, lower=True)

    def solve_x(b):
        return b - AH @ scipy.linalg.cho_solve(chol, A @ b)

    x = np.zeros(n, dtype=complex)
    v = x.copy()
    z = np.zeros(system.m, dtype=complex)
    d1 = np.zeros(n, dtype=complex)
    d2 = np.zeros(system.m, dtype=complex)
    feas_tol = eps * (1.0 + opts.feasibility_slack) if eps > 0 else 1e-9 * max(1.0, 1.0 / scale)
    status = SolverStatus.MAX_ITERATIONS
    it = 0
    for it in range(1, opts.max_iterations + 1):
        x = solve_x((v - d1) + AH @ (z - d2))
        ax = A @ x
        v_old, z_old = v, z
        v = soft_threshold(x + d1, tau)
        z = _project_ball(ax + d2, yn, eps)
        r1 = x - v
        r2 = ax - z
        d1 = d1 + r1
        d2 = d2 + r2

        if not np.all(np.isfinite(x)):
            status = SolverStatus.INFEASIBLE
            break
        r_norm = np.sqrt(np.vdot(r1, r1).real + np.vdot(r2, r2).real)
        s_norm = rho * np.sqrt(
            np.linalg.norm(v - v_old) ** 2 + np.linalg.norm(AH @ (z - z_old)) ** 2
        )
        p_scale = max(np.linalg.norm(x), np.linalg.norm(v), 1e-12)
        d_scale = rho * max(np.linalg.norm(d1), 1e-12)
        if r_norm <= opts.primal_tolerance * p_scale and s_norm <= opts.dual_tolerance * d_scale:
            if np.linalg.norm(A @ v - yn) <= feas_tol:
                status = SolverStatus.CONVERGED
                break

    x_out = v
    if status is not SolverStatus.INFEASIBLE and eps == 0:
        polished = _support_polish(system, yn, v)
        if polished is not None and np.linalg.norm(A @ polished - yn) <= np.linalg.norm(A @ v - yn):
            x_out = polished
            if np.linalg.norm(A @ x_out - yn) <= feas_tol:
                status = SolverStatus.CONVERGED
    return _result(system, y, x_out * scale, it, status)


def solve_l1(
    system: SensingSystem,
    y: np.ndarray,
    epsilon: float,
    opts: SolverOptions | None = None,
) -> RecoveryResult:
    """Unweighted l1 recovery (every band weighted equally)."""
    partition = BlockPartition(system.n, (system.n,))
    return solve_weighted_l1(system, y, WeightVector.uniform(1), partition, epsilon, opts)


def solve_omp(
    system: SensingSystem,
    y: np.ndarray,
    k_max: int,
    epsilon: float = 0.0,
) -> RecoveryResult:
    """Orthogonal matching pursuit.

    Adds the column with the largest ``|<a_j, r>|`` (lowest index on ties),
    refits by least squares on the selected support, and stops after
    ``k_max`` atoms or once ``||r||_2 <= epsilon``.
    """
    if not 1 <= k_max <= system.m:
        raise ValueError(f"need 1 <= k_max <= m, got k_max={k_max}, m={system.m}")
    A = system.operator
    y = np.asarray(y, dtype=complex)
    x = np.zeros(system.n, dtype=complex)
    r = y.copy()
    support: list[int] = []
    it = 0
    while len(support) < k_max and np.linalg.norm(r) > epsilon and np.linalg.norm(r) > 0:
        corr = np.abs(A.conj().T @ r)
        corr[support] = -1.0
        j = int(np.argmax(corr))  # argmax returns the first maximum
        support.append(j)
        coef, *_ = np.linalg.lstsq(A[:, support], y, rcond=None)
        x[:] = 0
        x[support] = coef
        r = y - A[:, support] @ coef
        it += 1
    return _result(system, y, x, it, SolverStatus.CONVERGED)


def _top_k(values: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps the lowest index first among equal magnitudes
    order = np.argsort(-values, kind="stable")
    return np.sort(order[:k])


def solve_cosamp(
    system: SensingSystem,
    y: np.ndarray,
    k: int,
    epsilon: float = 0.0,
    opts: SolverOptions | None = None,
) -> RecoveryResult:
    """Compressive sampling matching pursuit with target sparsity ``k``."""
    opts = opts or SolverOptions()
    if k < 1 or 3 * k > system.n:
        raise ValueError(f"need 1 <= k and 3k <= n, got k={k}, n={system.n}")
    A = system.operator
    AH = A.conj().T
    y = np.asarray(y, dtype=complex)
    x = np.zeros(system.n, dtype=complex)
    r = y.copy()
    rnorm = float(np.linalg.norm(r))
    if rnorm <= epsilon or rnorm == 0:
        return _result(system, y, x, 0, SolverStatus.CONVERGED)
    status = SolverStatus.MAX_ITERATIONS
    it = 0
    for it in range(1, opts.max_iterations + 1):
        proxy = np.abs(AH @ r)
        omega = _top_k(proxy, 2 * k)
        merged = np.union1d(omega, np.flatnonzero(x))
        coef, *_ = np.linalg.lstsq(A[:, merged], y, rcond=None)
        keep = _top_k(np.abs(coef), k)
        x_new = np.zeros_like(x)
        x_new[merged[keep]] = coef[keep]
        r_new = y - A @ x_new
        new_norm = float(np.linalg.norm(r_new))
        if new_norm >= rnorm:
            # stagnation: keep the better previous iterate
            status = SolverStatus.CONVERGED
            break
        x, r, rnorm = x_new, r_new, new_norm
        if rnorm <= epsilon or rnorm <= 1e-12 * float(np.linalg.norm(y)):
            status = SolverStatus.CONVERGED
            break
    return _result(system, y, x, it, status)


def recovery_error(x_hat: np.ndarray, x0: np.ndarray) -> float:
    """Euclidean recovery error ``||x_hat - x0||_2``."""
    x_hat = np.asarray(x_hat)
    x0 = np.asarray(getattr(x0, "values", x0))
    if x_hat.shape != x0.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {x0.shape}")
    return float(np.linalg.norm(x_hat - x0))


def sparsity_index(x: np.ndarray, k: int, p: float = 2) -> float:
    """Best ``k``-term approximation error of ``x`` in the ``l_p`` norm."""
    x = np.asarray(getattr(x, "values", x))
    if not 0 <= k <= x.size:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={x.size}")
    tail = np.sort(np.abs(x))[: x.size - k]
    if tail.size == 0:
        return 0.0
    return float(np.linalg.norm(tail, ord=p))
