"""Discrete optimal transport: exact solvers, entropic regularization, and
the OT-based multivariate rank map.

The exact balanced problem between equal-weight supports reduces to a linear
assignment; the general (unequal-support) problem is solved as the
Monge-Kantorovich linear program.  The entropic path runs in log-domain so it
survives small regularization.  All solvers are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment, linprog
from scipy.special import logsumexp

__all__ = [
    "DiscreteMeasure",
    "TransportPlan",
    "ConvergenceError",
    "assignment_solve",
    "transport_lp",
    "ot_exact",
    "sinkhorn",
    "halton_sequence",
    "multivariate_rank",
]

_WEIGHT_TOL = 1e-9
_MARGINAL_TOL = 1e-6


class ConvergenceError(RuntimeError):
    """Entropic solver failed to reach the marginal tolerance."""

    def __init__(self, message: str, violation: float):
        super().__init__(message)
        self.violation = violation


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure: m points with weights summing to 1."""

    points: np.ndarray  # (m, dim)
    weights: np.ndarray  # (m,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=np.float64)
        if pts.ndim != 2 or w.ndim != 1 or pts.shape[0] != w.shape[0]:
            raise ValueError("points must be (m, dim) with matching (m,) weights")
        if not np.isfinite(pts).all():
            raise ValueError("support points must be finite")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be nonnegative and finite")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 (got {w.sum():.12f})")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @staticmethod
    def uniform(points: np.ndarray) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=np.float64)
        m = pts.shape[0]
        return DiscreteMeasure(pts, np.full(m, 1.0 / m))

    @property
    def m(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class TransportPlan:
    """Coupling between two discrete measures plus its transport cost."""

    coupling: np.ndarray  # (m, k)
    cost: float
    source_weights: np.ndarray
    target_weights: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.coupling, dtype=np.float64)
        a = np.asarray(self.source_weights, dtype=np.float64)
        b = np.asarray(self.target_weights, dtype=np.float64)
        if (P < -1e-12).any():
            raise ValueError("coupling must be nonnegative")
        row_err = np.abs(P.sum(axis=1) - a).max()
        col_err = np.abs(P.sum(axis=0) - b).max()
        if max(row_err, col_err) > _MARGINAL_TOL:
            raise ValueError(
                f"coupling violates marginals (row err {row_err:.2e}, col err {col_err:.2e})"
            )
        P.setflags(write=False)
        object.__setattr__(self, "coupling", P)
        object.__setattr__(self, "cost", float(self.cost))

    @property
    def marginal_violation(self) -> float:
        row = np.abs(self.coupling.sum(axis=1) - self.source_weights).max()
        col = np.abs(self.coupling.sum(axis=0) - self.target_weights).max()
        return float(max(row, col))


def _check_cost(cost: np.ndarray, square: bool = False) -> np.ndarray:
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2:
        raise ValueError(f"cost matrix must be 2-d, got shape {C.shape}")
    if square and C.shape[0] != C.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {C.shape}")
    if not np.isfinite(C).all():
        raise ValueError("cost matrix contains non-finite entries")
    return C


def assignment_solve(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-cost assignment on a square cost matrix.

    Returns ``(perm, total)`` where ``perm[i]`` is the column assigned to row
    ``i`` and ``total`` the minimal sum.  Solved by the shortest augmenting
    path method (Jonker-Volgenant), O(m^3).
    """
    C = _check_cost(cost, square=True)
    rows, cols = linear_sum_assignment(C)
    perm = np.empty(C.shape[0], dtype=np.intp)
    perm[rows] = cols
    return perm, float(C[rows, cols].sum())


def transport_lp(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve the transportation LP min <P, C> s.t. P >= 0, P 1 = a, P^T 1 = b.

    Returns (plan, cost).  Weights must each sum to 1.
    """
    C = _check_cost(C)
    m, k = C.shape
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (m,) or b.shape != (k,):
        raise ValueError(f"cost {C.shape} incompatible with weights ({a.shape}, {b.shape})")
    for w, side in ((a, "source"), (b, "target")):
        if (w < 0).any() or abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"{side} weights must be nonnegative and sum to 1")
    # row-sum and column-sum equality constraints on vec(P), row-major
    rows = sp.kron(sp.eye(m, format="csr"), np.ones((1, k)), format="csr")
    cols = sp.kron(np.ones((1, m)), sp.eye(k, format="csr"), format="csr")
    A_eq = sp.vstack([rows, cols[:-1]], format="csr")  # drop one redundant constraint
    b_eq = np.concatenate([a, b[:-1]])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    P = np.clip(res.x.reshape(m, k), 0.0, None)
    P = _round_to_marginals(P, a, b)
    return P, float((P * C).sum())


def ot_exact(src: DiscreteMeasure, dst: DiscreteMeasure, cost: np.ndarray) -> TransportPlan:
    """Exact Monge-Kantorovich optimum between two discrete measures."""
    C = _check_cost(cost)
    if src.m != C.shape[0] or dst.m != C.shape[1]:
        raise ValueError(f"cost {C.shape} incompatible with supports ({src.m}, {dst.m})")
    P, total = transport_lp(src.weights, dst.weights, C)
    return TransportPlan(P, total, src.weights, dst.weights)


def _round_to_marginals(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rescale rows/columns then spread the residual so marginals hold exactly."""
    r = P.sum(axis=1)
    scale = np.ones_like(r)
    np.divide(a, r, out=scale, where=r > 0)
    np.minimum(scale, 1.0, out=scale)
    P = P * scale[:, None]
    c = P.sum(axis=0)
    scale = np.ones_like(c)
    np.divide(b, c, out=scale, where=c > 0)
    np.minimum(scale, 1.0, out=scale)
    P = P * scale[None, :]
    da = a - P.sum(axis=1)
    db = b - P.sum(axis=0)
    mass = da.sum()
    if mass > 0:
        P = P + np.outer(da, db) / mass
    return P


def sinkhorn(
    src: DiscreteMeasure,
    dst: DiscreteMeasure,
    cost: np.ndarray,
    epsilon: float,
    max_iter: int = 10000,
    tol: float = 1e-9,
) -> TransportPlan:
    """Entropically regularized transport, log-domain updates.

    Iterates the dual potentials until the worst marginal violation of the
    implied plan falls below ``tol``; raises :class:`ConvergenceError`
    carrying the achieved violation otherwise.  The returned plan is rounded
    onto the exact marginals.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    C = _check_cost(cost)
    m, k = C.shape
    if src.m != m or dst.m != k:
        raise ValueError(f"cost {C.shape} incompatible with supports ({src.m}, {dst.m})")
    a, b = src.weights, dst.weights
    log_a = np.log(a, where=a > 0, out=np.full(m, -np.inf))
    log_b = np.log(b, where=b > 0, out=np.full(k, -np.inf))
    f = np.zeros(m)
    g = np.zeros(k)
    Ce = C / epsilon
    violation = np.inf
    for it in range(1, max_iter + 1):
        f = epsilon * (log_a - logsumexp(g[None, :] / epsilon - Ce, axis=1))
        g = epsilon * (log_b - logsumexp(f[:, None] / epsilon - Ce, axis=0))
        if it % 10 == 0 or it == max_iter:
            logP = (f[:, None] + g[None, :]) / epsilon - Ce
            row = np.abs(np.exp(logsumexp(logP, axis=1)) - a).max()
            violation = float(row)  # columns are exact right after the g update
            if violation <= tol:
                break
    if violation > tol:
        raise ConvergenceError(
            f"sinkhorn did not reach tol={tol:g} in {max_iter} iterations "
            f"(violation {violation:.3e})",
            violation,
        )
    P = np.exp((f[:, None] + g[None, :]) / epsilon - Ce)
    P = _round_to_marginals(P, a, b)
    return TransportPlan(P, float((P * C).sum()), a, b)


_PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151,
)


def halton_sequence(count: int, dim: int) -> np.ndarray:
    """Unscrambled Halton points 1..count in (0,1)^dim, bases = first dim primes."""
    if dim > len(_PRIMES):
        raise ValueError(f"dim {dim} exceeds available prime bases ({len(_PRIMES)})")
    out = np.empty((count, dim))
    idx = np.arange(1, count + 1, dtype=np.int64)
    for j in range(dim):
        base = _PRIMES[j]
        col = np.zeros(count)
        denom = 1.0
        rem = idx.copy()
        while rem.any():
            denom *= base
            rem, digit = np.divmod(rem, base)
            col += digit / denom
        out[:, j] = col
    return out


def multivariate_rank(M: np.ndarray) -> np.ndarray:
    """Map sample points to a uniform reference set, generalizing ranks.

    For one column the classical ranks divided by n (ties broken by original
    row order).  For dim >= 2 each row is assigned, by minimum total squared
    Euclidean cost, to one point of the n-point Halton reference sequence;
    the output row is the assigned reference point.
    """
    M = np.asarray(M, dtype=np.float64)
    squeeze = M.ndim == 1
    if squeeze:
        M = M[:, None]
    n, dim = M.shape
    if dim == 1:
        order = np.argsort(M[:, 0], kind="stable")
        ranks = np.empty(n, dtype=np.float64)
        ranks[order] = np.arange(1, n + 1)
        out = (ranks / n)[:, None]
        return out[:, 0] if squeeze else out
    grid = halton_sequence(n, dim)
    diff = M[:, None, :] - grid[None, :, :]
    cost = np.einsum("ijk,ijk->ij", diff, diff)
    perm, _ = assignment_solve(cost)
    return grid[perm]
