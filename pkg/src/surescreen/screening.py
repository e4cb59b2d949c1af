"""Rankings and the screening evaluation criteria.

A screening run ranks features by descending utility and keeps the top
``[n/log n]``.  A replicate is judged by which true features land inside that
cutoff (individual successes) and whether all of them do (overall success);
``S`` is the minimum model size containing every true feature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .data import TrueSet

if TYPE_CHECKING:  # pragma: no cover
    from .measures import MeasureKind

__all__ = [
    "ScoreTable",
    "ScreeningResult",
    "CriteriaTable",
    "cutoff",
    "rank_features",
    "evaluate",
    "aggregate",
    "top_k",
    "intersect_selections",
]


@dataclass(frozen=True)
class ScoreTable:
    """Per-feature utilities for one method; larger means more dependent."""

    utilities: np.ndarray
    method: "MeasureKind | str"

    def __post_init__(self):
        u = np.asarray(self.utilities, dtype=np.float64)
        if u.ndim != 1:
            raise ValueError("utilities must be a vector")
        if not np.isfinite(u).all():
            raise ValueError("utilities must be finite")
        if (u < 0).any():
            raise ValueError("utilities must be nonnegative")
        u.setflags(write=False)
        object.__setattr__(self, "utilities", u)

    @property
    def p(self) -> int:
        return self.utilities.shape[0]


@dataclass(frozen=True)
class ScreeningResult:
    """Outcome of one replicate: ranking, true-feature ranks, S, and flags."""

    ranking: np.ndarray        # permutation of 1..p, descending utility
    true_features: tuple       # unique true feature indices, ascending
    true_ranks: np.ndarray     # rank of each true feature (1 = best)
    min_model_size: int        # S = max(true_ranks)
    cutoff: int                # s
    flags: np.ndarray          # per-true-feature: rank <= s

    @property
    def all_in(self) -> bool:
        return bool(self.flags.all())


@dataclass(frozen=True)
class CriteriaTable:
    """Success rates over replicates: one P_s per true feature plus P_a."""

    true_features: tuple
    p_s: np.ndarray
    p_a: float
    replicates: int

    def __post_init__(self):
        ps = np.asarray(self.p_s, dtype=np.float64)
        if ps.shape != (len(self.true_features),):
            raise ValueError("one P_s per true feature required")
        if self.p_a > ps.min() + 1e-12:
            raise ValueError("P_a cannot exceed the smallest P_s")
        ps.setflags(write=False)
        object.__setattr__(self, "p_s", ps)
        object.__setattr__(self, "p_a", float(self.p_a))


def cutoff(n: int) -> int:
    """Integer part of n / ln(n): the predetermined screening model size."""
    if n < 2:
        raise ValueError("cutoff needs n >= 2")
    return int(n / math.log(n))


def rank_features(t: ScoreTable) -> np.ndarray:
    """Feature indices (1-based) in descending utility; ties keep ascending
    feature order so replicated runs are bit-reproducible."""
    order = np.argsort(-t.utilities, kind="stable")
    return order + 1


def evaluate(t: ScoreTable, true_set: TrueSet, n: int, s: int | None = None) -> ScreeningResult:
    """Rank the table and locate each true feature; s defaults to cutoff(n)."""
    feats = true_set.features
    for f in feats:
        if not (1 <= f <= t.p):
            raise ValueError(f"true feature {f} outside 1..{t.p}")
    ranking = rank_features(t)
    pos = np.empty(t.p + 1, dtype=np.int64)
    pos[ranking] = np.arange(1, t.p + 1)
    true_ranks = np.array([pos[f] for f in feats], dtype=np.int64)
    s = cutoff(n) if s is None else int(s)
    flags = true_ranks <= s
    return ScreeningResult(
        ranking=ranking,
        true_features=feats,
        true_ranks=true_ranks,
        min_model_size=int(true_ranks.max()),
        cutoff=s,
        flags=flags,
    )


def aggregate(results: Sequence[ScreeningResult]) -> CriteriaTable:
    """P_s per true feature and the overall P_a across replicates."""
    if not results:
        raise ValueError("aggregate needs at least one result")
    feats = results[0].true_features
    for r in results:
        if r.true_features != feats:
            raise ValueError("all results must share the same true feature set")
    flags = np.stack([r.flags for r in results])
    p_s = flags.mean(axis=0)
    p_a = float(flags.all(axis=1).mean())
    return CriteriaTable(true_features=feats, p_s=p_s, p_a=p_a, replicates=len(results))


def top_k(t: ScoreTable, k: int, names: Sequence[str] | None = None) -> list:
    """Labels of the k best-ranked features (feature indices if unnamed)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    ranking = rank_features(t)[: min(k, t.p)]
    if names is None:
        return [int(j) for j in ranking]
    if len(names) != t.p:
        raise ValueError("one name per feature required")
    return [names[j - 1] for j in ranking]


def intersect_selections(sets: Iterable[Iterable]) -> list:
    """Common labels across all selections, in deterministic sorted order."""
    sets = [set(s) for s in sets]
    if not sets:
        return []
    common = set.intersection(*sets)
    return sorted(common)
