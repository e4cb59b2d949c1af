"""Shared dataset and configuration types.

A predictor array stacks ``d`` data platforms over ``n`` subjects and ``p``
features; a response block holds ``q`` response coordinates per subject.
Feature indices are 1-based everywhere in the public API (matching the
reporting convention used in the benchmark tables).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "PredictorArray",
    "ResponseBlock",
    "SimConfig",
    "TrueSet",
    "feature_block",
    "standardize",
]


@dataclass(frozen=True)
class PredictorArray:
    """d platforms x n subjects x p features, immutable after construction."""

    values: np.ndarray  # shape (d, n, p)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError(f"predictor array must be 3-d (d, n, p), got shape {v.shape}")
        if min(v.shape) < 1:
            raise ValueError(f"all extents must be >= 1, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("predictor array contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def p(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class ResponseBlock:
    """n subjects x q response coordinates."""

    values: np.ndarray  # shape (n, q)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError(f"response block must be 2-d (n, q), got shape {v.shape}")
        if min(v.shape) < 1:
            raise ValueError(f"all extents must be >= 1, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("response block contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class TrueSet:
    """True signal positions: (feature index, optional platform index), 1-based."""

    entries: tuple

    def __post_init__(self):
        ent = tuple((int(f), (None if pl is None else int(pl))) for f, pl in self.entries)
        if not ent:
            raise ValueError("true set must be nonempty")
        object.__setattr__(self, "entries", ent)

    @property
    def features(self) -> tuple:
        """Unique true feature indices, ascending."""
        return tuple(sorted({f for f, _ in self.entries}))

    def validate_against(self, X: PredictorArray) -> None:
        for f, pl in self.entries:
            if not (1 <= f <= X.p):
                raise ValueError(f"true feature index {f} outside 1..{X.p}")
            if pl is not None and not (1 <= pl <= X.d):
                raise ValueError(f"true platform index {pl} outside 1..{X.d}")


_STUDIES = ("S1", "S2", "S3", "S4")
_MARGINALS = ("gaussian", "power", "pareto")


@dataclass(frozen=True)
class SimConfig:
    """Parameters for the simulation studies.

    ``marginal`` names the platform marginal family used by copula-based
    generation; ``power_a`` and ``pareto_shape``/``pareto_mode`` carry the
    family parameters.  ``noise_sd`` scales the additive response noise
    (a test hook; the studies use 1.0).
    """

    study: str = "S1"
    n: int = 200
    p: int = 2000
    q: int = 1
    d: int = 1
    ar_coefficient: float = 0.5
    beta_low: float = 2.0
    beta_high: float = 5.0
    marginal: str = "gaussian"
    power_a: float = 5.0
    pareto_shape: float = 10.0
    pareto_mode: float = 1.0
    replicates: int = 200
    base_seed: int = 0
    noise_sd: float = 1.0
    share_platform_ids: bool = False

    def __post_init__(self):
        if self.study not in _STUDIES:
            raise ValueError(f"study must be one of {_STUDIES}, got {self.study!r}")
        if self.marginal not in _MARGINALS:
            raise ValueError(f"marginal must be one of {_MARGINALS}, got {self.marginal!r}")
        if not (-1.0 < self.ar_coefficient < 1.0):
            raise ValueError("ar_coefficient must lie in (-1, 1)")
        if not self.beta_low < self.beta_high:
            raise ValueError("beta_low must be < beta_high")
        if self.power_a <= 0:
            raise ValueError("power marginal requires a > 0")
        if self.pareto_shape <= 1:
            raise ValueError("pareto marginal requires shape > 1")
        if self.pareto_mode <= 0:
            raise ValueError("pareto marginal requires mode > 0")
        for name in ("n", "p", "q", "d", "replicates"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")

    @staticmethod
    def for_study(study: str, **overrides) -> "SimConfig":
        """Study presets: S1 AR(1) Gaussian; S2 i.i.d. power features with
        weaker coefficients; S3/S4 three copula platforms with a 10-dim
        response (S4 uses the interaction response)."""
        presets = {
            "S1": dict(study="S1", d=1, q=1, beta_low=2.0, beta_high=5.0, marginal="gaussian"),
            "S2": dict(study="S2", d=1, q=1, beta_low=1.0, beta_high=2.0, marginal="power"),
            "S3": dict(study="S3", d=3, q=10, beta_low=1.0, beta_high=2.0, marginal="power"),
            "S4": dict(study="S4", d=3, q=10, beta_low=1.0, beta_high=2.0, marginal="power"),
        }
        if study not in presets:
            raise ValueError(f"unknown study {study!r}")
        kw = presets[study]
        kw.update(overrides)
        return SimConfig(**kw)


def feature_block(X: PredictorArray, j: int) -> np.ndarray:
    """n x d block of feature ``j`` (1-based): row i is (X[1,i,j], ..., X[d,i,j])."""
    if not (1 <= j <= X.p):
        raise IndexError(f"feature index {j} outside 1..{X.p}")
    return np.ascontiguousarray(X.values[:, :, j - 1].T)


def standardize(M: np.ndarray) -> np.ndarray:
    """Center each column to mean 0 and scale to unit sample sd (1/(n-1)).

    Constant columns map to all zeros so degenerate real-data columns rank
    last instead of blowing up.
    """
    M = np.asarray(M, dtype=np.float64)
    squeeze = M.ndim == 1
    if squeeze:
        M = M[:, None]
    if M.shape[0] < 2:
        raise ValueError("standardize requires at least 2 rows")
    mu = M.mean(axis=0)
    sd = M.std(axis=0, ddof=1)
    out = M - mu
    nz = sd > 0
    out[:, nz] /= sd[nz]
    out[:, ~nz] = 0.0
    return out[:, 0] if squeeze else out
