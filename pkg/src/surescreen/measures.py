"""The ten dependence measures behind the screening methods.

Every measure maps a feature block (n x d) and a response block (n x q) to a
nonnegative utility; larger means more dependent.  Normalized measures
(Pearson, Kendall, distance/stable/projection/ball correlation) live in
[0, 1]; the Wasserstein utility is an unnormalized squared-transport cost.
All measures return 0 on constant input instead of NaN so degenerate
real-data columns rank last.

The per-pair functions are the reference entry points; ``score_all`` reuses
response-side precomputation across features and is the hot path for the
benchmark harness and real-data runs.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import kendalltau, rankdata
from threadpoolctl import threadpool_limits

from . import transport
from .data import PredictorArray, ResponseBlock, feature_block, standardize
from .screening import ScoreTable

__all__ = [
    "MeasureKind",
    "MeasureOptions",
    "MethodCompatibilityError",
    "pearson_utility",
    "sirs_utility",
    "kendall_utility",
    "dcor_utility",
    "dc_rosis_utility",
    "mrdc_utility",
    "sc_utility",
    "pc_utility",
    "bcor_utility",
    "wd_utility",
    "score_all",
]


class MeasureKind(str, Enum):
    SIS = "SIS"
    SIRS = "SIRS"
    RRCS = "RRCS"
    DC_SIS = "DC-SIS"
    DC_RoSIS = "DC-RoSIS"
    MrDc_SIS = "MrDc-SIS"
    SC_SIS = "SC-SIS"
    PC_Screen = "PC-Screen"
    BCor_SIS = "BCor-SIS"
    WD_Screen = "WD-Screen"

    @property
    def univariate_only(self) -> bool:
        """SIS, SIRS, RRCS, DC-RoSIS accept only d = 1 and q = 1."""
        return self in (MeasureKind.SIS, MeasureKind.SIRS, MeasureKind.RRCS, MeasureKind.DC_RoSIS)

    @staticmethod
    def parse(name: str) -> "MeasureKind":
        key = name.strip().lower().replace("_", "-")
        for kind in MeasureKind:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown measure {name!r}; choose from "
                         + ", ".join(k.value for k in MeasureKind))


class MethodCompatibilityError(ValueError):
    """Measure cannot handle the given block dimensions."""


@dataclass(frozen=True)
class MeasureOptions:
    """Per-measure knobs.

    sc_transform: "bounded_exp" (g(u) = 1 - exp(-u)) or "identity" (plain
    distance correlation).  wd_solver: "auto" picks the exact LP when the
    joint-times-product support size n^3 stays within wd_support_limit, else
    entropic; "exact"/"sinkhorn" force a path.  wd_preprocess: "standardize"
    (default) or "rank" (multivariate ranks, monotone-invariant).
    """

    sc_transform: str = "bounded_exp"
    wd_solver: str = "auto"
    wd_preprocess: str = "standardize"
    wd_epsilon_scale: float = 0.1
    wd_tol: float = 1e-6
    wd_max_iter: int = 2000
    wd_support_limit: int = 1_000_000

    def __post_init__(self):
        if self.sc_transform not in ("bounded_exp", "identity"):
            raise ValueError("sc_transform must be 'bounded_exp' or 'identity'")
        if self.wd_solver not in ("auto", "exact", "sinkhorn"):
            raise ValueError("wd_solver must be 'auto', 'exact', or 'sinkhorn'")
        if self.wd_preprocess not in ("standardize", "rank"):
            raise ValueError("wd_preprocess must be 'standardize' or 'rank'")
        if self.wd_epsilon_scale <= 0:
            raise ValueError("wd_epsilon_scale must be > 0")


_DEFAULT_OPTS = MeasureOptions()

# Above this sample size the projection-correlation kernels switch their
# O(n^3) internals to float32; utilities then carry ~1e-6 relative noise,
# irrelevant for ranking but kept out of the small-n oracle regime.
_PC_F32_MIN_N = 64

# Feature batch width for the Wasserstein screen; batches are aligned to
# absolute feature index so results never depend on worker layout.
_WD_BATCH = 32


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------

def _as_block(A) -> np.ndarray:
    B = np.asarray(A, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2:
        raise ValueError(f"block must be 1-d or 2-d, got shape {B.shape}")
    return B


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    return v


def _midranks(y: np.ndarray) -> np.ndarray:
    return rankdata(y, method="average")


def _abs_corr(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    den = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if den == 0.0:
        return 0.0
    return min(abs(float(xc @ yc)) / den, 1.0)


def _dcenter(D: np.ndarray) -> np.ndarray:
    return D - D.mean(axis=1, keepdims=True) - D.mean(axis=0, keepdims=True) + D.mean()


def _normalized_ratio(cross: float, self_x: float, self_y: float) -> float:
    """sqrt(cross) / sqrt(sqrt(self_x) * sqrt(self_y)) with degenerate guard."""
    if self_x <= 0.0 or self_y <= 0.0:
        return 0.0
    val = math.sqrt(max(cross, 0.0)) / math.sqrt(math.sqrt(self_x) * math.sqrt(self_y))
    return min(val, 1.0)


# ---------------------------------------------------------------------------
# simple univariate measures
# ---------------------------------------------------------------------------

def pearson_utility(x, y) -> float:
    """|sample Pearson correlation|; 0 if either vector is constant."""
    return _abs_corr(_as_vector(x), _as_vector(y))


def sirs_utility(x, y) -> float:
    """|Pearson correlation| between the predictor and ranks(y)/n (mid-ranks)."""
    y = _as_vector(y)
    return _abs_corr(_as_vector(x), _midranks(y) / y.shape[0])


def kendall_utility(x, y) -> float:
    """|tau_b| (tie-corrected Kendall); 0 when either side is constant."""
    x, y = _as_vector(x), _as_vector(y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tau = kendalltau(x, y).statistic
    if tau is None or math.isnan(tau):
        return 0.0
    return min(abs(float(tau)), 1.0)


# ---------------------------------------------------------------------------
# distance correlation family (DC-SIS, DC-RoSIS, SC-SIS, MrDc-SIS)
# ---------------------------------------------------------------------------

def _sc_transform_fn(name: str):
    if name == "identity":
        return None
    return lambda D: 1.0 - np.exp(-D)


class _DcorScorer:
    """Distance correlation against a fixed response block; optional
    elementwise transform of the pairwise distances (SC-SIS)."""

    def __init__(self, Y: np.ndarray, transform=None):
        self.transform = transform
        B = cdist(Y, Y)
        if transform is not None:
            B = transform(B)
        self.B = _dcenter(B)
        self.dcov2_yy = float((self.B * self.B).mean())

    def utility(self, Xb: np.ndarray) -> float:
        A = cdist(Xb, Xb)
        if self.transform is not None:
            A = self.transform(A)
        A = _dcenter(A)
        dcov2_xx = float((A * A).mean())
        dcov2 = float((A * self.B).mean())
        return _normalized_ratio(dcov2, dcov2_xx, self.dcov2_yy)


def dcor_utility(Xb, Yb) -> float:
    """Sample distance correlation (V-statistic) between two blocks."""
    return _DcorScorer(_as_block(Yb)).utility(_as_block(Xb))


def sc_utility(Xb, Yb, transform: str = "bounded_exp") -> float:
    """Distance correlation computed on transformed pairwise distances.

    The default bounded transform g(u) = 1 - exp(-u) damps large distances;
    g(u) = u recovers ``dcor_utility`` exactly.
    """
    return _DcorScorer(_as_block(Yb), _sc_transform_fn(transform)).utility(_as_block(Xb))


def dc_rosis_utility(x, y) -> float:
    """Distance correlation between the predictor and ranks(y)/n."""
    y = _as_vector(y)
    ranks = _midranks(y) / y.shape[0]
    return dcor_utility(_as_vector(x), ranks)


class _MrdcScorer:
    def __init__(self, Y: np.ndarray):
        self.inner = _DcorScorer(_as_block(transport.multivariate_rank(Y)))

    def utility(self, Xb: np.ndarray) -> float:
        return self.inner.utility(_as_block(transport.multivariate_rank(Xb)))


def mrdc_utility(Xb, Yb) -> float:
    """Distance correlation between the multivariate ranks of the blocks."""
    return _MrdcScorer(_as_block(Yb)).utility(_as_block(Xb))


# ---------------------------------------------------------------------------
# projection correlation (PC-Screen)
# ---------------------------------------------------------------------------
#
# PC^2(X, Y) = (1/n^3) sum_i <A_i, H B_i H> where A_i[k, l] is the angle at
# anchor i between (x_k - x_i) and (x_l - x_i) (0 when either leg vanishes)
# and H double-centers over (k, l).  For univariate data the angle is 0 or
# pi, so A_i = (pi/2) (m_i m_i' - s_i s_i') with s_i the sign pattern and
# m_i = |s_i|; this rank-2 form avoids the O(n^3) angle tensor entirely.

def _pc_sign_parts(x: np.ndarray):
    S = np.sign(x[None, :] - x[:, None])  # S[i, k] = sign(x_k - x_i)
    M = np.abs(S)
    Sh = S - S.mean(axis=1, keepdims=True)
    Mh = M - M.mean(axis=1, keepdims=True)
    return M, S, Mh, Sh


def _pc_self_uni(M, S, Mh, Sh, n: int) -> float:
    t1 = np.einsum("ik,ik->i", M, Mh)
    t2 = np.einsum("ik,ik->i", M, Sh)
    t3 = np.einsum("ik,ik->i", S, Mh)
    t4 = np.einsum("ik,ik->i", S, Sh)
    total = float((t1 * t1 - t2 * t2 - t3 * t3 + t4 * t4).sum())
    return (math.pi / 2.0) ** 2 * total / n**3


def _angle_chunk(Z: np.ndarray, i0: int, i1: int) -> np.ndarray:
    """Angle matrices for anchors i0..i1: out[t, k, l] = a(k, l; i0 + t)."""
    c = i1 - i0
    D = Z[None, :, :] - Z[i0:i1, None, :]              # (c, n, d)
    nrm = np.sqrt(np.einsum("cnd,cnd->cn", D, D))
    zero = nrm == 0.0
    nrm[zero] = 1.0
    D /= nrm[:, :, None]
    cos = np.matmul(D, D.transpose(0, 2, 1))           # (c, n, n)
    np.clip(cos, -1.0, 1.0, out=cos)
    ang = np.arccos(cos, out=cos)
    n = Z.shape[0]
    ang[:, np.arange(n), np.arange(n)] = 0.0           # identical legs
    for t in range(c):
        z = np.flatnonzero(zero[t])
        if z.size:                                     # vanishing legs (incl. the anchor)
            ang[t, z, :] = 0.0
            ang[t, :, z] = 0.0
    return ang


def _pc_self_from_chunk(ang: np.ndarray, n: int) -> float:
    # <A, HAH> = |A|^2 - n |rowmean|^2 - n |colmean|^2 + n^2 mean^2 per anchor
    rm = ang.mean(axis=2)
    cm = ang.mean(axis=1)
    tm = ang.mean(axis=(1, 2))
    aa = np.einsum("ckl,ckl->c", ang, ang)
    return float((aa - n * np.einsum("ck,ck->c", rm, rm)
                  - n * np.einsum("ck,ck->c", cm, cm) + n * n * tm * tm).sum())


class _PcScorer:
    _CHUNK = 8

    def __init__(self, Y: np.ndarray):
        Y = _as_block(Y)
        self.n = n = Y.shape[0]
        self._dtype = np.float32 if n > _PC_F32_MIN_N else np.float64
        self.y_uni = Y.shape[1] == 1
        if self.y_uni:
            self.y_parts = _pc_sign_parts(Y[:, 0])
            self.pyy = _pc_self_uni(*self.y_parts, n)
        else:
            Bt = np.empty((n, n, n), dtype=self._dtype)
            self_sum = 0.0
            Yl = Y.astype(self._dtype)
            for i0 in range(0, n, self._CHUNK):
                i1 = min(i0 + self._CHUNK, n)
                ang = _angle_chunk(Yl, i0, i1)
                self_sum += _pc_self_from_chunk(ang, n)
                rm = ang.mean(axis=2, keepdims=True)
                cm = ang.mean(axis=1, keepdims=True)
                tm = ang.mean(axis=(1, 2), keepdims=True)
                Bt[i0:i1] = ang - rm - cm + tm
            self.Bt = Bt
            self.pyy = self_sum / n**3

    # -- cross terms ------------------------------------------------------
    def _cross_uni_x(self, M, S, Mh, Sh) -> float:
        n = self.n
        if self.y_uni:
            My, Sy, Mhy, Shy = self.y_parts
            t1 = np.einsum("ik,ik->i", M, Mhy)
            t2 = np.einsum("ik,ik->i", M, Shy)
            t3 = np.einsum("ik,ik->i", S, Mhy)
            t4 = np.einsum("ik,ik->i", S, Shy)
            total = float((t1 * t1 - t2 * t2 - t3 * t3 + t4 * t4).sum())
            return (math.pi / 2.0) ** 2 * total / n**3
        P = np.stack([M, S], axis=2).astype(self._dtype)   # (n, n, 2)
        V = np.matmul(self.Bt, P)                          # (n, n, 2)
        quad = np.einsum("ikc,ikc->c", V, P)
        return (math.pi / 2.0) * float(quad[0] - quad[1]) / n**3

    def utility(self, Xb: np.ndarray) -> float:
        n = self.n
        if Xb.shape[1] == 1:
            M, S, Mh, Sh = _pc_sign_parts(Xb[:, 0])
            pxx = _pc_self_uni(M, S, Mh, Sh, n)
            pxy = self._cross_uni_x(M, S, Mh, Sh)
            return _normalized_ratio(pxy, pxx, self.pyy)
        Xl = Xb.astype(self._dtype)
        cross = 0.0
        selfsum = 0.0
        for i0 in range(0, n, self._CHUNK):
            i1 = min(i0 + self._CHUNK, n)
            ang = _angle_chunk(Xl, i0, i1)
            selfsum += _pc_self_from_chunk(ang, n)
            if self.y_uni:
                My, Sy, Mhy, Shy = self.y_parts
                Pc = np.stack([Mhy[i0:i1], Shy[i0:i1]], axis=2).astype(ang.dtype)
                V = np.matmul(ang, Pc)                     # (c, n, 2)
                quad = np.einsum("ikc,ikc->c", V, Pc)
                cross += (math.pi / 2.0) * float(quad[0] - quad[1])
            else:
                cross += float(np.einsum("ckl,ckl->", ang, self.Bt[i0:i1],
                                         dtype=np.float64))
        pxx = selfsum / n**3
        pxy = cross / n**3
        return _normalized_ratio(pxy, pxx, self.pyy)


def pc_utility(Xb, Yb) -> float:
    """Sample projection correlation between two blocks (angle-based,
    rotation invariant)."""
    return _PcScorer(_as_block(Yb)).utility(_as_block(Xb))


# ---------------------------------------------------------------------------
# ball correlation (BCor-SIS)
# ---------------------------------------------------------------------------

def _ball_indicator(D: np.ndarray) -> np.ndarray:
    """delta[i, j, k] = 1{ D[i, k] <= D[i, j] }, stored float32.

    The float32 storage is exact here: every downstream sum is a count
    bounded by n, far below the 2^24 integer limit.
    """
    return np.less_equal(D[:, None, :], D[:, :, None]).astype(np.float32)


class _BcorScorer:
    def __init__(self, Y: np.ndarray):
        DY = cdist(Y, Y)
        self.n = n = DY.shape[0]
        self.dY = _ball_indicator(DY)
        self.DYm = self.dY.mean(axis=2, dtype=np.float64)
        self.byy = float(((self.DYm - self.DYm * self.DYm) ** 2).mean())

    def utility(self, Xb: np.ndarray) -> float:
        n = self.n
        DX = cdist(Xb, Xb)
        dX = _ball_indicator(DX)
        DXm = dX.mean(axis=2, dtype=np.float64)
        joint = np.einsum("ijk,ijk->ij", dX, self.dY)
        DXYm = joint.astype(np.float64) / n
        bxy = float(((DXYm - DXm * self.DYm) ** 2).mean())
        bxx = float(((DXm - DXm * DXm) ** 2).mean())
        return _normalized_ratio(bxy, bxx, self.byy)


def bcor_utility(Xb, Yb) -> float:
    """Sample ball correlation between two blocks (V-statistic form)."""
    return _BcorScorer(_as_block(Yb)).utility(_as_block(Xb))


# ---------------------------------------------------------------------------
# Wasserstein dependence (WD-Screen)
# ---------------------------------------------------------------------------
#
# The utility is the squared-W2 transport cost between the joint empirical
# measure (n atoms (x_i, y_i), weight 1/n) and the product of the empirical
# marginals (n^2 atoms (x_k, y_l), weight 1/n^2) under the separable ground
# cost |x - x'|^2 + |y - y'|^2.  Small problems go through the exact LP;
# large ones through the entropic solver with epsilon = wd_epsilon_scale *
# mean(cost).

def _wd_preprocess(B: np.ndarray, mode: str) -> np.ndarray:
    if mode == "rank":
        return _as_block(transport.multivariate_rank(B))
    return _as_block(standardize(B))


def _is_constant_block(B: np.ndarray) -> bool:
    return bool((B == B[0]).all())


def _mean_sqdist_standardized(n: int, B: np.ndarray) -> float:
    # Every standardized non-constant column contributes exactly 2(n-1)/n to
    # the mean pairwise squared distance, so the value is shared across
    # features and the response-side kernel can be reused.
    nonconst = int((B.std(axis=0) > 0).sum())
    return 2.0 * (n - 1) / n * nonconst


class _WdScorer:
    def __init__(self, Y: np.ndarray, opts: MeasureOptions):
        self.opts = opts
        Y = _as_block(Y)
        self.n = n = Y.shape[0]
        self.y_constant = _is_constant_block(Y)
        self.Yp = _wd_preprocess(Y, opts.wd_preprocess)
        self.DY = cdist(self.Yp, self.Yp, "sqeuclidean")
        self.mean_dy = float(self.DY.mean())
        self._ky_cache: dict[float, np.ndarray] = {}

    def _solver_for(self) -> str:
        if self.opts.wd_solver != "auto":
            return self.opts.wd_solver
        return "exact" if self.n**3 <= self.opts.wd_support_limit else "sinkhorn"

    def _mean_dx(self, Xp: np.ndarray, DX: np.ndarray | None) -> float:
        if self.opts.wd_preprocess == "standardize":
            return _mean_sqdist_standardized(self.n, Xp)
        # rank mode: the support is always the same reference point set
        if not hasattr(self, "_rank_mean_dx_cache"):
            self._rank_mean_dx_cache: dict[int, float] = {}
        dim = Xp.shape[1]
        if dim not in self._rank_mean_dx_cache:
            if DX is None:
                DX = cdist(Xp, Xp, "sqeuclidean")
            self._rank_mean_dx_cache[dim] = float(DX.mean())
        return self._rank_mean_dx_cache[dim]

    def _ky(self, eps: float) -> np.ndarray:
        K = self._ky_cache.get(eps)
        if K is None:
            K = np.exp(-self.DY / eps)
            K = np.maximum(K, 1e-30).astype(np.float32)
            if len(self._ky_cache) > 8:
                self._ky_cache.clear()
            self._ky_cache[eps] = K
        return K

    def utility(self, Xb: np.ndarray) -> float:
        return float(self.utilities_batch([Xb])[0])

    def utilities_batch(self, blocks: list) -> np.ndarray:
        """Score a batch of feature blocks; entropic iterations are shared
        across the batch (one GEMM per update over the stacked kernels)."""
        n = self.n
        out = np.zeros(len(blocks))
        if self.y_constant:
            return out
        solver = self._solver_for()
        todo = []
        for t, Xb in enumerate(blocks):
            if _is_constant_block(Xb):
                out[t] = 0.0  # joint equals product
                continue
            Xp = _wd_preprocess(Xb, self.opts.wd_preprocess)
            DX = cdist(Xp, Xp, "sqeuclidean")
            mean_c = self._mean_dx(Xp, DX) + self.mean_dy
            if solver == "exact":
                out[t] = self._exact_cost(DX)
            else:
                todo.append((t, DX, self.opts.wd_epsilon_scale * mean_c))
        if todo:
            costs = self._sinkhorn_batch([d for _, d, _ in todo], [e for _, _, e in todo])
            for (t, _, _), c in zip(todo, costs):
                out[t] = c
        return out

    def _exact_cost(self, DX: np.ndarray) -> float:
        # C[i, (k, l)] = DX[i, k] + DY[i, l]
        n = self.n
        C = (DX[:, :, None] + self.DY[:, None, :]).reshape(n, n * n)
        a = np.full(n, 1.0 / n)
        b = np.full(n * n, 1.0 / (n * n))
        plan, cost = transport.transport_lp(a, b, C)
        return float(cost)

    def _sinkhorn_batch(self, DXs: list, epss: list) -> list:
        n = self.n
        costs = [0.0] * len(DXs)
        # group by epsilon so the response kernel and the shared-right-factor
        # GEMMs are reused across the whole group
        groups: dict[float, list[int]] = {}
        for t, e in enumerate(epss):
            groups.setdefault(e, []).append(t)
        for eps, members in groups.items():
            KY = self._ky(eps)
            KXT = np.empty((len(members), n, n), dtype=np.float32)
            for s, t in enumerate(members):
                KX = np.exp(-DXs[t] / eps)
                KXT[s] = np.maximum(KX, 1e-30).T  # store transposed: (k, i)
            u, V = _sinkhorn_product_kernel(
                KXT, KY, n, tol=self.opts.wd_tol, max_iter=self.opts.wd_max_iter)
            # transport cost <P, C> from the marginal projections of the plan
            T = np.matmul(V.reshape(-1, n), KY.T).reshape(len(members), n, n)
            W = np.matmul(KXT.transpose(0, 2, 1), V)       # (b, i, l) = KX @ V
            for s, t in enumerate(members):
                DX64 = DXs[t]
                # PX[i,k] = u_i KX[i,k] T[k,i];  PY[i,l] = u_i KY[i,l] W[i,l]
                cost_x = float(np.einsum("i,ki,ki,ik->", u[s].astype(np.float64),
                                         KXT[s].astype(np.float64),
                                         T[s].astype(np.float64),
                                         DX64, optimize=True))
                cost_y = float(np.einsum("i,il,il,il->", u[s].astype(np.float64),
                                         KY.astype(np.float64),
                                         W[s].astype(np.float64),
                                         self.DY, optimize=True))
                costs[t] = cost_x + cost_y
        return costs


def _sinkhorn_product_kernel(KXT: np.ndarray, KY: np.ndarray, n: int,
                             tol: float, max_iter: int):
    """Shared-iteration entropic scaling for a stack of joint-vs-product
    problems with a common response kernel.

    KXT: (b, k, i) transposed feature kernels; KY: (i, l).  Source weights
    are 1/n, target weights 1/n^2.  Returns (u, V) scaling factors.
    """
    b = KXT.shape[0]
    a_w = np.float32(1.0 / n)
    b_w = np.float32(1.0 / (n * n))
    V = np.ones((b, n, n), dtype=np.float32)     # indexed (batch, k, l)
    u = np.full((b, n), a_w, dtype=np.float32)
    KYT = np.ascontiguousarray(KY.T)
    u_out = np.empty_like(u)
    V_out = np.empty_like(V)
    live = np.arange(b)  # features still iterating; each freezes at the
    worst = np.inf       # first check where its own marginals pass tol
    for it in range(max_iter + 1):
        T = np.matmul(V.reshape(-1, n), KYT).reshape(V.shape)  # (b, k, i)
        Kv = np.einsum("bki,bki->bi", KXT, T)
        if it and (it % 5 == 0 or it == max_iter):
            viol = np.abs(u * Kv - a_w).max(axis=1)  # rows of the previous
            done = viol <= tol                       # (u, V); columns exact
            worst = float(viol[~done].max()) if (~done).any() else 0.0
            if done.any():
                u_out[live[done]] = u[done]
                V_out[live[done]] = V[done]
                keep = ~done
                live, u, V = live[keep], u[keep], V[keep]
                KXT, Kv = KXT[keep], Kv[keep]
            if live.size == 0 or it == max_iter:
                break
        u = a_w / Kv
        M = np.matmul((KXT * u[:, None, :]).reshape(-1, n), KY).reshape(V.shape)
        V = b_w / M
    if live.size:
        raise transport.ConvergenceError(
            f"entropic screen failed to reach tol={tol:g} in {max_iter} "
            f"iterations for {live.size} feature(s) (violation {worst:.3e})",
            worst)
    return u_out, V_out


def wd_utility(Xb, Yb, opts: MeasureOptions | None = None) -> float:
    """Squared-W2 transport cost between the joint empirical measure and the
    product of its marginals; 0 iff the empirical coupling is free."""
    opts = opts or _DEFAULT_OPTS
    return _WdScorer(_as_block(Yb), opts).utility(_as_block(Xb))


# ---------------------------------------------------------------------------
# score_all: one utility per feature
# ---------------------------------------------------------------------------

class _SimpleScorer:
    """Adapts a per-pair kernel to range scoring over the feature axis."""

    def __init__(self, fn):
        self.fn = fn

    def score_range(self, xvals: np.ndarray, j0: int, j1: int) -> np.ndarray:
        out = np.empty(j1 - j0)
        for t, j in enumerate(range(j0, j1)):
            out[t] = self.fn(np.ascontiguousarray(xvals[:, :, j].T))
        return out


class _VectorCorrScorer:
    """SIS / SIRS: |correlation| of every feature against one target vector,
    evaluated with a single matrix product."""

    def __init__(self, target: np.ndarray):
        t = target - target.mean()
        nrm = math.sqrt(float(t @ t))
        self.t = t / nrm if nrm > 0 else None

    def score_range(self, xvals: np.ndarray, j0: int, j1: int) -> np.ndarray:
        if self.t is None:
            return np.zeros(j1 - j0)
        Xm = xvals[0, :, j0:j1]
        Xc = Xm - Xm.mean(axis=0, keepdims=True)
        nrm = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
        dots = np.abs(self.t @ Xc)
        out = np.zeros(j1 - j0)
        nz = nrm > 0
        out[nz] = dots[nz] / nrm[nz]
        return np.minimum(out, 1.0)


class _WdRangeScorer:
    def __init__(self, inner: _WdScorer):
        self.inner = inner

    def score_range(self, xvals: np.ndarray, j0: int, j1: int) -> np.ndarray:
        out = np.empty(j1 - j0)
        j = j0
        while j < j1:
            hi = min((j // _WD_BATCH + 1) * _WD_BATCH, j1)
            blocks = [np.ascontiguousarray(xvals[:, :, t].T) for t in range(j, hi)]
            out[j - j0:hi - j0] = self.inner.utilities_batch(blocks)
            j = hi
        return out


def _make_scorer(kind: MeasureKind, yvals: np.ndarray, opts: MeasureOptions):
    Y = _as_block(yvals)
    if kind == MeasureKind.SIS:
        return _VectorCorrScorer(Y[:, 0])
    if kind == MeasureKind.SIRS:
        return _VectorCorrScorer(_midranks(Y[:, 0]) / Y.shape[0])
    if kind == MeasureKind.RRCS:
        return _SimpleScorer(lambda Xb: kendall_utility(Xb[:, 0], Y[:, 0]))
    if kind == MeasureKind.DC_SIS:
        sc = _DcorScorer(Y)
        return _SimpleScorer(sc.utility)
    if kind == MeasureKind.DC_RoSIS:
        sc = _DcorScorer(_as_block(_midranks(Y[:, 0]) / Y.shape[0]))
        return _SimpleScorer(sc.utility)
    if kind == MeasureKind.SC_SIS:
        sc = _DcorScorer(Y, _sc_transform_fn(opts.sc_transform))
        return _SimpleScorer(sc.utility)
    if kind == MeasureKind.MrDc_SIS:
        sc = _MrdcScorer(Y)
        return _SimpleScorer(sc.utility)
    if kind == MeasureKind.PC_Screen:
        sc = _PcScorer(Y)
        return _SimpleScorer(sc.utility)
    if kind == MeasureKind.BCor_SIS:
        sc = _BcorScorer(Y)
        return _SimpleScorer(sc.utility)
    if kind == MeasureKind.WD_Screen:
        return _WdRangeScorer(_WdScorer(Y, opts))
    raise ValueError(f"unhandled measure kind {kind}")


def check_compatibility(kind: MeasureKind, d: int, q: int) -> None:
    if kind.univariate_only and (d != 1 or q != 1):
        raise MethodCompatibilityError(
            f"{kind.value} handles only univariate predictors and responses "
            f"(d = 1, q = 1); got d = {d}, q = {q}")


_POOL_STATE: dict = {}


def _pool_init(xvals, yvals, kind, opts):
    _POOL_STATE["limits"] = threadpool_limits(limits=1)
    _POOL_STATE["x"] = xvals
    _POOL_STATE["scorer"] = _make_scorer(kind, yvals, opts)


def _pool_score(span):
    j0, j1 = span
    return j0, _POOL_STATE["scorer"].score_range(_POOL_STATE["x"], j0, j1)


def score_all(
    X: PredictorArray,
    Y: ResponseBlock,
    kind: MeasureKind,
    opts: MeasureOptions | None = None,
    threads: int = 1,
) -> ScoreTable:
    """Utility of every feature block against the response.

    Deterministic for fixed inputs and options: features are reduced by
    index, worker processes only partition the feature axis, and BLAS pools
    are pinned to one thread during scoring.
    """
    opts = opts or _DEFAULT_OPTS
    if X.n != Y.n:
        raise ValueError(f"subject counts differ: X has {X.n}, Y has {Y.n}")
    check_compatibility(kind, X.d, Y.q)
    p = X.p
    xv, yv = X.values, Y.values
    if threads <= 1 or p < 4 * _WD_BATCH:
        with threadpool_limits(limits=1):
            scorer = _make_scorer(kind, yv, opts)
            util = scorer.score_range(xv, 0, p)
        return ScoreTable(util, kind)
    # chunk boundaries are multiples of the WD batch width so batching is
    # independent of the worker count
    per = max(_WD_BATCH, -(-p // (threads * 4)))
    per = -(-per // _WD_BATCH) * _WD_BATCH
    spans = [(j0, min(j0 + per, p)) for j0 in range(0, p, per)]
    util = np.empty(p)
    with ProcessPoolExecutor(
        max_workers=threads, initializer=_pool_init, initargs=(xv, yv, kind, opts)
    ) as pool:
        for j0, vals in pool.map(_pool_score, spans):
            util[j0:j0 + len(vals)] = vals
    return ScoreTable(util, kind)
