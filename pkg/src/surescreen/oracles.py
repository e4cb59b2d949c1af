"""Brute-force reference implementations for validation.

Everything here is written as literal loops and exhaustive enumeration,
independent of the optimized kernels, so the fast implementations can be
checked against these on small inputs (the CLI ``selftest`` does exactly
that).  These are O(n!) to O(n^3) and meant for n <= ~8 only.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "pearson_ref",
    "kendall_ref",
    "dcor_ref",
    "sc_ref",
    "pc_ref",
    "bcor_ref",
    "rank1d_ref",
    "assignment_ref",
    "transport_tree_ref",
    "run_selftest",
]


def _blk(A):
    A = np.asarray(A, dtype=np.float64)
    return A[:, None] if A.ndim == 1 else A


def pearson_ref(x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = len(x)
    mx, my = x.mean(), y.mean()
    num = sum((x[i] - mx) * (y[i] - my) for i in range(n))
    den = math.sqrt(sum((v - mx) ** 2 for v in x) * sum((v - my) ** 2 for v in y))
    return 0.0 if den == 0 else abs(num) / den


def kendall_ref(x, y) -> float:
    """Tie-corrected tau_b from explicit pair enumeration."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = len(x)
    conc = disc = tie_x = tie_y = 0
    for i, j in itertools.combinations(range(n), 2):
        dx, dy = x[j] - x[i], y[j] - y[i]
        if dx == 0 and dy == 0:
            tie_x += 1
            tie_y += 1
        elif dx == 0:
            tie_x += 1
        elif dy == 0:
            tie_y += 1
        elif dx * dy > 0:
            conc += 1
        else:
            disc += 1
    den = math.sqrt((conc + disc + tie_x) * (conc + disc + tie_y))
    return 0.0 if den == 0 else abs(conc - disc) / den


def _dist_matrix(Z, transform=None):
    n = Z.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = math.sqrt(sum((Z[i, t] - Z[j, t]) ** 2 for t in range(Z.shape[1])))
    if transform is not None:
        for i in range(n):
            for j in range(n):
                D[i, j] = transform(D[i, j])
    return D


def _center(D):
    n = D.shape[0]
    out = np.zeros_like(D)
    rm = D.mean(axis=1)
    cm = D.mean(axis=0)
    tm = D.mean()
    for i in range(n):
        for j in range(n):
            out[i, j] = D[i, j] - rm[i] - cm[j] + tm
    return out


def dcor_ref(Xb, Yb, transform=None) -> float:
    """Distance correlation via the double loop (V-statistic)."""
    X, Y = _blk(Xb), _blk(Yb)
    A = _center(_dist_matrix(X, transform))
    B = _center(_dist_matrix(Y, transform))
    n = A.shape[0]
    dxy = sum(A[i, j] * B[i, j] for i in range(n) for j in range(n)) / n**2
    dxx = sum(A[i, j] ** 2 for i in range(n) for j in range(n)) / n**2
    dyy = sum(B[i, j] ** 2 for i in range(n) for j in range(n)) / n**2
    if dxx <= 0 or dyy <= 0:
        return 0.0
    return math.sqrt(max(dxy, 0.0)) / math.sqrt(math.sqrt(dxx) * math.sqrt(dyy))


def sc_ref(Xb, Yb) -> float:
    return dcor_ref(Xb, Yb, transform=lambda u: 1.0 - math.exp(-u))


def _angles_ref(Z):
    n = Z.shape[0]
    A = np.zeros((n, n, n))
    for i in range(n):
        for k in range(n):
            for l in range(n):
                u = Z[k] - Z[i]
                v = Z[l] - Z[i]
                nu = math.sqrt(float(u @ u))
                nv = math.sqrt(float(v @ v))
                if nu == 0 or nv == 0:
                    continue
                if k == l:
                    continue  # identical legs: the cosine is exactly 1, angle 0
                c = float(u @ v) / (nu * nv)
                A[i, k, l] = math.acos(max(-1.0, min(1.0, c)))
    return A


def pc_ref(Xb, Yb) -> float:
    """Projection correlation via the triple loop."""
    X, Y = _blk(Xb), _blk(Yb)
    n = X.shape[0]

    def centered(A):
        out = np.zeros_like(A)
        for i in range(n):
            out[i] = _center(A[i])
        return out

    AX = centered(_angles_ref(X))
    AY = centered(_angles_ref(Y))
    pxy = float((AX * AY).sum()) / n**3
    pxx = float((AX * AX).sum()) / n**3
    pyy = float((AY * AY).sum()) / n**3
    if pxx <= 0 or pyy <= 0:
        return 0.0
    return math.sqrt(max(pxy, 0.0)) / math.sqrt(math.sqrt(pxx) * math.sqrt(pyy))


def bcor_ref(Xb, Yb) -> float:
    """Ball correlation via the triple loop."""
    X, Y = _blk(Xb), _blk(Yb)
    n = X.shape[0]
    DX = _dist_matrix(X)
    DY = _dist_matrix(Y)

    def delta(D, i, j, k):
        return 1.0 if D[i, k] <= D[i, j] else 0.0

    bxy = bxx = byy = 0.0
    for i in range(n):
        for j in range(n):
            dx = dy = dxy = 0.0
            for k in range(n):
                a = delta(DX, i, j, k)
                b = delta(DY, i, j, k)
                dx += a
                dy += b
                dxy += a * b
            dx /= n
            dy /= n
            dxy /= n
            bxy += (dxy - dx * dy) ** 2
            bxx += (dx - dx * dx) ** 2
            byy += (dy - dy * dy) ** 2
    bxy /= n**2
    bxx /= n**2
    byy /= n**2
    if bxx <= 0 or byy <= 0:
        return 0.0
    return math.sqrt(max(bxy, 0.0)) / math.sqrt(math.sqrt(bxx) * math.sqrt(byy))


def rank1d_ref(x) -> np.ndarray:
    """Ranks/n with ties broken by original index order."""
    x = np.asarray(x, float)
    n = len(x)
    order = sorted(range(n), key=lambda i: (x[i], i))
    out = np.zeros(n)
    for r, i in enumerate(order, start=1):
        out[i] = r / n
    return out


def assignment_ref(cost) -> tuple:
    """Minimum assignment by enumerating all permutations."""
    C = np.asarray(cost, float)
    m = C.shape[0]
    best = None
    best_perm = None
    for perm in itertools.permutations(range(m)):
        total = sum(C[i, perm[i]] for i in range(m))
        if best is None or total < best - 1e-15:
            best = total
            best_perm = perm
    return np.array(best_perm), float(best)


def transport_tree_ref(a, b, C) -> float:
    """Exact transportation optimum by enumerating spanning-tree bases.

    Every vertex of the transportation polytope is supported on a spanning
    tree of the complete bipartite graph; enumerate them, solve the flow by
    leaf elimination, keep feasible ones, return the minimum cost.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    C = np.asarray(C, float)
    m, k = C.shape
    edges = [(i, j) for i in range(m) for j in range(k)]
    best = math.inf
    for combo in itertools.combinations(edges, m + k - 1):
        # spanning tree check on m + k nodes (union-find)
        parent = list(range(m + k))

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        acyclic = True
        for i, j in combo:
            ri, rj = find(i), find(m + j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if not acyclic or len({find(v) for v in range(m + k)}) != 1:
            continue
        # solve flows by repeated leaf elimination
        flows = {}
        residual = list(a) + list(b)
        adj = {v: [] for v in range(m + k)}
        for e in combo:
            i, j = e
            adj[i].append(e)
            adj[m + j].append(e)
        active = set(combo)
        ok = True
        while active:
            leaf = None
            for v in range(m + k):
                live = [e for e in adj[v] if e in active]
                if len(live) == 1:
                    leaf, edge = v, live[0]
                    break
            if leaf is None:
                ok = False
                break
            i, j = edge
            flow = residual[leaf]
            flows[edge] = flow
            other = m + j if leaf == i else i
            residual[other] -= flow
            residual[leaf] = 0.0
            active.remove(edge)
        if not ok or any(f < -1e-12 for f in flows.values()):
            continue
        total = sum(C[i, j] * f for (i, j), f in flows.items())
        best = min(best, total)
    return best


# ---------------------------------------------------------------------------
# installation selftest
# ---------------------------------------------------------------------------

def run_selftest(verbose: bool = True) -> bool:
    """Check the fast measures and solvers against these references on small
    random inputs.  Returns True when everything agrees to 1e-9."""
    from . import measures, transport

    rng = np.random.default_rng(20240817)
    ok = True

    def report(name, passed, detail=""):
        nonlocal ok
        ok = ok and passed
        if verbose:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}{(' ' + detail) if detail else ''}")

    checks = [
        ("pearson", lambda x, y: measures.pearson_utility(x[:, 0], y[:, 0]),
         lambda x, y: pearson_ref(x[:, 0], y[:, 0]), 1, 1),
        ("kendall", lambda x, y: measures.kendall_utility(x[:, 0], y[:, 0]),
         lambda x, y: kendall_ref(x[:, 0], y[:, 0]), 1, 1),
        ("dcor", measures.dcor_utility, dcor_ref, 2, 2),
        ("stable-corr", measures.sc_utility, sc_ref, 2, 2),
        ("projection-corr", measures.pc_utility, pc_ref, 2, 2),
        ("ball-corr", measures.bcor_utility, bcor_ref, 2, 2),
    ]
    for name, fast, ref, dx, dy in checks:
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(4, 7))
            X = rng.standard_normal((n, dx))
            Y = rng.standard_normal((n, dy))
            worst = max(worst, abs(fast(X, Y) - ref(X, Y)))
        report(f"{name} vs brute force", worst < 1e-9, f"(max diff {worst:.2e})")

    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(2, 6))
        C = rng.random((m, m))
        _, fast_cost = transport.assignment_solve(C)
        _, ref_cost = assignment_ref(C)
        worst = max(worst, abs(fast_cost - ref_cost))
    report("assignment vs permutations", worst < 1e-12, f"(max diff {worst:.2e})")

    worst = 0.0
    for _ in range(5):
        m, k = 3, 4
        a = rng.random(m) + 0.2
        a /= a.sum()
        b = rng.random(k) + 0.2
        b /= b.sum()
        C = rng.random((m, k))
        src = transport.DiscreteMeasure(rng.standard_normal((m, 2)), a)
        dst = transport.DiscreteMeasure(rng.standard_normal((k, 2)), b)
        plan = transport.ot_exact(src, dst, C)
        worst = max(worst, abs(plan.cost - transport_tree_ref(a, b, C)))
    report("exact transport vs tree enumeration", worst < 1e-9, f"(max diff {worst:.2e})")

    return ok
