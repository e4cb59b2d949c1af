import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surescreen.oracles import assignment_ref, rank1d_ref, transport_tree_ref
from surescreen.transport import (ConvergenceError, DiscreteMeasure, TransportPlan,
                                  assignment_solve, halton_sequence, multivariate_rank,
                                  ot_exact, sinkhorn, transport_lp)


def _sqdist(A, B):
    d = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


class TestAssignment:
    def test_diagonal_optimum(self):
        perm, cost = assignment_solve(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.array_equal(perm, [0, 1])
        assert cost == 0.0

    def test_degenerate_ties(self):
        m, c = 4, 2.5
        perm, cost = assignment_solve(np.full((m, m), c))
        assert sorted(perm) == list(range(m))
        assert cost == pytest.approx(m * c)

    def test_matches_bruteforce_6x6(self, rng):
        for _ in range(20):
            C = rng.random((6, 6))
            _, cost = assignment_solve(C)
            _, ref = assignment_ref(C)
            assert cost == pytest.approx(ref, abs=1e-12)

    def test_transpose_symmetry(self, rng):
        for _ in range(10):
            C = rng.random((5, 5))
            _, c1 = assignment_solve(C)
            _, c2 = assignment_solve(C.T)
            assert c1 == pytest.approx(c2, abs=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            assignment_solve(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            assignment_solve(np.array([[0.0, np.nan], [1.0, 0.0]]))


class TestDiscreteMeasure:
    def test_weight_normalization_enforced(self):
        with pytest.raises(ValueError, match="sum to 1"):
            DiscreteMeasure(np.zeros((2, 1)), np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            DiscreteMeasure(np.zeros((2, 1)), np.array([1.5, -0.5]))

    def test_uniform(self):
        m = DiscreteMeasure.uniform(np.zeros((4, 2)))
        assert np.allclose(m.weights, 0.25)


class TestOtExact:
    def test_identity_zero_cost(self, rng):
        pts = rng.standard_normal((4, 2))
        mu = DiscreteMeasure.uniform(pts)
        plan = ot_exact(mu, mu, _sqdist(pts, pts))
        assert plan.cost == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(plan.coupling, np.eye(4) / 4, atol=1e-9)

    def test_single_atoms(self):
        r = 1.7
        src = DiscreteMeasure(np.array([[0.0]]), np.array([1.0]))
        dst = DiscreteMeasure(np.array([[r]]), np.array([1.0]))
        plan = ot_exact(src, dst, np.array([[r * r]]))
        assert plan.cost == pytest.approx(r * r)

    def test_matches_tree_enumeration_3x4(self, rng):
        for _ in range(8):
            a = rng.random(3) + 0.1
            a /= a.sum()
            b = rng.random(4) + 0.1
            b /= b.sum()
            C = rng.random((3, 4))
            plan = ot_exact(DiscreteMeasure(rng.standard_normal((3, 2)), a),
                            DiscreteMeasure(rng.standard_normal((4, 2)), b), C)
            assert plan.cost == pytest.approx(transport_tree_ref(a, b, C), abs=1e-9)

    def test_marginals_hold(self, rng):
        a = np.array([0.2, 0.3, 0.5])
        b = np.array([0.25, 0.25, 0.5])
        plan = ot_exact(DiscreteMeasure(rng.standard_normal((3, 1)), a),
                        DiscreteMeasure(rng.standard_normal((3, 1)), b),
                        rng.random((3, 3)))
        assert plan.marginal_violation < 1e-9

    def test_infeasible_weights_rejected(self, rng):
        a = np.array([0.2, 0.3, 0.5])
        with pytest.raises(ValueError):
            transport_lp(a, np.array([0.3, 0.3]), rng.random((3, 2)))

    def test_symmetric_cost_symmetry(self, rng):
        pts = rng.standard_normal((4, 2))
        w = rng.random(4) + 0.1
        w /= w.sum()
        C = _sqdist(pts, pts)
        mu = DiscreteMeasure(pts, w)
        assert ot_exact(mu, mu, C).cost == pytest.approx(0.0, abs=1e-12)


class TestW2Metric:
    def test_triangle_inequality_small(self, rng):
        for _ in range(10):
            pts = [rng.standard_normal((m, 2)) for m in (3, 4, 5)]
            ms = [DiscreteMeasure.uniform(p) for p in pts]

            def w2(i, j):
                return math.sqrt(max(ot_exact(ms[i], ms[j], _sqdist(pts[i], pts[j])).cost, 0.0))

            ab, bc, ac = w2(0, 1), w2(1, 2), w2(0, 2)
            assert ac <= ab + bc + 1e-8


class TestSinkhorn:
    def test_forced_single_atom_coupling(self):
        r = 0.9
        src = DiscreteMeasure(np.array([[0.0]]), np.array([1.0]))
        dst = DiscreteMeasure(np.array([[r]]), np.array([1.0]))
        for eps in (0.01, 1.0, 10.0):
            plan = sinkhorn(src, dst, np.array([[r * r]]), epsilon=eps)
            assert plan.cost == pytest.approx(r * r, rel=1e-9)

    def test_identity_cost_vanishes_with_epsilon(self, rng):
        pts = rng.standard_normal((5, 2))
        mu = DiscreteMeasure.uniform(pts)
        C = _sqdist(pts, pts)
        costs = [sinkhorn(mu, mu, C, epsilon=e).cost for e in (1.0, 0.1, 0.01)]
        assert costs[0] > costs[1] > costs[2]
        assert costs[2] < 0.05 * C.mean()

    def test_matches_exact_within_5pct(self, rng):
        for _ in range(5):
            src_pts = rng.standard_normal((5, 2))
            dst_pts = rng.standard_normal((5, 2))
            a = rng.random(5) + 0.2
            a /= a.sum()
            b = rng.random(5) + 0.2
            b /= b.sum()
            C = _sqdist(src_pts, dst_pts)
            src, dst = DiscreteMeasure(src_pts, a), DiscreteMeasure(dst_pts, b)
            exact = ot_exact(src, dst, C).cost
            approx = sinkhorn(src, dst, C, epsilon=0.01 * C.mean()).cost
            assert approx <= exact * 1.05 + 1e-12
            assert approx >= exact - 1e-9 * C.max()

    def test_convergence_error_carries_violation(self, rng):
        pts = rng.standard_normal((6, 2))
        mu = DiscreteMeasure.uniform(pts)
        C = _sqdist(pts, rng.standard_normal((6, 2)))
        with pytest.raises(ConvergenceError) as exc:
            sinkhorn(mu, mu, C, epsilon=1e-4 * C.mean(), max_iter=3, tol=1e-12)
        assert exc.value.violation > 0

    def test_rejects_bad_epsilon(self, rng):
        pts = rng.standard_normal((3, 1))
        mu = DiscreteMeasure.uniform(pts)
        with pytest.raises(ValueError):
            sinkhorn(mu, mu, _sqdist(pts, pts), epsilon=0.0)


class TestTransportPlan:
    def test_invariant_enforced(self):
        with pytest.raises(ValueError, match="marginals"):
            TransportPlan(np.array([[0.5, 0.0], [0.0, 0.4]]), 0.0,
                          np.array([0.5, 0.5]), np.array([0.5, 0.5]))


class TestHalton:
    def test_first_points_base2_base3(self):
        H = halton_sequence(4, 2)
        assert np.allclose(H[:, 0], [1 / 2, 1 / 4, 3 / 4, 1 / 8])
        assert np.allclose(H[:, 1], [1 / 3, 2 / 3, 1 / 9, 4 / 9])

    def test_in_unit_cube(self):
        H = halton_sequence(100, 5)
        assert (H > 0).all() and (H < 1).all()


class TestMultivariateRank:
    def test_rank_definition_1d(self):
        out = multivariate_rank(np.array([3.2, -1.0, 7.0]))
        assert np.allclose(out, [2 / 3, 1 / 3, 3 / 3])

    def test_sorted_identity_1d(self):
        out = multivariate_rank(np.arange(5, dtype=float))
        assert np.allclose(out, np.arange(1, 6) / 5)

    def test_ties_broken_by_index(self):
        out = multivariate_rank(np.array([1.0, 1.0, 0.5]))
        assert np.allclose(out, [2 / 3, 3 / 3, 1 / 3])

    def test_dim2_matches_bruteforce(self, rng):
        import itertools
        for _ in range(6):
            M = rng.standard_normal((3, 2))
            grid = halton_sequence(3, 2)
            best, best_perm = np.inf, None
            for perm in itertools.permutations(range(3)):
                c = sum(((M[i] - grid[perm[i]]) ** 2).sum() for i in range(3))
                if c < best:
                    best, best_perm = c, perm
            out = multivariate_rank(M)
            assert np.allclose(out, grid[list(best_perm)])

    def test_output_is_grid_permutation(self, rng):
        M = rng.standard_normal((12, 3))
        out = multivariate_rank(M)
        grid = halton_sequence(12, 3)
        assert np.allclose(np.sort(out.ravel()), np.sort(grid.ravel()))

    def test_row_relabeling_equivariance(self, rng):
        M = rng.standard_normal((8, 2))
        out = multivariate_rank(M)
        perm = rng.permutation(8)
        out_p = multivariate_rank(M[perm])
        assert np.allclose(out_p, out[perm])

    def test_matches_rank_oracle_1d(self, rng):
        x = rng.random(9)
        assert np.allclose(multivariate_rank(x), rank1d_ref(x))
