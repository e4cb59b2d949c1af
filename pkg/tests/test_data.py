import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surescreen.data import PredictorArray, ResponseBlock, SimConfig, TrueSet, feature_block, standardize


class TestPredictorArray:
    def test_extents(self):
        X = PredictorArray(np.zeros((2, 5, 7)))
        assert (X.d, X.n, X.p) == (2, 5, 7)

    def test_rejects_nonfinite(self):
        bad = np.zeros((1, 3, 2))
        bad[0, 1, 1] = np.inf
        with pytest.raises(ValueError, match="finite"):
            PredictorArray(bad)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError, match="3-d"):
            PredictorArray(np.zeros((3, 2)))

    def test_immutable(self):
        X = PredictorArray(np.zeros((1, 2, 2)))
        with pytest.raises(ValueError):
            X.values[0, 0, 0] = 1.0


class TestFeatureBlock:
    def test_single_platform_identity(self):
        # d=1, j=1 -> the first column as an n x 1 block
        vals = np.arange(6, dtype=float).reshape(1, 3, 2)
        X = PredictorArray(vals)
        blk = feature_block(X, 1)
        assert blk.shape == (3, 1)
        assert np.array_equal(blk[:, 0], vals[0, :, 0])

    def test_constructed_fixture(self):
        # d=3, n=2, p=2 with X[k][i][2] = k -> block rows (1,2,3), (1,2,3)
        vals = np.zeros((3, 2, 2))
        for k in range(3):
            vals[k, :, 1] = k + 1
        X = PredictorArray(vals)
        blk = feature_block(X, 2)
        assert blk.shape == (2, 3)
        assert np.array_equal(blk, np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))

    def test_out_of_range(self):
        X = PredictorArray(np.zeros((1, 2, 4)))
        with pytest.raises(IndexError):
            feature_block(X, 0)
        with pytest.raises(IndexError):
            feature_block(X, 5)

    def test_reassembly_roundtrip(self, rng):
        vals = rng.standard_normal((3, 4, 6))
        X = PredictorArray(vals)
        rebuilt = np.stack([feature_block(X, j + 1).T for j in range(6)], axis=2)
        assert np.array_equal(rebuilt, vals)


class TestStandardize:
    def test_basic_column(self):
        out = standardize(np.array([1.0, 2.0, 3.0]))
        assert np.allclose(out, [-1.0, 0.0, 1.0])

    def test_constant_column(self):
        assert np.array_equal(standardize(np.array([5.0, 5.0, 5.0])), np.zeros(3))

    def test_idempotent(self, rng):
        M = rng.standard_normal((40, 3))
        once = standardize(M)
        assert np.allclose(standardize(once), once, atol=1e-12)

    def test_requires_two_rows(self):
        with pytest.raises(ValueError):
            standardize(np.array([[1.0, 2.0]]))

    @settings(max_examples=30, deadline=None)
    @given(a=st.floats(0.1, 50.0), b=st.floats(-100.0, 100.0))
    def test_affine_invariance(self, a, b):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(25)
        assert np.allclose(standardize(a * x + b), standardize(x), atol=1e-9)


class TestSimConfig:
    def test_presets(self):
        s1 = SimConfig.for_study("S1")
        assert (s1.d, s1.q, s1.beta_low, s1.beta_high) == (1, 1, 2.0, 5.0)
        s3 = SimConfig.for_study("S3")
        assert (s3.d, s3.q, s3.beta_low, s3.beta_high) == (3, 10, 1.0, 2.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(beta_low=2.0, beta_high=1.0)
        with pytest.raises(ValueError):
            SimConfig(ar_coefficient=1.0)
        with pytest.raises(ValueError):
            SimConfig(pareto_shape=1.0)
        with pytest.raises(ValueError):
            SimConfig(study="S9")


class TestTrueSet:
    def test_unique_sorted_features(self):
        ts = TrueSet(((12, None), (1, 2), (12, 3)))
        assert ts.features == (1, 12)

    def test_nonempty(self):
        with pytest.raises(ValueError):
            TrueSet(())

    def test_validate_against(self):
        X = PredictorArray(np.zeros((2, 3, 5)))
        TrueSet(((5, 2),)).validate_against(X)
        with pytest.raises(ValueError):
            TrueSet(((6, None),)).validate_against(X)
        with pytest.raises(ValueError):
            TrueSet(((1, 3),)).validate_against(X)
