"""Cross-feature construction and context-event validation."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pslinucb import ContextEvent, arm_cross_features, cross_feature


def unit_vectors(dim):
    return st.lists(
        st.floats(-1.0, 1.0, allow_nan=False), min_size=dim, max_size=dim
    ).map(np.array)


class TestCrossFeature:
    def test_single_nonzero_entry(self):
        z = cross_feature(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert z.tolist() == [0.0, 0.0, 1.0, 0.0]

    def test_all_ones(self):
        z = cross_feature(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
        assert z.tolist() == [1.0, 1.0, 1.0, 1.0]

    def test_norm_product_example(self):
        z = cross_feature(np.array([0.6, 0.8]), np.array([1.0, 0.0]))
        assert z.tolist() == [0.6, 0.8, 0.0, 0.0]
        assert np.linalg.norm(z) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_empty_or_matrix_input(self):
        with pytest.raises(ValueError):
            cross_feature(np.array([]), np.array([1.0]))
        with pytest.raises(ValueError):
            cross_feature(np.eye(2), np.array([1.0]))

    @given(unit_vectors(3), unit_vectors(2))
    def test_reshape_round_trip(self, x, y):
        z = cross_feature(x, y)
        # column j of the d-by-m matrix x y^T occupies entries j*d..(j+1)*d
        mat = z.reshape(y.size, x.size).T
        assert np.array_equal(mat, np.outer(x, y))

    @given(unit_vectors(4), unit_vectors(3))
    def test_norm_product_identity(self, x, y):
        z = cross_feature(x, y)
        expected = np.linalg.norm(x) * np.linalg.norm(y)
        assert np.linalg.norm(z) == pytest.approx(expected, abs=1e-12)


class TestArmCrossFeatures:
    def test_matches_per_arm_construction(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=3)
        ys = rng.normal(size=(5, 2))
        stacked = arm_cross_features(x, ys)
        assert stacked.shape == (5, 6)
        for i in range(5):
            assert np.array_equal(stacked[i], cross_feature(x, ys[i]))


class TestContextEvent:
    def make(self, **kw):
        base = dict(
            t=1,
            user=np.array([0.5, 0.5]),
            arm_ids=np.array([1, 2]),
            arm_features=np.array([[1.0, 0.0], [0.0, 1.0]]),
        )
        base.update(kw)
        return ContextEvent(**base)

    def test_valid_event_passes(self):
        self.make().validate()

    def test_candidates_view(self):
        ev = self.make()
        cands = ev.candidates
        assert [a for a, _ in cands] == [1, 2]
        assert np.array_equal(cands[1][1], np.array([0.0, 1.0]))

    @pytest.mark.parametrize(
        "kw",
        [
            {"arm_ids": np.array([], dtype=np.int64), "arm_features": np.empty((0, 2))},
            {"arm_ids": np.array([1, 1])},
            {"arm_ids": np.array([0, 1])},
            {"arm_features": np.array([[1.0, 0.0]])},
            {"user": np.array([np.nan, 0.0])},
        ],
    )
    def test_invalid_events_rejected(self, kw):
        with pytest.raises(ValueError):
            self.make(**kw).validate()
