"""Seed fan-out: stable, role-separated random streams."""

import numpy as np
import pytest

from pslinucb import label_entropy, stream_seed


def first_draws(seq, n=5):
    return np.random.default_rng(seq).random(n)


class TestLabelEntropy:
    def test_is_stable_across_calls(self):
        assert label_entropy("pslinucb-disjoint") == label_entropy("pslinucb-disjoint")

    def test_distinguishes_labels(self):
        assert label_entropy("a") != label_entropy("b")

    def test_fits_in_64_bits(self):
        assert 0 <= label_entropy("anything") < 2**64


class TestStreamSeed:
    def test_same_arguments_same_stream(self):
        a = first_draws(stream_seed(7, 3, "env"))
        b = first_draws(stream_seed(7, 3, "env"))
        assert np.array_equal(a, b)

    @pytest.mark.parametrize(
        "other",
        [
            (8, 3, "env", None),
            (7, 4, "env", None),
            (7, 3, "policy", None),
            (7, 3, "policy", "x"),
        ],
    )
    def test_any_coordinate_change_gives_a_new_stream(self, other):
        base = first_draws(stream_seed(7, 3, "env"))
        seed, idx, stream, label = other
        assert not np.array_equal(base, first_draws(stream_seed(seed, idx, stream, label)))

    def test_labels_separate_policy_streams(self):
        a = first_draws(stream_seed(0, 0, "policy", "linucb-disjoint"))
        b = first_draws(stream_seed(0, 0, "policy", "pslinucb-disjoint"))
        assert not np.array_equal(a, b)

    def test_unknown_stream_role_rejected(self):
        with pytest.raises(KeyError):
            stream_seed(0, 0, "bogus")
