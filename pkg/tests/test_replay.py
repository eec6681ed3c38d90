"""Replay log round-trips, parse errors, and matched-only evaluation."""

import math

import numpy as np
import pytest

from pslinucb import (
    ContextEvent,
    DisjointEnvironment,
    DisjointEnvSpec,
    LinUCBDisjoint,
    LogParseError,
    LoggedEvent,
    RandomPolicy,
    UCB1,
    export_log,
    load_log,
    replay_evaluate,
    write_log,
)

HEADER = "#schema v1 d=2 m=1\n"
GOOD_LINE = "1 0.5 -0.25 2 1 0.3 2 -0.1 1 0.75\n"


def make_records(n, seed=0, n_arms=3):
    rng = np.random.default_rng(seed)
    records = []
    for t in range(1, n + 1):
        user = rng.normal(size=2)
        user /= max(1.0, np.linalg.norm(user))
        feats = rng.uniform(-0.9, 0.9, size=(n_arms, 1))
        records.append(
            LoggedEvent(
                event=ContextEvent(
                    t=t,
                    user=user,
                    arm_ids=np.arange(1, n_arms + 1),
                    arm_features=feats,
                ),
                logged_arm=int(rng.integers(1, n_arms + 1)),
                reward=float(rng.normal()),
            )
        )
    return records


def write_lines(path, *lines):
    path.write_text("".join(lines), encoding="utf-8")
    return path


class TestRoundTrip:
    def test_awkward_floats_survive_exactly(self, tmp_path):
        path = tmp_path / "log.txt"
        user = np.array([0.1, 1.0 / 3.0])
        feats = np.array([[0.30000000000000004], [-1e-17]])
        records = [
            LoggedEvent(
                event=ContextEvent(
                    t=7, user=user, arm_ids=np.array([4, 9]), arm_features=feats
                ),
                logged_arm=9,
                reward=-0.7000000000000001,
            )
        ]
        write_log(path, records, user_dim=2, arm_dim=1)
        loaded = load_log(path)
        assert len(loaded) == 1
        rec = loaded[0]
        assert rec.event.t == 7
        assert np.array_equal(rec.event.user, user)
        assert np.array_equal(rec.event.arm_features, feats)
        assert np.array_equal(rec.event.arm_ids, [4, 9])
        assert rec.logged_arm == 9
        assert rec.reward == -0.7000000000000001

    def test_many_records_keep_order(self, tmp_path):
        path = tmp_path / "log.txt"
        records = make_records(30, seed=3)
        write_log(path, records, user_dim=2, arm_dim=1)
        loaded = load_log(path)
        assert [r.event.t for r in loaded] == list(range(1, 31))
        for orig, back in zip(records, loaded):
            assert np.array_equal(orig.event.user, back.event.user)
            assert back.reward == orig.reward

    def test_export_log_writes_a_loadable_file(self, tmp_path):
        env = DisjointEnvironment(
            DisjointEnvSpec(
                horizon=40, n_arms=3, user_dim=2, arm_dim=1, rng_seed=2, user_mode="iid"
            )
        )
        path = tmp_path / "log.txt"
        records = export_log(env, RandomPolicy(seed=1), path)
        loaded = load_log(path)
        assert len(records) == len(loaded) == 40
        assert [r.logged_arm for r in records] == [r.logged_arm for r in loaded]


class TestParsing:
    def test_header_only_file_has_no_events(self, tmp_path):
        path = write_lines(tmp_path / "log.txt", HEADER)
        assert load_log(path) == []

    def test_blank_lines_are_skipped(self, tmp_path):
        path = write_lines(tmp_path / "log.txt", HEADER, "\n", GOOD_LINE, "\n")
        assert len(load_log(path)) == 1

    def test_empty_file_fails_on_line_one(self, tmp_path):
        path = write_lines(tmp_path / "log.txt")
        with pytest.raises(LogParseError) as err:
            load_log(path)
        assert err.value.line_no == 1

    def test_wrong_schema_version_rejected(self, tmp_path):
        path = write_lines(tmp_path / "log.txt", "#schema v2 d=2 m=1\n")
        with pytest.raises(LogParseError) as err:
            load_log(path)
        assert err.value.line_no == 1
        assert "version" in str(err.value)

    def test_malformed_header_rejected(self, tmp_path):
        path = write_lines(tmp_path / "log.txt", "t x r\n")
        with pytest.raises(LogParseError) as err:
            load_log(path)
        assert err.value.line_no == 1

    @pytest.mark.parametrize(
        "bad_line,fragment",
        [
            ("1 0.5 -0.25 2 1 0.3 2 -0.1 3 0.75\n", "not among candidates"),
            ("1 0.5 -0.25 2 1 0.3 2\n", "truncated"),
            ("1 0.5 -0.25 2 1 0.3 2 -0.1 1 0.75 99\n", "trailing"),
            ("1 0.5 oops 2 1 0.3 2 -0.1 1 0.75\n", "non-numeric"),
            ("1 0.5 -0.25 2 1 0.3 1 -0.1 1 0.75\n", "duplicate"),
            ("1 0.5 -0.25 2 0 0.3 2 -0.1 2 0.75\n", "positive"),
            ("1 nan -0.25 2 1 0.3 2 -0.1 1 0.75\n", "non-finite"),
            ("1 0.5 -0.25 0 1 0.75\n", "at least one candidate"),
        ],
    )
    def test_bad_records_name_the_line(self, tmp_path, bad_line, fragment):
        path = write_lines(tmp_path / "log.txt", HEADER, GOOD_LINE, bad_line)
        with pytest.raises(LogParseError) as err:
            load_log(path)
        assert err.value.line_no == 3
        assert fragment in str(err.value)

    def test_over_norm_features_rejected_by_default(self, tmp_path):
        line = "1 3.0 4.0 1 1 0.3 1 0.75\n"
        path = write_lines(tmp_path / "log.txt", HEADER, line)
        with pytest.raises(LogParseError) as err:
            load_log(path)
        assert "norm" in str(err.value)

    def test_normalize_rescales_instead(self, tmp_path):
        line = "1 3.0 4.0 1 1 0.3 1 0.75\n"
        path = write_lines(tmp_path / "log.txt", HEADER, line)
        loaded = load_log(path, normalize=True)
        assert np.allclose(loaded[0].event.user, [0.6, 0.8], atol=1e-12)


class TestSubsample:
    def test_fraction_and_determinism(self, tmp_path):
        path = tmp_path / "log.txt"
        write_log(path, make_records(1000, seed=5), user_dim=2, arm_dim=1)
        kept = load_log(path, subsample=0.5, subsample_seed=7)
        sigma = math.sqrt(1000 * 0.25)
        assert abs(len(kept) - 500) <= 3 * sigma
        again = load_log(path, subsample=0.5, subsample_seed=7)
        assert [r.event.t for r in again] == [r.event.t for r in kept]
        other = load_log(path, subsample=0.5, subsample_seed=8)
        assert [r.event.t for r in other] != [r.event.t for r in kept]

    @pytest.mark.parametrize("fraction", [0.0, 1.5, -0.1])
    def test_rejects_bad_fraction(self, tmp_path, fraction):
        path = write_lines(tmp_path / "log.txt", HEADER)
        with pytest.raises(ValueError):
            load_log(path, subsample=fraction)


class TestReplayEvaluate:
    def test_single_candidate_log_matches_everything(self):
        records = make_records(50, seed=9, n_arms=1)
        result = replay_evaluate(LinUCBDisjoint(alpha=1.0), records)
        assert result.total_events == 50
        assert result.matched_count == 50
        rewards = np.array([r.reward for r in records])
        assert result.cumulative_reward == pytest.approx(rewards.sum(), abs=1e-12)
        assert result.ctr == pytest.approx(rewards.mean(), abs=1e-12)
        assert len(result.ctr_series) == 50
        assert result.ctr_series[-1] == pytest.approx(result.ctr, abs=1e-12)

    def test_nothing_matched_gives_nan_ctr(self):
        # A fresh deterministic policy breaks ties toward the lowest id, so a
        # log that always chose the highest id never matches on one event.
        records = make_records(1, seed=2)
        records[0].event.arm_features[:] = 0.0
        records[0].logged_arm = 3
        result = replay_evaluate(LinUCBDisjoint(), records)
        assert result.matched_count == 0
        assert math.isnan(result.ctr)

    def test_match_rate_against_a_uniform_logger(self):
        # A uniform logger matches any fixed-at-each-step choice with
        # probability 1/K per round, whatever the target policy does.
        n, k = 2000, 4
        records = make_records(n, seed=13, n_arms=k)
        result = replay_evaluate(LinUCBDisjoint(alpha=1.0), records)
        sigma = math.sqrt(n * (1 / k) * (1 - 1 / k))
        assert abs(result.matched_count - n / k) <= 3 * sigma

    def test_unmatched_events_leave_policy_state_alone(self):
        policy = UCB1()
        records = make_records(1, seed=4)
        records[0].logged_arm = 3
        digest = policy.state_digest()
        result = replay_evaluate(policy, records)
        assert result.matched_count == 0
        assert policy.state_digest() == digest
        assert policy._t == 0

    def test_matched_subset_reproduces_the_full_replay(self):
        records = make_records(400, seed=21)
        full_policy = LinUCBDisjoint(alpha=0.8)
        full = replay_evaluate(full_policy, records)
        # Re-run on just the matched records: every one must match again and
        # leave the policy in the same learning state.
        probe = LinUCBDisjoint(alpha=0.8)
        matched_records = []
        for rec in records:
            arm = probe.select(rec.event)
            if arm == rec.logged_arm:
                probe.observe(rec.event, arm, rec.reward)
                matched_records.append(rec)
        condensed = replay_evaluate(LinUCBDisjoint(alpha=0.8), matched_records)
        assert condensed.matched_count == len(matched_records) == full.matched_count
        assert condensed.cumulative_reward == pytest.approx(
            full.cumulative_reward, abs=1e-12
        )
        assert (
            LinUCBDisjoint(alpha=0.8).state_digest()
            != full_policy.state_digest()
        )

    def test_replay_is_deterministic(self):
        records = make_records(300, seed=31)
        a = replay_evaluate(LinUCBDisjoint(alpha=1.0), records)
        b = replay_evaluate(LinUCBDisjoint(alpha=1.0), records)
        assert a.matched_count == b.matched_count
        assert np.array_equal(a.ctr_series, b.ctr_series)
