"""Offline replay: log schema, loader, writer, and the replay evaluator.

Log format (UTF-8 text, one record per line, single-space separated):

    #schema v1 d=<user_dim> m=<arm_dim>
    t x[1..d] n_candidates { arm_id y[1..m] }*n logged_arm reward

The evaluator scores a policy only on matched records, i.e. rounds where the
policy's selection equals the logged action. Unmatched records reveal nothing
to the policy: its learning state stays bit-identical and its internal clock
does not advance, which keeps the cumulative reward estimate unbiased when
the logging policy chose uniformly at random.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import LogParseError
from .features import ContextEvent

SCHEMA_VERSION = 1


@dataclass
class LoggedEvent:
    """One logged interaction: the context shown, the action taken, its reward."""

    event: ContextEvent
    logged_arm: int
    reward: float


@dataclass
class ReplayResult:
    """Outcome of replaying one policy over one log."""

    label: str
    total_events: int
    matched_count: int
    cumulative_reward: float
    ctr_series: np.ndarray
    prewarmed: bool = False

    @property
    def ctr(self) -> float:
        """Mean reward per matched event; NaN when nothing matched."""
        if self.matched_count == 0:
            return float("nan")
        return self.cumulative_reward / self.matched_count


def _format_float(v: float) -> str:
    return repr(float(v))


def write_log(path, records: Iterable[LoggedEvent], user_dim: int, arm_dim: int) -> None:
    """Write records in the versioned log schema; floats round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#schema v{SCHEMA_VERSION} d={user_dim} m={arm_dim}\n")
        for rec in records:
            ev = rec.event
            parts = [str(int(ev.t))]
            parts.extend(_format_float(v) for v in ev.user)
            parts.append(str(int(ev.arm_ids.size)))
            for i, arm_id in enumerate(ev.arm_ids):
                parts.append(str(int(arm_id)))
                parts.extend(_format_float(v) for v in ev.arm_features[i])
            parts.append(str(int(rec.logged_arm)))
            parts.append(_format_float(rec.reward))
            fh.write(" ".join(parts) + "\n")


def export_log(env, policy, path) -> list[LoggedEvent]:
    """Run a logging policy through an environment and write the trajectory."""
    records = []
    for t in range(1, env.horizon + 1):
        ev = env.event(t)
        arm = policy.select(ev)
        reward = env.reward(t, arm)
        policy.observe(ev, arm, reward)
        records.append(
            LoggedEvent(
                event=ContextEvent(
                    t=t,
                    user=np.array(ev.user, dtype=float),
                    arm_ids=ev.arm_ids.copy(),
                    arm_features=ev.arm_features.copy(),
                ),
                logged_arm=arm,
                reward=reward,
            )
        )
    write_log(path, records, env.user_dim, env.arm_dim)
    return records


def _parse_header(line: str) -> tuple[int, int]:
    parts = line.strip().split()
    try:
        tag, version, d_part, m_part = parts
        if tag != "#schema" or not version.startswith("v"):
            raise ValueError
        if int(version[1:]) != SCHEMA_VERSION:
            raise LogParseError(1, f"unsupported schema version {version}")
        if not (d_part.startswith("d=") and m_part.startswith("m=")):
            raise ValueError
        return int(d_part[2:]), int(m_part[2:])
    except LogParseError:
        raise
    except (ValueError, TypeError):
        raise LogParseError(1, f"malformed schema header: {line.strip()!r}") from None


def _parse_record(line_no: int, line: str, d: int, m: int, normalize: bool) -> LoggedEvent:
    fields = line.split()
    pos = 0

    def take(n: int) -> list[str]:
        nonlocal pos
        if pos + n > len(fields):
            raise LogParseError(line_no, "record truncated")
        out = fields[pos : pos + n]
        pos += n
        return out

    try:
        t = int(take(1)[0])
        x = np.array([float(v) for v in take(d)])
        n_cand = int(take(1)[0])
    except ValueError:
        raise LogParseError(line_no, "non-numeric field") from None
    if n_cand < 1:
        raise LogParseError(line_no, "record must list at least one candidate")
    arm_ids = np.empty(n_cand, dtype=np.int64)
    arm_features = np.empty((n_cand, m))
    try:
        for i in range(n_cand):
            arm_ids[i] = int(take(1)[0])
            arm_features[i] = [float(v) for v in take(m)]
        logged_arm = int(take(1)[0])
        reward = float(take(1)[0])
    except ValueError:
        raise LogParseError(line_no, "non-numeric field") from None
    if pos != len(fields):
        raise LogParseError(line_no, f"{len(fields) - pos} trailing fields")
    if not (np.isfinite(x).all() and np.isfinite(arm_features).all() and np.isfinite(reward)):
        raise LogParseError(line_no, "non-finite value")
    if (arm_ids <= 0).any():
        raise LogParseError(line_no, "arm ids must be positive")
    if np.unique(arm_ids).size != n_cand:
        raise LogParseError(line_no, "duplicate candidate arm ids")
    if logged_arm not in arm_ids:
        raise LogParseError(line_no, f"logged arm {logged_arm} not among candidates")

    def fix_norm(vec: np.ndarray, what: str) -> None:
        norm = float(np.linalg.norm(vec))
        if norm > 1.0 + 1e-9:
            if normalize:
                vec /= norm
            else:
                raise LogParseError(line_no, f"{what} norm {norm:.6g} exceeds 1")

    fix_norm(x, "user feature")
    for i in range(n_cand):
        fix_norm(arm_features[i], f"arm {int(arm_ids[i])} feature")
    return LoggedEvent(
        event=ContextEvent(t=t, user=x, arm_ids=arm_ids, arm_features=arm_features),
        logged_arm=logged_arm,
        reward=reward,
    )


def load_log(
    path,
    normalize: bool = False,
    subsample: Optional[float] = None,
    subsample_seed=None,
) -> list[LoggedEvent]:
    """Parse a log file; errors carry the 1-based line number.

    normalize=True rescales over-norm feature vectors to unit length instead
    of rejecting the record. subsample keeps each record independently with
    the given probability, using its own seeded stream.
    """
    if subsample is not None and not 0.0 < subsample <= 1.0:
        raise ValueError("subsample probability must lie in (0, 1]")
    rng = np.random.default_rng(subsample_seed) if subsample is not None else None
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise LogParseError(1, "empty file, missing schema header")
        d, m = _parse_header(header)
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            record = _parse_record(line_no, line, d, m, normalize)
            if rng is not None and rng.random() >= subsample:
                continue
            records.append(record)
    return records


def replay_evaluate(policy, records: list[LoggedEvent], prewarmed: bool = False) -> ReplayResult:
    """Feed logged events to a policy; score and learn on matches only."""
    matched = 0
    total = 0.0
    ctr_series = []
    for rec in records:
        arm = policy.select(rec.event)
        if arm == rec.logged_arm:
            policy.observe(rec.event, arm, rec.reward)
            matched += 1
            total += rec.reward
            ctr_series.append(total / matched)
    return ReplayResult(
        label=policy.label,
        total_events=len(records),
        matched_count=matched,
        cumulative_reward=total,
        ctr_series=np.array(ctr_series),
        prewarmed=prewarmed,
    )
