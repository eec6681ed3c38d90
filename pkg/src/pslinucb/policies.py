"""Bandit policies: change-detecting LinUCB variants and stationary baselines.

Every policy follows the same two-call contract: select(event) returns an arm
id and must not change learning state; observe(event, arm, reward) folds in
the reward for the arm chosen by the immediately preceding select. The split
lets an offline replayer discard rounds whose logged action differs from the
policy's choice without perturbing the policy.
"""

from __future__ import annotations

import hashlib
import math
import warnings

import numpy as np

from . import detection
from .detection import SlidingWindow, estimation_threshold, split_window_statistic
from .errors import ConfigError, ContractError, NumericError
from .features import arm_cross_features
from .hybrid import HybridArmState, HybridGlobalState, detach_arm, hybrid_observe, hybrid_solve
from .ridge import RidgeState


def theory_alpha(dim: int, horizon: int, delta0: float | None = None) -> float:
    """Exploration weight sqrt(2 d log(horizon/delta0)); delta0 defaults to 1/horizon."""
    if delta0 is None:
        delta0 = 1.0 / horizon
    if not 0.0 < delta0 < 1.0:
        raise ValueError("delta0 must lie in (0, 1)")
    return math.sqrt(2.0 * dim * math.log(horizon / delta0))


def theory_explore_rate(
    n_arms: int, n_segments: int, window_size: int, horizon: int
) -> float:
    """Forced-exploration rate sqrt(K * M * window / T) used by the restart policy."""
    return math.sqrt(n_arms * n_segments * window_size / horizon)


def _argmax_index(arm_ids: np.ndarray, scores: np.ndarray) -> int:
    """Candidate index of the best score; exact ties go to the lowest arm id."""
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1:
        return int(best[0])
    return int(best[int(np.argmin(arm_ids[best]))])


class Policy:
    """Base select/observe contract shared by all policies."""

    label = "policy"

    def __init__(self, label: str | None = None):
        if label is not None:
            self.label = label
        self._pending: int | None = None
        self.last_scores: np.ndarray | None = None
        self.detections: list[tuple[int, int]] = []
        self.restarts: list[int] = []

    def select(self, event) -> int:
        raise NotImplementedError

    def observe(self, event, arm: int, reward: float) -> None:
        raise NotImplementedError

    def _consume_pending(self, arm: int) -> None:
        if self._pending != arm:
            raise ContractError(
                f"observe called for arm {arm} but the last selection was {self._pending}"
            )
        self._pending = None

    def state_digest(self) -> str:
        """Hash of the learning state (model statistics and windows).

        Exploration randomness, when a policy has any, is excluded: drawing
        during select is part of the selection itself, not of what has been
        learned.
        """
        h = hashlib.sha256()
        for part in self._digest_parts():
            if isinstance(part, np.ndarray):
                h.update(np.ascontiguousarray(part).tobytes())
            else:
                h.update(repr(part).encode())
            h.update(b"|")
        return h.hexdigest()

    def _digest_parts(self):
        yield from ()


def _window_digest_parts(window: SlidingWindow):
    yield len(window)
    for x, z, reward in window.entries():
        yield x
        if z is not None:
            yield z
        yield reward


class _DisjointScoringMixin:
    """Per-arm ridge bookkeeping plus the LinUCB index over cum models.

    Keeps stacked caches of every arm's point estimate and inverse so that a
    selection is one matrix-vector product and one batched quadratic form.
    Arms first seen in select are scored with the fresh-model index
    (alpha * ||x|| / sqrt(reg)) without being materialized; they are
    registered when their first reward arrives.
    """

    def _init_scoring(self, alpha: float, reg: float) -> None:
        if not alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if not reg > 0:
            raise ValueError("regularizer must be positive")
        self.alpha = float(alpha)
        self.reg = float(reg)
        self._dim: int | None = None
        self._slot: dict[int, int] = {}
        self._cum: list[RidgeState] = []
        self._n = 0
        self._theta: np.ndarray | None = None
        self._ainv: np.ndarray | None = None
        self._ids_key = None
        self._ids_idx: np.ndarray | None = None
        self._ids_all_known = False
        self._ids_full = False

    def _ensure_dim(self, dim: int) -> None:
        if self._dim is None:
            self._dim = dim
            cap = 8
            self._theta = np.zeros((cap, dim))
            self._ainv = np.zeros((cap, dim, dim))
        elif dim != self._dim:
            raise ContractError("user feature dimension changed mid-run")

    def _grow(self) -> None:
        cap = self._theta.shape[0] * 2
        theta = np.zeros((cap, self._dim))
        ainv = np.zeros((cap, self._dim, self._dim))
        theta[: self._n] = self._theta[: self._n]
        ainv[: self._n] = self._ainv[: self._n]
        self._theta = theta
        self._ainv = ainv

    def _register(self, arm_id: int) -> int:
        slot = self._n
        if slot == self._theta.shape[0]:
            self._grow()
        self._slot[arm_id] = slot
        self._n += 1
        self._cum.append(RidgeState(self._dim, self.reg))
        self._refresh_slot(slot)
        self._ids_key = None
        return slot

    def _refresh_slot(self, slot: int) -> None:
        state = self._cum[slot]
        self._ainv[slot] = state.inv()
        self._theta[slot] = state.solve()

    def _candidate_index(self, arm_ids: np.ndarray):
        if arm_ids is self._ids_key:
            return self._ids_idx, self._ids_all_known, self._ids_full
        idx = np.fromiter(
            (self._slot.get(int(a), -1) for a in arm_ids),
            dtype=np.int64,
            count=len(arm_ids),
        )
        all_known = bool((idx >= 0).all())
        full = all_known and idx.size == self._n and bool((idx == np.arange(self._n)).all())
        self._ids_key = arm_ids
        self._ids_idx = idx
        self._ids_all_known = all_known
        self._ids_full = full
        return idx, all_known, full

    def _scores(self, event) -> np.ndarray:
        x = event.user
        self._ensure_dim(x.shape[0])
        idx, all_known, full = self._candidate_index(event.arm_ids)
        if full:
            theta = self._theta[: self._n]
            ainv = self._ainv[: self._n]
        elif all_known:
            theta = self._theta[idx]
            ainv = self._ainv[idx]
        if all_known:
            mean = theta @ x
            expl = np.einsum("nij,i,j->n", ainv, x, x)
        else:
            known = idx >= 0
            sub = idx[known]
            mean = np.zeros(idx.size)
            expl = np.empty(idx.size)
            mean[known] = self._theta[sub] @ x
            expl[known] = np.einsum("nij,i,j->n", self._ainv[sub], x, x)
            expl[~known] = float(x @ x) / self.reg
        return mean + self.alpha * np.sqrt(np.maximum(expl, 0.0))

    def select(self, event) -> int:
        scores = self._scores(event)
        arm = int(event.arm_ids[_argmax_index(event.arm_ids, scores)])
        self.last_scores = scores
        self._pending = arm
        return arm

    def _observe_cum(self, event, arm: int, reward: float):
        """Shared guard plus the cum-model update; returns (slot, x)."""
        self._consume_pending(arm)
        x = event.user
        self._ensure_dim(x.shape[0])
        slot = self._slot.get(arm)
        if slot is None:
            slot = self._register(arm)
        self._cum[slot].update(x, reward, 1)
        return slot, x

    def arm_models(self, arm_id: int) -> dict:
        """Diagnostic access to one arm's model statistics."""
        slot = self._slot[arm_id]
        return {"cum": self._cum[slot]}

    def _digest_parts(self):
        yield sorted(self._slot.items())
        for state in self._cum:
            yield state.A
            yield state.b
            yield state.n_obs


class LinUCBDisjoint(_DisjointScoringMixin, Policy):
    """Stationary LinUCB with one ridge model per arm."""

    label = "linucb-disjoint"

    def __init__(self, alpha: float = 1.0, reg: float = 1.0, label: str | None = None):
        Policy.__init__(self, label)
        self._init_scoring(alpha, reg)

    def observe(self, event, arm: int, reward: float) -> None:
        slot, _ = self._observe_cum(event, arm, reward)
        self._refresh_slot(slot)


class PSLinUCBDisjoint(_DisjointScoringMixin, Policy):
    """Per-arm change detection on top of the disjoint LinUCB index.

    Each arm keeps three ridge models: cum (everything since the arm's last
    restart) drives selection, cur holds exactly the sliding window's
    contents, and pre holds everything older than the window. When the
    window is full, the absolute mean residual of the pre model over the
    window is compared to detect_threshold: a hit warm-starts the arm from
    cur (pre and cum become copies of cur, cur and the window reset);
    otherwise the oldest window entry shifts from cur into pre.
    """

    label = "pslinucb-disjoint"

    def __init__(
        self,
        alpha: float = 1.0,
        window_size: int = 100,
        detect_threshold: float = 0.35,
        reg: float = 1.0,
        label: str | None = None,
    ):
        Policy.__init__(self, label)
        self._init_scoring(alpha, reg)
        if window_size < 1:
            raise ValueError("window_size must be a positive integer")
        if not detect_threshold > 0:
            raise ValueError("detect_threshold must be positive")
        self.window_size = int(window_size)
        self.detect_threshold = float(detect_threshold)
        self._pre: list[RidgeState] = []
        self._cur: list[RidgeState] = []
        self._windows: list[SlidingWindow] = []
        self._t = 0

    def _register(self, arm_id: int) -> int:
        slot = super()._register(arm_id)
        self._pre.append(RidgeState(self._dim, self.reg))
        self._cur.append(RidgeState(self._dim, self.reg))
        self._windows.append(SlidingWindow(self.window_size))
        return slot

    def observe(self, event, arm: int, reward: float) -> None:
        self._t += 1
        slot, x = self._observe_cum(event, arm, reward)
        cur = self._cur[slot]
        cur.update(x, reward, 1)
        window = self._windows[slot]
        window.push(x, reward)
        if window.is_full:
            pre = self._pre[slot]
            theta_pre = pre.solve()
            stat = abs(
                (float(theta_pre @ window.x_sum) - window.r_sum) / self.window_size
            )
            if stat >= self.detect_threshold:
                pre.copy_from(cur)
                self._cum[slot].copy_from(cur)
                cur.reset()
                window.clear()
                self.detections.append((self._t, arm))
            else:
                x0, _, r0 = window.popleft()
                pre.update(x0, r0, 1)
                cur.update(x0, r0, -1)
        self._refresh_slot(slot)

    def arm_models(self, arm_id: int) -> dict:
        slot = self._slot[arm_id]
        return {
            "pre": self._pre[slot],
            "cur": self._cur[slot],
            "cum": self._cum[slot],
            "window": self._windows[slot],
        }

    def _digest_parts(self):
        yield from super()._digest_parts()
        for state in self._pre:
            yield state.A
            yield state.b
        for state in self._cur:
            yield state.A
            yield state.b
        for window in self._windows:
            yield from _window_digest_parts(window)
        yield self._t


class PSLinUCBGlobalRestart(_DisjointScoringMixin, Policy):
    """Disjoint index with scheduled exploration and an all-arm restart.

    Every floor(K/explore_rate) steps each arm is force-played once (slots
    1..K of the cycle; slot 0 is an ordinary UCB step). Each arm keeps a
    sliding window; when one is full, a model fit on its older half predicts
    its newer half and the absolute mean residual is compared against
    est_threshold + noise_threshold. A hit resets every arm's model and
    window and restarts the exploration cycle. The candidate set must stay
    fixed for the whole run.
    """

    label = "pslinucb-global-restart"

    def __init__(
        self,
        alpha: float = 1.0,
        window_size: int = 100,
        explore_rate: float = 0.1,
        horizon: int | None = None,
        est_threshold: float | str = "auto",
        noise_threshold: float | str = "auto",
        false_alarm_prob: float | None = None,
        fit_reg: float = 1e-6,
        reg: float = 1.0,
        label: str | None = None,
    ):
        Policy.__init__(self, label)
        self._init_scoring(alpha, reg)
        if window_size < 2 or window_size % 2 != 0:
            raise ValueError("window_size must be an even integer >= 2")
        if not explore_rate > 0:
            raise ValueError("explore_rate must be positive")
        self.window_size = int(window_size)
        self.explore_rate = float(explore_rate)
        self.horizon = None if horizon is None else int(horizon)
        self.fit_reg = float(fit_reg)
        if est_threshold == "auto":
            self._b_fixed = None
            if false_alarm_prob is None:
                if self.horizon is None:
                    raise ConfigError(
                        "auto est_threshold needs horizon or false_alarm_prob"
                    )
                false_alarm_prob = 1.0 / (2.0 * self.horizon**2)
        else:
            self._b_fixed = float(est_threshold)
        self.false_alarm_prob = false_alarm_prob
        if noise_threshold == "auto":
            if self.horizon is None:
                raise ConfigError("auto noise threshold needs horizon")
            self._c = detection.noise_threshold(self.window_size, self.horizon)
        else:
            self._c = float(noise_threshold)
        self._windows: list[SlidingWindow] = []
        self._t = 0
        self._tau = 0
        self._period: int | None = None
        self._sched_ids: np.ndarray | None = None

    def _register(self, arm_id: int) -> int:
        slot = super()._register(arm_id)
        self._windows.append(SlidingWindow(self.window_size))
        return slot

    def _ensure_schedule(self, event) -> None:
        if self._sched_ids is None:
            self._ensure_dim(event.user.shape[0])
            self._sched_ids = np.sort(np.asarray(event.arm_ids, dtype=np.int64))
            n_arms = int(self._sched_ids.size)
            self._period = int(n_arms / self.explore_rate)
            if self._period < n_arms:
                raise ConfigError(
                    f"explore_rate {self.explore_rate} leaves a cycle of "
                    f"{self._period} < K={n_arms} steps"
                )
            if self._period <= n_arms + 1:
                warnings.warn(
                    "exploration cycle barely exceeds the arm count; almost "
                    "every step will be a forced pull",
                    stacklevel=2,
                )
            for arm_id in self._sched_ids:
                self._register(int(arm_id))
        elif event.arm_ids is not self._ids_key:
            ids = np.sort(np.asarray(event.arm_ids, dtype=np.int64))
            if not np.array_equal(ids, self._sched_ids):
                raise ContractError("candidate set must stay fixed for this policy")

    def select(self, event) -> int:
        self._ensure_schedule(event)
        cycle_pos = (self._t + 1 - self._tau) % self._period
        if 1 <= cycle_pos <= self._sched_ids.size:
            arm = int(self._sched_ids[cycle_pos - 1])
            self.last_scores = None
            self._pending = arm
            return arm
        return super().select(event)

    def observe(self, event, arm: int, reward: float) -> None:
        self._t += 1
        slot, x = self._observe_cum(event, arm, reward)
        self._refresh_slot(slot)
        window = self._windows[slot]
        window.push(x, reward)
        if window.is_full:
            stat, _ = split_window_statistic(window, self.fit_reg)
            if self._b_fixed is None:
                items = window.entries()
                half = self.window_size // 2
                b_value = estimation_threshold(
                    [item[0] for item in items[:half]],
                    [item[0] for item in items[half:]],
                    self.window_size,
                    self.false_alarm_prob,
                    self.fit_reg,
                )
            else:
                b_value = self._b_fixed
            if stat >= b_value + self._c:
                for other in range(self._n):
                    self._cum[other].reset()
                    self._windows[other].clear()
                    self._refresh_slot(other)
                self._tau = self._t
                self.restarts.append(self._t)

    def arm_models(self, arm_id: int) -> dict:
        slot = self._slot[arm_id]
        return {"cum": self._cum[slot], "window": self._windows[slot]}

    def _digest_parts(self):
        yield from super()._digest_parts()
        for window in self._windows:
            yield from _window_digest_parts(window)
        yield self._t
        yield self._tau


class _HybridScoringMixin:
    """Arm plus shared-coefficient bookkeeping and the hybrid UCB index.

    Selection solves the shared system once per step with a stacked
    right-hand side (shared estimate, one column per candidate's cross
    feature, one per candidate's coupling vector), so its cost is one dense
    k x k solve regardless of the arm count. Per-arm caches that depend on
    the user vector are keyed on the vector's object identity, which makes
    repeated contexts (the common synthetic case) free to re-score.
    """

    def _init_scoring(self, alpha: float, reg: float) -> None:
        if not alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if not reg > 0:
            raise ValueError("regularizer must be positive")
        self.alpha = float(alpha)
        self.reg = float(reg)
        self._dim: int | None = None
        self._m: int | None = None
        self._k: int | None = None
        self._g_cum: HybridGlobalState | None = None
        self._slot: dict[int, int] = {}
        self._cum: list[HybridArmState] = []
        self._n = 0
        self._ainv: np.ndarray | None = None
        self._bmat: np.ndarray | None = None
        self._bvec: np.ndarray | None = None
        self._xax: np.ndarray | None = None
        self._wvec: np.ndarray | None = None
        self._x_ref = None
        self._pending_z: np.ndarray | None = None
        self._ids_key = None
        self._ids_idx: np.ndarray | None = None
        self._ids_all_known = False
        self._ids_full = False

    def _ensure_dims(self, event) -> None:
        if self._dim is None:
            self._dim = event.user.shape[0]
            self._m = event.arm_features.shape[1]
            self._k = self._dim * self._m
            self._g_cum = HybridGlobalState(self._k, self.reg)
            cap = 8
            self._ainv = np.zeros((cap, self._dim, self._dim))
            self._bmat = np.zeros((cap, self._dim, self._k))
            self._bvec = np.zeros((cap, self._dim))
            self._xax = np.zeros(cap)
            self._wvec = np.zeros((cap, self._k))
        elif event.user.shape[0] != self._dim or event.arm_features.shape[1] != self._m:
            raise ContractError("feature dimensions changed mid-run")

    def _grow(self) -> None:
        cap = self._ainv.shape[0] * 2
        n = self._n
        for name in ("_ainv", "_bmat", "_bvec", "_xax", "_wvec"):
            old = getattr(self, name)
            fresh = np.zeros((cap,) + old.shape[1:])
            fresh[:n] = old[:n]
            setattr(self, name, fresh)

    def _register(self, arm_id: int) -> int:
        slot = self._n
        if slot == self._ainv.shape[0]:
            self._grow()
        self._slot[arm_id] = slot
        self._n += 1
        self._cum.append(HybridArmState(self._dim, self._k, self.reg))
        self._refresh_slot(slot)
        self._ids_key = None
        return slot

    def _refresh_slot(self, slot: int) -> None:
        state = self._cum[slot]
        inv = state.inv()
        self._ainv[slot] = inv
        self._bmat[slot] = state.B
        self._bvec[slot] = state.b
        if self._x_ref is not None:
            v = inv @ self._x_ref
            self._xax[slot] = float(v @ self._x_ref)
            self._wvec[slot] = state.B.T @ v

    def _refresh_x_caches(self, x: np.ndarray) -> None:
        n = self._n
        if n:
            v = np.einsum("nij,j->ni", self._ainv[:n], x)
            self._xax[:n] = np.einsum("ni,i->n", v, x)
            self._wvec[:n] = np.einsum("ndk,nd->nk", self._bmat[:n], v)
        self._x_ref = x

    def _candidate_index(self, arm_ids: np.ndarray):
        if arm_ids is self._ids_key:
            return self._ids_idx, self._ids_all_known, self._ids_full
        idx = np.fromiter(
            (self._slot.get(int(a), -1) for a in arm_ids),
            dtype=np.int64,
            count=len(arm_ids),
        )
        all_known = bool((idx >= 0).all())
        full = all_known and idx.size == self._n and bool((idx == np.arange(self._n)).all())
        self._ids_key = arm_ids
        self._ids_idx = idx
        self._ids_all_known = all_known
        self._ids_full = full
        return idx, all_known, full

    def select(self, event) -> int:
        self._ensure_dims(event)
        x = event.user
        if x is not self._x_ref:
            self._refresh_x_caches(x)
        idx, all_known, full = self._candidate_index(event.arm_ids)
        n_cand = idx.size
        z_mat = arm_cross_features(x, event.arm_features)
        if full:
            ainv = self._ainv[: self._n]
            bmat = self._bmat[: self._n]
            bvec = self._bvec[: self._n]
            xax = self._xax[: self._n]
            wvec = self._wvec[: self._n]
        elif all_known:
            ainv = self._ainv[idx]
            bmat = self._bmat[idx]
            bvec = self._bvec[idx]
            xax = self._xax[idx]
            wvec = self._wvec[idx]
        else:
            known = idx >= 0
            sub = idx[known]
            ainv = np.empty((n_cand, self._dim, self._dim))
            bmat = np.empty((n_cand, self._dim, self._k))
            bvec = np.empty((n_cand, self._dim))
            xax = np.empty(n_cand)
            wvec = np.empty((n_cand, self._k))
            ainv[known] = self._ainv[sub]
            bmat[known] = self._bmat[sub]
            bvec[known] = self._bvec[sub]
            xax[known] = self._xax[sub]
            wvec[known] = self._wvec[sub]
            fresh = ~known
            ainv[fresh] = np.eye(self._dim) / self.reg
            bmat[fresh] = 0.0
            bvec[fresh] = 0.0
            xax[fresh] = float(x @ x) / self.reg
            wvec[fresh] = 0.0
        rhs = np.empty((self._k, 1 + 2 * n_cand))
        rhs[:, 0] = self._g_cum.b0
        rhs[:, 1 : 1 + n_cand] = z_mat.T
        rhs[:, 1 + n_cand :] = wvec.T
        sol = self._g_cum.solve_many(rhs)
        beta = sol[:, 0]
        ginv_z = sol[:, 1 : 1 + n_cand]
        ginv_w = sol[:, 1 + n_cand :]
        s = (
            np.einsum("nk,kn->n", z_mat, ginv_z)
            - 2.0 * np.einsum("nk,kn->n", z_mat, ginv_w)
            + xax
            + np.einsum("nk,kn->n", wvec, ginv_w)
        )
        if (s < -1e-10).any():
            raise NumericError("hybrid confidence term is negative beyond rounding")
        theta = np.einsum(
            "nij,nj->ni", ainv, bvec - np.einsum("ndk,k->nd", bmat, beta)
        )
        scores = theta @ x + z_mat @ beta + self.alpha * np.sqrt(np.maximum(s, 0.0))
        pick = _argmax_index(event.arm_ids, scores)
        arm = int(event.arm_ids[pick])
        self.last_scores = scores
        self._pending = arm
        self._pending_z = z_mat[pick]
        return arm

    def _observe_cum(self, event, arm: int, reward: float):
        self._consume_pending(arm)
        self._ensure_dims(event)
        x = event.user
        z = self._pending_z
        self._pending_z = None
        slot = self._slot.get(arm)
        if slot is None:
            slot = self._register(arm)
        hybrid_observe(self._g_cum, self._cum[slot], x, z, reward, 1)
        return slot, x, z

    def global_models(self) -> dict:
        return {"cum": self._g_cum}

    def arm_models(self, arm_id: int) -> dict:
        slot = self._slot[arm_id]
        return {"cum": self._cum[slot]}

    def _digest_parts(self):
        yield sorted(self._slot.items())
        if self._g_cum is not None:
            yield self._g_cum.A0
            yield self._g_cum.b0
        for state in self._cum:
            yield state.A
            yield state.B
            yield state.b
            yield state.n_obs


class LinUCBHybrid(_HybridScoringMixin, Policy):
    """Stationary LinUCB over the hybrid payoff model."""

    label = "linucb-hybrid"

    def __init__(self, alpha: float = 1.0, reg: float = 1.0, label: str | None = None):
        Policy.__init__(self, label)
        self._init_scoring(alpha, reg)

    def observe(self, event, arm: int, reward: float) -> None:
        slot, _, _ = self._observe_cum(event, arm, reward)
        self._refresh_slot(slot)


class PSLinUCBHybrid(_HybridScoringMixin, Policy):
    """Per-arm change detection on top of the hybrid LinUCB index.

    Mirrors the disjoint variant's pre/cur/cum discipline, with two shared
    globals: the cum global drives selection and the pre global backs the
    detection statistic. On detection the arm's stale history is detached
    from the shared coefficients (its contribution is split into separate
    pre and cur blocks), the cum global is copied onto the pre global, and
    the arm warm-starts from its window contents.
    """

    label = "pslinucb-hybrid"

    def __init__(
        self,
        alpha: float = 1.5,
        window_size: int = 100,
        detect_threshold: float = 0.4,
        reg: float = 1.0,
        label: str | None = None,
    ):
        Policy.__init__(self, label)
        self._init_scoring(alpha, reg)
        if window_size < 1:
            raise ValueError("window_size must be a positive integer")
        if not detect_threshold > 0:
            raise ValueError("detect_threshold must be positive")
        self.window_size = int(window_size)
        self.detect_threshold = float(detect_threshold)
        self._g_pre: HybridGlobalState | None = None
        self._pre: list[HybridArmState] = []
        self._cur: list[HybridArmState] = []
        self._windows: list[SlidingWindow] = []
        self._t = 0

    def _ensure_dims(self, event) -> None:
        first = self._dim is None
        super()._ensure_dims(event)
        if first:
            self._g_pre = HybridGlobalState(self._k, self.reg)

    def _register(self, arm_id: int) -> int:
        slot = super()._register(arm_id)
        self._pre.append(HybridArmState(self._dim, self._k, self.reg))
        self._cur.append(HybridArmState(self._dim, self._k, self.reg))
        self._windows.append(SlidingWindow(self.window_size))
        return slot

    def observe(self, event, arm: int, reward: float) -> None:
        self._t += 1
        slot, x, z = self._observe_cum(event, arm, reward)
        cur = self._cur[slot]
        hybrid_observe(None, cur, x, z, reward, 1)
        window = self._windows[slot]
        window.push(x, reward, z)
        if window.is_full:
            pre = self._pre[slot]
            beta_pre, theta_pre = hybrid_solve(self._g_pre, pre)
            stat = abs(
                (
                    float(theta_pre @ window.x_sum)
                    + float(beta_pre @ window.z_sum)
                    - window.r_sum
                )
                / self.window_size
            )
            if stat >= self.detect_threshold:
                detach_arm(self._g_cum, self._cum[slot], pre, cur)
                self._g_pre.copy_from(self._g_cum)
                pre.copy_from(cur)
                self._cum[slot].copy_from(cur)
                cur.reset()
                window.clear()
                self.detections.append((self._t, arm))
            else:
                x0, z0, r0 = window.popleft()
                hybrid_observe(self._g_pre, pre, x0, z0, r0, 1)
                hybrid_observe(None, cur, x0, z0, r0, -1)
        self._refresh_slot(slot)

    def global_models(self) -> dict:
        return {"pre": self._g_pre, "cum": self._g_cum}

    def arm_models(self, arm_id: int) -> dict:
        slot = self._slot[arm_id]
        return {
            "pre": self._pre[slot],
            "cur": self._cur[slot],
            "cum": self._cum[slot],
            "window": self._windows[slot],
        }

    def _digest_parts(self):
        yield from super()._digest_parts()
        if self._g_pre is not None:
            yield self._g_pre.A0
            yield self._g_pre.b0
        for state in self._pre:
            yield state.A
            yield state.B
            yield state.b
        for state in self._cur:
            yield state.A
            yield state.B
            yield state.b
        for window in self._windows:
            yield from _window_digest_parts(window)
        yield self._t


class LinUCBUniform(Policy):
    """One shared ridge model over arm features; the user context is ignored."""

    label = "linucb-uniform"

    def __init__(self, alpha: float = 1.0, reg: float = 1.0, label: str | None = None):
        super().__init__(label)
        if not alpha >= 0:
            raise ValueError("alpha must be non-negative")
        self.alpha = float(alpha)
        self.reg = float(reg)
        self._state: RidgeState | None = None
        self._pending_y: np.ndarray | None = None

    def select(self, event) -> int:
        y_mat = event.arm_features
        if self._state is None:
            self._state = RidgeState(y_mat.shape[1], self.reg)
        theta = self._state.solve()
        inv = self._state.inv()
        mean = y_mat @ theta
        expl = np.einsum("ni,ij,nj->n", y_mat, inv, y_mat)
        scores = mean + self.alpha * np.sqrt(np.maximum(expl, 0.0))
        pick = _argmax_index(event.arm_ids, scores)
        arm = int(event.arm_ids[pick])
        self.last_scores = scores
        self._pending = arm
        self._pending_y = y_mat[pick]
        return arm

    def observe(self, event, arm: int, reward: float) -> None:
        self._consume_pending(arm)
        self._state.update(self._pending_y, reward, 1)
        self._pending_y = None

    def _digest_parts(self):
        if self._state is not None:
            yield self._state.A
            yield self._state.b
            yield self._state.n_obs


class UCB1(Policy):
    """Context-free UCB: sample mean plus sqrt(2 log t / pulls)."""

    label = "ucb1"

    def __init__(self, label: str | None = None):
        super().__init__(label)
        self._counts: dict[int, int] = {}
        self._sums: dict[int, float] = {}
        self._t = 0

    def select(self, event) -> int:
        unpulled = [int(a) for a in event.arm_ids if self._counts.get(int(a), 0) == 0]
        if unpulled:
            arm = min(unpulled)
            self.last_scores = None
        else:
            t = self._t + 1
            log_t = math.log(t)
            scores = np.array(
                [
                    self._sums[int(a)] / self._counts[int(a)]
                    + math.sqrt(2.0 * log_t / self._counts[int(a)])
                    for a in event.arm_ids
                ]
            )
            arm = int(event.arm_ids[_argmax_index(event.arm_ids, scores)])
            self.last_scores = scores
        self._pending = arm
        return arm

    def observe(self, event, arm: int, reward: float) -> None:
        self._consume_pending(arm)
        self._counts[arm] = self._counts.get(arm, 0) + 1
        self._sums[arm] = self._sums.get(arm, 0.0) + reward
        self._t += 1

    def _digest_parts(self):
        yield sorted(self._counts.items())
        yield sorted(self._sums.items())
        yield self._t


class RandomPolicy(Policy):
    """Uniform selection over the candidates using a seeded generator."""

    label = "random"

    def __init__(self, seed=None, label: str | None = None):
        super().__init__(label)
        self._rng = np.random.default_rng(seed)

    def select(self, event) -> int:
        arm = int(event.arm_ids[int(self._rng.integers(event.arm_ids.size))])
        self.last_scores = None
        self._pending = arm
        return arm

    def observe(self, event, arm: int, reward: float) -> None:
        self._consume_pending(arm)
