"""Synthetic piecewise-stationary reward environments and run accounting.

An environment samples per-arm preference vectors that change at configured
times, serves one context event per step, and pays noisy linear rewards. All
per-step expected rewards are precomputed, so the ground-truth oracle and the
regret accounting are exact and cheap. Candidate sets always contain every
arm; rewards depend only on (t, arm), which is what makes exported logs
replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .features import ContextEvent

_NORM_TOL = 1e-9


def sample_unit_ball(rng: np.random.Generator, dim: int) -> np.ndarray:
    """One point drawn uniformly from the unit ball in `dim` dimensions."""
    v = rng.standard_normal(dim)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return np.zeros(dim)
    radius = rng.random() ** (1.0 / dim)
    return v * (radius / norm)


def _sample_ball_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n independent uniform-ball points, drawn in one vectorized batch."""
    v = rng.standard_normal((n, dim))
    norms = np.linalg.norm(v, axis=1)
    norms[norms == 0.0] = 1.0
    radius = rng.random(n) ** (1.0 / dim)
    return v * (radius / norms)[:, None]


@dataclass
class DisjointEnvSpec:
    """Configuration of a piecewise-stationary disjoint-payoff environment.

    Change times are the last steps of their segments: a change at time v
    makes a freshly drawn preference vector take effect from step v+1.
    change_period expands to synchronized times (period, 2*period, ...);
    change_times may be one shared list or one list per arm. The override
    fields pin otherwise-sampled quantities and are meant for tests.
    """

    horizon: int
    n_arms: int
    user_dim: int
    arm_dim: int
    change_period: Optional[int] = None
    change_times: Optional[Sequence] = None
    noise_sigma: float = 0.2
    user_mode: str = "fixed"
    rng_seed: object = None
    arm_features: Optional[np.ndarray] = None
    user: Optional[np.ndarray] = None
    theta_override: Optional[np.ndarray] = None

    def with_seed(self, rng_seed) -> "DisjointEnvSpec":
        return replace(self, rng_seed=rng_seed)


@dataclass
class HybridEnvSpec(DisjointEnvSpec):
    """Disjoint spec plus a stationary shared coefficient on cross features."""

    beta_override: Optional[np.ndarray] = None


def _normalize_schedule(spec: DisjointEnvSpec) -> tuple:
    """Per-arm tuples of strictly increasing change times inside (0, horizon)."""
    if spec.change_period is not None and spec.change_times is not None:
        raise ConfigError("give change_period or change_times, not both")
    if spec.change_period is not None:
        period = int(spec.change_period)
        if period < 1:
            raise ConfigError("change_period must be a positive integer")
        shared = tuple(range(period, spec.horizon, period))
        return tuple(shared for _ in range(spec.n_arms))
    if spec.change_times is None:
        return tuple(() for _ in range(spec.n_arms))
    times = list(spec.change_times)
    per_arm = times and isinstance(times[0], (list, tuple))
    if per_arm:
        if len(times) != spec.n_arms:
            raise ConfigError("per-arm change_times must list every arm")
        normalized = [tuple(int(v) for v in arm_times) for arm_times in times]
    else:
        shared = tuple(int(v) for v in times)
        normalized = [shared for _ in range(spec.n_arms)]
    for arm_times in normalized:
        if any(not 0 < v < spec.horizon for v in arm_times):
            raise ConfigError("change times must lie strictly inside (0, horizon)")
        if any(b <= a for a, b in zip(arm_times, arm_times[1:])):
            raise ConfigError("change times must be strictly increasing")
    return tuple(normalized)


def _check_norms(name: str, rows: np.ndarray) -> None:
    norms = np.linalg.norm(np.atleast_2d(rows), axis=1)
    if (norms > 1.0 + _NORM_TOL).any():
        raise ConfigError(f"{name} must have 2-norm at most 1")


class DisjointEnvironment:
    """Piecewise-stationary environment with per-arm linear payoffs."""

    payoff = "disjoint"

    def __init__(self, spec: DisjointEnvSpec):
        if spec.horizon < 1 or spec.n_arms < 1 or spec.user_dim < 1 or spec.arm_dim < 1:
            raise ConfigError("horizon and dimensions must be positive integers")
        if spec.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if spec.user_mode not in ("fixed", "iid"):
            raise ConfigError("user_mode must be 'fixed' or 'iid'")
        self.spec = spec
        self.horizon = int(spec.horizon)
        self.n_arms = int(spec.n_arms)
        self.user_dim = int(spec.user_dim)
        self.arm_dim = int(spec.arm_dim)
        self.arm_ids = np.arange(1, self.n_arms + 1, dtype=np.int64)
        self._schedule = _normalize_schedule(spec)
        rng = np.random.default_rng(spec.rng_seed)

        if spec.arm_features is not None:
            self.arm_features = np.asarray(spec.arm_features, dtype=float).copy()
            if self.arm_features.shape != (self.n_arms, self.arm_dim):
                raise ConfigError("arm_features must have shape (n_arms, arm_dim)")
            _check_norms("arm_features", self.arm_features)
        else:
            self.arm_features = _sample_ball_rows(rng, self.n_arms, self.arm_dim)

        if spec.user_mode == "fixed":
            if spec.user is not None:
                self.user = np.asarray(spec.user, dtype=float).copy()
                if self.user.shape != (self.user_dim,):
                    raise ConfigError("user must have shape (user_dim,)")
                _check_norms("user", self.user)
            else:
                self.user = sample_unit_ball(rng, self.user_dim)
            self.users = None
        else:
            if spec.user is not None:
                raise ConfigError("a fixed user conflicts with user_mode='iid'")
            self.user = None
            self.users = _sample_ball_rows(rng, self.horizon, self.user_dim)

        self._thetas = self._draw_thetas(rng)
        self._draw_extra(rng)
        self._build_means()
        if spec.noise_sigma > 0:
            self._noise = rng.normal(0.0, spec.noise_sigma, self.horizon)
        else:
            self._noise = np.zeros(self.horizon)

        self._event = ContextEvent(
            t=0,
            user=self.user if self.user is not None else self.users[0],
            arm_ids=self.arm_ids,
            arm_features=self.arm_features,
        )

    def _draw_thetas(self, rng: np.random.Generator) -> list:
        if self.spec.theta_override is not None:
            override = np.asarray(self.spec.theta_override, dtype=float)
            segments = len(self._schedule[0]) + 1
            if any(len(times) != segments - 1 for times in self._schedule):
                raise ConfigError(
                    "theta_override requires the same segment count for every arm"
                )
            if override.shape != (segments, self.n_arms, self.user_dim):
                raise ConfigError(
                    "theta_override must have shape (n_segments, n_arms, user_dim)"
                )
            _check_norms("theta_override", override.reshape(-1, self.user_dim))
            return [override[:, a, :].copy() for a in range(self.n_arms)]
        thetas = []
        for a in range(self.n_arms):
            segments = len(self._schedule[a]) + 1
            thetas.append(np.stack([sample_unit_ball(rng, self.user_dim) for _ in range(segments)]))
        return thetas

    def _draw_extra(self, rng: np.random.Generator) -> None:
        """Hook for subclasses that add payoff components; draws nothing here."""

    def _joint_mean_rows(self, rows: int) -> Optional[np.ndarray]:
        """Additive mean term aligned with the mean-row table; None when absent."""
        return None

    def _build_means(self) -> None:
        union = sorted({v for times in self._schedule for v in times})
        self._union_times = union
        steps = np.arange(1, self.horizon + 1)
        if self.spec.user_mode == "fixed":
            bounds = union
            rows = len(bounds) + 1
            starts = [1] + [v + 1 for v in bounds]
            mu = np.empty((rows, self.n_arms))
            for a in range(self.n_arms):
                times = self._schedule[a]
                for g, start in enumerate(starts):
                    seg = int(np.searchsorted(times, start))
                    mu[g, a] = float(self.user @ self._thetas[a][seg])
            self._row_of_t = np.searchsorted(union, steps, side="left")
        else:
            rows = self.horizon
            mu = np.empty((rows, self.n_arms))
            for a in range(self.n_arms):
                times = self._schedule[a]
                edges = [0] + list(times) + [self.horizon]
                for seg in range(len(edges) - 1):
                    lo, hi = edges[seg], edges[seg + 1]
                    mu[lo:hi, a] = self.users[lo:hi] @ self._thetas[a][seg]
            self._row_of_t = np.arange(self.horizon)
        extra = self._joint_mean_rows(rows)
        if extra is not None:
            mu += extra
        self._mu_rows = mu
        self._best = mu.max(axis=1)
        self._best_arm = np.argmax(mu, axis=1) + 1

    def event(self, t: int) -> ContextEvent:
        """The context event for step t (1-based). The buffer is reused."""
        ev = self._event
        ev.t = t
        if self.users is not None:
            ev.user = self.users[t - 1]
        return ev

    def reward(self, t: int, arm: int) -> float:
        """Realized reward for playing `arm` at step t."""
        return float(self._mu_rows[self._row_of_t[t - 1], arm - 1] + self._noise[t - 1])

    def mean_reward(self, t: int, arm: int) -> float:
        return float(self._mu_rows[self._row_of_t[t - 1], arm - 1])

    def oracle_best(self, t: int) -> tuple[int, float]:
        """Best arm id and its expected reward at step t."""
        row = self._row_of_t[t - 1]
        return int(self._best_arm[row]), float(self._best[row])

    def chosen_means(self, arms: np.ndarray) -> np.ndarray:
        """Expected reward of the given arm choices, one per step."""
        return self._mu_rows[self._row_of_t, np.asarray(arms, dtype=np.int64) - 1]

    def oracle_means(self) -> np.ndarray:
        """Expected reward of the best arm at every step."""
        return self._best[self._row_of_t]

    def segment_count(self) -> int:
        """Number of stationary segments: 1 plus the union of change instants."""
        return 1 + len(self._union_times)

    def theta(self, arm: int, t: int) -> np.ndarray:
        """The preference vector governing `arm` at step t.

        A change at time v takes effect from step v+1, so the active segment
        index is the count of change times strictly below t.
        """
        times = self._schedule[arm - 1]
        seg = int(np.searchsorted(times, t, side="left"))
        return self._thetas[arm - 1][seg]

    def change_magnitudes(self) -> list[tuple[int, int, float]]:
        """(arm, change_time, |x^T theta_new - x^T theta_old|) per change.

        The user vector at the first post-change step evaluates the shift.
        """
        out = []
        for a in range(self.n_arms):
            for i, v in enumerate(self._schedule[a]):
                x = self.user if self.user is not None else self.users[v]
                old = self._thetas[a][i]
                new = self._thetas[a][i + 1]
                out.append((a + 1, v, abs(float(x @ (new - old)))))
        return out


class HybridEnvironment(DisjointEnvironment):
    """Adds a stationary shared term x^T W y to every arm's expected reward.

    W is the d-by-m matrix whose column-stacked form is the shared
    coefficient vector on cross features, drawn once per environment.
    """

    payoff = "hybrid"

    def __init__(self, spec):
        if not isinstance(spec, HybridEnvSpec):
            spec = HybridEnvSpec(**spec.__dict__)
        super().__init__(spec)

    def _draw_extra(self, rng: np.random.Generator) -> None:
        k = self.user_dim * self.arm_dim
        if self.spec.beta_override is not None:
            beta = np.asarray(self.spec.beta_override, dtype=float).copy()
            if beta.shape != (k,):
                raise ConfigError("beta_override must have shape (user_dim * arm_dim,)")
            _check_norms("beta_override", beta[None, :])
            self.beta = beta
        else:
            self.beta = sample_unit_ball(rng, k)
        # beta[j*d + i] multiplies x[i]*y[j], so W[i, j] = beta[j*d + i]
        self._joint_matrix = self.beta.reshape(self.arm_dim, self.user_dim).T

    def _joint_mean_rows(self, rows: int) -> Optional[np.ndarray]:
        if self.spec.user_mode == "fixed":
            shared = (self.user @ self._joint_matrix) @ self.arm_features.T
            return np.broadcast_to(shared, (rows, self.n_arms))
        return (self.users @ self._joint_matrix) @ self.arm_features.T


@dataclass
class RunRecord:
    """Per-step trace of one policy run plus derived regret accounting."""

    label: str
    arms: np.ndarray
    rewards: np.ndarray
    expected_rewards: np.ndarray
    oracle_rewards: np.ndarray
    detections: list = field(default_factory=list)
    restarts: list = field(default_factory=list)
    segment_count: int = 1

    @property
    def horizon(self) -> int:
        return len(self.arms)

    @property
    def instantaneous_regret(self) -> np.ndarray:
        return self.oracle_rewards - self.expected_rewards

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.instantaneous_regret)


def run_policy(env: DisjointEnvironment, policy) -> RunRecord:
    """Step a policy through an environment and collect the full trace."""
    horizon = env.horizon
    arms = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    select = policy.select
    observe = policy.observe
    env_event = env.event
    env_reward = env.reward
    for t in range(1, horizon + 1):
        ev = env_event(t)
        arm = select(ev)
        r = env_reward(t, arm)
        observe(ev, arm, r)
        arms[t - 1] = arm
        rewards[t - 1] = r
    return RunRecord(
        label=policy.label,
        arms=arms,
        rewards=rewards,
        expected_rewards=env.chosen_means(arms),
        oracle_rewards=env.oracle_means().copy(),
        detections=list(getattr(policy, "detections", ())),
        restarts=list(getattr(policy, "restarts", ())),
        segment_count=env.segment_count(),
    )
