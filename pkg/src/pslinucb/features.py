"""Core feature types: context events and user/arm feature crossing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def cross_feature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Flatten the outer product of user features x and arm features y.

    Returns the d*m vector whose entry j*d + i is x[i] * y[j], i.e. the
    columns of the d-by-m matrix x y^T stacked in order. The result norm
    equals ||x|| * ||y||.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.size == 0 or y.size == 0:
        raise ValueError("cross_feature expects non-empty 1-d vectors")
    return np.outer(y, x).ravel()


def arm_cross_features(x: np.ndarray, arm_features: np.ndarray) -> np.ndarray:
    """Stack cross_feature(x, y) for every row y of arm_features.

    Returns an (n_arms, d*m) matrix; row a equals cross_feature(x, arm_features[a]).
    """
    x = np.asarray(x, dtype=float)
    arm_features = np.asarray(arm_features, dtype=float)
    n, m = arm_features.shape
    return (arm_features[:, :, None] * x[None, None, :]).reshape(n, m * x.shape[0])


@dataclass
class ContextEvent:
    """One interaction round: a user context plus the candidate arms.

    Arm ids are positive integers; arm_features holds one row per candidate,
    aligned with arm_ids. Environments may reuse a single event object across
    steps (mutating only t and user), so policies must not hold references to
    it beyond the observe call.
    """

    t: int
    user: np.ndarray
    arm_ids: np.ndarray
    arm_features: np.ndarray

    def __post_init__(self):
        self.user = np.asarray(self.user, dtype=float)
        self.arm_ids = np.asarray(self.arm_ids, dtype=np.int64)
        self.arm_features = np.asarray(self.arm_features, dtype=float)

    @property
    def candidates(self) -> list[tuple[int, np.ndarray]]:
        return [(int(a), self.arm_features[i]) for i, a in enumerate(self.arm_ids)]

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        if self.arm_ids.ndim != 1 or self.arm_ids.size == 0:
            raise ValueError("event needs at least one candidate arm")
        if np.unique(self.arm_ids).size != self.arm_ids.size:
            raise ValueError("candidate arm ids must be distinct")
        if (self.arm_ids <= 0).any():
            raise ValueError("arm ids must be positive integers")
        if self.user.ndim != 1 or self.user.size == 0:
            raise ValueError("user feature must be a non-empty vector")
        if self.arm_features.shape[0] != self.arm_ids.size:
            raise ValueError("arm_features rows must align with arm_ids")
        if not (np.isfinite(self.user).all() and np.isfinite(self.arm_features).all()):
            raise ValueError("features must be finite")
