"""Sliding observation windows and change-detection statistics."""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, NumericError


class SlidingWindow:
    """Bounded FIFO of (x, z, r) observations with running sums.

    Pushing onto a full window evicts and returns the oldest entry; callers
    that shift observations into another model instead call popleft before
    the window refills. Running sums of x, z and r are maintained so linear
    detection statistics cost O(d) per step instead of O(window * d).
    """

    __slots__ = ("capacity", "_items", "x_sum", "r_sum", "z_sum")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be a positive integer")
        self.capacity = int(capacity)
        self._items: deque = deque()
        self.x_sum: Optional[np.ndarray] = None
        self.r_sum: float = 0.0
        self.z_sum: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self._items)

    @property
    def is_full(self) -> bool:
        return len(self._items) == self.capacity

    def push(self, x: np.ndarray, reward: float, z: Optional[np.ndarray] = None):
        """Append an observation; returns the evicted entry if full, else None."""
        evicted = None
        if len(self._items) == self.capacity:
            evicted = self.popleft()
        if self.x_sum is None:
            self.x_sum = np.zeros(len(x))
        self.x_sum += x
        self.r_sum += reward
        if z is not None:
            if self.z_sum is None:
                self.z_sum = np.zeros(len(z))
            self.z_sum += z
        self._items.append((x, z, reward))
        return evicted

    def popleft(self) -> tuple:
        """Remove and return the oldest (x, z, r) entry."""
        if not self._items:
            raise ContractError("window is empty")
        x, z, reward = self._items.popleft()
        self.x_sum -= x
        self.r_sum -= reward
        if z is not None:
            self.z_sum -= z
        return (x, z, reward)

    def clear(self) -> None:
        self._items.clear()
        if self.x_sum is not None:
            self.x_sum[:] = 0.0
        if self.z_sum is not None:
            self.z_sum[:] = 0.0
        self.r_sum = 0.0

    def entries(self) -> list:
        """Oldest-first snapshot of the stored (x, z, r) tuples."""
        return list(self._items)


def residual_statistic(window: SlidingWindow, predict: Callable) -> float:
    """Absolute mean residual |mean(predict(x, z) - r)| over a full window.

    predict takes (x, z) where z is None for observations stored without
    cross features. The window must be full so the statistic always averages
    the same number of terms.
    """
    if not window.is_full:
        raise ContractError("residual statistic requires a full window")
    total = 0.0
    for x, z, reward in window._items:
        total += predict(x, z) - reward
    return abs(total / window.capacity)


def split_window_statistic(
    window: SlidingWindow, fit_reg: float = 1e-6
) -> tuple[float, np.ndarray]:
    """Fit the older half of a full window, score the newer half.

    A ridge model with regularizer fit_reg is fit on the first floor(w/2)
    entries; the statistic is |2/w * sum(x^T theta - r)| over the remaining
    entries. Returns (statistic, fitted theta). Raises NumericError when the
    fit system is singular (possible with fit_reg=0).
    """
    if not window.is_full:
        raise ContractError("split-window statistic requires a full window")
    if window.capacity < 2:
        raise ContractError("split-window statistic needs capacity >= 2")
    if fit_reg < 0:
        raise ValueError("fit regularizer must be non-negative")
    items = window.entries()
    half = window.capacity // 2
    fit_x = np.stack([item[0] for item in items[:half]])
    fit_r = np.array([item[2] for item in items[:half]])
    dim = fit_x.shape[1]
    gram = fit_reg * np.eye(dim) + fit_x.T @ fit_x
    try:
        theta = np.linalg.solve(gram, fit_x.T @ fit_r)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"split-window fit is singular: {exc}") from None
    if not np.isfinite(theta).all():
        raise NumericError("split-window fit is not finite")
    test_x = np.stack([item[0] for item in items[half:]])
    test_r = np.array([item[2] for item in items[half:]])
    stat = abs((2.0 / window.capacity) * float(np.sum(test_x @ theta - test_r)))
    return stat, theta


def estimation_threshold(
    fit_xs,
    eval_xs,
    window_size: int,
    false_alarm_prob: float,
    fit_reg: float = 1e-6,
) -> float:
    """Bound on the fitted model's prediction error over the evaluation points.

    Computes sqrt(2 d log(window_size / false_alarm_prob)) * (2/window_size)
    * sum_i ||x_i||_{G^{-1}} with G = fit_reg*I + sum over fit_xs of x x^T.
    fit_xs are the points the model was fit on; eval_xs are the points whose
    predictions the detection statistic averages.
    """
    if not 0.0 < false_alarm_prob < 1.0:
        raise ValueError("false_alarm_prob must lie in (0, 1)")
    if window_size < 2:
        raise ValueError("window_size must be at least 2")
    fit_x = np.stack([np.asarray(x, dtype=float) for x in fit_xs])
    eval_x = np.stack([np.asarray(x, dtype=float) for x in eval_xs])
    dim = fit_x.shape[1]
    gram = fit_reg * np.eye(dim) + fit_x.T @ fit_x
    try:
        sol = np.linalg.solve(gram, eval_x.T)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"estimation threshold gram matrix is singular: {exc}") from None
    quad = np.einsum("ij,ji->i", eval_x, sol)
    if (quad < -1e-12).any():
        raise NumericError("negative quadratic form in estimation threshold")
    norms = np.sqrt(np.maximum(quad, 0.0))
    scale = math.sqrt(2.0 * dim * math.log(window_size / false_alarm_prob))
    return scale * (2.0 / window_size) * float(norms.sum())


def noise_threshold(window_size: int, horizon: int) -> float:
    """Deviation allowance for reward noise: sqrt((2/window_size) log(2*horizon))."""
    if window_size < 1:
        raise ValueError("window_size must be a positive integer")
    if horizon < 1:
        raise ValueError("horizon must be a positive integer")
    return math.sqrt((2.0 / window_size) * math.log(2.0 * horizon))
