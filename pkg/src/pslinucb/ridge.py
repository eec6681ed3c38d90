"""Incremental ridge-regression statistics for a single arm."""

from __future__ import annotations

import numpy as np

from .errors import ContractError, NumericError


class RidgeState:
    """Running statistics A = reg*I + sum x x^T and b = sum r*x.

    Supports adding and exactly removing observations; the inverse and the
    point estimate are cached and recomputed only after an update. The
    removal path is used by sliding-window policies that shift observations
    between models, so sign=-1 must only ever undo a previously added
    observation (A stays positive definite).
    """

    __slots__ = ("dim", "reg", "A", "b", "n_obs", "_inv", "_theta")

    def __init__(self, dim: int, reg: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        if not reg > 0:
            raise ValueError("regularizer must be positive")
        self.dim = int(dim)
        self.reg = float(reg)
        self.A = np.eye(self.dim) * self.reg
        self.b = np.zeros(self.dim)
        self.n_obs = 0
        self._inv = None
        self._theta = None

    def update(self, x: np.ndarray, reward: float, sign: int = 1) -> None:
        """Add (sign=1) or remove (sign=-1) one observation."""
        if sign == 1:
            self.A += np.outer(x, x)
            self.b += reward * x
            self.n_obs += 1
        elif sign == -1:
            if self.n_obs == 0:
                raise ContractError("cannot remove an observation from an empty model")
            self.A -= np.outer(x, x)
            self.b -= reward * x
            self.n_obs -= 1
        else:
            raise ValueError("sign must be +1 or -1")
        self._inv = None
        self._theta = None

    def inv(self) -> np.ndarray:
        """Inverse of A, cached between updates."""
        if self._inv is None:
            inv = np.linalg.inv(self.A)
            if not np.isfinite(inv).all():
                raise NumericError("ridge inverse is not finite")
            self._inv = inv
        return self._inv

    def solve(self) -> np.ndarray:
        """Point estimate A^{-1} b, cached between updates."""
        if self._theta is None:
            theta = self.inv() @ self.b
            if not np.isfinite(theta).all():
                raise NumericError("ridge solution is not finite")
            self._theta = theta
        return self._theta

    def quad_form(self, x: np.ndarray) -> float:
        """x^T A^{-1} x, clamped at zero against rounding."""
        v = float(x @ self.inv() @ x)
        return v if v > 0.0 else 0.0

    def reset(self) -> None:
        """Return to the fresh state (reg*I, zeros)."""
        self.A = np.eye(self.dim) * self.reg
        self.b = np.zeros(self.dim)
        self.n_obs = 0
        self._inv = None
        self._theta = None

    def copy(self) -> "RidgeState":
        other = RidgeState(self.dim, self.reg)
        other.copy_from(self)
        return other

    def copy_from(self, other: "RidgeState") -> None:
        """Overwrite this state with a deep copy of another's statistics."""
        self.A = other.A.copy()
        self.b = other.b.copy()
        self.n_obs = other.n_obs
        self._inv = None if other._inv is None else other._inv
        self._theta = None if other._theta is None else other._theta
