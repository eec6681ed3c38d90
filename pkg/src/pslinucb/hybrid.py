"""Incremental ridge statistics for the hybrid payoff model.

The hybrid model fits rewards as x^T theta_a + z^T beta, where theta_a is
arm-specific and beta is shared. Per-arm statistics (A, B, b) and global
statistics (A0, b0) are maintained so that solving the coupled system is a
pair of small dense solves instead of one big one: A0 and b0 always equal
the Schur complement of the full joint normal equations after eliminating
every arm block. All update functions preserve that identity exactly (up to
floating point), including observation removal and arm detachment.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError, NumericError


class HybridGlobalState:
    """Shared-coefficient statistics A0 (k x k) and b0 (k,)."""

    __slots__ = ("k", "reg", "A0", "b0", "_beta")

    def __init__(self, k: int, reg: float = 1.0):
        if k < 1:
            raise ValueError("shared dimension must be a positive integer")
        if not reg > 0:
            raise ValueError("regularizer must be positive")
        self.k = int(k)
        self.reg = float(reg)
        self.A0 = np.eye(self.k) * self.reg
        self.b0 = np.zeros(self.k)
        self._beta = None

    def invalidate(self) -> None:
        self._beta = None

    def solve(self) -> np.ndarray:
        """Shared coefficient estimate A0^{-1} b0, cached between updates."""
        if self._beta is None:
            beta = np.linalg.solve(self.A0, self.b0)
            if not np.isfinite(beta).all():
                raise NumericError("shared coefficient solve is not finite")
            self._beta = beta
        return self._beta

    def solve_many(self, rhs: np.ndarray) -> np.ndarray:
        """A0^{-1} rhs for a stack of right-hand sides."""
        return np.linalg.solve(self.A0, rhs)

    def reset(self) -> None:
        self.A0 = np.eye(self.k) * self.reg
        self.b0 = np.zeros(self.k)
        self._beta = None

    def copy(self) -> "HybridGlobalState":
        other = HybridGlobalState(self.k, self.reg)
        other.copy_from(self)
        return other

    def copy_from(self, other: "HybridGlobalState") -> None:
        self.A0 = other.A0.copy()
        self.b0 = other.b0.copy()
        self._beta = other._beta


class HybridArmState:
    """Per-arm statistics A (d x d), B (d x k), b (d,).

    B accumulates the cross moments x z^T linking the arm block to the
    shared block. coupling() returns the terms this arm contributes to the
    Schur complement; the pair is cached because every coupled update needs
    the value twice (once to detach the stale contribution, once to attach
    the fresh one).
    """

    __slots__ = ("dim", "k", "reg", "A", "B", "b", "n_obs", "_inv", "_coupling")

    def __init__(self, dim: int, k: int, reg: float = 1.0):
        if dim < 1 or k < 1:
            raise ValueError("dimensions must be positive integers")
        if not reg > 0:
            raise ValueError("regularizer must be positive")
        self.dim = int(dim)
        self.k = int(k)
        self.reg = float(reg)
        self.A = np.eye(self.dim) * self.reg
        self.B = np.zeros((self.dim, self.k))
        self.b = np.zeros(self.dim)
        self.n_obs = 0
        self._inv = None
        self._coupling = None

    def inv(self) -> np.ndarray:
        if self._inv is None:
            inv = np.linalg.inv(self.A)
            if not np.isfinite(inv).all():
                raise NumericError("arm-block inverse is not finite")
            self._inv = inv
        return self._inv

    def coupling(self) -> tuple[np.ndarray, np.ndarray]:
        """Schur-complement contribution (B^T A^{-1} B, B^T A^{-1} b)."""
        if self._coupling is None:
            inv_b = self.inv() @ self.B
            self._coupling = (self.B.T @ inv_b, self.B.T @ (self.inv() @ self.b))
        return self._coupling

    def update(self, x: np.ndarray, z: np.ndarray, reward: float, sign: int = 1) -> None:
        """Add or remove one observation from the arm block only."""
        if sign == 1:
            self.A += np.outer(x, x)
            self.B += np.outer(x, z)
            self.b += reward * x
            self.n_obs += 1
        elif sign == -1:
            if self.n_obs == 0:
                raise ContractError("cannot remove an observation from an empty model")
            self.A -= np.outer(x, x)
            self.B -= np.outer(x, z)
            self.b -= reward * x
            self.n_obs -= 1
        else:
            raise ValueError("sign must be +1 or -1")
        self._inv = None
        self._coupling = None

    def reset(self) -> None:
        self.A = np.eye(self.dim) * self.reg
        self.B = np.zeros((self.dim, self.k))
        self.b = np.zeros(self.dim)
        self.n_obs = 0
        self._inv = None
        self._coupling = None

    def copy(self) -> "HybridArmState":
        other = HybridArmState(self.dim, self.k, self.reg)
        other.copy_from(self)
        return other

    def copy_from(self, other: "HybridArmState") -> None:
        self.A = other.A.copy()
        self.B = other.B.copy()
        self.b = other.b.copy()
        self.n_obs = other.n_obs
        self._inv = other._inv
        self._coupling = other._coupling


def hybrid_observe(
    global_state: HybridGlobalState | None,
    arm: HybridArmState,
    x: np.ndarray,
    z: np.ndarray,
    reward: float,
    sign: int = 1,
) -> None:
    """Fold one observation into an arm block and, if given, its global block.

    The global update first removes the arm's stale Schur contribution, then
    applies the observation (sign=-1 removes it), then restores the fresh
    contribution. Calling with sign=-1 is the exact inverse of the sign=+1
    call, which is what lets window policies shift observations between
    models without error accumulation beyond floating point.
    """
    if global_state is None:
        arm.update(x, z, reward, sign)
        return
    stale_c, stale_v = arm.coupling()
    global_state.A0 += stale_c
    global_state.b0 += stale_v
    arm.update(x, z, reward, sign)
    fresh_c, fresh_v = arm.coupling()
    if sign == 1:
        global_state.A0 += np.outer(z, z)
        global_state.b0 += reward * z
    else:
        global_state.A0 -= np.outer(z, z)
        global_state.b0 -= reward * z
    global_state.A0 -= fresh_c
    global_state.b0 -= fresh_v
    global_state.invalidate()


def hybrid_solve(
    global_state: HybridGlobalState, arm: HybridArmState
) -> tuple[np.ndarray, np.ndarray]:
    """Return (beta_hat, theta_hat) for one arm under the coupled model."""
    beta = global_state.solve()
    theta = arm.inv() @ (arm.b - arm.B @ beta)
    if not np.isfinite(theta).all():
        raise NumericError("arm coefficient solve is not finite")
    return beta, theta


def confidence_terms(
    global_state: HybridGlobalState,
    arm: HybridArmState,
    x: np.ndarray,
    z: np.ndarray,
) -> float:
    """Posterior variance proxy s = z^T A0i z - 2 z^T A0i w + x^T Ai x + w^T A0i w.

    Here Ai = A^{-1}, A0i = A0^{-1} and w = B^T Ai x. The value is
    mathematically non-negative; small negative rounding is clamped to zero
    and anything materially negative raises NumericError.
    """
    inv_x = arm.inv() @ x
    w = arm.B.T @ inv_x
    rhs = np.stack([z, w], axis=1)
    sol = global_state.solve_many(rhs)
    s = float(z @ sol[:, 0]) - 2.0 * float(z @ sol[:, 1]) + float(x @ inv_x) + float(w @ sol[:, 1])
    if s < -1e-10:
        raise NumericError(f"confidence term is negative beyond rounding: {s}")
    return s if s > 0.0 else 0.0


def detach_arm(
    global_state: HybridGlobalState,
    cum: HybridArmState,
    pre: HybridArmState,
    cur: HybridArmState,
) -> None:
    """Split one arm's Schur contribution into separate pre and cur blocks.

    Requires cum's observations to be exactly the union of pre's and cur's.
    After the call the global statistics describe a model in which the arm's
    pre-window and in-window observations belong to two distinct arm blocks,
    which is how a detected change severs the stale history from the shared
    coefficient estimate.
    """
    cum_c, cum_v = cum.coupling()
    pre_c, pre_v = pre.coupling()
    cur_c, cur_v = cur.coupling()
    global_state.A0 += cum_c - pre_c - cur_c
    global_state.b0 += cum_v - pre_v - cur_v
    global_state.invalidate()
