"""Incremental reduced QR of the transposed bundle matrix.

The bundle matrix A_i stacks gradients v_0, ..., v_{i-1} as rows.  We keep the
factorization A_i^T = Q R with Q stored implicitly as a product of Householder
reflectors in compact-WY form, Q_full = I - U T U^T, so that memory is O(d i)
and both appending a row and applying the pseudoinverse cost O(d i).
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.linalg import solve_triangular

from .core import ZeroGradient

RANK_RTOL = 1e-10


class AppendResult(str, enum.Enum):
    UPDATED = "updated"
    RANK_DEFICIENT = "rank_deficient"


class QrState:
    """Reduced QR factorization of A_i^T with compact-WY Householder storage.

    Attributes are views into preallocated buffers that grow geometrically.
    R is kept with a nonnegative diagonal.
    """

    def __init__(self, d: int, capacity: int = 8):
        self.d = d
        self.i = 0
        cap = max(1, min(capacity, d))
        self._U = np.zeros((d, cap))
        self._T = np.zeros((cap, cap))
        self._R = np.zeros((cap, cap))
        self._rows = np.zeros((cap, d))
        self._signs = np.zeros(cap)
        self.max_diag = 0.0

    @property
    def U(self):
        return self._U[:, : self.i]

    @property
    def T(self):
        return self._T[: self.i, : self.i]

    @property
    def R(self):
        return self._R[: self.i, : self.i]

    @property
    def rows(self):
        return self._rows[: self.i]

    def _grow(self):
        cap = self._U.shape[1]
        if self.i < cap:
            return
        new = min(2 * cap, self.d)
        U = np.zeros((self.d, new))
        U[:, :cap] = self._U
        T = np.zeros((new, new))
        T[:cap, :cap] = self._T
        R = np.zeros((new, new))
        R[:cap, :cap] = self._R
        rows = np.zeros((new, self.d))
        rows[:cap] = self._rows
        signs = np.zeros(new)
        signs[:cap] = self._signs
        self._U, self._T, self._R, self._rows, self._signs = U, T, R, rows, signs

    def rank_tol(self, v_norm: float = 0.0) -> float:
        return RANK_RTOL * max(1.0, self.max_diag, v_norm)

    def apply_qt(self, v: np.ndarray) -> np.ndarray:
        """Q_full^T v = v - U T^T U^T v."""
        if self.i == 0:
            return v.copy()
        U = self.U
        return v - U @ (self.T.T @ (U.T @ v))

    def apply_q(self, e: np.ndarray) -> np.ndarray:
        """Q_full e for e supported on the first i coordinates."""
        U = self.U
        k = self.i
        return e - U @ (self.T @ (U[:k].T @ e[:k]))

    def _push(self, v: np.ndarray) -> AppendResult:
        vnorm = float(np.linalg.norm(v))
        w = self.apply_qt(v)
        k = self.i
        tail = w[k:]
        alpha = float(np.linalg.norm(tail))
        if k >= self.d or alpha <= self.rank_tol(vnorm):
            return AppendResult.RANK_DEFICIENT
        self._grow()
        s = 1.0 if tail[0] >= 0 else -1.0
        u = np.zeros(self.d)
        u[k:] = tail
        u[k] += s * alpha
        beta = 2.0 / float(u[k:] @ u[k:])
        # compact-WY: Q H = I - [U u] [[T, -beta T U^T u], [0, beta]] [U u]^T
        if k:
            self._T[:k, k] = -beta * (self.T @ (self.U[k:].T @ u[k:]))
        self._T[k, k] = beta
        self._U[:, k] = u
        # H maps tail to -s*alpha e_k; flip the sign of that column of Q.
        sign = -s
        self._signs[k] = sign
        self._R[:k, k] = self._signs[:k] * w[:k]
        self._R[k, k] = alpha
        self._rows[k] = v
        self.max_diag = max(self.max_diag, alpha)
        self.i = k + 1
        return AppendResult.UPDATED

    def q_matrix(self) -> np.ndarray:
        """Explicit d x i reduced Q (tests and diagnostics only)."""
        k = self.i
        out = np.empty((self.d, k))
        for j in range(k):
            e = np.zeros(self.d)
            e[j] = self._signs[j]
            out[:, j] = self.apply_q(e)
        return out


def qr_init(v0: np.ndarray, capacity: int = 8) -> QrState:
    v0 = np.asarray(v0, dtype=float)
    state = QrState(v0.shape[0], capacity)
    if float(np.linalg.norm(v0)) <= RANK_RTOL:
        raise ZeroGradient("initial bundle gradient is zero")
    state._push(v0)
    return state


def qr_append(state: QrState, v: np.ndarray) -> AppendResult:
    """Append row v to A_i in place. The state is left untouched on rank deficiency."""
    return state._push(np.asarray(v, dtype=float))


def apply_pinv(state: QrState, w: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of A_i x = w, i.e. Q R^{-T} w."""
    k = state.i
    z = solve_triangular(state.R, np.asarray(w, dtype=float), trans="T", lower=False)
    e = np.zeros(state.d)
    e[:k] = state._signs[:k] * z
    return state.apply_q(e)


def pinv_dense_oracle(A: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares solution via a truncated SVD of A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    w = np.asarray(w, dtype=float)
    Uw, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > RANK_RTOL * max(1.0, s[0])
    coef = (Uw[:, keep].T @ w) / s[keep]
    return Vt[keep].T @ coef
