"""Seeded signal-recovery problems with known optimal value 0.

Each generator returns an :class:`Oracle` together with the instance data
(planted solution included). Generalized gradients follow the formal chain
rule with the deterministic selections sign(0) = 0 and lowest-index argmax.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import ConfigError, Oracle
from .fallbacks import AlgorithmicMapping, alternating_projection_map, fixed_point_map

Seed = Union[int, np.random.SeedSequence]


def make_rng(seed: Seed) -> np.random.Generator:
    """Counter-based generator so that derived streams are independent."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def split_seed(seed: int, n: int = 2) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def initial_point(x_bar: np.ndarray, seed: Seed, rel_dist: float = 1.0) -> np.ndarray:
    """Uniform random point at distance rel_dist * |x_bar| from x_bar."""
    rng = make_rng(seed)
    u = rng.standard_normal(x_bar.shape)
    u /= np.linalg.norm(u)
    return x_bar + rel_dist * np.linalg.norm(x_bar) * u


def _seed_int(seed: Seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed.entropy if not seed.spawn_key else [seed.entropy, list(seed.spawn_key)]
    return int(seed)


# --- fast transform ---------------------------------------------------------


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0 (Sylvester ordering)."""
    x = np.array(x, dtype=float)
    d = x.shape[0]
    if d & (d - 1):
        raise ConfigError("Hadamard transform needs a power-of-two length")
    rest = x.shape[1:]
    h = 1
    while h < d:
        x = x.reshape((d // (2 * h), 2, h) + rest)
        a, b = x[:, 0], x[:, 1]
        x = np.stack((a + b, a - b), axis=1)
        h *= 2
    return x.reshape((d,) + rest)


# --- low-rank matrix sensing -------------------------------------------------


class GaussianMeasurements:
    """Rows l_i, r_i stored densely as (m, d) matrices."""

    def __init__(self, left, right):
        self.left_vecs, self.right_vecs = left, right

    def left(self, U):
        return self.left_vecs @ U

    def right(self, V):
        return self.right_vecs @ V

    def left_adjoint(self, W):
        return self.left_vecs.T @ W

    def right_adjoint(self, W):
        return self.right_vecs.T @ W


class HadamardMeasurements:
    """Blocks of rows of H D_k with H the +-1 Hadamard matrix and D_k random signs.

    left/right hold the (k, d) sign patterns; m = k d.
    """

    def __init__(self, left, right):
        self.left_signs, self.right_signs = left, right

    @staticmethod
    def _apply(signs, U):
        k, d = signs.shape
        X = signs[:, :, None] * U[None]
        return np.moveaxis(fwht(np.moveaxis(X, 1, 0)), 0, 1).reshape(k * d, -1)

    @staticmethod
    def _adjoint(signs, W):
        k, d = signs.shape
        X = np.moveaxis(W.reshape(k, d, -1), 1, 0)
        return (signs[:, :, None] * np.moveaxis(fwht(X), 0, 1)).sum(axis=0)

    def left(self, U):
        return self._apply(self.left_signs, U)

    def right(self, V):
        return self._apply(self.right_signs, V)

    def left_adjoint(self, W):
        return self._adjoint(self.left_signs, W)

    def right_adjoint(self, W):
        return self._adjoint(self.right_signs, W)


@dataclass(frozen=True)
class MatrixSensingInstance:
    d: int
    r: int
    m: int
    kappa_tilde: float
    ensemble: str
    seed: object
    left: np.ndarray
    right: np.ndarray
    y: np.ndarray
    U_bar: np.ndarray
    V_bar: np.ndarray

    @property
    def x_bar(self):
        return np.concatenate([self.U_bar.ravel(), self.V_bar.ravel()])

    def operator(self):
        if self.ensemble == "hadamard":
            return HadamardMeasurements(self.left, self.right)
        return GaussianMeasurements(self.left, self.right)

    def unpack(self, z):
        dr = self.d * self.r
        return z[:dr].reshape(self.d, self.r), z[dr:].reshape(self.d, self.r)


def _orthonormal(rng, d, r):
    q, rr = np.linalg.qr(rng.standard_normal((d, r)))
    return q * np.sign(np.diag(rr))


def matrix_sensing_oracle(inst: MatrixSensingInstance) -> Oracle:
    op = inst.operator()
    m = inst.m

    def residual(z):
        U, V = inst.unpack(z)
        LU, RV = op.left(U), op.right(V)
        return np.einsum("ij,ij->i", LU, RV) - inst.y, LU, RV

    def f(z):
        return float(np.abs(residual(z)[0]).mean())

    def g(z):
        res, LU, RV = residual(z)
        s = np.sign(res) / m
        gU = op.left_adjoint(s[:, None] * RV)
        gV = op.right_adjoint(s[:, None] * LU)
        return np.concatenate([gU.ravel(), gV.ravel()])

    return Oracle(2 * inst.d * inst.r, f, g, name="matrix_sensing")


def gen_matrix_sensing(
    d: int,
    r: int,
    m: int,
    kappa_tilde: float = 1.0,
    ensemble: str = "gaussian",
    seed: Seed = 0,
):
    if d < 1 or r < 1 or m < 1 or r > d:
        raise ConfigError("matrix sensing needs m >= 1 and 1 <= r <= d")
    if kappa_tilde < 1:
        raise ConfigError("kappa_tilde must be at least 1")
    if r == 1 and kappa_tilde != 1:
        raise ConfigError("a rank-one matrix has condition number 1")
    rng = make_rng(seed)
    U = _orthonormal(rng, d, r)
    V = _orthonormal(rng, d, r)
    lam = np.linspace(1.0, 1.0 / kappa_tilde, r)
    U_bar, V_bar = U * np.sqrt(lam), V * np.sqrt(lam)
    if ensemble == "gaussian":
        left = rng.standard_normal((m, d))
        right = rng.standard_normal((m, d))
        op = GaussianMeasurements(left, right)
    elif ensemble == "hadamard":
        if d & (d - 1) or m % d:
            raise ConfigError("Hadamard ensemble needs d a power of two and m a multiple of d")
        k = m // d
        left = rng.choice([-1.0, 1.0], size=(k, d))
        right = rng.choice([-1.0, 1.0], size=(k, d))
        op = HadamardMeasurements(left, right)
    else:
        raise ConfigError(f"unknown ensemble {ensemble!r}")
    y = np.einsum("ij,ij->i", op.left(U_bar), op.right(V_bar))
    inst = MatrixSensingInstance(
        d, r, m, float(kappa_tilde), ensemble, _seed_int(seed), left, right, y, U_bar, V_bar
    )
    return matrix_sensing_oracle(inst), inst


# --- max-linear regression ---------------------------------------------------


@dataclass(frozen=True)
class MaxLinearInstance:
    d: int
    r: int
    m: int
    seed: object
    A: np.ndarray
    beta_bar: np.ndarray
    y: np.ndarray

    @property
    def x_bar(self):
        return self.beta_bar.ravel().copy()


def max_linear_oracle(inst: MaxLinearInstance) -> Oracle:
    A, y, m, r, d = inst.A, inst.y, inst.m, inst.r, inst.d

    def pieces(z):
        scores = A @ z.reshape(r, d).T
        j = np.argmax(scores, axis=1)
        return scores[np.arange(m), j] - y, j

    def f(z):
        return float(np.abs(pieces(z)[0]).mean())

    def g(z):
        res, j = pieces(z)
        W = np.zeros((m, r))
        W[np.arange(m), j] = np.sign(res) / m
        return (W.T @ A).ravel()

    return Oracle(d * r, f, g, name="max_linear")


def gen_max_linear(d: int, r: int, m: Optional[int] = None, seed: Seed = 0):
    m = 3 * d * r if m is None else m
    if d < 1 or r < 1 or m < 1:
        raise ConfigError("max-linear regression needs positive d, r, m")
    rng = make_rng(seed)
    beta = rng.standard_normal((r, d))
    beta /= np.linalg.norm(beta, axis=1, keepdims=True)
    A = rng.standard_normal((m, d))
    y = (A @ beta.T).max(axis=1)
    inst = MaxLinearInstance(d, r, m, _seed_int(seed), A, beta, y)
    return max_linear_oracle(inst), inst


# --- phase retrieval ----------------------------------------------------------


def as_complex(z: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(z, dtype=float).view(np.complex128)


def as_real(u: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(u, dtype=np.complex128).view(float).copy()


def proj_magnitude(u: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Project interleaved complex u onto {|u| = y}; zero entries go to phase one."""
    uc = as_complex(u)
    mag = np.abs(uc)
    small = mag <= 1e-300
    phase = np.where(small, 1.0 + 0j, uc / np.where(small, 1.0, mag))
    return as_real(y * phase)


@dataclass(frozen=True)
class PhaseRetrievalInstance:
    d: int
    m: int
    seed: object
    A: np.ndarray
    x_signal: np.ndarray
    y: np.ndarray
    Q: np.ndarray

    @property
    def x_bar(self):
        return as_real(self.A @ self.x_signal)

    def proj_range(self, z):
        u = as_complex(z)
        return as_real(self.Q @ (self.Q.conj().T @ u))

    def proj_magnitude(self, z):
        return proj_magnitude(z, self.y)

    def estimate_signal(self, z):
        return np.linalg.lstsq(self.A, as_complex(z), rcond=None)[0]


def phase_retrieval_oracle(inst: PhaseRetrievalInstance) -> Oracle:
    def parts(z):
        z = np.asarray(z, dtype=float)
        r1 = z - inst.proj_magnitude(z)
        r2 = z - inst.proj_range(z)
        return r1, np.linalg.norm(r1), r2, np.linalg.norm(r2)

    def f(z):
        _, n1, _, n2 = parts(z)
        return float(n1 + n2)

    def g(z):
        r1, n1, r2, n2 = parts(z)
        out = np.zeros_like(r1)
        if n1 > 0:
            out += r1 / n1
        if n2 > 0:
            out += r2 / n2
        return out

    return Oracle(2 * inst.m, f, g, name="phase_retrieval")


def gen_phase_retrieval(d: int, m: Optional[int] = None, seed: Seed = 0):
    m = 4 * d if m is None else m
    if d < 1 or m < d:
        raise ConfigError("phase retrieval needs 1 <= d <= m")
    rng = make_rng(seed)
    A = (rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d))) / np.sqrt(2)
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    x /= np.linalg.norm(x)
    y = np.abs(A @ x)
    Q, _ = np.linalg.qr(A)
    inst = PhaseRetrievalInstance(d, m, _seed_int(seed), A, x, y, Q)
    mapping = alternating_projection_map(inst.proj_magnitude, inst.proj_range)
    return phase_retrieval_oracle(inst), inst, mapping


def phase_retrieval_start(inst: PhaseRetrievalInstance, seed: Seed, rel_dist: float = 1.0):
    """A x_0 for a uniform random signal x_0 with |x_0 - x| = rel_dist |x|."""
    rng = make_rng(seed)
    u = rng.standard_normal(inst.d) + 1j * rng.standard_normal(inst.d)
    u *= rel_dist * np.linalg.norm(inst.x_signal) / np.linalg.norm(u)
    return as_real(inst.A @ (inst.x_signal + u))


# --- compressed sensing via the proximal-gradient fixed point ----------------


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    if t < 0:
        raise ConfigError("threshold must be nonnegative")
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass(frozen=True)
class CompressedSensingInstance:
    d: int
    m: int
    s: int
    lam: float
    step: float
    literal_prox: bool
    seed: object
    A: np.ndarray
    x_sparse: np.ndarray
    y: np.ndarray
    x_star: np.ndarray

    @property
    def threshold(self):
        return self.lam if self.literal_prox else self.step * self.lam

    @property
    def x_bar(self):
        return self.x_star

    def forward(self, x):
        return x - self.step * (self.A.T @ (self.A @ x - self.y))

    def T(self, x):
        return soft_threshold(self.forward(x), self.threshold)


def compressed_sensing_oracle(inst: CompressedSensingInstance) -> Oracle:
    A, step, theta = inst.A, inst.step, inst.threshold

    def f(x):
        return float(np.linalg.norm(x - inst.T(x)))

    def g(x):
        z = inst.forward(x)
        F = x - soft_threshold(z, theta)
        nF = np.linalg.norm(F)
        if nF == 0:
            return np.zeros_like(x)
        u = F / nF
        Du = np.where(np.abs(z) > theta, u, 0.0)
        return u - Du + step * (A.T @ (A @ Du))

    return Oracle(inst.d, f, g, name="compressed_sensing")


def _prox_grad_fixed_point(A, y, step, theta, tol=1e-14, max_iter=1_000_000):
    x = np.zeros(A.shape[1])
    fwd = lambda v: v - step * (A.T @ (A @ v - y))  # noqa: E731
    for _ in range(max_iter):
        x_new = soft_threshold(fwd(x), theta)
        res = np.linalg.norm(x_new - x)
        x = x_new
        if res <= 1e-10 * max(1.0, np.linalg.norm(x)):
            break
    # polish on the identified support: A_S^T (A_S x_S - y) + (theta/step) sign = 0
    S = np.flatnonzero(x)
    if S.size and S.size <= A.shape[0]:
        AS = A[:, S]
        sgn = np.sign(x[S])
        xs = np.linalg.solve(AS.T @ AS, AS.T @ y - (theta / step) * sgn)
        cand = np.zeros_like(x)
        cand[S] = xs
        if np.all(np.sign(xs) == sgn) and np.linalg.norm(
            cand - soft_threshold(fwd(cand), theta)
        ) <= np.linalg.norm(x - soft_threshold(fwd(x), theta)):
            x = cand
    for _ in range(max_iter):
        if np.linalg.norm(x - soft_threshold(fwd(x), theta)) <= tol:
            break
        x = soft_threshold(fwd(x), theta)
    return x


def make_compressed_sensing(
    A, y, lam, step=None, literal_prox=False, x_sparse=None, s=0, seed=None
) -> tuple[Oracle, CompressedSensingInstance, AlgorithmicMapping]:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float)
    m, d = A.shape
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    if step is None:
        step = 0.95 / np.linalg.norm(A, 2) ** 2
    theta = lam if literal_prox else step * lam
    x_star = _prox_grad_fixed_point(A, y, step, theta)
    x_sparse = np.zeros(d) if x_sparse is None else x_sparse
    inst = CompressedSensingInstance(
        d, m, s, float(lam), float(step), bool(literal_prox), seed, A, x_sparse, y, x_star
    )
    return compressed_sensing_oracle(inst), inst, fixed_point_map(inst.T, "prox_gradient")


def gen_compressed_sensing(
    d: int, m: int, s: int, lam: float = 0.1, seed: Seed = 0, literal_prox: bool = False
):
    if not 1 <= s <= m <= d:
        raise ConfigError("compressed sensing needs 1 <= s <= m <= d")
    rng = make_rng(seed)
    A = rng.standard_normal((m, d)) / np.sqrt(m)
    x = np.zeros(d)
    support = rng.choice(d, size=s, replace=False)
    x[support] = rng.standard_normal(s)
    return make_compressed_sensing(
        A, A @ x, lam, literal_prox=literal_prox, x_sparse=x, s=s, seed=_seed_int(seed)
    )


# --- serialization ------------------------------------------------------------

_INSTANCE_TYPES = {
    cls.__name__: cls
    for cls in (
        MatrixSensingInstance,
        MaxLinearInstance,
        PhaseRetrievalInstance,
        CompressedSensingInstance,
    )
}


def save_instance(inst, path) -> None:
    """Dump parameters (JSON header) and all arrays to an .npz file."""
    arrays, params = {}, {}
    for fld in dataclasses.fields(inst):
        val = getattr(inst, fld.name)
        if isinstance(val, np.ndarray):
            arrays[fld.name] = val
        else:
            params[fld.name] = val
    header = json.dumps({"type": type(inst).__name__, "params": params})
    np.savez(path, __header__=np.array(header), **arrays)


def load_instance(path):
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["__header__"]))
        arrays = {k: data[k] for k in data.files if k != "__header__"}
    cls = _INSTANCE_TYPES[header["type"]]
    return cls(**header["params"], **arrays)


def oracle_for(inst) -> Oracle:
    if isinstance(inst, MatrixSensingInstance):
        return matrix_sensing_oracle(inst)
    if isinstance(inst, MaxLinearInstance):
        return max_linear_oracle(inst)
    if isinstance(inst, PhaseRetrievalInstance):
        return phase_retrieval_oracle(inst)
    if isinstance(inst, CompressedSensingInstance):
        return compressed_sensing_oracle(inst)
    raise TypeError(type(inst))
