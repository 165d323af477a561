"""Orthogonal polynomials on the real line from Jacobi parameters.

Orthonormal polynomials ``p_n`` and second-kind polynomials ``q_n``,
transfer matrices, the matrix Christoffel-Darboux kernel with linear
interpolation in the index, and zeros of ``p_n`` by Sturm bisection.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._backend import kernels
from .errors import HorizonError
from .mat2 import I2, J, SIGMA

__all__ = [
    "JacobiParams",
    "PolyPair",
    "ZerosNear",
    "eval_polys",
    "transfer_matrix",
    "jacobi_transfer",
    "cd_kernel",
    "cd_kernel_pairs",
    "scalar_cd_kernel",
    "tau_scale",
    "interp_M",
    "zeros_near",
    "jacobi_zeros",
    "gauss_quadrature",
    "jacobi_from_id",
    "DIAGONAL_THRESHOLD",
]

DIAGONAL_THRESHOLD = 1e-8
_BLOCK = 1024


class JacobiParams:
    """Jacobi parameters ``a_n > 0``, ``b_n`` (``n >= 1``) with random access.

    Coefficients come from deterministic callables ``a(n)``, ``b(n)`` and
    are cached in arrays as they are requested.  ``horizon`` is the
    largest polynomial index that may be evaluated.
    """

    def __init__(
        self,
        a: Callable[[int], float],
        b: Callable[[int], float],
        model_id: str,
        horizon: int = 10**7,
    ):
        self._a_fn = a
        self._b_fn = b
        self.model_id = model_id
        self.horizon = int(horizon)
        self._a = np.ones(1)
        self._b = np.zeros(1)
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"JacobiParams({self.model_id!r}, horizon={self.horizon})"

    def arrays(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient arrays ``a[0..n]``, ``b[0..n]`` with ``a[0] = 1``.

        The returned arrays may be longer than ``n + 1``; treat them as
        read-only.
        """
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n > self.horizon:
            raise HorizonError(
                f"index {n} exceeds the horizon {self.horizon} of model {self.model_id!r}"
            )
        if self._a.shape[0] <= n:
            with self._lock:
                have = self._a.shape[0]
                if have <= n:
                    upto = min(self.horizon, max(n, 2 * have, _BLOCK))
                    idx = range(have, upto + 1)
                    a_new = np.array([float(self._a_fn(k)) for k in idx])
                    b_new = np.array([float(self._b_fn(k)) for k in idx])
                    if np.any(a_new <= 0) or not np.all(np.isfinite(a_new)):
                        raise ValueError(f"model {self.model_id!r} produced a_n <= 0")
                    self._a = np.concatenate([self._a, a_new])
                    self._b = np.concatenate([self._b, b_new])
        return self._a, self._b

    def a(self, n: int) -> float:
        return float(self.arrays(n)[0][n])

    def b(self, n: int) -> float:
        return float(self.arrays(n)[1][n])

    # --- model constructors -------------------------------------------------

    @classmethod
    def free(cls) -> "JacobiParams":
        """``a_n = 1``, ``b_n = 0``: the semicircle law on ``[-2, 2]``."""
        return cls(lambda n: 1.0, lambda n: 0.0, "free-jacobi")

    @classmethod
    def chebyshev(cls) -> "JacobiParams":
        """First-kind Chebyshev weight ``1/(pi sqrt(1 - x^2))`` on ``[-1, 1]``."""
        return cls(
            lambda n: math.sqrt(0.5) if n == 1 else 0.5,
            lambda n: 0.0,
            "chebyshev",
        )

    @classmethod
    def constant(cls, a: float, b: float) -> "JacobiParams":
        if a <= 0:
            raise ValueError("a must be positive")
        return cls(lambda n: a, lambda n: b, f"constant:{a!r},{b!r}")

    @classmethod
    def free_b1(cls, b1: float) -> "JacobiParams":
        """Free parameters with ``b_1`` replaced; ``|b1| > 1`` adds an atom."""
        return cls(lambda n: 1.0, lambda n: b1 if n == 1 else 0.0, f"free-b1:{b1!r}")

    @classmethod
    def from_sequences(
        cls, a: Sequence[float], b: Sequence[float], model_id: str = "list"
    ) -> "JacobiParams":
        """Finite parameter lists ``a_1..a_N``, ``b_1..b_N``."""
        a = [float(v) for v in a]
        b = [float(v) for v in b]
        if len(a) != len(b):
            raise ValueError("a and b must have equal length")
        return cls(lambda n: a[n - 1], lambda n: b[n - 1], model_id, horizon=len(a))

    @classmethod
    def random_bounded(
        cls,
        seed: int,
        a_range: tuple[float, float] = (0.5, 1.5),
        b_range: tuple[float, float] = (-1.0, 1.0),
        horizon: int = 10**6,
    ) -> "JacobiParams":
        """Uniform random parameters, reproducible index by index.

        Each block of 1024 indices draws from its own child seed, so the
        value at a given index does not depend on how far the sequence has
        been expanded.
        """
        root = np.random.SeedSequence(seed)
        cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

        def block(k: int) -> tuple[np.ndarray, np.ndarray]:
            if k not in cache:
                child = np.random.SeedSequence(root.entropy, spawn_key=(k,))
                rng = np.random.default_rng(child)
                cache[k] = (
                    rng.uniform(*a_range, size=_BLOCK),
                    rng.uniform(*b_range, size=_BLOCK),
                )
            return cache[k]

        def a_fn(n: int) -> float:
            return float(block((n - 1) // _BLOCK)[0][(n - 1) % _BLOCK])

        def b_fn(n: int) -> float:
            return float(block((n - 1) // _BLOCK)[1][(n - 1) % _BLOCK])

        return cls(a_fn, b_fn, f"random:{seed}", horizon=horizon)

    @classmethod
    def from_discrete(
        cls, atoms: Sequence[float], weights: Sequence[float], model_id: str = "discrete"
    ) -> "JacobiParams":
        """Parameters of a finitely supported measure by the Lanczos process.

        A measure with ``N`` atoms has ``N`` orthonormal polynomials
        ``p_0..p_{N-1}``, so the horizon is ``N - 1``.
        """
        x = np.asarray(atoms, dtype=float)
        wts = np.asarray(weights, dtype=float)
        if x.ndim != 1 or x.shape != wts.shape or len(x) < 2:
            raise ValueError("need at least two atoms with matching weights")
        if np.any(wts <= 0):
            raise ValueError("weights must be positive")
        if len(np.unique(x)) != len(x):
            raise ValueError("atoms must be distinct")
        wts = wts / wts.sum()
        size = len(x)
        basis = np.zeros((size, size))
        basis[:, 0] = np.sqrt(wts)
        a_vals, b_vals = [], []
        for k in range(size):
            v = basis[:, k]
            b_vals.append(float(v @ (x * v)))
            if k == size - 1:
                break
            r = x * v - b_vals[-1] * v
            if k > 0:
                r -= a_vals[-1] * basis[:, k - 1]
            # full reorthogonalization keeps the small problem exact
            for _ in range(2):
                r -= basis[:, : k + 1] @ (basis[:, : k + 1].T @ r)
            a_vals.append(float(np.linalg.norm(r)))
            basis[:, k + 1] = r / a_vals[-1]
        a_vals.append(1.0)  # placeholder beyond the horizon, never used
        return cls(
            lambda n: a_vals[n - 1],
            lambda n: b_vals[n - 1],
            model_id,
            horizon=size - 1,
        )


@dataclass(frozen=True)
class PolyPair:
    """Values ``p_0..p_n`` and ``q_0..q_n`` at one point ``z``."""

    p: np.ndarray
    q: np.ndarray
    z: complex

    @property
    def n(self) -> int:
        return len(self.p) - 1


def eval_polys(params: JacobiParams, n: int, z: complex) -> PolyPair:
    if n < 0:
        raise ValueError("n must be nonnegative")
    a, b = params.arrays(n)
    p, q = kernels.jacobi_polys(a, b, n, complex(z))
    return PolyPair(p=p, q=q, z=complex(z))


def transfer_matrix(params: JacobiParams, n: int, z: complex) -> np.ndarray:
    """``B(n, z) = A(a_n, b_n; z) ... A(a_1, b_1; z)``, read off the polynomials."""
    pp = eval_polys(params, n, z)
    if n == 0:
        return I2.copy()
    an = params.a(n)
    return np.array(
        [[pp.p[n], -pp.q[n]], [an * pp.p[n - 1], -an * pp.q[n - 1]]], dtype=complex
    )


def jacobi_transfer(params: JacobiParams, n: int, z: complex) -> np.ndarray:
    """The j-monotonic family ``T(n, z) = sigma B(n, z) sigma``."""
    return SIGMA @ transfer_matrix(params, n, z) @ SIGMA


def _split_index(L: float) -> tuple[int, float]:
    if L < 0 or not math.isfinite(L):
        raise ValueError("L must be finite and nonnegative")
    n = int(math.floor(L))
    return n, float(L - n)


def _as_matrix(k: Sequence[complex]) -> np.ndarray:
    return np.array([[k[0], k[1]], [k[2], k[3]]], dtype=complex)


def cd_kernel(
    params: JacobiParams, L: float, z: complex, w: complex, mode: str = "sum"
) -> np.ndarray:
    """Matrix Christoffel-Darboux kernel at real index ``L >= 0``.

    ``mode="sum"`` accumulates the (interpolated) sum directly.
    ``mode="jform"`` uses ``(T(n,w)* j T(n,z) - j)/(conj(w) - z)`` and needs
    an integer ``L`` away from the diagonal.  ``mode="auto"`` takes the
    j-form off the diagonal and the sum near it.
    """
    n, frac = _split_index(L)
    z, w = complex(z), complex(w)
    gap = w.conjugate() - z
    if mode == "auto":
        mode = "jform" if (frac == 0.0 and abs(gap) >= DIAGONAL_THRESHOLD) else "sum"
    if mode == "sum":
        a, b = params.arrays(n)
        return _as_matrix(kernels.matrix_kernel(a, b, n, frac, z, w))
    if mode == "jform":
        if frac != 0.0:
            raise ValueError("jform mode requires an integer index")
        if abs(gap) < DIAGONAL_THRESHOLD:
            raise ValueError("use sum mode at diagonal")
        tz = jacobi_transfer(params, n, z)
        tw = jacobi_transfer(params, n, w)
        return (tw.conj().T @ J @ tz - J) / gap
    raise ValueError(f"unknown kernel mode {mode!r}")


def cd_kernel_pairs(
    params: JacobiParams, L: float, zs: Sequence[complex], ws: Sequence[complex]
) -> np.ndarray:
    """Sum-mode kernels for paired points, shape ``(m, 2, 2)``."""
    n, frac = _split_index(L)
    a, b = params.arrays(n)
    flat = kernels.matrix_kernel_pairs(a, b, n, frac, np.asarray(zs), np.asarray(ws))
    return flat.reshape(-1, 2, 2)


def scalar_cd_kernel(params: JacobiParams, L: float, z: complex, w: complex) -> complex:
    """The (1,1) corner ``K_L(z, w)``, the classical CD kernel."""
    return complex(cd_kernel(params, L, z, w)[0, 0])


def tau_scale(params: JacobiParams, xi: float, L: float) -> float:
    """Trace of the matrix kernel on the diagonal at real ``xi``."""
    k = cd_kernel(params, L, xi, xi)
    return float((k[0, 0] + k[1, 1]).real)


def interp_M(params: JacobiParams, L: float, xi: float, z: complex) -> np.ndarray:
    """``I + (z - xi) j K_L(z, xi)``; equals ``sigma B(n,xi)^-1 B(n,z) sigma`` at integers."""
    return I2 + (complex(z) - xi) * (J @ cd_kernel(params, L, z, xi))


# --- zeros ------------------------------------------------------------------


@dataclass(frozen=True)
class ZerosNear:
    """Zeros of ``p_n`` around ``xi``, labeled ``... < x_{-1} < xi <= x_0 < ...``.

    ``below[k]`` is the zero labeled ``-(k+1)`` and ``above[k]`` the zero
    labeled ``k``.  ``truncated`` is set when a side had fewer zeros than
    requested.
    """

    xi: float
    n: int
    below: tuple[float, ...]
    above: tuple[float, ...]
    truncated: bool

    def labeled(self) -> dict[int, float]:
        out = {-(k + 1): v for k, v in enumerate(self.below)}
        out.update({k: v for k, v in enumerate(self.above)})
        return dict(sorted(out.items()))


def _gershgorin(a: np.ndarray, b: np.ndarray, n: int) -> float:
    amax = float(np.max(a[1:n])) if n > 1 else 0.0
    return float(np.max(np.abs(b[1 : n + 1]))) + 2.0 * amax


def _bisection_setup(params: JacobiParams, n: int):
    a, b = params.arrays(n)
    width = _gershgorin(a, b, n)
    radius = width * (1.0 + 1e-12) + 1e-300
    tol = 1e-13 * 2.0 * radius
    return a, b, -radius, radius, tol


def zeros_near(params: JacobiParams, n: int, xi: float, count: int) -> ZerosNear:
    """The ``count`` zeros of ``p_n`` nearest ``xi`` on each side."""
    if n < 1 or count < 1:
        raise ValueError("need n >= 1 and count >= 1")
    a, b, lo, hi, tol = _bisection_setup(params, n)
    xi = float(xi)
    n_below = kernels.sturm_count(a, b, n, xi)
    below_idx = [n_below - 1 - k for k in range(count) if n_below - 1 - k >= 0]
    above_idx = [n_below + k for k in range(count) if n_below + k < n]
    below = tuple(kernels.bisect_eigenvalue(a, b, n, k, lo, hi, tol) for k in below_idx)
    above = tuple(kernels.bisect_eigenvalue(a, b, n, k, lo, hi, tol) for k in above_idx)
    truncated = len(below) < count or len(above) < count
    return ZerosNear(xi=xi, n=n, below=below, above=above, truncated=truncated)


def jacobi_zeros(params: JacobiParams, n: int) -> np.ndarray:
    """All zeros of ``p_n`` in increasing order."""
    a, b, lo, hi, tol = _bisection_setup(params, n)
    return np.array([kernels.bisect_eigenvalue(a, b, n, k, lo, hi, tol) for k in range(n)])


def gauss_quadrature(params: JacobiParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (zeros of ``p_n``) and Christoffel weights ``1 / K_n(x_k, x_k)``."""
    nodes = jacobi_zeros(params, n)
    a, b = params.arrays(n)
    weights = np.array(
        [1.0 / kernels.matrix_kernel(a, b, n, 0.0, x, x)[0].real for x in nodes]
    )
    return nodes, weights


def jacobi_from_id(model_id: str) -> JacobiParams:
    """Resolve ``free-jacobi``, ``chebyshev``, ``constant:<a>,<b>``,
    ``free-b1:<b>``, ``random:<seed>`` or ``discrete:<x1,x2,...>`` (equal weights)."""
    head, _, body = model_id.partition(":")
    try:
        if model_id == "free-jacobi":
            return JacobiParams.free()
        if model_id == "chebyshev":
            return JacobiParams.chebyshev()
        if head == "constant":
            a, b = (float(v) for v in body.split(","))
            return JacobiParams.constant(a, b)
        if head == "free-b1":
            return JacobiParams.free_b1(float(body))
        if head == "random":
            return JacobiParams.random_bounded(int(body))
        if head == "discrete":
            atoms = [float(v) for v in body.split(",") if v.strip()]
            return JacobiParams.from_discrete(atoms, [1.0] * len(atoms), model_id)
    except ValueError as exc:
        raise ValueError(f"bad parameters in model id {model_id!r}: {exc}") from exc
    raise KeyError(f"unknown Jacobi model {model_id!r}")
