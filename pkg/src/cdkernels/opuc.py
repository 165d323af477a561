"""Orthogonal polynomials on the unit circle and their canonical-system embedding."""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ._backend import kernels
from .errors import DomainError, HorizonError, ScaleError
from .mat2 import CAYLEY, I2, J, SWAP, inv2
from .tables import KernelTable

__all__ = [
    "VerblunskyParams",
    "CaratheodoryModel",
    "SzegoResult",
    "szego_step",
    "szego_eval",
    "opuc_kernel",
    "caratheodory_eval",
    "caratheodory_from_verblunsky",
    "embed_transfer",
    "embedded_kernel",
    "embedded_scalar_kernel",
    "opuc_universality",
    "geometric_limit",
    "get_verblunsky",
    "get_caratheodory",
    "OPUC_DIAGONAL_THRESHOLD",
]

OPUC_DIAGONAL_THRESHOLD = 1e-8
_CAYLEY_INV = inv2(CAYLEY)


class VerblunskyParams:
    """Verblunsky coefficients ``alpha_0, alpha_1, ...`` inside the unit disk."""

    def __init__(self, alpha: Callable[[int], complex], model_id: str, horizon: int = 10**7):
        self._fn = alpha
        self.model_id = model_id
        self.horizon = int(horizon)
        self._cache = np.zeros(0, dtype=complex)
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"VerblunskyParams({self.model_id!r})"

    def arrays(self, n: int) -> np.ndarray:
        """``alpha_0 .. alpha_{n-1}`` as a contiguous complex array."""
        if n > self.horizon:
            raise HorizonError(f"index {n} exceeds the horizon {self.horizon} of {self.model_id!r}")
        with self._lock:
            have = len(self._cache)
            if n > have:
                upto = min(self.horizon, max(n, 2 * have, 1024))
                new = np.array([complex(self._fn(k)) for k in range(have, upto)], dtype=complex)
                if len(new) and np.max(np.abs(new)) >= 1:
                    raise ValueError(f"model {self.model_id!r} produced |alpha| >= 1")
                self._cache = np.ascontiguousarray(np.concatenate([self._cache, new]))
            return self._cache[:n]

    def alpha(self, k: int) -> complex:
        return complex(self.arrays(k + 1)[k])

    @classmethod
    def free(cls) -> "VerblunskyParams":
        return cls(lambda k: 0j, "opuc-free")

    @classmethod
    def constant(cls, alpha: complex) -> "VerblunskyParams":
        alpha = complex(alpha)
        if abs(alpha) >= 1:
            raise ValueError("|alpha| must be below 1")
        return cls(lambda k: alpha, f"opuc-constant:{alpha!r}")

    @classmethod
    def from_list(cls, values: Sequence[complex]) -> "VerblunskyParams":
        """Listed coefficients followed by zeros."""
        vals = [complex(v) for v in values]
        if any(abs(v) >= 1 for v in vals):
            raise ValueError("|alpha| must be below 1")
        ident = "opuc-list:" + ",".join(repr(v) for v in vals)
        return cls(lambda k: vals[k] if k < len(vals) else 0j, ident)

    @classmethod
    def random(cls, seed: int, radius: float = 0.8, horizon: int = 10**5) -> "VerblunskyParams":
        rng = np.random.default_rng(seed)
        r = radius * np.sqrt(rng.random(horizon))
        vals = r * np.exp(2j * np.pi * rng.random(horizon))
        return cls(lambda k: vals[k], f"opuc-random:{seed}", horizon=horizon)


def _parse_complex(text: str) -> complex:
    return complex(text.strip().replace(" ", ""))


def get_verblunsky(model_id: str) -> VerblunskyParams:
    if model_id == "opuc-free":
        return VerblunskyParams.free()
    if model_id.startswith("opuc-constant:"):
        return VerblunskyParams.constant(_parse_complex(model_id.split(":", 1)[1]))
    if model_id.startswith("opuc-list:"):
        body = model_id.split(":", 1)[1]
        return VerblunskyParams.from_list([_parse_complex(v) for v in body.split(",") if v.strip()])
    raise KeyError(f"unknown Verblunsky model {model_id!r}")


# --- Szego recursion --------------------------------------------------------


def szego_step(alpha: complex, z: complex) -> np.ndarray:
    """``A(alpha, z) = [[z, -conj(alpha)], [-alpha z, 1]] / rho`` acting on ``(phi, phi*)``."""
    rho = math.sqrt(1 - abs(alpha) ** 2)
    return np.array([[z, -alpha.conjugate()], [-alpha * z, 1]], dtype=complex) / rho


@dataclass(frozen=True)
class SzegoResult:
    S: np.ndarray
    phi: complex
    phi_star: complex


def szego_eval(params: VerblunskyParams, n: int, z: complex) -> SzegoResult:
    """Szego transfer matrix ``S(n, z)`` and ``phi_n(z)``, ``phi_n*(z)``.

    ``phi_n`` and ``phi_n*`` come from their own two-term recursion;
    ``S (1, 1)^T`` reproduces them and serves as a cross-check.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    z = complex(z)
    alpha = params.arrays(n)
    s = I2.copy()
    for k in range(n):
        s = szego_step(complex(alpha[k]), z) @ s
    phi, phis = kernels.szego_phi(alpha, n, z)
    return SzegoResult(s, complex(phi), complex(phis))


def opuc_kernel(params: VerblunskyParams, n: int, z: complex, w: complex) -> complex:
    """``k_n(z, w) = sum_{j<n} phi_j(z) conj(phi_j(w))``.

    Uses the Christoffel-Darboux form away from ``z conj(w) = 1`` and the
    direct sum near it.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    z, w = complex(z), complex(w)
    alpha = params.arrays(n)
    denom = 1 - z * w.conjugate()
    if abs(denom) > OPUC_DIAGONAL_THRESHOLD:
        pz, pzs = kernels.szego_phi(alpha, n, z)
        pw, pws = kernels.szego_phi(alpha, n, w)
        return (pzs * pws.conjugate() - pz * pw.conjugate()) / denom
    return complex(kernels.opuc_kernel_sum(alpha, n, z, w))


def _opuc_kernel_pairs(params: VerblunskyParams, n: int, zs, ws) -> np.ndarray:
    return kernels.opuc_kernel_pairs(params.arrays(n), n, np.asarray(zs), np.asarray(ws))


# --- Caratheodory functions -------------------------------------------------


@dataclass(frozen=True)
class CaratheodoryModel:
    """``F(z) = int (e^{it} + z)/(e^{it} - z) dmu`` on the unit disk.

    ``boundary`` optionally gives ``g(xi) = lim Re F`` toward ``e^{i xi}``.
    """

    model_id: str
    evaluator: Callable[[complex], complex]
    boundary: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        for r in (0.0, 0.3, 0.7, 0.95):
            for k in range(8):
                z = r * cmath.exp(2j * math.pi * k / 8)
                if self.evaluator(z).real < -1e-12:
                    raise ValueError(f"model {self.model_id!r} has Re F < 0 at {z}")


def caratheodory_eval(model: CaratheodoryModel, z: complex) -> complex:
    z = complex(z)
    if not abs(z) < 1:
        raise DomainError("Caratheodory functions are defined on |z| < 1")
    return complex(model.evaluator(z))


def lebesgue_model() -> CaratheodoryModel:
    """Normalized arc length; ``F = 1`` and ``g = 1``."""
    return CaratheodoryModel("lebesgue", lambda z: 1 + 0j, lambda xi: 1.0)


def discrete_circle_model(angles: Sequence[float], weights: Optional[Sequence[float]] = None) -> CaratheodoryModel:
    th = [float(t) for t in angles]
    w = [1.0 / len(th)] * len(th) if weights is None else [float(v) for v in weights]
    total = sum(w)
    w = [v / total for v in w]
    pts = [cmath.exp(1j * t) for t in th]

    def f(z: complex) -> complex:
        return sum(wk * (p + z) / (p - z) for p, wk in zip(pts, w))

    return CaratheodoryModel("circle-discrete:" + ",".join(repr(t) for t in th), f)


def get_caratheodory(model_id: str) -> CaratheodoryModel:
    if model_id in ("lebesgue", "opuc-free"):
        return lebesgue_model()
    if model_id.startswith("circle-discrete:"):
        return discrete_circle_model([float(v) for v in model_id.split(":", 1)[1].split(",")])
    raise KeyError(f"unknown Caratheodory model {model_id!r}")


def caratheodory_from_verblunsky(params: VerblunskyParams, z: complex, n: int) -> complex:
    """``F = (1 + z f)/(1 - z f)`` with the Schur function ``f`` rebuilt from ``alpha_0..alpha_{n-1}``.

    The continued fraction is closed with ``f_n = 0``, which is exact when
    all later coefficients vanish.
    """
    z = complex(z)
    if not abs(z) < 1:
        raise DomainError("need |z| < 1")
    f = 0j
    for a in reversed(params.arrays(n)):
        a = complex(a)
        f = (a + z * f) / (1 + a.conjugate() * z * f)
    return (1 + z * f) / (1 - z * f)


# --- embedding as a j-monotonic family --------------------------------------


def embed_transfer(params: VerblunskyParams, n: int, z: complex) -> np.ndarray:
    """``T(n, z) = e^{-inz/2} C^-1 swap S(n, e^{iz}) swap C``, unimodular and j-monotonic."""
    z = complex(z)
    s = szego_eval(params, n, cmath.exp(1j * z)).S
    return cmath.exp(-0.5j * n * z) * (_CAYLEY_INV @ SWAP @ s @ SWAP @ CAYLEY)


def _step_form(d: complex) -> np.ndarray:
    """``(D(w)* j D(z) - j)/(conj(w) - z)`` for one embedded step, ``d = conj(w) - z``."""
    if abs(d) < 1e-4:
        # series of (j (cos(d/2) - 1) + I sin(d/2)) / d
        return (-d / 8 + d**3 / 384) * J + (0.5 - d * d / 48 + d**4 / 3840) * I2
    return (J * (cmath.cos(d / 2) - 1) + I2 * cmath.sin(d / 2)) / d


def embedded_kernel(params: VerblunskyParams, n: int, z: complex, w: complex) -> np.ndarray:
    """Matrix kernel of the embedded family; a sum over steps, valid on the diagonal too."""
    z, w = complex(z), complex(w)
    alpha = params.arrays(n)
    step = _step_form(w.conjugate() - z)
    out = np.zeros((2, 2), dtype=complex)
    tz, tw = I2.copy(), I2.copy()
    ez, ew = cmath.exp(1j * z), cmath.exp(1j * w)
    for k in range(n):
        out = out + tw.conj().T @ step @ tz
        a = complex(alpha[k])
        tz = cmath.exp(-0.5j * z) * (_CAYLEY_INV @ SWAP @ szego_step(a, ez) @ SWAP @ CAYLEY) @ tz
        tw = cmath.exp(-0.5j * w) * (_CAYLEY_INV @ SWAP @ szego_step(a, ew) @ SWAP @ CAYLEY) @ tw
    return out


def embedded_scalar_kernel(params: VerblunskyParams, n: int, z: complex, w: complex) -> complex:
    """``K_n(z, w)``: the (1,1) corner of the embedded kernel (j-form off the diagonal)."""
    z, w = complex(z), complex(w)
    gap = w.conjugate() - z
    if abs(gap) < 1e-8:
        return complex(embedded_kernel(params, n, z, w)[0, 0])
    tz, tw = embed_transfer(params, n, z), embed_transfer(params, n, w)
    return complex(((tw.conj().T @ J @ tz - J) / gap)[0, 0])


# --- universality -----------------------------------------------------------


def _sinc(u: complex) -> complex:
    if abs(u) < 1e-4:
        u2 = u * u
        return 1 - u2 / 6 + u2 * u2 / 120
    return cmath.sin(u) / u


def _expm1(x: complex) -> complex:
    # e^{a+ib} - 1 without cancellation for small arguments
    a, b = x.real, x.imag
    return complex(
        math.expm1(a) * math.cos(b) - 2 * math.sin(b / 2) ** 2, math.exp(a) * math.sin(b)
    )


def geometric_limit(n: int, z: complex, w: complex) -> complex:
    """Exact rescaled value for ``alpha = 0``, ``xi = 0``, ``g = 1`` at finite ``n``.

    With ``u = z - conj(w)`` the rescaled kernel is
    ``e^{-iu/2} (e^{iu} - 1) / (n (e^{iu/n} - 1))``, tending to
    ``sin(u/2)/(u/2)``.
    """
    u = complex(z) - complex(w).conjugate()
    if abs(u) < 1e-12:
        return 1 + 0j
    return cmath.exp(-0.5j * u) * _expm1(1j * u) / (n * _expm1(1j * u / n))


def opuc_universality(
    params: VerblunskyParams,
    xi: float,
    g: float,
    n: int,
    grid: Optional[Sequence[tuple[complex, complex]]] = None,
    threshold: float = 1e-8,
) -> KernelTable:
    """Rescaled OPUC kernel with its phase prefactor, compared with ``sin(u/2)/(u/2)``.

    ``meta["sup_error"]`` is the distance to that limit.
    """
    from .universality import default_grid

    if not g > 0:
        raise ValueError("g must be positive")
    grid = default_grid() if grid is None else list(grid)
    base = cmath.exp(1j * xi)
    k0 = float(opuc_kernel(params, n, base, base).real)
    if not k0 > threshold:
        raise ScaleError(f"scale not yet developed: k_n = {k0:.3g}")
    s = 1.0 / (g * k0)
    zs = np.array([cmath.exp(1j * (xi + z * s)) for z, _ in grid])
    ws = np.array([cmath.exp(1j * (xi + w * s)) for _, w in grid])
    raw = _opuc_kernel_pairs(params, n, zs, ws)
    vals = np.array(
        [cmath.exp(-1j * n * (z - w.conjugate()) * s / 2) * v / k0 for v, (z, w) in zip(raw, grid)]
    )
    for i, (z, w) in enumerate(grid):
        if z == 0 and w == 0:
            vals[i] = 1.0
    errs = [abs(v - _sinc((w.conjugate() - z) / 2)) for v, (z, w) in zip(vals, grid)]
    return KernelTable(
        xi=float(xi), scale=k0, index=float(n), grid=grid, values=vals,
        model_id=params.model_id,
        meta={"target": "sinc-half", "g": float(g), "sup_error": float(max(errs))},
    )
