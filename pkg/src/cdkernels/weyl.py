"""Weyl m-functions: closed-form models, Weyl disks and boundary limits."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, Sequence

import numpy as np

from .errors import DomainError, StallError
from .mat2 import SpherePoint, chordal_distance, mobius_apply
from .oprl import JacobiParams, jacobi_transfer

__all__ = [
    "ModelM",
    "MValue",
    "WeylDisk",
    "BoundaryLimit",
    "TransferSystem",
    "JacobiSystem",
    "m_eval",
    "weyl_disk",
    "weyl_disk_three_point",
    "m_from_transfer",
    "boundary_limit",
    "point_mass_mass",
    "free_jacobi_m",
    "get_model",
    "list_models",
    "LOG_PERIODIC_COUPLING",
]

LOG_PERIODIC_COUPLING = (math.pi / 2) * math.exp(-math.pi / 2)


# --- models -----------------------------------------------------------------


@dataclass(frozen=True)
class ModelM:
    """An analytic map of the upper half-plane into its closure.

    ``boundary`` optionally gives the known boundary data
    ``xi -> (eta, f_mu)``.  ``min_y`` is the smallest imaginary part at
    which the evaluator is reliable (numerical models only).
    ``stieltjes`` marks models that are Stieltjes transforms of
    probability measures, whose branch is pinned by ``m(z) ~ -1/z``.
    """

    model_id: str
    evaluator: Callable[[complex], complex]
    boundary: Optional[Callable[[float], tuple[complex, float]]] = None
    stieltjes: bool = True
    min_y: float = 0.0
    params: Optional[JacobiParams] = field(default=None, compare=False)

    def __post_init__(self):
        _check_model(self)

    def __call__(self, z: complex) -> complex:
        return m_eval(self, z)


_CHECK_GRID = [complex(x, y) for x in (-3.0, -0.7, 0.0, 0.4, 2.5) for y in (0.05, 0.6, 3.0)]


def _check_model(model: ModelM) -> None:
    if model.min_y > 0:
        return  # numerical models are checked by their own tests
    for z in _CHECK_GRID:
        if model.evaluator(z).imag < -1e-12:
            raise ValueError(f"model {model.model_id!r} leaves the closed upper half-plane at {z}")
    if model.stieltjes:
        z = 1e6j
        if abs(model.evaluator(z) * z + 1) > 1e-3:
            raise ValueError(f"model {model.model_id!r} violates m(z) ~ -1/z at infinity")


def m_eval(model: ModelM, z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"m is defined on the upper half-plane; got Im z = {z.imag}")
    return complex(model.evaluator(z))


def free_jacobi_m(z: complex) -> complex:
    """``(-z + sqrt(z^2 - 4))/2`` on the branch with ``|m| < 1``."""
    z = complex(z)
    s = cmath.sqrt(z * z - 4)
    r1, r2 = (-z + s) / 2, (-z - s) / 2
    big = r1 if abs(r1) >= abs(r2) else r2
    # the two roots multiply to 1; dividing avoids cancellation for large |z|
    return 1 / big


def _free_boundary(xi: float) -> tuple[complex, float]:
    if abs(xi) < 2:
        root = math.sqrt(4 - xi * xi)
        return complex(-xi / 2, root / 2), root / (2 * math.pi)
    return free_jacobi_m(complex(xi, 0.0)) if xi != 0 else 0j, 0.0


def _chebyshev_m(z: complex) -> complex:
    return -1 / (cmath.sqrt(z - 1) * cmath.sqrt(z + 1))


def _chebyshev_boundary(xi: float) -> tuple[complex, float]:
    if abs(xi) < 1:
        root = math.sqrt(1 - xi * xi)
        return complex(0.0, 1 / root), 1 / (math.pi * root)
    return -1 / (math.copysign(1.0, xi) * math.sqrt(xi * xi - 1)), 0.0


def _log_periodic_m(z: complex) -> complex:
    return 1j * cmath.exp(LOG_PERIODIC_COUPLING * cmath.sin(cmath.log(-1j * z)))


def discrete_model(atoms: Sequence[float], weights: Optional[Sequence[float]] = None) -> ModelM:
    """Stieltjes transform of ``sum_k w_k delta_{x_k}`` (equal weights by default)."""
    x = [float(v) for v in atoms]
    if weights is None:
        weights = [1.0 / len(x)] * len(x)
    w = [float(v) for v in weights]
    total = sum(w)
    if len(w) != len(x) or total <= 0 or min(w) <= 0:
        raise ValueError("weights must be positive and match the atoms")
    w = [v / total for v in w]

    def m(z: complex) -> complex:
        return sum(wk / (xk - z) for xk, wk in zip(x, w))

    ident = "discrete:" + ",".join(repr(v) for v in x)
    # one atom has no orthonormal polynomial beyond p_0, hence no Jacobi parameters
    params = JacobiParams.from_discrete(x, w, ident) if len(x) > 1 else None
    return ModelM(ident, m, params=params)


def mixture(parts: Sequence[tuple[float, ModelM]], model_id: str = "mixture") -> ModelM:
    """Convex combination of Stieltjes models."""
    total = sum(wt for wt, _ in parts)
    parts = [(wt / total, mod) for wt, mod in parts]

    def m(z: complex) -> complex:
        return sum(wt * mod.evaluator(z) for wt, mod in parts)

    return ModelM(model_id, m)


def free_b1_model(b1: float) -> ModelM:
    """Free parameters with ``b_1`` replaced; an atom appears when ``|b1| > 1``."""

    def m(z: complex) -> complex:
        return 1 / (b1 - z - free_jacobi_m(z))

    return ModelM(f"free-b1:{b1!r}", m, params=JacobiParams.free_b1(b1))


def _schrodinger_free_model() -> ModelM:
    from .cansys import schrodinger_system

    system = schrodinger_system(0.0, 0.0, horizon=1e12)

    def m(z: complex) -> complex:
        return m_from_transfer(system, z, tol=1e-11).value

    return ModelM("schrodinger-free", m, stieltjes=False, min_y=2.0**-24)


_BUILTIN: dict[str, Callable[[], ModelM]] = {
    "free-jacobi": lambda: ModelM(
        "free-jacobi", free_jacobi_m, _free_boundary, params=JacobiParams.free()
    ),
    "chebyshev": lambda: ModelM(
        "chebyshev", _chebyshev_m, _chebyshev_boundary, params=JacobiParams.chebyshev()
    ),
    "log-periodic": lambda: ModelM("log-periodic", _log_periodic_m, stieltjes=False),
    "schrodinger-free": _schrodinger_free_model,
}


def list_models() -> list[str]:
    return sorted(_BUILTIN) + ["discrete:<x1,x2,...>", "free-b1:<b>"]


def get_model(model_id: str) -> ModelM:
    """Resolve a model id such as ``"free-jacobi"`` or ``"discrete:0,1"``."""
    if model_id in _BUILTIN:
        return _BUILTIN[model_id]()
    if model_id.startswith("discrete:"):
        body = model_id.split(":", 1)[1]
        try:
            atoms = [float(v) for v in body.split(",") if v.strip()]
        except ValueError as exc:
            raise ValueError(f"bad atom list in {model_id!r}") from exc
        return discrete_model(atoms)
    if model_id.startswith("free-b1:"):
        return free_b1_model(float(model_id.split(":", 1)[1]))
    raise KeyError(f"unknown m-function model {model_id!r}")


# --- Weyl disks -------------------------------------------------------------


@dataclass(frozen=True)
class WeylDisk:
    """Closed Weyl disk, or a closed half-plane when ``half_plane`` is set.

    The region is ``{w : A|w|^2 + 2 Re(conj(w) B) + C >= 0}``; ``form``
    stores ``(A, B, C)``.
    """

    center: Optional[complex]
    radius: float
    half_plane: bool
    form: tuple[float, complex, float]

    def contains(self, w: complex, slack: float = 0.0) -> bool:
        if self.half_plane:
            a, b, c = self.form
            return 2 * (complex(w).conjugate() * b).real + c >= -slack * (abs(b) + abs(c))
        return abs(complex(w) - self.center) <= self.radius * (1 + 1e-9) + slack


def _hermitian_form(t: np.ndarray) -> tuple[float, complex, float]:
    # u* (T* G T) u = Im(v1 conj v2) for v = T u, with u = (w, 1)
    g = np.array([[0, 0.5j], [-0.5j, 0]], dtype=complex)
    q = t.conj().T @ g @ t
    return float(q[0, 0].real), complex(q[0, 1]), float(q[1, 1].real)


def _check_unimodular(t: np.ndarray) -> None:
    d = t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0]
    scale = max(1.0, abs(t[0, 0] * t[1, 1]) + abs(t[0, 1] * t[1, 0]))
    if abs(d - 1) > 1e-8 * scale:
        raise ValueError(f"transfer matrix is not unimodular (det = {d})")


def weyl_disk(t: np.ndarray) -> WeylDisk:
    """``{w : T w in closure of C+}`` as a disk or half-plane.

    Computed from the Hermitian form of ``T``; for unimodular ``T`` the
    radius is ``1/(2|A|)`` with ``A = Im(T11 conj T21)``, which stays
    accurate when the disk is far below the spacing of floating-point
    numbers near its center.
    """
    t = np.asarray(t, dtype=complex)
    _check_unimodular(t)
    a, b, c = _hermitian_form(t)
    size = abs(a) + abs(b) + abs(c)
    if abs(a) <= 1e-14 * size:
        return WeylDisk(None, math.inf, True, (0.0, b, c))
    if a > 0:
        raise ValueError("transfer matrix is not j-monotonic at this point")
    return WeylDisk(-b / a, 1.0 / (2.0 * abs(a)), False, (a, b, c))


def _circumcircle(p1: complex, p2: complex, p3: complex) -> Optional[tuple[complex, float]]:
    d = 2 * (p1.real * (p2.imag - p3.imag) + p2.real * (p3.imag - p1.imag) + p3.real * (p1.imag - p2.imag))
    span = max(abs(p1 - p2), abs(p2 - p3), abs(p1 - p3))
    if abs(d) <= 1e-12 * span * span:
        return None
    s1, s2, s3 = abs(p1) ** 2, abs(p2) ** 2, abs(p3) ** 2
    ux = (s1 * (p2.imag - p3.imag) + s2 * (p3.imag - p1.imag) + s3 * (p1.imag - p2.imag)) / d
    uy = (s1 * (p3.real - p2.real) + s2 * (p1.real - p3.real) + s3 * (p2.real - p1.real)) / d
    center = complex(ux, uy)
    return center, abs(p1 - center)


def weyl_disk_three_point(t: np.ndarray) -> WeylDisk:
    """Weyl disk from the images of ``0, 1, inf`` under ``T^-1``.

    Cross-check for :func:`weyl_disk`; usable only while the disk is
    large compared with rounding near its center.
    """
    t = np.asarray(t, dtype=complex)
    _check_unimodular(t)
    tinv = np.array([[t[1, 1], -t[0, 1]], [-t[1, 0], t[0, 0]]], dtype=complex)
    images = [mobius_apply(tinv, SpherePoint.from_complex(v)) for v in (0, 1)]
    images.append(mobius_apply(tinv, SpherePoint.infinity()))
    pts = [p.to_complex() for p in images]
    form = _hermitian_form(t)
    if any(p.is_infinite for p in images):
        return WeylDisk(None, math.inf, True, (0.0, form[1], form[2]))
    circle = _circumcircle(*pts)
    if circle is None:
        return WeylDisk(None, math.inf, True, (0.0, form[1], form[2]))
    center, radius = circle
    inner = mobius_apply(tinv, SpherePoint.from_complex(1j))
    if inner.is_infinite or abs(inner.to_complex() - center) > radius:
        raise ValueError("transfer matrix is not j-monotonic at this point")
    return WeylDisk(center, radius, False, form)


# --- m from transfer matrices -----------------------------------------------


class TransferSystem(Protocol):
    horizon: float

    def transfer(self, L: float, z: complex) -> np.ndarray: ...


@dataclass(frozen=True)
class JacobiSystem:
    """Adapter exposing the Jacobi family ``T(n, z)`` with integer steps."""

    params: JacobiParams
    horizon: float = 10**4
    integer_steps: bool = True

    def transfer(self, L: float, z: complex) -> np.ndarray:
        return jacobi_transfer(self.params, int(L), z)


@dataclass(frozen=True)
class MValue:
    value: complex
    radius: float
    L: float


def m_from_transfer(
    system: TransferSystem,
    z: complex,
    tol: float = 1e-10,
    L_start: float = 1.0,
    growth: float = 1.5,
) -> MValue:
    """Center of the first Weyl disk of radius below ``tol``.

    ``L`` grows geometrically from ``L_start`` up to the system horizon.
    The returned radius bounds the distance to the true m-value.
    """
    z = complex(z)
    if not z.imag > 0:
        raise DomainError("m_from_transfer needs Im z > 0")
    integer = getattr(system, "integer_steps", False)
    L = float(L_start)
    last = math.inf
    while True:
        if L > system.horizon:
            L = float(system.horizon)
        disk = weyl_disk(system.transfer(L, z))
        if not disk.half_plane:
            last = disk.radius
            if disk.radius < tol:
                return MValue(disk.center, disk.radius, L)
        if L >= system.horizon:
            raise StallError(
                f"Weyl disk radius {last:.3g} still above {tol:.3g} at L = {L:g} "
                "(limit-circle-like stall)",
                last,
            )
        nxt = L * growth
        L = float(math.ceil(nxt)) if integer else nxt
        if integer and L <= nxt - 1:
            L += 1


# --- boundary behaviour -----------------------------------------------------


@dataclass(frozen=True)
class BoundaryLimit:
    """Outcome of probing ``m(xi + i y)`` as ``y`` decreases.

    ``eta`` and ``f_mu`` are ``None``/NaN when the values did not settle;
    ``amplitude`` is the chordal diameter of the second half of the
    values, which stays large for oscillating boundary behaviour.
    """

    xi: float
    eta: Optional[SpherePoint]
    f_mu: float
    converged: bool
    amplitude: float
    boundary_real: bool
    last: complex
    values: tuple[complex, ...]
    ys: tuple[float, ...]
    differences: tuple[float, ...]


def default_schedule(k_max: int = 40) -> list[float]:
    return [2.0**-k for k in range(1, k_max + 1)]


def _is_geometric_decay(diffs: Sequence[float], window: int = 5, factor: float = 0.9) -> bool:
    tail = list(diffs[-window:])
    if len(tail) < window:
        return False
    for d0, d1 in zip(tail, tail[1:]):
        if d1 > factor * d0 and d1 > 1e-15:
            return False
    return True


def boundary_limit(
    model: ModelM,
    xi: float,
    schedule: Optional[Sequence[float]] = None,
    tol: float = 1e-6,
    angle: float = math.pi / 2,
) -> BoundaryLimit:
    """Limit of ``m`` at ``xi`` along the ray ``xi + y e^{i angle}``."""
    ys = list(default_schedule() if schedule is None else schedule)
    if model.min_y > 0:
        ys = [y for y in ys if y >= model.min_y]
    if len(ys) < 4 or any(y1 >= y0 for y0, y1 in zip(ys, ys[1:])) or ys[-1] <= 0:
        raise ValueError("schedule must be strictly decreasing, positive, with at least 4 points")
    direction = cmath.exp(1j * angle)
    values = [m_eval(model, xi + y * direction) for y in ys]
    points = [SpherePoint.from_complex(v) for v in values]
    diffs = [chordal_distance(p, q) for p, q in zip(points, points[1:])]
    tail = points[len(points) // 2 :]
    amplitude = max(chordal_distance(p, q) for p in tail for q in tail)
    converged = _is_geometric_decay(diffs) and diffs[-1] < tol
    last = values[-1]
    if not converged:
        return BoundaryLimit(
            xi, None, math.nan, False, amplitude, False, last, tuple(values), tuple(ys), tuple(diffs)
        )
    eta = points[-1]
    boundary_real = eta.is_infinite or abs(last.imag) < tol
    f_mu = 0.0 if boundary_real else last.imag / math.pi
    return BoundaryLimit(
        xi, eta, f_mu, True, amplitude, boundary_real, last, tuple(values), tuple(ys), tuple(diffs)
    )


def sector_probe(
    model: ModelM, xi: float, alpha: float = math.pi / 4, **kwargs
) -> list[BoundaryLimit]:
    """Boundary limits along the rays at angles ``alpha``, ``pi/2``, ``pi - alpha``."""
    return [boundary_limit(model, xi, angle=ang, **kwargs) for ang in (alpha, math.pi / 2, math.pi - alpha)]


def point_mass_mass(model: ModelM, xi: float, k_max: int = 40) -> float:
    """``lim eps Im m(xi + i eps)``, the mass of the measure at ``xi``.

    Evaluated along ``eps = 2^-k`` and extrapolated with one Richardson
    step, which removes the linear term of an absolutely continuous part.
    """
    eps = [e for e in default_schedule(k_max) if e >= model.min_y]
    g = [e * m_eval(model, xi + 1j * e).imag for e in eps[-2:]]
    return 2 * g[1] - g[0]
