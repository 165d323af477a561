"""Canonical (Hamiltonian) systems ``j dT/dx = (-z A(x) + B(x)) T``.

Systems are lists of segments.  Constant segments are stepped exactly with
the closed-form exponential of the trace-free generator
``G = j (z A - B)``; callable segments use fixed-step RK4 with step
doubling and a Richardson error estimate.
"""

from __future__ import annotations

import bisect
import cmath
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.optimize import brentq

from .errors import IntegrationError, ReparametrizationError
from .mat2 import I2, J, SpherePoint, expm_tracefree, inv2
from .oprl import JacobiParams, eval_polys

__all__ = [
    "Segment",
    "HamiltonianSystem",
    "TransferReport",
    "RingObjects",
    "GaugeResult",
    "TraceReparam",
    "integrate_transfer",
    "cansys_kernel",
    "ring_objects",
    "ring_system",
    "jacobi_embedding",
    "gauge_pdb",
    "trace_reparam",
    "rescale_family",
    "triangular_shift",
    "schrodinger_system",
    "schrodinger_solutions",
    "rotation",
    "system_from_config",
]

MatrixLike = Union[np.ndarray, Callable[[float], np.ndarray]]

_ZERO = np.zeros((2, 2))
_MAX_REFINE = 14
_VAN_LOAN_NORM = 2.0  # largest |G| * step used in one block exponential


def _real_sym(m, what: str) -> np.ndarray:
    m = np.asarray(m)
    if np.iscomplexobj(m):
        if np.max(np.abs(m.imag)) > 1e-12:
            raise ValueError(f"{what} must be real")
        m = m.real
    m = np.array(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError(f"{what} must be 2x2")
    if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise ValueError(f"{what} must be symmetric")
    return m


def _check_psd(m: np.ndarray, what: str) -> None:
    if np.linalg.eigvalsh(m)[0] < -1e-12 * max(1.0, np.trace(m)):
        raise ValueError(f"{what} must be positive semidefinite")


@dataclass(frozen=True)
class Segment:
    """A stretch of the evolution variable with coefficients ``A``, ``B``.

    ``A`` and ``B`` are 2x2 real symmetric matrices, or callables of the
    absolute position ``x``.  ``B=None`` means ``B = 0``.  ``length`` may
    be ``inf`` for the last segment.
    """

    length: float
    A: MatrixLike
    B: Optional[MatrixLike] = None
    smooth: bool = True
    label: str = ""

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("segment length must be positive")
        if not callable(self.A):
            a = _real_sym(self.A, "A")
            _check_psd(a, "A")
            a.setflags(write=False)
            object.__setattr__(self, "A", a)
        if self.B is not None and not callable(self.B):
            b = _real_sym(self.B, "B")
            b.setflags(write=False)
            object.__setattr__(self, "B", b)

    @property
    def is_constant(self) -> bool:
        return not callable(self.A) and not callable(self.B)

    @property
    def has_b(self) -> bool:
        if self.B is None:
            return False
        if callable(self.B):
            return True
        return bool(np.any(self.B != 0))

    @property
    def is_nilpotent(self) -> bool:
        """Constant, ``B = 0`` and ``rank A <= 1``: the generator squares to 0."""
        if not self.is_constant or self.has_b:
            return False
        a = self.A
        return abs(a[0, 0] * a[1, 1] - a[0, 1] ** 2) <= 1e-14 * max(np.trace(a), 1e-300) ** 2

    def A_at(self, x: float) -> np.ndarray:
        return self.A(x) if callable(self.A) else self.A

    def B_at(self, x: float) -> np.ndarray:
        if self.B is None:
            return _ZERO
        return self.B(x) if callable(self.B) else self.B

    def generator(self, x: float, z: complex) -> np.ndarray:
        return J @ (z * self.A_at(x) - self.B_at(x))


class HamiltonianSystem:
    """Segments laid end to end from ``x = 0``.

    ``horizon`` caps the evolution variable (default 1e3 for continuum
    systems, 1e4 for Jacobi embeddings); ``tol`` is the integrator
    tolerance per unit length.
    """

    def __init__(
        self,
        segments: Sequence[Segment],
        horizon: float = 1e3,
        tol: float = 1e-10,
        model_id: str = "canonical",
        integer_steps: bool = False,
        meta: Optional[dict] = None,
    ):
        if not segments:
            raise ValueError("a system needs at least one segment")
        self.segments = tuple(segments)
        for seg in self.segments[:-1]:
            if not math.isfinite(seg.length):
                raise ValueError("only the last segment may have infinite length")
        starts = [0.0]
        for seg in self.segments[:-1]:
            starts.append(starts[-1] + seg.length)
        self.starts = tuple(starts)
        self.length = starts[-1] + self.segments[-1].length
        self.horizon = float(min(horizon, self.length))
        self.tol = float(tol)
        self.model_id = model_id
        self.integer_steps = integer_steps
        self.meta = dict(meta or {})
        self._validate_samples()

    def _validate_samples(self, per_segment: int = 3) -> None:
        for seg, x0 in zip(self.segments, self.starts):
            if seg.is_constant:
                continue
            span = min(seg.length, max(self.horizon - x0, 0.0))
            if span <= 0:
                continue
            for k in range(per_segment):
                x = x0 + span * (k + 0.5) / per_segment
                if callable(seg.A):
                    _check_psd(_real_sym(seg.A(x), "A(x)"), "A(x)")
                if callable(seg.B):
                    _real_sym(seg.B(x), "B(x)")

    def __repr__(self) -> str:
        return f"HamiltonianSystem({self.model_id!r}, {len(self.segments)} segments)"

    def pieces(self, L: float) -> Iterator[tuple[Segment, float, float]]:
        """Yield ``(segment, x0, x1)`` covering ``[0, L]``."""
        if L < 0:
            raise ValueError("L must be nonnegative")
        if L > self.horizon * (1 + 1e-12):
            raise ValueError(f"L = {L} exceeds the working horizon {self.horizon}")
        for seg, x0 in zip(self.segments, self.starts):
            if x0 >= L:
                break
            yield seg, x0, min(x0 + seg.length, L)

    def segment_at(self, x: float) -> tuple[Segment, float]:
        k = max(bisect.bisect_right(self.starts, x) - 1, 0)
        return self.segments[k], self.starts[k]

    def A(self, x: float) -> np.ndarray:
        seg, _ = self.segment_at(x)
        return seg.A_at(x)

    def B(self, x: float) -> np.ndarray:
        seg, _ = self.segment_at(x)
        return seg.B_at(x)

    @property
    def has_b(self) -> bool:
        return any(seg.has_b for seg in self.segments)

    def transfer(self, L: float, z: complex) -> np.ndarray:
        return integrate_transfer(self, L, z)

    def kernel(self, L: float, z: complex, w: complex) -> np.ndarray:
        return cansys_kernel(self, L, z, w)

    def trace_integral(self, L: float) -> float:
        """``int_0^L tr A``; divergence as ``L`` grows signals the limit point case."""
        total = 0.0
        for seg, x0, x1 in self.pieces(L):
            if seg.is_constant:
                total += float(np.trace(seg.A)) * (x1 - x0)
            else:
                total += quad(lambda x: float(np.trace(seg.A_at(x))), x0, x1, limit=200)[0]
        return total


# --- integration ------------------------------------------------------------


def _rk4(f, y0: np.ndarray, x0: float, x1: float, n: int) -> np.ndarray:
    h = (x1 - x0) / n
    y = y0
    x = x0
    for i in range(n):
        k1 = f(x, y)
        k2 = f(x + h / 2, y + (h / 2) * k1)
        k3 = f(x + h / 2, y + (h / 2) * k2)
        k4 = f(x + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        x = x0 + (x1 - x0) * (i + 1) / n
    return y


def _integrate_smooth(f, y0: np.ndarray, x0: float, x1: float, tol: float, rate: float):
    """RK4 with step doubling until the Richardson estimate meets ``tol``.

    Returns the fine solution and its error estimate.
    """
    span = x1 - x0
    n = max(1, int(math.ceil(span * max(rate, 1.0) / 0.25)))
    coarse = _rk4(f, y0, x0, x1, n)
    for _ in range(_MAX_REFINE):
        n *= 2
        fine = _rk4(f, y0, x0, x1, n)
        err = float(np.max(np.abs(fine - coarse))) / 15.0
        scale = max(1.0, float(np.max(np.abs(fine))))
        if err <= tol * max(span, 1e-3) * scale:
            return fine, err
        coarse = fine
    raise IntegrationError(
        f"RK4 error estimate {err:.3g} above tolerance on [{x0}, {x1}] after {_MAX_REFINE} refinements"
    )


def _generator_rate(seg: Segment, x0: float, x1: float, zs: Sequence[complex]) -> float:
    xs = (x0, 0.5 * (x0 + x1), x1) if math.isfinite(x1) else (x0,)
    return max(np.max(np.abs(seg.generator(x, z))) for x in xs for z in zs)


@dataclass(frozen=True)
class TransferReport:
    T: np.ndarray
    det_drift: float
    error_estimate: float


def integrate_transfer(
    sys: HamiltonianSystem, L: float, z: complex, report: bool = False
) -> Union[np.ndarray, TransferReport]:
    """``T(L, z)`` with ``T(0, z) = I``.

    With ``report=True`` a :class:`TransferReport` carries ``|det T - 1|``
    (monitored only, never corrected) and the summed RK4 error estimate.
    """
    z = complex(z)
    t = I2.copy()
    err_total = 0.0
    for seg, x0, x1 in sys.pieces(L):
        if seg.is_constant:
            t = expm_tracefree(seg.generator(x0, z) * (x1 - x0)) @ t
        else:
            rate = _generator_rate(seg, x0, x1, [z])

            def f(x, y, seg=seg):
                return seg.generator(x, z) @ y

            t, err = _integrate_smooth(f, t, x0, x1, sys.tol, rate)
            err_total += err
    if not report:
        return t
    drift = abs(t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0] - 1)
    return TransferReport(t, float(drift), err_total)


def _van_loan(gz: np.ndarray, gw: np.ndarray, a: np.ndarray, h: float) -> np.ndarray:
    """``int_0^h exp(s Gw)* A exp(s Gz) ds`` from one 4x4 block exponential."""
    block = np.zeros((4, 4), dtype=complex)
    block[:2, :2] = -gw.conj().T
    block[:2, 2:] = a
    block[2:, 2:] = gz
    e = expm(block * h)
    return expm_tracefree(gw * h).conj().T @ e[:2, 2:]


def cansys_kernel(sys: HamiltonianSystem, L: float, z: complex, w: complex) -> np.ndarray:
    """``int_0^L T(x,w)* A(x) T(x,z) dx``.

    Exact on constant segments (closed form for nilpotent generators,
    block exponential otherwise); RK4 on the augmented state
    ``(T_z, T_w, K)`` for callable segments.
    """
    z, w = complex(z), complex(w)
    tz = I2.copy()
    tw = I2.copy()
    k = np.zeros((2, 2), dtype=complex)
    for seg, x0, x1 in sys.pieces(L):
        span = x1 - x0
        if seg.is_nilpotent:
            k = k + span * (tw.conj().T @ seg.A @ tz)
            tz = (I2 + span * seg.generator(x0, z)) @ tz
            tw = (I2 + span * seg.generator(x0, w)) @ tw
        elif seg.is_constant:
            gz, gw = seg.generator(x0, z), seg.generator(x0, w)
            rate = max(np.max(np.abs(gz)), np.max(np.abs(gw)), 1e-300)
            chunks = max(1, int(math.ceil(span * rate / _VAN_LOAN_NORM)))
            h = span / chunks
            inner = _van_loan(gz, gw, seg.A, h)
            pz, pw = expm_tracefree(gz * h), expm_tracefree(gw * h)
            for _ in range(chunks):
                k = k + tw.conj().T @ inner @ tz
                tz = pz @ tz
                tw = pw @ tw
        else:
            rate = _generator_rate(seg, x0, x1, [z, w])

            def f(x, y, seg=seg):
                a = seg.A_at(x)
                bx = seg.B_at(x)
                out = np.empty_like(y)
                out[0] = J @ (z * a - bx) @ y[0]
                out[1] = J @ (w * a - bx) @ y[1]
                out[2] = y[1].conj().T @ a @ y[0]
                return out

            y, _ = _integrate_smooth(f, np.stack([tz, tw, k]), x0, x1, sys.tol, rate)
            tz, tw, k = y[0], y[1], y[2]
    return k


def kernel_jform(sys: HamiltonianSystem, L: float, z: complex, w: complex) -> np.ndarray:
    """Off-diagonal cross-check ``(T(L,w)* j T(L,z) - j)/(conj(w) - z)``."""
    gap = complex(w).conjugate() - complex(z)
    if abs(gap) < 1e-8:
        raise ValueError("use the integral at the diagonal")
    tz, tw = integrate_transfer(sys, L, z), integrate_transfer(sys, L, w)
    return (tw.conj().T @ J @ tz - J) / gap


# --- constant Hamiltonians --------------------------------------------------


def _sinc(u: complex) -> complex:
    if abs(u) < 1e-4:
        u2 = u * u
        return 1 - u2 / 6 + u2 * u2 / 120
    return cmath.sin(u) / u


@dataclass(frozen=True)
class RingObjects:
    """The constant trace-normalized Hamiltonian for ``eta`` and its solution and kernel."""

    eta: SpherePoint
    h: float
    H: np.ndarray

    def M(self, z: complex, t: float = 1.0) -> np.ndarray:
        """``exp(t z j H)``; linear in ``t z`` when ``h = 0``."""
        u = t * complex(z)
        return cmath.cos(u * self.h) * I2 + u * _sinc(u * self.h) * (J @ self.H)

    def K(self, z: complex, w: complex, t: float = 1.0) -> np.ndarray:
        """``int_0^t M(s,w)* H M(s,z) ds``; equals ``t H`` on the diagonal and for real ``eta``."""
        u = t * self.h * (complex(w).conjugate() - complex(z))
        return -t * self.h * cmath.sin(u / 2) * _sinc(u / 2) * J + t * _sinc(u) * self.H


def ring_objects(eta) -> RingObjects:
    p = eta if isinstance(eta, SpherePoint) else SpherePoint.from_complex(eta)
    if not p.in_closed_upper_half_plane():
        raise ValueError("eta must lie in the closed upper half-plane")
    cross = p.v1 * p.v2.conjugate()
    h = max(cross.imag, 0.0)
    if p.is_real_or_infinite(1e-15):
        h = 0.0
    hm = np.array(
        [[abs(p.v2) ** 2, -cross.real], [-cross.real, abs(p.v1) ** 2]], dtype=float
    )
    hm /= np.trace(hm)
    hm.setflags(write=False)
    return RingObjects(p, float(h), hm)


def ring_system(eta, horizon: float = 1e3) -> HamiltonianSystem:
    """Canonical system with the constant Hamiltonian of ``eta`` (its m-function is ``eta``)."""
    ring = ring_objects(eta)
    return HamiltonianSystem(
        [Segment(math.inf, ring.H, label="ring")], horizon=horizon, model_id=f"ring:{ring.eta!r}"
    )


# --- Jacobi embedding and gauges --------------------------------------------


def jacobi_embedding(params: JacobiParams, xi: float, n: int) -> HamiltonianSystem:
    """Jacobi parameters as a canonical system in the gauge ``M(x, 0) = I``.

    The Hamiltonian is ``e_k(xi)* e_k(xi)`` on ``[k, k+1)`` with
    ``e_k = (p_k, q_k)``; the spectral variable is measured from ``xi``,
    so ``M(n, z) = T(n, xi)^-1 T(n, xi + z)`` and the kernel at ``L`` is the
    interpolated matrix CD kernel at ``(xi + z, xi + w)``.
    """
    polys = eval_polys(params, n, xi)
    p, q = polys.p.real, polys.q.real
    segs = [Segment(1.0, np.outer([p[k], q[k]], [p[k], q[k]]), label=f"jacobi[{k}]") for k in range(n)]
    return HamiltonianSystem(
        segs,
        horizon=n,
        model_id=f"{params.model_id}@{xi!r}",
        integer_steps=True,
        meta={"xi": xi, "jacobi": params.model_id},
    )


class _RealTransferCache:
    """``T(x, xi)`` for real ``xi`` at arbitrary ``x``, from cached checkpoints."""

    def __init__(self, sys: HamiltonianSystem, xi: float):
        self.sys = sys
        self.xi = float(xi)
        self._xs = [0.0]
        self._ts = [np.eye(2)]
        self._lock = threading.Lock()

    def at(self, x: float) -> np.ndarray:
        with self._lock:
            k = bisect.bisect_right(self._xs, x) - 1
            x0, t = self._xs[k], self._ts[k]
        for seg, a, b in self.sys.pieces(x):
            if b <= x0:
                continue
            a = max(a, x0)
            if seg.is_constant:
                t = expm_tracefree(seg.generator(a, self.xi) * (b - a)).real @ t
            else:
                rate = _generator_rate(seg, a, b, [self.xi])

                def f(s, y, seg=seg):
                    return (seg.generator(s, self.xi) @ y).real

                t, _ = _integrate_smooth(f, t, a, b, self.sys.tol, rate)
            with self._lock:
                pos = bisect.bisect_left(self._xs, b)
                if pos == len(self._xs) or self._xs[pos] != b:
                    self._xs.insert(pos, b)
                    self._ts.insert(pos, t)
        return t


@dataclass
class GaugeResult:
    """Output of :func:`gauge_pdb`.

    ``system`` is the derived canonical system with Hamiltonian
    ``H(x) = T(x, xi)* A(x) T(x, xi)`` and ``B = 0``; ``M`` evaluates its
    solution directly from the original system.
    """

    base: HamiltonianSystem
    xi: float
    system: HamiltonianSystem
    _cache: _RealTransferCache = field(repr=False)

    def H(self, x: float) -> np.ndarray:
        t = self._cache.at(x)
        return t.T @ self.base.A(x) @ t

    def M(self, L: float, z: complex) -> np.ndarray:
        t_xi = integrate_transfer(self.base, L, self.xi)
        return inv2(t_xi) @ integrate_transfer(self.base, L, self.xi + complex(z))


def gauge_pdb(sys: HamiltonianSystem, xi: float) -> GaugeResult:
    """Shift the spectral parameter by ``xi`` and pass to the gauge ``M(x, 0) = I``."""
    xi = float(xi)
    if not sys.has_b and xi == 0.0:
        derived = sys  # T(x, 0) = I already
        return GaugeResult(sys, xi, derived, _RealTransferCache(sys, xi))
    cache = _RealTransferCache(sys, xi)
    segs = []
    for seg, x0 in zip(sys.segments, sys.starts):

        def h_fn(x, seg=seg):
            t = cache.at(x)
            return t.T @ seg.A_at(x) @ t

        segs.append(Segment(seg.length, h_fn, None, seg.smooth, label=f"gauge({seg.label})"))
    derived = HamiltonianSystem(
        segs,
        horizon=sys.horizon,
        tol=sys.tol,
        model_id=f"{sys.model_id}|pdb@{xi!r}",
        integer_steps=sys.integer_steps,
    )
    return GaugeResult(sys, xi, derived, cache)


# --- reparametrization, rescaling, shifts ------------------------------------


@dataclass(frozen=True)
class TraceReparam:
    """``a(x) = int_0^x tr H``, its inverse, and the trace-normalized system."""

    a: Callable[[float], float]
    a_inv: Callable[[float], float]
    system: HamiltonianSystem


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class _TraceTable:
    """Cumulative ``int tr A`` on a callable segment, tabulated once.

    Each table cell is short, so a 16-point Gauss-Legendre rule is exact to
    rounding for smooth coefficients.  The inverse map is solved by Newton
    at Chebyshev points of a cell once and interpolated afterwards.
    """

    _CELL = 0.25
    _MAX_CELLS = 20000
    _DEGREE = 16

    def __init__(self, seg: Segment, x0: float, x1: float):
        self.tr = lambda x: float(np.trace(seg.A_at(x)))
        cells = min(max(1, math.ceil((x1 - x0) / self._CELL)), self._MAX_CELLS)
        self.xs = np.linspace(x0, x1, cells + 1)
        pieces = [self._gl(u, v) for u, v in zip(self.xs, self.xs[1:])]
        self.cum = np.concatenate([[0.0], np.cumsum(pieces)])
        self._inverse_cache: dict[int, np.polynomial.Chebyshev] = {}

    def _gl(self, u: float, v: float) -> float:
        half, mid = 0.5 * (v - u), 0.5 * (v + u)
        return half * sum(w * self.tr(mid + half * x) for x, w in zip(_GL_NODES, _GL_WEIGHTS))

    @property
    def total(self) -> float:
        return float(self.cum[-1])

    def _cell(self, arr: np.ndarray, v: float) -> int:
        k = int(np.searchsorted(arr, v, side="right") - 1)
        return min(max(k, 0), len(self.xs) - 2)

    def integral(self, x: float) -> float:
        k = self._cell(self.xs, x)
        return float(self.cum[k]) + self._gl(self.xs[k], x)

    def _solve(self, k: int, target: float) -> float:
        lo, hi = float(self.xs[k]), float(self.xs[k + 1])
        g = lambda x: self._gl(lo, x) - target
        x = lo + target / max(self.tr(lo), 1e-300)
        for _ in range(30):
            x = min(max(x, lo), hi)
            step = g(x) / self.tr(x)
            x -= step
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                return min(max(x, lo), hi)
        return brentq(g, lo, hi, xtol=1e-15, rtol=4e-16)

    def _interpolant(self, k: int) -> np.polynomial.Chebyshev:
        # the inverse map on one cell, sampled at Chebyshev points and cached
        cheb = self._inverse_cache.get(k)
        if cheb is None:
            t0, t1 = float(self.cum[k]), float(self.cum[k + 1])
            nodes = np.cos(np.pi * (np.arange(self._DEGREE + 1) + 0.5) / (self._DEGREE + 1))
            ts = 0.5 * (t1 - t0) * nodes + 0.5 * (t1 + t0)
            xs = [self._solve(k, t - t0) for t in ts]
            cheb = np.polynomial.Chebyshev.fit(ts, xs, self._DEGREE, domain=[t0, t1])
            self._inverse_cache[k] = cheb
        return cheb

    def inverse(self, rem: float) -> float:
        if rem <= 0:
            return float(self.xs[0])
        if rem >= self.total:
            return float(self.xs[-1])
        k = self._cell(self.cum, rem)
        return float(self._interpolant(k)(rem))


def trace_reparam(sys: HamiltonianSystem) -> TraceReparam:
    """Trace-normalize a canonical system (``B = 0``) by its trace integral."""
    if sys.has_b:
        raise ValueError("trace reparametrization needs B = 0 (apply gauge_pdb first)")
    lengths = []
    tables: list[Optional[_TraceTable]] = []
    for seg, x0 in zip(sys.segments, sys.starts):
        x1 = x0 + seg.length
        if seg.is_constant:
            c = float(np.trace(seg.A))
            if c <= 1e-15:
                raise ReparametrizationError("singular reparametrization segment")
            lengths.append(c * seg.length)
            tables.append(None)
            continue
        if not math.isfinite(x1):
            x1 = sys.horizon
        table = _TraceTable(seg, x0, x1)
        if table.total <= 1e-15:
            raise ReparametrizationError("singular reparametrization segment")
        lengths.append(table.total)
        tables.append(table)
    t_starts = np.concatenate([[0.0], np.cumsum(lengths)])

    def a(x: float) -> float:
        if x <= 0:
            return 0.0
        x = min(x, sys.horizon)
        k = min(bisect.bisect_right(sys.starts, x) - 1, len(sys.segments) - 1)
        seg, x0 = sys.segments[k], sys.starts[k]
        if tables[k] is None:
            return float(t_starts[k]) + float(np.trace(seg.A)) * (x - x0)
        return float(t_starts[k]) + tables[k].integral(x)

    def a_inv(t: float) -> float:
        k = int(np.searchsorted(t_starts, t, side="right") - 1)
        k = min(max(k, 0), len(sys.segments) - 1)
        seg, x0 = sys.segments[k], sys.starts[k]
        rem = t - t_starts[k]
        if tables[k] is None:
            return x0 + rem / float(np.trace(seg.A))
        return tables[k].inverse(rem)

    new_segs = []
    for idx, seg in enumerate(sys.segments):
        if tables[idx] is None:
            c = float(np.trace(seg.A))
            new_segs.append(Segment(lengths[idx], seg.A / c, label=seg.label))
            continue

        def h_fn(t, seg=seg):
            m = seg.A_at(a_inv(t))
            return m / float(np.trace(m))

        new_segs.append(Segment(lengths[idx], h_fn, None, seg.smooth, label=f"reparam({seg.label})"))
    horizon = a(sys.horizon) if math.isfinite(sys.horizon) else math.inf
    normalized = HamiltonianSystem(
        new_segs, horizon=horizon, tol=sys.tol, model_id=f"{sys.model_id}|tr"
    )
    return TraceReparam(a, a_inv, normalized)


def rescale_family(sys: HamiltonianSystem, r: float) -> HamiltonianSystem:
    """``H_r(t) = H(r t)``: solutions ``M_r(t, z) = M(r t, z / r)``, kernels scale by ``1/r``."""
    r = float(r)
    if r < 1:
        raise ValueError("rescaling needs r >= 1")
    if sys.has_b:
        raise ValueError("rescaling applies to canonical systems with B = 0")
    if r == 1:
        return sys
    segs = []
    for seg in sys.segments:
        a = seg.A if seg.is_constant else (lambda t, seg=seg: seg.A_at(r * t))
        segs.append(Segment(seg.length / r, a, None, seg.smooth, label=f"{seg.label}/r"))
    return HamiltonianSystem(
        segs, horizon=sys.horizon / r, tol=sys.tol, model_id=f"{sys.model_id}|r={r!r}"
    )


def _shift_matrix(a: float) -> np.ndarray:
    return np.array([[1.0, a], [0.0, 1.0]])


def triangular_shift(obj: Any, a: float) -> Any:
    """Action of ``S = [[1, a], [0, 1]]``.

    Matrices (Hamiltonians, kernels) map to ``S* X S``; systems have
    ``A`` and ``B`` transformed; m-values map to ``S^-1 m = m - a``.
    """
    s = _shift_matrix(float(a))
    if isinstance(obj, HamiltonianSystem):
        segs = []
        for seg in obj.segments:
            if seg.is_constant:
                na = s.T @ seg.A @ s
                nb = None if seg.B is None else s.T @ seg.B @ s
            else:
                na = lambda x, seg=seg: s.T @ seg.A_at(x) @ s
                nb = lambda x, seg=seg: s.T @ seg.B_at(x) @ s
            segs.append(Segment(seg.length, na, nb, seg.smooth, label=seg.label))
        return HamiltonianSystem(
            segs, horizon=obj.horizon, tol=obj.tol, model_id=f"{obj.model_id}|shift={a!r}",
            integer_steps=obj.integer_steps,
        )
    if isinstance(obj, SpherePoint):
        if obj.is_infinite:
            return obj
        return SpherePoint.from_complex(obj.to_complex() - a)
    if np.isscalar(obj):
        return complex(obj) - a
    m = np.asarray(obj)
    if m.shape == (2, 2):
        return s.T @ m @ s
    raise TypeError(f"cannot shift object of type {type(obj).__name__}")


# --- Schroedinger operators -------------------------------------------------


def rotation(beta: float) -> np.ndarray:
    c, s = math.cos(beta), math.sin(beta)
    return np.array([[c, -s], [s, c]])


def schrodinger_system(
    V: Union[float, Callable[[float], float]],
    beta: float = 0.0,
    horizon: float = 1e3,
    tol: float = 1e-10,
) -> HamiltonianSystem:
    """``-u'' + V u = z u`` with boundary angle ``beta`` as a canonical system.

    ``A = R diag(0, 1) R*``, ``B(x) = R diag(-1, V(x)) R*`` with ``R`` the
    rotation by ``beta``.  A numeric ``V`` gives one constant segment,
    which is stepped exactly.
    """
    if not 0 <= beta < math.pi:
        raise ValueError("beta must lie in [0, pi)")
    rot = rotation(beta)
    a = rot @ np.diag([0.0, 1.0]) @ rot.T
    if callable(V):
        b = lambda x: rot @ np.diag([-1.0, float(V(x))]) @ rot.T
        label = "schrodinger"
        model_id = "schrodinger"
    else:
        b = rot @ np.diag([-1.0, float(V)]) @ rot.T
        label = f"schrodinger V={float(V)!r}"
        model_id = "schrodinger-free" if float(V) == 0.0 else f"schrodinger-const:{float(V)!r}"
    seg = Segment(math.inf, a, b, label=label)
    return HamiltonianSystem([seg], horizon=horizon, tol=tol, model_id=model_id, meta={"beta": beta})


def schrodinger_solutions(sys: HamiltonianSystem, x: float, z: complex) -> tuple[complex, complex]:
    """``(phi, theta)`` at ``x``: second row of ``R* T(x, z)``.

    For ``beta = 0`` these are the solutions with ``phi(0) = 0,
    phi'(0) = 1`` and ``theta(0) = 1, theta'(0) = 0``.
    """
    rot = rotation(sys.meta.get("beta", 0.0))
    row = (rot.T @ integrate_transfer(sys, x, z))[1]
    return complex(row[0]), complex(row[1])


# --- configuration ----------------------------------------------------------

_CALLABLES: dict[str, Callable[..., Callable[[float], np.ndarray]]] = {
    "rotating": lambda p: (
        lambda x: 0.5 * np.eye(2)
        + p.get("amplitude", 0.25)
        * np.array(
            [[math.cos(p.get("frequency", 1.0) * x), math.sin(p.get("frequency", 1.0) * x)],
             [math.sin(p.get("frequency", 1.0) * x), -math.cos(p.get("frequency", 1.0) * x)]]
        )
    ),
}


def system_from_config(desc: dict) -> HamiltonianSystem:
    """Build a system from ``{"segments": [{length, kind, A, B, params}], ...}``.

    ``kind`` is ``"constant"`` (matrices given) or a callable id
    (currently ``"rotating"``: ``I/2 + c [[cos kx, sin kx], [sin kx, -cos kx]]``).
    A length of ``null`` means the segment runs to the horizon.
    """
    segs = []
    for item in desc["segments"]:
        length = math.inf if item.get("length") is None else float(item["length"])
        kind = item.get("kind", "constant")
        if kind == "constant":
            segs.append(Segment(length, np.array(item["A"], dtype=float),
                                None if item.get("B") is None else np.array(item["B"], dtype=float)))
        elif kind in _CALLABLES:
            segs.append(Segment(length, _CALLABLES[kind](item.get("params", {})), label=kind))
        else:
            raise ValueError(f"unknown segment kind {kind!r}")
    return HamiltonianSystem(
        segs,
        horizon=float(desc.get("horizon", 1e3)),
        tol=float(desc.get("tol", 1e-10)),
        model_id=desc.get("id", "canonical"),
    )
