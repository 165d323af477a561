"""2x2 complex linear algebra on the Riemann sphere.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)`` and dtype
``complex128``.  Points of the Riemann sphere are :class:`SpherePoint`
values so that infinity is an ordinary value.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "I2",
    "J",
    "SIGMA",
    "SWAP",
    "CAYLEY",
    "DISK_SIGNATURE",
    "SingularMatrixError",
    "SpherePoint",
    "mat2",
    "as_mat2",
    "det2",
    "inv2",
    "adjoint",
    "mobius_apply",
    "chordal_distance",
    "j_defect",
    "expm_tracefree",
    "hermitian_part",
]

I2 = np.eye(2, dtype=complex)
J = np.array([[0, -1], [1, 0]], dtype=complex)
SIGMA = np.array([[-1, 0], [0, 1]], dtype=complex)
SWAP = np.array([[0, 1], [1, 0]], dtype=complex)
CAYLEY = np.array([[1, -1j], [1, 1j]], dtype=complex)
DISK_SIGNATURE = np.array([[-1, 0], [0, 1]], dtype=complex)

for _m in (I2, J, SIGMA, SWAP, CAYLEY, DISK_SIGNATURE):
    _m.flags.writeable = False


class SingularMatrixError(ValueError):
    pass


def mat2(e11, e12, e21, e22) -> np.ndarray:
    return np.array([[e11, e12], [e21, e22]], dtype=complex)


def as_mat2(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def det2(m: np.ndarray) -> complex:
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def inv2(m: np.ndarray) -> np.ndarray:
    d = det2(m)
    if d == 0:
        raise SingularMatrixError("singular matrix")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex) / d


def adjoint(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


@dataclass(frozen=True)
class SpherePoint:
    """Point of the Riemann sphere as a unit-normalized projective pair.

    The pair ``(v1, v2)`` stands for ``v1 / v2``; ``(1, 0)`` is infinity.
    Construct through :meth:`from_complex`, :meth:`infinity` or
    :meth:`from_pair`, which normalize the representative.
    """

    v1: complex
    v2: complex

    @classmethod
    def from_pair(cls, v1: complex, v2: complex) -> "SpherePoint":
        v1, v2 = complex(v1), complex(v2)
        norm = math.hypot(abs(v1), abs(v2))
        if norm == 0 or not math.isfinite(norm):
            raise ValueError("projective pair must be finite and nonzero")
        v1, v2 = v1 / norm, v2 / norm
        # fix the phase so equal points get equal representatives
        lead = v2 if abs(v2) >= abs(v1) else v1
        phase = lead / abs(lead)
        return cls(v1 / phase, v2 / phase)

    @classmethod
    def from_complex(cls, w: complex) -> "SpherePoint":
        w = complex(w)
        if cmath.isinf(w):
            return cls.infinity()
        return cls.from_pair(w, 1.0)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(1 + 0j, 0j)

    @property
    def is_infinite(self) -> bool:
        return self.v2 == 0

    def to_complex(self) -> complex:
        """Affine value ``v1 / v2``; ``complex('inf')`` at infinity."""
        if self.v2 == 0:
            return complex(math.inf, 0.0)
        return self.v1 / self.v2

    def in_closed_upper_half_plane(self, tol: float = 1e-12) -> bool:
        # Im(v1 conj v2) carries the sign of Im(v1/v2)
        return (self.v1 * self.v2.conjugate()).imag >= -tol

    def is_real_or_infinite(self, tol: float = 1e-12) -> bool:
        return abs((self.v1 * self.v2.conjugate()).imag) <= tol

    def __repr__(self) -> str:
        if self.is_infinite:
            return "SpherePoint(inf)"
        return f"SpherePoint({self.to_complex()!r})"


def _as_point(p) -> SpherePoint:
    if isinstance(p, SpherePoint):
        return p
    return SpherePoint.from_complex(p)


def mobius_apply(m: np.ndarray, p) -> SpherePoint:
    """Image of ``p`` under the Moebius map of ``m``; total on the sphere."""
    if det2(m) == 0:
        raise SingularMatrixError("singular matrix")
    p = _as_point(p)
    v1 = m[0, 0] * p.v1 + m[0, 1] * p.v2
    v2 = m[1, 0] * p.v1 + m[1, 1] * p.v2
    return SpherePoint.from_pair(v1, v2)


def chordal_distance(p, q) -> float:
    """Chordal distance on the sphere of diameter 2, with values in [0, 2]."""
    p, q = _as_point(p), _as_point(q)
    return min(2.0, 2.0 * abs(p.v1 * q.v2 - p.v2 * q.v1))


def j_defect(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(T* j T - j)/i`` symmetrized, and its two real eigenvalues.

    Negative semidefinite for j-monotonic transfer matrices in the upper
    half-plane; zero for real unimodular ``t``.
    """
    t = np.asarray(t, dtype=complex)
    d = hermitian_part((t.conj().T @ J @ t - J) / 1j)
    return d, np.linalg.eigvalsh(d)


def _cosh_sqrt(s: complex) -> complex:
    if abs(s) < 1e-12:
        return 1 + s / 2 + s * s / 24
    return cmath.cosh(cmath.sqrt(s))


def _sinhc_sqrt(s: complex) -> complex:
    # sinh(sqrt s)/sqrt s, entire in s
    if abs(s) < 1e-12:
        return 1 + s / 6 + s * s / 120
    r = cmath.sqrt(s)
    return cmath.sinh(r) / r


def expm_tracefree(g: np.ndarray) -> np.ndarray:
    """Exponential of a trace-free 2x2 matrix.

    Uses ``G^2 = -det(G) I`` so ``exp(G) = cosh(k) I + sinh(k)/k G`` with
    ``k^2 = -det G``; both coefficients are even in ``k``, so no branch is
    involved, and the nilpotent case gives ``I + G`` exactly.
    """
    s = -det2(g)
    return _cosh_sqrt(s) * I2 + _sinhc_sqrt(s) * g
