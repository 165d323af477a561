"""Pure-Python recurrence kernels.

Reference implementation of the hot loops; ``_kernels.pyx`` mirrors every
function here with the same signature.  Coefficient arrays use the
1-based layout ``a[k] = a_k``, ``b[k] = b_k`` with ``a[0] = 1``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import KernelOverflowError

OVERFLOW_LIMIT = 1e300


def _guard(*values):
    for v in values:
        # written as a negation so that NaN also trips the guard
        if not (abs(v.real) <= OVERFLOW_LIMIT and abs(v.imag) <= OVERFLOW_LIMIT):
            raise KernelOverflowError(
                "recurrence value exceeded 1e300; reduce the index or |Im z|"
            )


def jacobi_polys(a, b, n, z):
    """Return arrays ``p_0..p_n`` and ``q_0..q_n`` at ``z``."""
    z = complex(z)
    p = np.empty(n + 1, dtype=complex)
    q = np.empty(n + 1, dtype=complex)
    p_prev, p_cur = 0j, 1 + 0j
    q_prev, q_cur = -1 + 0j, 0j
    p[0], q[0] = p_cur, q_cur
    for k in range(n):
        p_next = ((z - b[k + 1]) * p_cur - a[k] * p_prev) / a[k + 1]
        q_next = ((z - b[k + 1]) * q_cur - a[k] * q_prev) / a[k + 1]
        _guard(p_next, q_next)
        p_prev, p_cur = p_cur, p_next
        q_prev, q_cur = q_cur, q_next
        p[k + 1], q[k + 1] = p_cur, q_cur
    return p, q


def matrix_kernel(a, b, n, frac, z, w):
    """Interpolated matrix CD kernel as ``(k11, k12, k21, k22)``.

    Sums over ``j < n`` plus ``frac`` times the ``j = n`` term, in one
    forward pass of the recurrence at ``z`` and ``w``.
    """
    z = complex(z)
    w = complex(w)
    pz_prev, pz = 0j, 1 + 0j
    qz_prev, qz = -1 + 0j, 0j
    pw_prev, pw = 0j, 1 + 0j
    qw_prev, qw = -1 + 0j, 0j
    k11 = k12 = k21 = k22 = 0j
    for k in range(n):
        cpw, cqw = pw.conjugate(), qw.conjugate()
        k11 += pz * cpw
        k12 += qz * cpw
        k21 += pz * cqw
        k22 += qz * cqw
        ak, ak1, bk1 = a[k], a[k + 1], b[k + 1]
        pz_prev, pz = pz, ((z - bk1) * pz - ak * pz_prev) / ak1
        qz_prev, qz = qz, ((z - bk1) * qz - ak * qz_prev) / ak1
        pw_prev, pw = pw, ((w - bk1) * pw - ak * pw_prev) / ak1
        qw_prev, qw = qw, ((w - bk1) * qw - ak * qw_prev) / ak1
        _guard(pz, qz, pw, qw)
    if frac != 0.0:
        cpw, cqw = pw.conjugate(), qw.conjugate()
        k11 += frac * pz * cpw
        k12 += frac * qz * cpw
        k21 += frac * pz * cqw
        k22 += frac * qz * cqw
    _guard(k11, k12, k21, k22)
    return k11, k12, k21, k22


def matrix_kernel_pairs(a, b, n, frac, zs, ws):
    """Vector form of :func:`matrix_kernel` over paired arrays of points."""
    zs = np.asarray(zs, dtype=complex)
    ws = np.asarray(ws, dtype=complex)
    out = np.empty((zs.shape[0], 4), dtype=complex)
    for i in range(zs.shape[0]):
        out[i] = matrix_kernel(a, b, n, frac, zs[i], ws[i])
    return out


def sturm_count(a, b, n, x):
    """Number of eigenvalues of the n x n Jacobi matrix strictly below ``x``."""
    count = 0
    d = 1.0
    for k in range(1, n + 1):
        if k == 1:
            d = b[1] - x
        else:
            d = b[k] - x - a[k - 1] * a[k - 1] / d
        if d == 0.0:
            # an exact zero pivot counts as nonnegative: x itself is not below x
            d = 1e-300
        if d < 0.0:
            count += 1
    return count


def bisect_eigenvalue(a, b, n, k, lo, hi, tol):
    """The ``k``-th smallest (0-based) eigenvalue, bracketed by ``[lo, hi]``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if sturm_count(a, b, n, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def subordinacy_sums(a, b, n, x):
    """Ratio ``sum p_j(x)^2 / sum (p_j(x)^2 + q_j(x)^2)`` over ``j < n``.

    The ratio is invariant under a common rescaling of the recurrence
    state, so the state and the partial sums are renormalized whenever
    they grow large; this keeps exponentially growing solutions finite.
    """
    x = float(x)
    p_prev, p_cur = 0.0, 1.0
    q_prev, q_cur = -1.0, 0.0
    sp = sq = 0.0
    for k in range(n):
        sp += p_cur * p_cur
        sq += q_cur * q_cur
        if k == n - 1:
            break
        ak, ak1, bk1 = a[k], a[k + 1], b[k + 1]
        p_prev, p_cur = p_cur, ((x - bk1) * p_cur - ak * p_prev) / ak1
        q_prev, q_cur = q_cur, ((x - bk1) * q_cur - ak * q_prev) / ak1
        big = max(abs(p_cur), abs(q_cur), abs(p_prev), abs(q_prev))
        if big > 1e100:
            s = 1.0 / big
            p_prev *= s
            p_cur *= s
            q_prev *= s
            q_cur *= s
            sp *= s * s
            sq *= s * s
    return sp / (sp + sq)


def szego_phi(alpha, n, z):
    """``(phi_n(z), phi_n^*(z))`` from the Szego recursion, ``alpha[k] = alpha_k``."""
    z = complex(z)
    phi, phis = 1 + 0j, 1 + 0j
    for k in range(n):
        al = complex(alpha[k])
        rho = math.sqrt(1.0 - (al.real * al.real + al.imag * al.imag))
        phi, phis = (z * phi - al.conjugate() * phis) / rho, (phis - al * z * phi) / rho
        _guard(phi, phis)
    return phi, phis


def opuc_kernel_sum(alpha, n, z, w):
    """Direct sum ``sum_{j<n} phi_j(z) conj(phi_j(w))``."""
    z = complex(z)
    w = complex(w)
    pz, pzs = 1 + 0j, 1 + 0j
    pw, pws = 1 + 0j, 1 + 0j
    total = 0j
    for k in range(n):
        total += pz * pw.conjugate()
        al = complex(alpha[k])
        rho = math.sqrt(1.0 - (al.real * al.real + al.imag * al.imag))
        cal = al.conjugate()
        pz, pzs = (z * pz - cal * pzs) / rho, (pzs - al * z * pz) / rho
        pw, pws = (w * pw - cal * pws) / rho, (pws - al * w * pw) / rho
        _guard(pz, pw)
    _guard(total)
    return total


def opuc_kernel_pairs(alpha, n, zs, ws):
    zs = np.asarray(zs, dtype=complex)
    ws = np.asarray(ws, dtype=complex)
    out = np.empty(zs.shape[0], dtype=complex)
    for i in range(zs.shape[0]):
        out[i] = opuc_kernel_sum(alpha, n, zs[i], ws[i])
    return out
