# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrence kernels; same signatures as ``_kernels_py``."""

import numpy as np

from libc.math cimport fabs, sqrt

from .errors import KernelOverflowError

cdef double OVERFLOW_LIMIT = 1e300


cdef inline bint _big(double complex v) nogil:
    # written as a negation so that NaN also trips the guard
    return not (fabs(v.real) <= OVERFLOW_LIMIT and fabs(v.imag) <= OVERFLOW_LIMIT)


cdef inline double complex _conj(double complex v) nogil:
    return v.real - 1j * v.imag


def _overflow():
    raise KernelOverflowError(
        "recurrence value exceeded 1e300; reduce the index or |Im z|"
    )


def jacobi_polys(const double[::1] a, const double[::1] b, Py_ssize_t n, z):
    cdef double complex zz = complex(z)
    p_arr = np.empty(n + 1, dtype=complex)
    q_arr = np.empty(n + 1, dtype=complex)
    cdef double complex[::1] p = p_arr
    cdef double complex[::1] q = q_arr
    cdef double complex p_prev = 0, p_cur = 1, q_prev = -1, q_cur = 0
    cdef double complex p_next, q_next
    cdef Py_ssize_t k
    cdef bint over = False
    p[0] = p_cur
    q[0] = q_cur
    with nogil:
        for k in range(n):
            p_next = ((zz - b[k + 1]) * p_cur - a[k] * p_prev) / a[k + 1]
            q_next = ((zz - b[k + 1]) * q_cur - a[k] * q_prev) / a[k + 1]
            if _big(p_next) or _big(q_next):
                over = True
                break
            p_prev = p_cur
            p_cur = p_next
            q_prev = q_cur
            q_cur = q_next
            p[k + 1] = p_cur
            q[k + 1] = q_cur
    if over:
        _overflow()
    return p_arr, q_arr


cdef int _matrix_kernel(const double[::1] a, const double[::1] b, Py_ssize_t n,
                        double frac, double complex z, double complex w,
                        double complex* out) nogil:
    cdef double complex pz_prev = 0, pz = 1, qz_prev = -1, qz = 0
    cdef double complex pw_prev = 0, pw = 1, qw_prev = -1, qw = 0
    cdef double complex k11 = 0, k12 = 0, k21 = 0, k22 = 0
    cdef double complex cpw, cqw, t
    cdef double ak, ak1, bk1
    cdef Py_ssize_t k
    for k in range(n):
        cpw = _conj(pw)
        cqw = _conj(qw)
        k11 = k11 + pz * cpw
        k12 = k12 + qz * cpw
        k21 = k21 + pz * cqw
        k22 = k22 + qz * cqw
        ak = a[k]
        ak1 = a[k + 1]
        bk1 = b[k + 1]
        t = ((z - bk1) * pz - ak * pz_prev) / ak1
        pz_prev = pz
        pz = t
        t = ((z - bk1) * qz - ak * qz_prev) / ak1
        qz_prev = qz
        qz = t
        t = ((w - bk1) * pw - ak * pw_prev) / ak1
        pw_prev = pw
        pw = t
        t = ((w - bk1) * qw - ak * qw_prev) / ak1
        qw_prev = qw
        qw = t
        if _big(pz) or _big(qz) or _big(pw) or _big(qw):
            return 1
    if frac != 0.0:
        cpw = _conj(pw)
        cqw = _conj(qw)
        k11 = k11 + frac * pz * cpw
        k12 = k12 + frac * qz * cpw
        k21 = k21 + frac * pz * cqw
        k22 = k22 + frac * qz * cqw
    if _big(k11) or _big(k12) or _big(k21) or _big(k22):
        return 1
    out[0] = k11
    out[1] = k12
    out[2] = k21
    out[3] = k22
    return 0


def matrix_kernel(const double[::1] a, const double[::1] b, Py_ssize_t n,
                  double frac, z, w):
    cdef double complex out[4]
    cdef int status
    cdef double complex zz = complex(z), ww = complex(w)
    with nogil:
        status = _matrix_kernel(a, b, n, frac, zz, ww, out)
    if status:
        _overflow()
    return out[0], out[1], out[2], out[3]


def matrix_kernel_pairs(const double[::1] a, const double[::1] b, Py_ssize_t n,
                        double frac, zs, ws):
    cdef double complex[::1] zv = np.ascontiguousarray(zs, dtype=complex)
    cdef double complex[::1] wv = np.ascontiguousarray(ws, dtype=complex)
    cdef Py_ssize_t m = zv.shape[0], i
    out_arr = np.empty((m, 4), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef int status = 0
    with nogil:
        for i in range(m):
            status = _matrix_kernel(a, b, n, frac, zv[i], wv[i], &out[i, 0])
            if status:
                break
    if status:
        _overflow()
    return out_arr


cdef Py_ssize_t _sturm_count(const double[::1] a, const double[::1] b,
                             Py_ssize_t n, double x) nogil:
    cdef Py_ssize_t count = 0, k
    cdef double d = 1.0
    for k in range(1, n + 1):
        if k == 1:
            d = b[1] - x
        else:
            d = b[k] - x - a[k - 1] * a[k - 1] / d
        if d == 0.0:
            d = 1e-300
        if d < 0.0:
            count += 1
    return count


def sturm_count(const double[::1] a, const double[::1] b, Py_ssize_t n, double x):
    return _sturm_count(a, b, n, x)


def bisect_eigenvalue(const double[::1] a, const double[::1] b, Py_ssize_t n,
                      Py_ssize_t k, double lo, double hi, double tol):
    cdef double mid
    with nogil:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if _sturm_count(a, b, n, mid) > k:
                hi = mid
            else:
                lo = mid
    return 0.5 * (lo + hi)


def subordinacy_sums(const double[::1] a, const double[::1] b, Py_ssize_t n, double x):
    cdef double p_prev = 0.0, p_cur = 1.0, q_prev = -1.0, q_cur = 0.0
    cdef double sp = 0.0, sq = 0.0, ak, ak1, bk1, t, big, s
    cdef Py_ssize_t k
    with nogil:
        for k in range(n):
            sp += p_cur * p_cur
            sq += q_cur * q_cur
            if k == n - 1:
                break
            ak = a[k]
            ak1 = a[k + 1]
            bk1 = b[k + 1]
            t = ((x - bk1) * p_cur - ak * p_prev) / ak1
            p_prev = p_cur
            p_cur = t
            t = ((x - bk1) * q_cur - ak * q_prev) / ak1
            q_prev = q_cur
            q_cur = t
            big = max(max(fabs(p_cur), fabs(q_cur)), max(fabs(p_prev), fabs(q_prev)))
            if big > 1e100:
                s = 1.0 / big
                p_prev *= s
                p_cur *= s
                q_prev *= s
                q_cur *= s
                sp *= s * s
                sq *= s * s
    return sp / (sp + sq)


def szego_phi(const double complex[::1] alpha, Py_ssize_t n, z):
    cdef double complex zz = complex(z)
    cdef double complex phi = 1, phis = 1, al, t
    cdef double rho
    cdef Py_ssize_t k
    cdef bint over = False
    with nogil:
        for k in range(n):
            al = alpha[k]
            rho = sqrt(1.0 - (al.real * al.real + al.imag * al.imag))
            t = (zz * phi - _conj(al) * phis) / rho
            phis = (phis - al * zz * phi) / rho
            phi = t
            if _big(phi) or _big(phis):
                over = True
                break
    if over:
        _overflow()
    return complex(phi), complex(phis)


cdef int _opuc_kernel(const double complex[::1] alpha, Py_ssize_t n,
                      double complex z, double complex w, double complex* out) nogil:
    cdef double complex pz = 1, pzs = 1, pw = 1, pws = 1, total = 0, al, cal, t
    cdef double rho
    cdef Py_ssize_t k
    for k in range(n):
        total = total + pz * _conj(pw)
        al = alpha[k]
        cal = _conj(al)
        rho = sqrt(1.0 - (al.real * al.real + al.imag * al.imag))
        t = (z * pz - cal * pzs) / rho
        pzs = (pzs - al * z * pz) / rho
        pz = t
        t = (w * pw - cal * pws) / rho
        pws = (pws - al * w * pw) / rho
        pw = t
        if _big(pz) or _big(pw):
            return 1
    if _big(total):
        return 1
    out[0] = total
    return 0


def opuc_kernel_sum(const double complex[::1] alpha, Py_ssize_t n, z, w):
    cdef double complex out
    cdef int status
    cdef double complex zz = complex(z), ww = complex(w)
    with nogil:
        status = _opuc_kernel(alpha, n, zz, ww, &out)
    if status:
        _overflow()
    return complex(out)


def opuc_kernel_pairs(const double complex[::1] alpha, Py_ssize_t n, zs, ws):
    cdef double complex[::1] zv = np.ascontiguousarray(zs, dtype=complex)
    cdef double complex[::1] wv = np.ascontiguousarray(ws, dtype=complex)
    cdef Py_ssize_t m = zv.shape[0], i
    out_arr = np.empty(m, dtype=complex)
    cdef double complex[::1] out = out_arr
    cdef int status = 0
    with nogil:
        for i in range(m):
            status = _opuc_kernel(alpha, n, zv[i], wv[i], &out[i])
            if status:
                break
    if status:
        _overflow()
    return out_arr
