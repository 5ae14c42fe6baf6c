# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled resolvent kernel.

Evaluates the Schur-complement self-energy, the system Green's function and
one transfer Green's function on a frequency grid, one small dense complex
LU factorisation per frequency.  Mirrors ``_kernel_fallback.resolve_grid``.
"""
import numpy as np

from libc.math cimport fabs, hypot, NAN
from libc.stdlib cimport malloc, free

ctypedef double complex cplx

cdef enum:
    OK = 0
    SINGULAR_BATH = 1
    SYSTEM_POLE = 2
    MAX_HAGER_ITER = 5


cdef inline double cabs1(cplx z) nogil:
    return fabs(z.real) + fabs(z.imag)


cdef inline double cmod(cplx z) nogil:
    return hypot(z.real, z.imag)


cdef inline cplx conj(cplx z) nogil:
    return z.real - 1j * z.imag


cdef int lu_factor(cplx* a, Py_ssize_t* piv, Py_ssize_t n) nogil:
    """In-place LU with partial pivoting on a row-major n x n matrix."""
    cdef Py_ssize_t i, j, k, p
    cdef double best, v
    cdef cplx tmp, f
    for k in range(n):
        p = k
        best = cabs1(a[k * n + k])
        for i in range(k + 1, n):
            v = cabs1(a[i * n + k])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if best == 0.0:
            return 1
        if p != k:
            for j in range(n):
                tmp = a[k * n + j]
                a[k * n + j] = a[p * n + j]
                a[p * n + j] = tmp
        for i in range(k + 1, n):
            f = a[i * n + k] / a[k * n + k]
            a[i * n + k] = f
            if f != 0:
                for j in range(k + 1, n):
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j]
    return 0


cdef void lu_solve(const cplx* lu, const Py_ssize_t* piv, cplx* b, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j, p
    cdef cplx tmp, s
    for i in range(n):
        p = piv[i]
        if p != i:
            tmp = b[i]
            b[i] = b[p]
            b[p] = tmp
    for i in range(n):
        s = b[i]
        for j in range(i):
            s = s - lu[i * n + j] * b[j]
        b[i] = s
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s = s - lu[i * n + j] * b[j]
        b[i] = s / lu[i * n + i]


cdef double inv_norm1(const cplx* lu, const Py_ssize_t* piv, Py_ssize_t n,
                      cplx* x, cplx* z) nogil:
    """Hager-Higham lower estimate of ||M^-1||_1 for complex symmetric M."""
    cdef Py_ssize_t i, j, it, jprev = -1
    cdef double est = 0.0, est_old = 0.0, zmax, v, alt, dot
    for i in range(n):
        x[i] = 1.0 / n
    for it in range(MAX_HAGER_ITER):
        lu_solve(lu, piv, x, n)
        est = 0.0
        for i in range(n):
            est += cmod(x[i])
        if it > 0 and est <= est_old:
            est = est_old
            break
        est_old = est
        # z = M^-H sign(y) = conj(M^-1 conj(sign(y))) because M^T = M
        for i in range(n):
            v = cmod(x[i])
            if v == 0.0:
                z[i] = 1.0
            else:
                z[i] = conj(x[i] / v)
        lu_solve(lu, piv, z, n)
        j = 0
        zmax = -1.0
        for i in range(n):
            z[i] = conj(z[i])
            v = cmod(z[i])
            if v > zmax:
                zmax = v
                j = i
        # Re(z^H x) for the x that produced y
        if jprev < 0:
            dot = 0.0
            for i in range(n):
                dot += z[i].real / n
        else:
            dot = z[jprev].real
        if zmax <= dot:
            break
        for i in range(n):
            x[i] = 0.0
        x[j] = 1.0
        jprev = j
    # alternating test vector guards against Hager's rare underestimates
    for i in range(n):
        if i % 2 == 0:
            x[i] = 1.0 + (<double>i) / (n - 1) if n > 1 else 1.0
        else:
            x[i] = -(1.0 + (<double>i) / (n - 1))
    lu_solve(lu, piv, x, n)
    alt = 0.0
    for i in range(n):
        alt += cmod(x[i])
    alt = 2.0 * alt / (3.0 * n)
    return est if est > alt else alt


cdef void resolve_rows(double omega_s, const double[::1] omega_b,
                       const double[::1] gamma_b, const double[:, ::1] j_bath,
                       const double[::1] j_sb, Py_ssize_t out_index,
                       const double[::1] omegas, double rcond_min,
                       cplx[::1] sigma, cplx[::1] gss, cplx[::1] gtr,
                       signed char[::1] status, double[::1] rcond) nogil:
    cdef Py_ssize_t n = omega_b.shape[0]
    cdef Py_ssize_t m = omegas.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double w, anorm, colsum, ainv
    cdef cplx s, d
    cdef cplx cplx_nan = NAN + 1j * NAN
    cdef cplx* a = <cplx*> malloc(sizeof(cplx) * (n * n + 3 * n + 1))
    cdef Py_ssize_t* piv = <Py_ssize_t*> malloc(sizeof(Py_ssize_t) * (n + 1))
    cdef cplx* x = a + n * n
    cdef cplx* t1 = x + n
    cdef cplx* t2 = t1 + n
    for k in range(m):
        w = omegas[k]
        if n == 0:
            sigma[k] = 0.0
            rcond[k] = 1.0
        else:
            for i in range(n):
                for j in range(n):
                    a[i * n + j] = -j_bath[i, j]
                a[i * n + i] = (w - omega_b[i]) + 1j * gamma_b[i]
            anorm = 0.0
            for j in range(n):
                colsum = 0.0
                for i in range(n):
                    colsum += cmod(a[i * n + j])
                if colsum > anorm:
                    anorm = colsum
            if lu_factor(a, piv, n) != 0 or anorm == 0.0:
                rcond[k] = 0.0
            else:
                ainv = inv_norm1(a, piv, n, t1, t2)
                rcond[k] = 1.0 / (anorm * ainv)
            if rcond[k] < rcond_min:
                status[k] = SINGULAR_BATH
                sigma[k] = cplx_nan
                gss[k] = cplx_nan
                gtr[k] = cplx_nan
                continue
            for i in range(n):
                x[i] = j_sb[i]
            lu_solve(a, piv, x, n)
            s = 0.0
            for i in range(n):
                s = s + j_sb[i] * x[i]
            sigma[k] = s
        d = (w - omega_s) - sigma[k]
        if d == 0:
            status[k] = SYSTEM_POLE
            gss[k] = cplx_nan
            gtr[k] = cplx_nan
            continue
        status[k] = OK
        gss[k] = 1.0 / d
        if 0 <= out_index < n:
            gtr[k] = x[out_index] * gss[k]
        else:
            gtr[k] = cplx_nan
    free(a)
    free(piv)


def resolve_grid(double omega_s, omega_b, gamma_b, j_bath, j_sb,
                 Py_ssize_t out_index, omegas, double rcond_min):
    """See ``structbath.kernel.resolve_grid``."""
    cdef const double[::1] wb = np.ascontiguousarray(omega_b, dtype=np.float64)
    cdef const double[::1] gb = np.ascontiguousarray(gamma_b, dtype=np.float64)
    cdef const double[:, ::1] jb = np.ascontiguousarray(j_bath, dtype=np.float64).reshape(
        wb.shape[0], wb.shape[0])
    cdef const double[::1] js = np.ascontiguousarray(j_sb, dtype=np.float64)
    cdef const double[::1] om = np.ascontiguousarray(omegas, dtype=np.float64).ravel()
    cdef Py_ssize_t m = om.shape[0]
    sigma = np.empty(m, dtype=np.complex128)
    gss = np.empty(m, dtype=np.complex128)
    gtr = np.empty(m, dtype=np.complex128)
    status = np.zeros(m, dtype=np.int8)
    rcond = np.empty(m, dtype=np.float64)
    cdef cplx[::1] sv = sigma
    cdef cplx[::1] gv = gss
    cdef cplx[::1] tv = gtr
    cdef signed char[::1] st = status
    cdef double[::1] rc = rcond
    with nogil:
        resolve_rows(omega_s, wb, gb, jb, js, out_index, om, rcond_min,
                     sv, gv, tv, st, rc)
    return sigma, gss, gtr, status, rcond
