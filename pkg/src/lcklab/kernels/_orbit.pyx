# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit-time kernel (mirrors ``_orbit_py``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, ceil, log2, NAN, ldexp
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cnp.import_array()

cdef extern from "complex.h" nogil:
    double creal(double complex)
    double cimag(double complex)
    double complex conj(double complex)

cdef enum:
    OK = 0
    NO_BRACKET = 1
    MAX_ITER = 2
    DEGENERATE = 3
    TAYLOR_DEG = 18

cdef double EPS = np.finfo(float).eps
cdef double THETA = 0.5


cdef inline void matmul(const double complex* A, const double complex* B,
                        double complex* C, int n) noexcept nogil:
    cdef int i, j, k
    cdef double complex s
    for i in range(n):
        for j in range(n):
            s = 0
            for k in range(n):
                s = s + A[i * n + k] * B[k * n + j]
            C[i * n + j] = s


cdef inline void matvec(const double complex* A, const double complex* x,
                        double complex* y, int n) noexcept nogil:
    cdef int i, k
    cdef double complex s
    for i in range(n):
        s = 0
        for k in range(n):
            s = s + A[i * n + k] * x[k]
        y[i] = s


cdef void expm_c(const double complex* M, double complex* R,
                 double complex* X, double complex* tmp, int n) noexcept nogil:
    """Same scaling-and-squaring Taylor scheme as ``_orbit_py.expm_taylor``."""
    cdef int i, j, k, s = 0
    cdef double nrm = 0.0, col
    for j in range(n):
        col = 0.0
        for i in range(n):
            col = col + abs(M[i * n + j])
        if col > nrm:
            nrm = col
    if nrm > THETA:
        s = <int> ceil(log2(nrm / THETA))
    cdef double scale = ldexp(1.0, -s)
    for i in range(n * n):
        X[i] = M[i] * scale
        R[i] = 0
    for i in range(n):
        R[i * n + i] = 1
    for k in range(TAYLOR_DEG, 0, -1):
        matmul(X, R, tmp, n)
        for i in range(n * n):
            R[i] = tmp[i] / k
        for i in range(n):
            R[i * n + i] = R[i * n + i] + 1
    for k in range(s):
        matmul(R, R, tmp, n)
        memcpy(R, tmp, n * n * sizeof(double complex))


cdef inline double shell_value(const double complex* P, const double complex* w,
                               double complex* tmp, int n) noexcept nogil:
    cdef int i
    cdef double complex s = 0
    matvec(P, w, tmp, n)
    for i in range(n):
        s = s + conj(w[i]) * tmp[i]
    return creal(s)


cdef int solve_one(const double complex* L, const double complex* P,
                   const double complex* PL, const double complex* Efwd,
                   const double complex* Ebwd, const double complex* z, int n,
                   double tol, double max_t, int max_iter,
                   double* t_out, double* grad, double* dg_out,
                   double complex* work) noexcept nogil:
    cdef double complex* w = work
    cdef double complex* w2 = work + n
    cdef double complex* v = work + 2 * n
    cdef double complex* M = work + 3 * n
    cdef double complex* E = M + n * n
    cdef double complex* X = E + n * n
    cdef double complex* tmp = X + n * n
    cdef int i, it, status
    cdef double g0, lo, hi, g_lo, g_hi, t, g = NAN, dg = NAN, t_new
    cdef double complex s
    cdef bint nonzero = False

    for i in range(2 * n):
        grad[i] = NAN
    for i in range(n):
        if z[i] != 0:
            nonzero = True
    if not nonzero:
        t_out[0] = NAN
        dg_out[0] = NAN
        return NO_BRACKET

    g0 = shell_value(P, z, v, n) - 1.0
    lo = 0.0
    hi = 0.0
    g_lo = g0
    g_hi = g0
    memcpy(w, z, n * sizeof(double complex))
    if g0 < 0.0:
        while g_hi < 0.0:
            if hi >= max_t:
                t_out[0] = NAN
                dg_out[0] = NAN
                return NO_BRACKET
            lo = hi
            g_lo = g_hi
            matvec(Efwd, w, w2, n)
            memcpy(w, w2, n * sizeof(double complex))
            hi = hi + 1.0
            g_hi = shell_value(P, w, v, n) - 1.0
    elif g0 > 0.0:
        while g_lo > 0.0:
            if -lo >= max_t:
                t_out[0] = NAN
                dg_out[0] = NAN
                return NO_BRACKET
            hi = lo
            g_hi = g_lo
            matvec(Ebwd, w, w2, n)
            memcpy(w, w2, n * sizeof(double complex))
            lo = lo - 1.0
            g_lo = shell_value(P, w, v, n) - 1.0

    if g_lo == 0.0:
        t = lo
    elif g_hi == 0.0:
        t = hi
    else:
        t = lo - g_lo * (hi - lo) / (g_hi - g_lo)

    status = MAX_ITER
    it = 0
    while it < max_iter:
        it += 1
        for i in range(n * n):
            M[i] = -t * L[i]
        expm_c(M, E, X, tmp, n)
        matvec(E, z, w, n)
        g = shell_value(P, w, v, n) - 1.0
        matvec(PL, w, v, n)
        s = 0
        for i in range(n):
            s = s + conj(w[i]) * v[i]
        dg = -2.0 * creal(s)
        if fabs(g) <= tol and fabs(g) <= 8.0 * EPS:
            status = OK
            break
        if g < 0.0:
            lo = t
        else:
            hi = t
        if hi - lo <= 4.0 * EPS * (fabs(t) if fabs(t) > 1.0 else 1.0):
            status = OK if fabs(g) <= tol else MAX_ITER
            break
        if dg > 0.0:
            t_new = t - g / dg
        else:
            t_new = NAN
        if not (lo < t_new and t_new < hi):
            t_new = 0.5 * (lo + hi)
        if t_new == t:
            status = OK if fabs(g) <= tol else MAX_ITER
            break
        t = t_new
    else:
        status = OK if fabs(g) <= tol else MAX_ITER

    t_out[0] = t
    dg_out[0] = dg
    if status != OK:
        return status
    if not dg > 0.0:
        return DEGENERATE
    # c = E* P w
    matvec(P, w, v, n)
    for i in range(n):
        s = 0
        for it in range(n):
            s = s + conj(E[it * n + i]) * v[it]
        grad[2 * i] = -2.0 * creal(s) / dg
        grad[2 * i + 1] = -2.0 * cimag(s) / dg
    return OK


def expm_taylor(M):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] A = np.ascontiguousarray(M, dtype=complex)
    cdef int n = A.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] R = np.empty((n, n), dtype=complex)
    cdef double complex* X = <double complex*> malloc(2 * n * n * sizeof(double complex))
    if X == NULL:
        raise MemoryError()
    try:
        expm_c(<double complex*> A.data, <double complex*> R.data, X, X + n * n, n)
    finally:
        free(X)
    return R


def orbit_solve(L, P, Z, double tol_root=1e-13, double max_t=200.0, int max_iter=100):
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] Lc = np.ascontiguousarray(L, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] Pc = np.ascontiguousarray(P, dtype=complex)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] Zc = np.ascontiguousarray(np.atleast_2d(Z), dtype=complex)
    cdef int N = Zc.shape[0], n = Zc.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] PL = np.ascontiguousarray(Pc @ Lc)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] Ef = np.ascontiguousarray(expm_taylor(-Lc))
    cdef cnp.ndarray[cnp.complex128_t, ndim=2, mode="c"] Eb = np.ascontiguousarray(expm_taylor(Lc))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t = np.empty(N)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] grad = np.empty((N, 2 * n))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dg = np.empty(N)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] status = np.empty(N, dtype=np.int8)
    cdef double complex* work = <double complex*> malloc((3 * n + 4 * n * n) * sizeof(double complex))
    cdef int i
    cdef double complex* Lp = <double complex*> Lc.data
    cdef double complex* Pp = <double complex*> Pc.data
    cdef double complex* PLp = <double complex*> PL.data
    cdef double complex* Efp = <double complex*> Ef.data
    cdef double complex* Ebp = <double complex*> Eb.data
    cdef double complex* Zp = <double complex*> Zc.data
    cdef double* tp = <double*> t.data
    cdef double* gp = <double*> grad.data
    cdef double* dgp = <double*> dg.data
    cdef signed char* sp = <signed char*> status.data
    if work == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(N):
                sp[i] = <signed char> solve_one(Lp, Pp, PLp, Efp, Ebp, Zp + i * n, n,
                                                tol_root, max_t, max_iter,
                                                tp + i, gp + i * 2 * n, dgp + i, work)
    finally:
        free(work)
    return t, grad, dg, status
