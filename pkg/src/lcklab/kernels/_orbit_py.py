"""Pure-NumPy orbit-time kernel.

Reference implementation of the compiled ``_orbit`` extension; both expose
``expm_taylor`` and ``orbit_solve`` with identical semantics and status codes.
"""
import math

import numpy as np

OK, NO_BRACKET, MAX_ITER, DEGENERATE = 0, 1, 2, 3

_EPS = np.finfo(float).eps
_TAYLOR_DEG = 18
_THETA = 0.5


def expm_taylor(M):
    """Matrix exponential by scaling and squaring of a degree-18 Taylor polynomial."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    nrm = np.abs(M).sum(axis=0).max()
    s = 0
    if nrm > _THETA:
        s = int(math.ceil(math.log2(nrm / _THETA)))
    X = M / (2.0 ** s)
    eye = np.eye(n, dtype=complex)
    R = eye.copy()
    for k in range(_TAYLOR_DEG, 0, -1):
        R = eye + (X @ R) / k
    for _ in range(s):
        R = R @ R
    return R


def _solve_one(L, excess, cgrad, E_fwd, E_bwd, z, tol, max_t, max_iter):
    """Return (t, grad_t, dG/dt, status) for one point.

    ``excess(w) = F(w) - level`` and ``cgrad(w) = dF/dz-bar`` so that
    ``dF_w(v) = 2 Re <cgrad(w), v>``.
    """
    n = z.shape[0]
    nan_grad = np.full(2 * n, np.nan)
    if not np.any(z):
        return np.nan, nan_grad, np.nan, NO_BRACKET
    g0 = excess(z)
    lo = hi = 0.0
    g_lo = g_hi = g0
    w = z
    if g0 < 0.0:
        while g_hi < 0.0:
            if hi >= max_t:
                return np.nan, nan_grad, np.nan, NO_BRACKET
            lo, g_lo = hi, g_hi
            w = E_fwd @ w
            hi += 1.0
            g_hi = excess(w)
    elif g0 > 0.0:
        while g_lo > 0.0:
            if -lo >= max_t:
                return np.nan, nan_grad, np.nan, NO_BRACKET
            hi, g_hi = lo, g_lo
            w = E_bwd @ w
            lo -= 1.0
            g_lo = excess(w)

    if g_lo == 0.0:
        t = lo
    elif g_hi == 0.0:
        t = hi
    else:
        t = lo - g_lo * (hi - lo) / (g_hi - g_lo)
    status = MAX_ITER
    for _ in range(max_iter):
        E = expm_taylor(-t * L)
        w = E @ z
        g = excess(w)
        gam = cgrad(w)
        dg = -2.0 * np.vdot(gam, L @ w).real
        if abs(g) <= tol and abs(g) <= 8.0 * _EPS:
            status = OK
            break
        if g < 0.0:
            lo = t
        else:
            hi = t
        if hi - lo <= 4.0 * _EPS * max(1.0, abs(t)):
            status = OK if abs(g) <= tol else MAX_ITER
            break
        t_new = t - g / dg if dg > 0.0 else np.nan
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if t_new == t:
            status = OK if abs(g) <= tol else MAX_ITER
            break
        t = t_new
    else:
        status = OK if abs(g) <= tol else MAX_ITER
    if status != OK:
        return t, nan_grad, dg, status
    if not dg > 0.0:
        return t, nan_grad, dg, DEGENERATE
    c = E.conj().T @ gam
    grad = np.empty(2 * n)
    grad[0::2] = c.real
    grad[1::2] = c.imag
    grad *= -2.0 / dg
    return t, grad, dg, OK


def solve_generic(L, excess, cgrad, Z, tol_root=1e-13, max_t=200.0, max_iter=100):
    """``orbit_solve`` for an arbitrary defining function given as callables."""
    L = np.asarray(L, dtype=complex)
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    N, n = Z.shape
    E_fwd = expm_taylor(-L)
    E_bwd = expm_taylor(L)
    t = np.empty(N)
    grad = np.empty((N, 2 * n))
    dgdt = np.empty(N)
    status = np.empty(N, dtype=np.int8)
    for i in range(N):
        t[i], grad[i], dgdt[i], status[i] = _solve_one(
            L, excess, cgrad, E_fwd, E_bwd, Z[i], tol_root, max_t, max_iter)
    return t, grad, dgdt, status


def orbit_solve(L, P, Z, tol_root=1e-13, max_t=200.0, max_iter=100):
    """Orbit times ``t`` with ``F(exp(-t L) z) = 1`` for every row ``z`` of ``Z``.

    ``F(w) = w* P w``.  Returns ``(t, grad_t, dGdt, status)`` where ``grad_t``
    is the real gradient of ``t`` in ``(Re z1, Im z1, ...)`` ordering.
    """
    P = np.ascontiguousarray(P, dtype=complex)
    return solve_generic(L, lambda w: np.vdot(w, P @ w).real - 1.0, lambda w: P @ w,
                         Z, tol_root, max_t, max_iter)
