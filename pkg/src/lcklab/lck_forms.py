"""Kähler form on the cover, LCK form and Lee form, with finite-difference
checks of the LCK identities.

Dictionary between representations (used everywhere below):

* ``omega_tilde`` is the mixed Wirtinger Hessian ``H`` of ``phi``; as a real
  2-form it is ``i sum H_jk dz_j ^ dz-bar_k``, whose components in the real
  basis ``(x1, y1, x2, y2, ...)`` are ``Omega = -2 Im(U H U*)``, and the
  associated metric is ``g = 2 Re(U H U*)`` (``U`` maps real basis vectors to
  complex vectors).
* ``omega = omega_tilde / phi`` and ``theta = -d log phi = lambda dt``, so
  ``d omega = theta ^ omega`` and ``d theta = 0``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionUnsupported
from .potential import (PotentialField, _assemble, _stencil, central_derivative,
                        stencil_points)
from .reports import CheckReport
from .shell import raise_for_status, solve_orbits


def real_basis(n):
    """``U`` with row ``a`` the complex vector of real basis vector ``a``."""
    U = np.zeros((2 * n, n), dtype=complex)
    U[0::2] = np.eye(n)
    U[1::2] = 1j * np.eye(n)
    return U


def real_matrix(A):
    """``2n x 2n`` real matrix of the complex-linear map ``A``."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    R = np.empty((2 * n, 2 * n))
    R[0::2, 0::2] = A.real
    R[0::2, 1::2] = -A.imag
    R[1::2, 0::2] = A.imag
    R[1::2, 1::2] = A.real
    return R


def two_form(H):
    """Real antisymmetric component matrix of the (1,1)-form of ``H``."""
    U = real_basis(H.shape[-1])
    return -2.0 * (U @ H @ U.conj().T).imag


def metric(H):
    U = real_basis(H.shape[-1])
    return 2.0 * (U @ H @ U.conj().T).real


def d_two_form(dOmega):
    """``(d omega)_abc`` from ``dOmega[a, b, c] = d_a Omega_bc``."""
    return (dOmega + np.transpose(dOmega, (1, 2, 0)) + np.transpose(dOmega, (2, 0, 1)))


def wedge_1_2(theta, Omega):
    """``(theta ^ omega)_abc`` for a 1-form and an antisymmetric 2-form."""
    T = np.einsum("a,bc->abc", theta, Omega)
    return T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))


@dataclass(frozen=True)
class FormSample:
    point: np.ndarray
    phi: float
    omega_tilde: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    automorphy_factor: float


@dataclass(frozen=True)
class ExteriorResidual:
    point: np.ndarray
    residual_norm: float
    tolerance: float
    form_degree: int

    @property
    def passed(self):
        return self.residual_norm <= self.tolerance


def form_samples(P: PotentialField, Z, threads=None, richardson=False):
    st = _stencil(P, Z, richardson, threads)
    phi, _, H, _ = _assemble(st, P.lam)
    theta = P.lam * st.gt0
    c = float(np.exp(-P.lam))
    return [FormSample(st.Z[i], float(phi[i]), H[i], H[i] / phi[i], theta[i], c)
            for i in range(len(phi))]


def form_sample(P: PotentialField, z) -> FormSample:
    return form_samples(P, np.atleast_2d(z), threads=1)[0]


def dtheta_residuals(P: PotentialField, Z, threads=None, richardson=False):
    """``|z| ||J - J^T|| / ||theta||`` with ``J`` the FD Jacobian of ``theta``."""
    st = _stencil(P, Z, richardson, threads)
    J = central_derivative(P.lam * st.gt, st.h, richardson)
    theta = P.lam * st.gt0
    r = np.linalg.norm(st.Z, axis=1)
    asym = np.linalg.norm(J - np.swapaxes(J, 1, 2), axis=(1, 2))
    return asym * r / np.linalg.norm(theta, axis=1)


def check_dtheta_zero(P: PotentialField, z, tolerance=None, threads=None) -> CheckReport:
    """Antisymmetric part of the FD Jacobian of ``theta`` (``theta`` is closed)."""
    tolerance = P.tol.check_dtheta if tolerance is None else tolerance
    Z = np.atleast_2d(z)
    return CheckReport.from_residuals("dtheta_zero", dtheta_residuals(P, Z, threads),
                                      tolerance, Z)


def outer_steps(P: PotentialField, Z, scale=1.0, threads=None):
    """Outer-layer step ``fd_outer_step * min(|z|, 1/|theta|)``.

    ``1/|theta|`` is the length over which ``log phi`` changes by one, so the
    step follows the potential when ``lambda`` is large.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    t, gt, _, status = solve_orbits(Z, P.flow, P.shell, P.tol, threads, P.backend)
    raise_for_status(status, Z)
    length = np.minimum(np.linalg.norm(Z, axis=1), 1.0 / (P.lam * np.linalg.norm(gt, axis=1)))
    return scale * P.tol.fd_outer_step * length


def _outer_layer(P: PotentialField, Z, threads=None):
    """Potential, Hessians and Lee forms at an outer 5-point stencil.

    Returns ``(h, inner)`` where ``inner`` holds ``phi``, ``H`` and
    ``theta`` shaped ``(N, 4, 2n, ...)`` over the outer stencil.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    N, n = Z.shape
    h = outer_steps(P, Z, threads=threads)
    pts = stencil_points(Z, h, richardson=True)
    st = _stencil(P, pts.reshape(-1, n), threads=threads)
    phi, _, H, _ = _assemble(st, P.lam)
    shape = pts.shape[:3]
    return h, (phi.reshape(shape), H.reshape(shape + (n, n)),
               (P.lam * st.gt0).reshape(shape + (2 * n,)))


def lck_identity_residuals(P: PotentialField, Z, threads=None):
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if Z.shape[1] > 3:
        raise DimensionUnsupported("d omega = theta ^ omega is checked for n <= 3")
    h, (phis, Hs, _) = _outer_layer(P, Z, threads)
    omegas = two_form(Hs) / phis[..., None, None]
    dOmega = central_derivative(omegas, h, richardson=True)
    centre = form_samples(P, Z, threads)
    res = np.empty(len(Z))
    for i, fs in enumerate(centre):
        lhs = d_two_form(dOmega[i])
        rhs = wedge_1_2(fs.theta, two_form(fs.omega))
        res[i] = np.abs(lhs - rhs).max() / np.abs(rhs).max()
    return res


def check_lck_identity(P: PotentialField, z, tolerance=None, threads=None) -> CheckReport:
    """Finite-difference ``d omega`` against ``theta ^ omega`` (max-component relative)."""
    tolerance = P.tol.check_lck_identity if tolerance is None else tolerance
    Z = np.atleast_2d(z)
    return CheckReport.from_residuals("lck_identity", lck_identity_residuals(P, Z, threads),
                                      tolerance, Z)


def check_gamma_pullback(P: PotentialField, z, k=1, tolerance=None, threads=None) -> CheckReport:
    """Deck-map pullbacks: ``gamma* omega_tilde = exp(-k lambda) omega_tilde`` and
    ``gamma* omega = omega``, plus the measured homothety factor and the
    invariance of ``theta``."""
    tolerance = P.tol.check_pullback if tolerance is None else tolerance
    Z = np.atleast_2d(np.asarray(z, dtype=complex))
    A = np.linalg.matrix_power(np.asarray(P.contraction.A), k)
    # Richardson: the measured factor must be constant to ~1e-8
    here = form_samples(P, Z, threads, richardson=True)
    there = form_samples(P, Z @ A.T, threads, richardson=True)
    c = np.exp(-k * P.lam)
    AR = real_matrix(A)
    res_t, res_o, factor_err, theta_err = [], [], [], []
    for a, b in zip(here, there):
        pt = A.T @ b.omega_tilde @ A.conj()
        po = A.T @ b.omega @ A.conj()
        nt = np.linalg.norm(a.omega_tilde)
        res_t.append(np.linalg.norm(pt - c * a.omega_tilde) / (c * nt))
        res_o.append(np.linalg.norm(po - a.omega) / np.linalg.norm(a.omega))
        measured = np.vdot(a.omega_tilde, pt).real / nt ** 2
        factor_err.append(abs(measured - c) / c)
        theta_err.append(np.linalg.norm(b.theta @ AR - a.theta) / np.linalg.norm(a.theta))
    res = np.maximum(res_t, res_o)
    return CheckReport.from_residuals(
        "gamma_pullback" if k == 1 else f"gamma_pullback_k{k}", res, tolerance, Z,
        details={"max_omega_tilde_residual": float(np.max(res_t)),
                 "max_omega_residual": float(np.max(res_o)),
                 "max_factor_error": float(np.max(factor_err)),
                 "max_theta_invariance": float(np.max(theta_err)),
                 "factor": float(c)})
