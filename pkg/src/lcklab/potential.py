"""The automorphic potential ``phi_lambda(z) = exp(-lambda * t(z))``.

``t`` is the orbit time to the shell, so ``phi`` equals 1 on the shell, is
scaled by ``exp(-lambda)`` under the deck map and by ``exp(-lambda*s)`` along
the flow.  First derivatives are analytic (implicit differentiation through
the root solve); the complex Hessian is one central-difference layer over
that analytic gradient.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import BracketNotPsh, StepUnderflow
from .linalg_core import Contraction, FlowGenerator
from .reports import CheckReport
from .shell import ShellSpec, raise_for_status, solve_orbits
from .tolerances import DEFAULT, ToleranceProfile


@dataclass(frozen=True)
class PotentialField:
    contraction: Contraction
    flow: FlowGenerator
    shell: ShellSpec
    lam: float
    tol: ToleranceProfile = DEFAULT
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def n(self):
        return self.flow.n

    def with_lambda(self, lam):
        return replace(self, lam=float(lam))


@dataclass(frozen=True)
class HessianSample:
    point: np.ndarray
    phi: float
    H: np.ndarray
    grad: np.ndarray
    min_eig: float
    asymmetry: float


def real_to_complex(v):
    """``(x1, y1, x2, y2, ...)`` -> ``(x1 + i y1, ...)``."""
    v = np.asarray(v, dtype=float)
    return v[..., 0::2] + 1j * v[..., 1::2]


def wirtinger_from_real_grad(g):
    """``d/dz_j = (d/dx_j - i d/dy_j) / 2`` applied to a real gradient."""
    g = np.asarray(g, dtype=float)
    return 0.5 * (g[..., 0::2] - 1j * g[..., 1::2])


def wirtinger_from_real_hessian(R):
    """Mixed Wirtinger matrix ``H_jk = d^2 / dz_j dz-bar_k`` from a real Hessian."""
    xx = R[..., 0::2, 0::2]
    yy = R[..., 1::2, 1::2]
    xy = R[..., 0::2, 1::2]
    yx = R[..., 1::2, 0::2]
    return 0.25 * (xx + yy + 1j * (xy - yx))


def _solve(P: PotentialField, Z, threads=None):
    t, gt, _, status = solve_orbits(Z, P.flow, P.shell, P.tol, threads, P.backend)
    raise_for_status(status, Z)
    return t, gt


def potential_values(P: PotentialField, Z, threads=None) -> np.ndarray:
    t, _ = _solve(P, np.atleast_2d(Z), threads)
    return np.exp(-P.lam * t)


def eval_potential(P: PotentialField, z) -> float:
    return float(potential_values(P, np.atleast_2d(z), threads=1)[0])


def potential_and_gradient(P: PotentialField, Z, threads=None):
    """``phi`` and its real gradient ``-lambda * phi * grad t`` at each row of ``Z``."""
    t, gt = _solve(P, np.atleast_2d(Z), threads)
    phi = np.exp(-P.lam * t)
    return phi, (-P.lam * phi)[:, None] * gt


def fd_steps(Z, rel_step, richardson=False):
    """Per-point step ``rel_step * max(|z|, 1)``; refuses stencils reaching 0."""
    r = np.linalg.norm(np.atleast_2d(Z), axis=1)
    h = rel_step * np.maximum(r, 1.0)
    reach = 2.0 * h if richardson else h
    if np.any(reach >= 0.5 * r):
        raise StepUnderflow("finite-difference stencil too close to the origin")
    return h


def stencil_points(Z, h, richardson=False):
    """Central-difference stencil in every real coordinate.

    Returns an array ``(N, S, 2n, n)`` with ``S = 2`` (``z + h e_a``,
    ``z - h e_a``) or ``S = 4`` when the ``2h`` points are added.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    N, n = Z.shape
    dirs = np.zeros((2 * n, n), dtype=complex)
    dirs[0::2] = np.eye(n)
    dirs[1::2] = 1j * np.eye(n)
    mults = [1.0, -1.0, 2.0, -2.0] if richardson else [1.0, -1.0]
    out = np.empty((N, len(mults), 2 * n, n), dtype=complex)
    for s, m in enumerate(mults):
        out[:, s] = Z[:, None, :] + (m * h)[:, None, None] * dirs[None]
    return out


def central_derivative(vals, h, richardson=False):
    """Derivative along each stencil axis from values shaped ``(N, S, 2n, ...)``.

    Output has shape ``(N, 2n, ...)``: entry ``a`` is the derivative with
    respect to real coordinate ``a``.
    """
    hh = h.reshape((-1,) + (1,) * (vals.ndim - 2))
    d1 = (vals[:, 0] - vals[:, 1]) / (2 * hh)
    if not richardson:
        return d1
    d2 = (vals[:, 2] - vals[:, 3]) / (4 * hh)
    return (4 * d1 - d2) / 3


@dataclass(frozen=True)
class _Stencil:
    """Orbit data at the stencil points; reusable for every ``lambda``."""

    Z: np.ndarray
    h: np.ndarray
    richardson: bool
    t0: np.ndarray
    gt0: np.ndarray
    t: np.ndarray
    gt: np.ndarray


def _stencil(P: PotentialField, Z, richardson=False, threads=None, rel_step=None):
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    N, n = Z.shape
    h = fd_steps(Z, rel_step or P.tol.fd_rel_step, richardson)
    pts = stencil_points(Z, h, richardson)
    t, gt = _solve(P, np.concatenate([Z, pts.reshape(-1, n)]), threads)
    S = pts.shape[1]
    return _Stencil(Z, h, richardson, t[:N], gt[:N],
                    t[N:].reshape(N, S, 2 * n), gt[N:].reshape(N, S, 2 * n, 2 * n))


def _assemble(st: _Stencil, lam):
    """Hessian samples for ``phi = exp(-lam t)`` from precomputed stencil data."""
    phi0 = np.exp(-lam * st.t0)
    rgrad0 = (-lam * phi0)[:, None] * st.gt0
    phis = np.exp(-lam * st.t)
    rgrads = (-lam * phis)[..., None] * st.gt
    R = central_derivative(rgrads, st.h, st.richardson)  # R[i, a, b] = d_a d_b phi
    H = wirtinger_from_real_hessian(R)
    Hs = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    norm = np.maximum(np.linalg.norm(Hs, axis=(-2, -1)), np.finfo(float).tiny)
    asym = np.linalg.norm(H - np.conj(np.swapaxes(H, -1, -2)), axis=(-2, -1)) / norm
    return phi0, wirtinger_from_real_grad(rgrad0), Hs, asym


def hessian_samples(P: PotentialField, Z, richardson=False, threads=None):
    st = _stencil(P, Z, richardson, threads)
    phi, g, H, asym = _assemble(st, P.lam)
    mins = np.linalg.eigvalsh(H)[:, 0]
    return [HessianSample(st.Z[i], float(phi[i]), H[i], g[i], float(mins[i]), float(asym[i]))
            for i in range(len(phi))]


def wirtinger_hessian(P: PotentialField, z, richardson=False) -> HessianSample:
    """Complex Hessian ``H_jk = d^2 phi / dz_j dz-bar_k`` and gradient ``d phi / dz_j``."""
    return hessian_samples(P, np.atleast_2d(z), richardson, threads=1)[0]


def _psh_report(Z, mins, margin, name="psh", details=None):
    # residual = -min_eig so that pass <=> residual <= -margin
    rep = CheckReport.from_residuals(name, -mins, 0.0 - margin, Z, values=mins, details=details)
    if rep.status == "pass" and not np.all(mins > margin):
        rep.status = "fail"
    return rep


def check_psh(P: PotentialField, samples, threads=None) -> CheckReport:
    """Pass iff the smallest Hessian eigenvalue over all samples exceeds ``psd_margin``."""
    Z = np.atleast_2d(samples)
    st = _stencil(P, Z, threads=threads)
    _, _, H, asym = _assemble(st, P.lam)
    mins = np.linalg.eigvalsh(H)[:, 0]
    return _psh_report(Z, mins, P.tol.psd_margin,
                       details={"worst_min_eig": float(mins.min()),
                                "max_asymmetry": float(asym.max()),
                                "lambda": P.lam})


@dataclass(frozen=True)
class MinLambdaResult:
    lam_star: float
    found: bool
    lo: float
    hi: float
    evaluations: int

    def to_dict(self):
        return {"lambda_star": self.lam_star, "found": self.found, "lo": self.lo,
                "hi": self.hi, "evaluations": self.evaluations}


def find_min_lambda(P: PotentialField, samples, bracket=(1e-3, 64.0), threads=None,
                    rtol=None) -> MinLambdaResult:
    """Smallest ``lambda`` (to relative ``rtol``) at which ``check_psh`` passes on ``samples``.

    Bisection is valid because raising ``phi`` to a power ``a >= 1`` adds a
    positive semidefinite ``grad phi grad phi*`` term, so the predicate is
    monotone in ``lambda``.  The threshold is empirical: it holds for the
    given samples only.  ``found`` is False when the bottom of the bracket
    already passes.
    """
    lo, hi = map(float, bracket)
    rtol = rtol or P.tol.lambda_rtol
    Z = np.atleast_2d(samples)
    st = _stencil(P, Z, threads=threads)
    margin = P.tol.psd_margin

    def passes(lam):
        mins = np.linalg.eigvalsh(_assemble(st, lam)[2])[:, 0]
        return bool(np.all(mins > margin))

    evals = 1
    if not passes(hi):
        raise BracketNotPsh(f"lambda = {hi} does not pass check_psh; enlarge the bracket")
    evals += 1
    if passes(lo):
        return MinLambdaResult(lo, False, lo, hi, evals)
    while hi - lo > rtol * hi:
        mid = np.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        evals += 1
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return MinLambdaResult(float(hi), True, float(lo), float(hi), evals)


def check_ddc_power_identity(P: PotentialField, z, a, tolerance=None, threads=None) -> CheckReport:
    """``H(phi^m) = phi^(m-2) (m phi H(phi) + m(m-1) g g*)`` with ``m = 2a``.

    ``H(phi^m)`` comes from a separate finite-difference Hessian of the field
    with ``lambda -> m lambda``; ``g`` is the Wirtinger gradient column.
    """
    if a < 1:
        raise ValueError("power identity is checked for a >= 1")
    m = 2.0 * a
    if tolerance is None:
        tolerance = P.tol.check_power_identity if a <= 2 else P.tol.check_power_identity_deep
    Z = np.atleast_2d(z)
    # Richardson keeps the truncation error well below the threshold even when
    # m * lambda is large and the Hessian of phi^m varies quickly
    base = hessian_samples(P, Z, richardson=True, threads=threads)
    power = hessian_samples(P.with_lambda(m * P.lam), Z, richardson=True, threads=threads)
    res = []
    for b, p in zip(base, power):
        g = b.grad.reshape(-1, 1)
        rhs = b.phi ** (m - 2) * (m * b.phi * b.H + m * (m - 1) * (g @ g.conj().T))
        res.append(np.linalg.norm(p.H - rhs) / np.linalg.norm(p.H))
    return CheckReport.from_residuals(f"ddc_power_a{a:g}", res, tolerance, Z,
                                      details={"a": float(a)})


def check_automorphy(P: PotentialField, z, k=1, tolerance=None, threads=None) -> CheckReport:
    """``phi(A^k z) = exp(-k lambda) phi(z)``, relative to ``phi(z)``."""
    tolerance = P.tol.check_automorphy if tolerance is None else tolerance
    Z = np.atleast_2d(np.asarray(z, dtype=complex))
    Ak = np.linalg.matrix_power(np.asarray(P.contraction.A), k)
    phi = potential_values(P, Z, threads)
    phik = potential_values(P, Z @ Ak.T, threads)
    res = np.abs(phik - np.exp(-k * P.lam) * phi) / phi
    return CheckReport.from_residuals("automorphy" if k == 1 else f"automorphy_k{k}",
                                      res, tolerance, Z, details={"k": k})


def check_lie_derivative(P: PotentialField, z, tolerance=None, step=1e-4, threads=None) -> CheckReport:
    """``d/ds phi(exp(s L) z)`` at ``s = 0`` equals ``-lambda phi(z)``."""
    tolerance = P.tol.check_lie_derivative if tolerance is None else tolerance
    Z = np.atleast_2d(np.asarray(z, dtype=complex))
    Ep = sla.expm(step * np.asarray(P.flow.L))
    Em = sla.expm(-step * np.asarray(P.flow.L))
    Ep2 = Ep @ Ep
    Em2 = Em @ Em
    phi = potential_values(P, Z, threads)
    vals = [potential_values(P, Z @ E.T, threads) for E in (Ep, Em, Ep2, Em2)]
    d = (8 * (vals[0] - vals[1]) - (vals[2] - vals[3])) / (12 * step)
    res = np.abs(d + P.lam * phi) / (P.lam * phi)
    return CheckReport.from_residuals("lie_derivative", res, tolerance, Z)


def check_power_law(P: PotentialField, z, powers=(2.0, 3.0, 0.5), tolerance=None,
                    threads=None) -> CheckReport:
    """``phi_{a lambda} = phi_lambda ** a`` relative to ``phi_{a lambda}``."""
    tolerance = P.tol.check_power_law if tolerance is None else tolerance
    Z = np.atleast_2d(z)
    phi = potential_values(P, Z, threads)
    res = np.zeros(len(Z))
    for a in powers:
        pa = potential_values(P.with_lambda(a * P.lam), Z, threads)
        res = np.maximum(res, np.abs(pa - phi ** a) / pa)
    return CheckReport.from_residuals("power_law", res, tolerance, Z,
                                      details={"powers": [float(a) for a in powers]})
