"""Canonical Reeb candidate and the Vaisman criterion for diagonalizable ``A``.

In an eigenbasis ``Q`` of ``A`` the candidate field is ``xi_z = xi @ z`` with
``xi = Q (i diag(log|alpha_j|)) Q^-1``.  The criterion asks that ``xi``
commutes with ``A`` and that ``exp(-I xi) . gamma(1)``, realized as
``U = A_abs A^-1``, preserves the shell.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoiseDominated, NonConstantRatio, NotDiagonalizable, NotOnShell
from .lck_forms import metric, outer_steps
from .linalg_core import Contraction
from .potential import (PotentialField, _assemble, _stencil, central_derivative,
                        potential_and_gradient, potential_values, stencil_points)
from .reports import CheckReport
from .shell import ShellSpec
from .tolerances import DEFAULT


@dataclass
class VaismanCandidate:
    xi: Optional[np.ndarray]
    unitary_part: Optional[np.ndarray]
    verdict: str
    reasons: list = field(default_factory=list)
    commutation: float = float("nan")
    unitarity: float = float("nan")
    shell_residual: float = float("nan")
    c: Optional[float] = None
    c_prime: Optional[float] = None

    def to_dict(self):
        return {"verdict": self.verdict, "reasons": list(self.reasons),
                "commutation": self.commutation, "unitarity": self.unitarity,
                "shell_residual": self.shell_residual, "c": self.c, "c_prime": self.c_prime}


def canonical_xi(C: Contraction) -> np.ndarray:
    if not C.diagonalizable:
        raise NotDiagonalizable("xi is only defined in an eigenbasis of A")
    Q = np.asarray(C.Q)
    return Q @ np.diag(1j * np.log(np.abs(C.eigenvalues))) @ np.linalg.inv(Q)


def real_part_log(C: Contraction) -> np.ndarray:
    """``Re log A = Q diag(log|alpha_j|) Q^-1``, the generator of ``-I xi``."""
    return -1j * canonical_xi(C)


def check_vaisman_criterion(C: Contraction, S: ShellSpec, xi=None, tol=1e-10,
                            shell_samples=None) -> VaismanCandidate:
    """Invariance of ``xi`` under ``A``, unitarity of ``U = A_abs A^-1`` and
    preservation of ``S`` by ``U``.

    Non-diagonalizable ``A`` gives ``inapplicable``: only the canonical
    candidate is tested, so nothing is claimed about other fields.
    """
    if not C.diagonalizable:
        return VaismanCandidate(None, None, "inapplicable",
                                ["NotDiagonalizable: no canonical xi for this A"])
    xi = canonical_xi(C) if xi is None else np.asarray(xi, dtype=complex)
    A = np.asarray(C.A)
    U = np.asarray(C.A_abs) @ np.linalg.inv(A)
    I = np.eye(C.n)
    comm = float(np.linalg.norm(A @ xi - xi @ A))
    unit = float(np.linalg.norm(U.conj().T @ U - I))
    if S.quadratic:
        if S.kind == "sphere":
            shell_res = unit
        else:
            Pm = np.asarray(S.P)
            shell_res = float(np.linalg.norm(U.conj().T @ Pm @ U - Pm) / np.linalg.norm(Pm))
    else:
        pts = shell_samples if shell_samples is not None else _random_points(C.n, 64)
        shell_res = float(max(abs(S.value(U @ z) - S.value(z)) / max(abs(S.value(z)), 1.0)
                              for z in np.atleast_2d(pts)))
    reasons = []
    if comm > tol:
        reasons.append(f"xi does not commute with A ({comm:.3e})")
    if unit > tol:
        reasons.append(f"A_abs A^-1 is not unitary ({unit:.3e})")
    if shell_res > tol:
        reasons.append(f"A_abs A^-1 does not preserve the shell ({shell_res:.3e})")
    verdict = "satisfied" if not reasons else "violated"
    return VaismanCandidate(xi, U, verdict, reasons, comm, unit, shell_res)


def _random_points(n, count, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))


@dataclass(frozen=True)
class HomothetyConstants:
    """``c``: log-derivative of ``phi`` along ``-I xi``; ``c_prime``: log of the
    deck-map factor; ``kappa``: rescale ``lambda -> kappa lambda`` making
    ``c = 1/c_prime`` (NaN when ``c c_prime <= 0``)."""

    c: float
    c_prime: float
    kappa: float
    c_spread: float

    def to_dict(self):
        return {"c": self.c, "c_prime": self.c_prime, "kappa": self.kappa,
                "c_spread": self.c_spread}


def homothety_constants(P: PotentialField, xi, samples, rtol=1e-6) -> HomothetyConstants:
    Z = np.atleast_2d(np.asarray(samples, dtype=complex))
    X = -1j * np.asarray(xi)  # the -I xi field is z -> (Re log A) z
    phi, g = potential_and_gradient(P, Z)
    V = Z @ X.T
    vr = np.empty((len(Z), 2 * Z.shape[1]))
    vr[:, 0::2] = V.real
    vr[:, 1::2] = V.imag
    cs = np.einsum("ij,ij->i", g, vr) / phi
    c = float(np.mean(cs))
    spread = float(np.max(np.abs(cs - c)) / max(abs(c), np.finfo(float).tiny))
    if spread > rtol:
        raise NonConstantRatio(f"Lie derivative ratio varies by {spread:.3e}")
    A = np.asarray(P.contraction.A)
    cp = float(np.mean(np.log(potential_values(P, Z @ A.T) / phi)))
    prod = c * cp
    kappa = float(1.0 / np.sqrt(prod)) if prod > 0 else float("nan")
    return HomothetyConstants(c, cp, kappa, spread)


def check_reeb_transversal(xi, S: ShellSpec, z, tol=DEFAULT) -> CheckReport:
    """``xi`` tangent to ``S`` at ``z`` and ``I xi`` transversal to it."""
    z = np.asarray(z, dtype=complex)
    if abs(S.value(z) - S.level) > tol.tol_shell * max(1.0, abs(S.level)):
        raise NotOnShell(f"F(z) = {S.value(z)!r}, expected {S.level}")
    gam = S.cgrad(z)
    v = np.asarray(xi) @ z
    tangency = abs(2.0 * np.vdot(gam, v).real)
    transversal = abs(2.0 * np.vdot(gam, 1j * v).real)
    scale = 2.0 * np.linalg.norm(gam) * np.linalg.norm(v)
    ok = tangency <= 1e-8 * scale and transversal > 1e-8 * scale and transversal > 0
    return CheckReport("reeb_transversal", "pass" if ok else "fail", tangency, 1e-8 * scale,
                       {"point": [[float(c.real), float(c.imag)] for c in z],
                        "value": transversal},
                       details={"tangency": tangency, "transversality": transversal})


def christoffel(g, dg):
    """``Gamma^c_ab`` from ``g`` and ``dg[a, b, c] = d_a g_bc``."""
    ginv = np.linalg.inv(g)
    lower = 0.5 * (dg + np.transpose(dg, (1, 0, 2)) - np.transpose(dg, (1, 2, 0)))
    # lower[a, b, d] = (d_a g_bd + d_b g_ad - d_d g_ab) / 2
    return np.einsum("cd,abd->cab", ginv, lower)


def lee_parallel_residuals(P: PotentialField, Z, outer_scale=1.0, threads=None):
    """``|z| ||nabla theta|| / ||theta||`` for the metric of ``omega = omega_tilde/phi``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    N, n = Z.shape
    st = _stencil(P, Z, threads=threads)
    theta = P.lam * st.gt0
    J = central_derivative(P.lam * st.gt, st.h)  # J[i, a, b] = d_a theta_b
    h = outer_steps(P, Z, outer_scale, threads)
    pts = stencil_points(Z, h, richardson=True)
    so = _stencil(P, pts.reshape(-1, n), threads=threads)
    phis, _, Hs, _ = _assemble(so, P.lam)
    gs = metric(Hs / phis[:, None, None]).reshape(pts.shape[:3] + (2 * n, 2 * n))
    dg = central_derivative(gs, h, richardson=True)
    _, _, H0, _ = _assemble(st, P.lam)
    g0 = metric(H0 / np.exp(-P.lam * st.t0)[:, None, None])
    res = np.empty(N)
    for i in range(N):
        Gam = christoffel(g0[i], dg[i])
        nab = J[i] - np.einsum("cab,c->ab", Gam, theta[i])
        res[i] = np.linalg.norm(nab) * np.linalg.norm(Z[i]) / np.linalg.norm(theta[i])
    return res


def check_lee_parallel(P: PotentialField, samples, tolerance=None, threads=None) -> CheckReport:
    """Evidence (not proof) that the Lee form is parallel.

    Two stacked finite-difference layers; the result is withheld when the
    outer layer at ``h`` and ``2h`` disagrees by more than half the tolerance.
    """
    tolerance = P.tol.check_lee_parallel if tolerance is None else tolerance
    Z = np.atleast_2d(samples)
    if Z.shape[1] != 2:
        raise ValueError("check_lee_parallel supports n = 2")
    r1 = lee_parallel_residuals(P, Z, 1.0, threads)
    r2 = lee_parallel_residuals(P, Z, 2.0, threads)
    quality = float(np.max(np.abs(r1 - r2)))
    rep = CheckReport.from_residuals("lee_parallel", r1, tolerance, Z,
                                     details={"fd_quality": quality})
    if quality > 0.5 * tolerance and quality > 0.1 * rep.residual:
        rep.status = "withheld"
        rep.details["reason"] = str(NoiseDominated(f"FD quality {quality:.3e}"))
    return rep
