"""Pseudoconvex shells: level sets meeting every flow orbit once.

A shell is ``S = {F = level}``.  Quadratic shells ``F(z) = z* P z`` get a
provable one-crossing certificate and use the compiled orbit-time kernel;
custom shells supply ``F`` and ``dF/dz-bar`` as callables and are certified
empirically along sampled orbits.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import (DegenerateCrossing, DegenerateGradient, Inadmissible,
                     MaxIterations, NoBracket, NotOnShell)
from .linalg_core import FlowGenerator, HermitianForm, min_eig_hermitian, solve_lyapunov
from .parallel import map_rows
from .tolerances import DEFAULT, ToleranceProfile


@dataclass(frozen=True)
class ShellSpec:
    kind: str
    n: int
    P: Optional[np.ndarray] = None
    level: float = 1.0
    F: Optional[Callable] = field(default=None, compare=False)
    dF: Optional[Callable] = field(default=None, compare=False)
    levi_matrix: Optional[Callable] = field(default=None, compare=False)

    @classmethod
    def sphere(cls, n):
        P = np.eye(n, dtype=complex)
        P.setflags(write=False)
        return cls("sphere", n, P)

    @classmethod
    def ellipsoid(cls, P):
        P = HermitianForm.from_matrix(P).H
        if min_eig_hermitian(P) <= 0:
            raise ValueError("ellipsoid matrix must be positive definite")
        return cls("ellipsoid", P.shape[0], P)

    @classmethod
    def custom(cls, n, F, dF, levi_matrix=None, level=1.0):
        """``dF(z)`` returns ``dF/dz-bar``; ``levi_matrix(z)`` returns ``M`` with
        Levi form ``v* M v`` (finite differences of ``dF`` when omitted)."""
        return cls("custom", n, None, float(level), F, dF, levi_matrix)

    @property
    def quadratic(self) -> bool:
        return self.kind in ("sphere", "ellipsoid")

    def value(self, z):
        z = np.asarray(z, dtype=complex)
        if self.quadratic:
            return float(np.vdot(z, self.P @ z).real)
        return float(self.F(z))

    def cgrad(self, z):
        z = np.asarray(z, dtype=complex)
        if self.quadratic:
            return self.P @ z
        return np.asarray(self.dF(z), dtype=complex)

    def levi_form_matrix(self, z, rel_step=DEFAULT.fd_rel_step):
        """``M`` with Levi form ``v* M v`` (the complex Hessian of ``F``)."""
        if self.quadratic:
            return np.array(self.P)
        if self.levi_matrix is not None:
            return np.asarray(self.levi_matrix(z), dtype=complex)
        z = np.asarray(z, dtype=complex)
        h = rel_step * max(np.linalg.norm(z), 1.0)
        K = np.empty((self.n, self.n), dtype=complex)
        for a in range(self.n):
            e = np.zeros(self.n, dtype=complex)
            e[a] = h
            dx = (self.cgrad(z + e) - self.cgrad(z - e)) / (2 * h)
            dy = (self.cgrad(z + 1j * e) - self.cgrad(z - 1j * e)) / (2 * h)
            K[:, a] = 0.5 * (dx - 1j * dy)
        M = K.conj().T
        return 0.5 * (M + M.conj().T)

    def describe(self):
        out = {"type": self.kind, "level": self.level}
        if self.P is not None:
            out["P"] = [[[float(x.real), float(x.imag)] for x in row] for row in self.P]
        return out


@dataclass(frozen=True)
class AdmissibilityCertificate:
    """``margin``: top eigenvalue of the Hermitian part ``(P L + L* P)/2``
    (quadratic shells) or the worst sampled crossing surplus (empirical).
    ``decay_rate``: top generalized eigenvalue of ``(P L + L* P, P)``, the
    sharpest bound on ``d/dt log F`` along the flow."""

    mode: str
    margin: float
    samples_checked: int
    passed: bool
    decay_rate: float = float("nan")

    def to_dict(self):
        return {"mode": self.mode, "margin": self.margin, "decay_rate": self.decay_rate,
                "samples_checked": self.samples_checked, "passed": self.passed}


@dataclass(frozen=True)
class LeviCert:
    point: np.ndarray
    basis: np.ndarray
    form: np.ndarray
    min_eig: float

    @property
    def passed(self) -> bool:
        return self.min_eig > 0


def levi_check(S: ShellSpec, p, tol: ToleranceProfile = DEFAULT) -> LeviCert:
    """Levi form of ``S`` at ``p`` restricted to the complex tangent space."""
    p = np.asarray(p, dtype=complex)
    if abs(S.value(p) - S.level) > tol.tol_shell * max(1.0, abs(S.level)):
        raise NotOnShell(f"F(p) = {S.value(p)!r}, expected {S.level}")
    g = S.cgrad(p)
    gn = np.linalg.norm(g)
    if gn <= 1e3 * np.finfo(float).eps * max(1.0, np.linalg.norm(p)):
        raise DegenerateGradient("dF vanishes at p")
    Q, _ = np.linalg.qr((g / gn).reshape(-1, 1), mode="complete")
    B = Q[:, 1:]
    M = S.levi_form_matrix(p, tol.fd_rel_step)
    form = B.conj().T @ M @ B
    form = 0.5 * (form + form.conj().T)
    return LeviCert(p, B, form, float(np.linalg.eigvalsh(form)[0]))


def _flow_L(flow):
    return flow.L if isinstance(flow, FlowGenerator) else np.asarray(flow, dtype=complex)


def _empirical_crossings(S, L, rng, count, step=1.0 / 16, max_t=DEFAULT.max_flow_time):
    """Number of sign changes of ``F - level`` along each of ``count`` sampled orbits."""
    n = L.shape[0]
    E_up = kernels.expm_taylor(-step * L)
    E_dn = kernels.expm_taylor(step * L)
    counts = []
    for _ in range(count):
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        z /= np.linalg.norm(z)
        vals = []
        w = z.copy()
        for _k in range(int(max_t / step)):
            vals.append(S.value(w) - S.level)
            if np.linalg.norm(w) > 1e6 and vals[-1] > 0:
                break
            w = E_up @ w
        down = []
        w = E_dn @ z
        for _k in range(int(max_t / step)):
            down.append(S.value(w) - S.level)
            if np.linalg.norm(w) < 1e-6 and down[-1] < 0:
                break
            w = E_dn @ w
        seq = np.sign(np.array(down[::-1] + vals))
        seq = seq[seq != 0]
        crossings = int(np.count_nonzero(seq[1:] != seq[:-1]))
        if seq.size == 0 or seq[0] > 0 or seq[-1] < 0:
            crossings = 0  # orbit never enters or never leaves the body
        counts.append(crossings)
    return np.array(counts)


def admissibility_check(S: ShellSpec, flow, tol: ToleranceProfile = DEFAULT,
                        samples=64, seed=0) -> AdmissibilityCertificate:
    """Certify that every flow orbit crosses ``S`` exactly once.

    Quadratic shells pass in ``hermitian_part`` mode iff ``P L + L* P`` is
    negative definite, which makes ``t -> F(exp(t L) z)`` strictly decreasing.
    Otherwise sign changes of ``F - level`` are counted along ``samples``
    random orbits.  Raises :class:`Inadmissible` (carrying the certificate)
    when both modes fail.
    """
    L = _flow_L(flow)
    if S.quadratic:
        P = S.P
        K = P @ L + L.conj().T @ P
        K = 0.5 * (K + K.conj().T)
        Hp = 0.5 * K
        margin = float(np.linalg.eigvalsh(Hp)[-1])
        Pinv_half = np.linalg.inv(np.linalg.cholesky(P))
        rate = float(np.linalg.eigvalsh(Pinv_half @ K @ Pinv_half.conj().T)[-1])
        cert = AdmissibilityCertificate("hermitian_part", margin, 0, margin < 0, rate)
        if cert.passed:
            return cert
    counts = _empirical_crossings(S, L, np.random.default_rng(seed), samples,
                                  max_t=min(tol.max_flow_time, 64.0))
    worst = float(np.abs(counts - 1).max())
    emp = AdmissibilityCertificate("empirical", worst, samples, worst == 0)
    if emp.passed:
        return emp
    raise Inadmissible(cert if S.quadratic else emp)


def lyapunov_shell(flow, tol: ToleranceProfile = DEFAULT) -> ShellSpec:
    """Ellipsoid ``z* P z = 1`` with ``L* P + P L = -I``; admissible by construction."""
    return ShellSpec.ellipsoid(solve_lyapunov(_flow_L(flow), tol).H)


_STATUS_ERRORS = {kernels.NO_BRACKET: NoBracket, kernels.MAX_ITER: MaxIterations,
                  kernels.DEGENERATE: DegenerateCrossing}


def raise_for_status(status, Z=None):
    bad = np.flatnonzero(status != kernels.OK)
    if bad.size:
        i = bad[0]
        where = f" at z = {np.asarray(Z)[i]}" if Z is not None else ""
        raise _STATUS_ERRORS[int(status[i])](f"orbit-time solve failed{where}")


def solve_orbits(Z, flow, S: ShellSpec, tol: ToleranceProfile = DEFAULT,
                 threads=None, backend=None):
    """Batch orbit times.  Returns ``(t, grad_t, dGdt, status)`` row-aligned with ``Z``."""
    L = _flow_L(flow)
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if S.quadratic:
        P = S.P / S.level

        def fn(rows):
            return kernels.orbit_solve(L, P, rows, tol.tol_root, tol.max_flow_time,
                                       tol.max_newton, backend=backend)
    else:
        def fn(rows):
            return kernels._orbit_py.solve_generic(
                L, lambda w: S.value(w) - S.level, S.cgrad, rows,
                tol.tol_root, tol.max_flow_time, tol.max_newton)
    return map_rows(fn, Z, threads)


def orbit_time(z, flow, S: ShellSpec, tol: ToleranceProfile = DEFAULT, backend=None) -> float:
    """Unique ``t`` with ``exp(-t L) z`` on ``S`` (``t > 0`` strictly inside)."""
    t, _, _, status = solve_orbits(np.atleast_2d(z), flow, S, tol, threads=1, backend=backend)
    raise_for_status(status, np.atleast_2d(z))
    return float(t[0])


def orbit_time_gradient(z, flow, S: ShellSpec, tol: ToleranceProfile = DEFAULT,
                        backend=None) -> np.ndarray:
    """Real gradient of the orbit time over ``(Re z1, Im z1, ..., Im zn)``."""
    _, g, _, status = solve_orbits(np.atleast_2d(z), flow, S, tol, threads=1, backend=backend)
    raise_for_status(status, np.atleast_2d(z))
    return g[0]
