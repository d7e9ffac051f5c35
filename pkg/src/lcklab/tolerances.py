"""Single tolerance surface threaded through every operation."""
from dataclasses import dataclass, fields, replace

import numpy as np

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical tolerances with their defaults.

    Attributes
    ----------
    tol_reconstruct : ``Q diag(alpha) Q^-1`` must reproduce ``A`` to this.
    diag_cond : eigenvector-matrix condition number above which ``A`` is
        treated as non-diagonalizable.
    tol_exp : bound on ``||exp(log A) - A||``.
    branch_cut : eigenvalues closer than this to the negative real axis
        make the principal logarithm ambiguous.
    tol_sym : Hermiticity tolerance.
    lyap_cond : condition-number ceiling for the vectorized Lyapunov system.
    tol_shell : ``|F(p) - level|`` accepted as "on the shell".
    tol_root : target ``|F - level|`` of the orbit-time solve.
    max_flow_time : bracketing gives up beyond this ``|t|``.
    max_newton : iteration cap of the safeguarded Newton phase.
    fd_rel_step : relative step of the first FD layer, ``eps**(1/3)``.
    fd_outer_step : step of the second (outer) FD layer, relative to
        ``min(|z|, 1/|theta|)``.
    psd_margin : ``check_psh`` passes iff the worst eigenvalue exceeds this.
    lambda_rtol : relative width at which ``find_min_lambda`` stops.
    check_* : pass thresholds of the named sampled checks.
    """

    tol_reconstruct: float = 1e-10
    diag_cond: float = 1e8
    tol_exp: float = 1e-12
    branch_cut: float = 1e-12
    tol_sym: float = 1e-10
    lyap_cond: float = 1e12
    tol_shell: float = 1e-10
    tol_root: float = 1e-13
    max_flow_time: float = 200.0
    max_newton: int = 100
    fd_rel_step: float = float(EPS ** (1.0 / 3.0))
    fd_outer_step: float = 1e-3
    psd_margin: float = 0.0
    lambda_rtol: float = 1e-3
    check_automorphy: float = 1e-8
    check_power_identity: float = 1e-6
    check_power_identity_deep: float = 1e-5  # a >= 3
    check_power_law: float = 1e-10
    check_lie_derivative: float = 1e-7
    check_dtheta: float = 1e-5
    check_lck_identity: float = 1e-4
    check_pullback: float = 1e-6
    check_vaisman: float = 1e-10
    check_homothety: float = 1e-6
    check_lee_parallel: float = 1e-2

    def with_overrides(self, overrides=None):
        if not overrides:
            return self
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown tolerance fields: {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT = ToleranceProfile()
