"""Configuration, deterministic sampling and the end-to-end analysis run."""
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import yaml

from . import kernels
from .errors import ConfigError, Inadmissible, LckError
from .linalg_core import HermitianForm, principal_log, spectral_check
from .potential import (PotentialField, _psh_report, check_automorphy,
                        check_ddc_power_identity, check_lie_derivative,
                        check_power_law, check_psh, find_min_lambda)
from .lck_forms import check_dtheta_zero, check_gamma_pullback, check_lck_identity
from .reports import CheckReport, RunReport, timed
from .shell import (ShellSpec, admissibility_check, levi_check, lyapunov_shell,
                    raise_for_status, solve_orbits)
from .tolerances import DEFAULT, ToleranceProfile
from .vaisman import (canonical_xi, check_lee_parallel, check_reeb_transversal,
                      check_vaisman_criterion, homothety_constants)

# Checks in execution order.  ``lee_parallel`` only runs with ``slow``.
ALL_CHECKS = ("levi", "psh", "automorphy", "lie_derivative", "power_law",
              "power_identity", "dtheta_zero", "lck_identity", "gamma_pullback",
              "vaisman", "reeb_transversal", "homothety", "lee_parallel")
DEFAULT_CHECKS = ALL_CHECKS[:-1]
POWER_IDENTITY_EXPONENTS = (1, 2, 3)


def _parse_complex(pair, what):
    if isinstance(pair, (int, float)) and not isinstance(pair, bool):
        return complex(pair)
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise ConfigError(f"{what}: complex numbers are [re, im] pairs, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def parse_matrix(entries, n, what="matrix"):
    """Row-major ``[re, im]`` pairs (flat, or nested by rows) -> ``n x n`` array."""
    flat = []
    for item in entries:
        if isinstance(item, (list, tuple)) and item and isinstance(item[0], (list, tuple)):
            flat.extend(item)  # a row of pairs
        else:
            flat.append(item)
    if len(flat) != n * n:
        raise ConfigError(f"{what}: expected {n * n} entries for n = {n}, got {len(flat)}")
    return np.array([_parse_complex(p, what) for p in flat]).reshape(n, n)


def matrix_to_config(M):
    return [[float(x.real), float(x.imag)] for x in np.asarray(M, dtype=complex).ravel()]


@dataclass
class RunConfig:
    A: np.ndarray
    shell: dict = field(default_factory=lambda: {"type": "sphere"})
    lam: Union[float, str] = "auto"
    count: int = 200
    t_range: tuple = (-1.0, 1.0)
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    checks: tuple = DEFAULT_CHECKS
    slow: bool = False
    fd_count: int = 50
    lambda_bracket: tuple = (1e-3, 64.0)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def tol(self) -> ToleranceProfile:
        return DEFAULT.with_overrides(self.tolerances)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        try:
            n = int(d["n"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("configuration needs an integer 'n'") from None
        if not 2 <= n <= 8:
            raise ConfigError(f"n must lie in [2, 8], got {n}")
        if "matrix" not in d:
            raise ConfigError("configuration needs 'matrix'")
        A = parse_matrix(d["matrix"], n)
        shell = dict(d.get("shell") or {"type": "sphere"})
        if shell.get("type", "sphere") not in ("sphere", "ellipsoid", "lyapunov"):
            raise ConfigError(f"unknown shell type {shell.get('type')!r}")
        shell.setdefault("type", "sphere")
        if shell["type"] == "ellipsoid" and "P" not in shell:
            raise ConfigError("ellipsoid shell needs 'P'")
        lam = d.get("lambda", "auto")
        if lam != "auto":
            try:
                lam = float(lam)
            except (TypeError, ValueError):
                raise ConfigError(f"lambda must be a positive number or 'auto', got {lam!r}") from None
            if not lam > 0 or not math.isfinite(lam):
                raise ConfigError(f"lambda must be positive, got {lam}")
        samp = d.get("sampling") or {}
        if "seed" not in samp:
            raise ConfigError("sampling.seed is mandatory")
        count = int(samp.get("count", 200))
        if not 1 <= count <= 10 ** 6:
            raise ConfigError(f"sampling.count must lie in [1, 1e6], got {count}")
        t_range = tuple(float(x) for x in samp.get("t_range", (-1.0, 1.0)))
        if len(t_range) != 2 or t_range[0] > t_range[1]:
            raise ConfigError(f"bad sampling.t_range {t_range}")
        seed = int(samp["seed"])
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("sampling.seed must be a 64-bit unsigned integer")
        tols = dict(d.get("tolerances") or {})
        try:
            DEFAULT.with_overrides(tols)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        slow = bool(d.get("slow", False))
        checks = d.get("checks")
        if checks is None:
            checks = DEFAULT_CHECKS + (("lee_parallel",) if slow else ())
        checks = tuple(checks)
        unknown = [c for c in checks if c not in ALL_CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; known: {list(ALL_CHECKS)}")
        if len(set(checks)) != len(checks):
            raise ConfigError("checks must not repeat")
        fd_count = int(samp.get("fd_count", min(count, 50)))
        bracket = tuple(float(x) for x in d.get("lambda_bracket", (1e-3, 64.0)))
        return cls(A, shell, lam, count, t_range, seed, tols, checks, slow,
                   max(1, min(fd_count, count)), bracket)

    def to_dict(self):
        out = {"n": self.n, "matrix": matrix_to_config(self.A), "shell": dict(self.shell),
               "lambda": self.lam,
               "sampling": {"count": self.count, "t_range": list(self.t_range),
                            "seed": self.seed, "fd_count": self.fd_count},
               "tolerances": dict(self.tolerances), "checks": list(self.checks),
               "slow": self.slow, "lambda_bracket": list(self.lambda_bracket)}
        return out


def load_config(path) -> RunConfig:
    """Read a YAML or JSON file (JSON is valid YAML)."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    return RunConfig.from_dict(data)


def build_shell(cfg: RunConfig, flow, tol=DEFAULT):
    """Shell and its admissibility certificate.

    ``lyapunov`` tries the sphere first and falls back to the Lyapunov
    ellipsoid when the sphere is not admissible.
    """
    kind = cfg.shell["type"]
    if kind == "ellipsoid":
        P = HermitianForm.from_matrix(parse_matrix(cfg.shell["P"], cfg.n, "shell.P"), tol.tol_sym).H
        S = ShellSpec.ellipsoid(P)
        return S, admissibility_check(S, flow, tol)
    S = ShellSpec.sphere(cfg.n)
    try:
        return S, admissibility_check(S, flow, tol)
    except Inadmissible:
        if kind != "lyapunov":
            raise
    S = lyapunov_shell(flow, tol)
    return S, admissibility_check(S, flow, tol)


def shell_directions(n, count, rng):
    W = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def project_to_shell(Z, flow, S, tol=DEFAULT, threads=None):
    """``exp(-t(z) L) z`` for each row; rows then satisfy ``F = level``."""
    t, _, _, status = solve_orbits(Z, flow, S, tol, threads)
    raise_for_status(status, Z)
    return np.array([kernels.expm_taylor(-ti * flow.L) @ z for ti, z in zip(t, Z)])


def sample_points(cfg: RunConfig, flow, S: ShellSpec, tol=None, threads=None):
    """Deterministic samples: shell points pushed by ``exp(tau L)``, ``tau``
    uniform in ``t_range`` (so the orbit time of each sample is ``tau``).

    Returns ``(points, shell_points, taus)``.
    """
    tol = tol or cfg.tol
    rng = np.random.default_rng(cfg.seed)
    W = shell_directions(cfg.n, cfg.count, rng)
    taus = rng.uniform(cfg.t_range[0], cfg.t_range[1], size=cfg.count)
    base = project_to_shell(W, flow, S, tol, threads)
    Z = np.array([kernels.expm_taylor(tau * flow.L) @ p for tau, p in zip(taus, base)])
    return Z, base, taus


@dataclass
class PipelineResult:
    report: RunReport
    exit_code: int
    samples: Optional[np.ndarray] = None


def _error_dict(stage, exc):
    return {"stage": stage, "type": type(exc).__name__, "message": str(exc)}


def _inapplicable(name, reason):
    return CheckReport(name, "inapplicable", details={"reason": reason})


def _levi_report(S, base, tol):
    mins = np.array([levi_check(S, p, tol).min_eig for p in base])
    return _psh_report(base, mins, 0.0, name="levi")


def _power_identity_report(P, Z, threads):
    parts = [check_ddc_power_identity(P, Z, a, threads=threads) for a in POWER_IDENTITY_EXPONENTS]
    # residual normalized by each exponent's tolerance, so the threshold is 1
    ratios = [p.residual / p.tolerance for p in parts]
    worst = int(np.nanargmax(ratios))
    status = "pass" if all(p.passed for p in parts) else "fail"
    return CheckReport("power_identity", status, float(ratios[worst]), 1.0,
                       parts[worst].worst_sample,
                       details={f"a{a}": {"residual": p.residual, "tolerance": p.tolerance}
                                for a, p in zip(POWER_IDENTITY_EXPONENTS, parts)})


def run_pipeline(cfg: RunConfig, threads=None) -> PipelineResult:
    """Run every stage in order and collect a :class:`RunReport`.

    Exit code 0 when every check passes (``inapplicable`` and ``withheld``
    count as not failing), 1 when a check fails, 2 when a precondition
    stage raises.
    """
    tol = cfg.tol
    report = RunReport(cfg.to_dict())
    done = {}

    def finish(code, error=None):
        if error is not None:
            report.error = error
        for name in cfg.checks:
            if name not in done:
                done[name] = _inapplicable(name, "skipped after an earlier stage error"
                                           if error else "not run")
        report.checks = [done[name] for name in cfg.checks]
        if code == 0 and any(c.status == "fail" for c in report.checks):
            code = 1
        report.overall = {0: "pass", 1: "fail", 2: "error"}[code]
        return PipelineResult(report, code, samples)

    samples = None
    stage = "spectral_check"
    try:
        C = spectral_check(cfg.A, tol)
        report.contraction = C.summary()
        stage = "principal_log"
        flow = principal_log(C, tol)
        stage = "shell"
        S, cert = build_shell(cfg, flow, tol)
        report.shell = {**S.describe(), "admissibility": cert.to_dict()}
        stage = "sampling"
        samples, base, _ = sample_points(cfg, flow, S, tol, threads)
    except LckError as exc:
        return finish(2, _error_dict(stage, exc))
    except (ValueError, np.linalg.LinAlgError) as exc:
        return finish(2, _error_dict(stage, exc))

    def run(name, fn):
        if name not in cfg.checks:
            return None
        holder = CheckReport(name, "inapplicable")
        with timed(holder):
            try:
                rep = fn()
                rep.name = name
            except LckError as exc:
                rep = CheckReport(name, "fail", details={"error": _error_dict(name, exc)})
        rep.elapsed = holder.elapsed
        done[name] = rep
        return rep

    run("levi", lambda: _levi_report(S, base, tol))

    stage = "lambda"
    try:
        if cfg.lam == "auto":
            probe = PotentialField(C, flow, S, 1.0, tol)
            mres = find_min_lambda(probe, samples, cfg.lambda_bracket, threads)
            report.lam_star = mres.lam_star
            lam = 2.0 * mres.lam_star
        else:
            lam = float(cfg.lam)
        report.lam = lam
        P = PotentialField(C, flow, S, lam, tol)
    except LckError as exc:
        return finish(2, _error_dict(stage, exc))

    fd = samples[: cfg.fd_count]
    run("psh", lambda: check_psh(P, samples, threads))
    run("automorphy", lambda: check_automorphy(P, samples, threads=threads))
    run("lie_derivative", lambda: check_lie_derivative(P, samples, threads=threads))
    run("power_law", lambda: check_power_law(P, samples, threads=threads))
    run("power_identity", lambda: _power_identity_report(P, fd, threads))
    run("dtheta_zero", lambda: check_dtheta_zero(P, fd, threads=threads))
    if cfg.n <= 3:
        run("lck_identity", lambda: check_lck_identity(P, fd, threads=threads))
    elif "lck_identity" in cfg.checks:
        done["lck_identity"] = _inapplicable("lck_identity", "checked for n <= 3 only")
    run("gamma_pullback", lambda: check_gamma_pullback(P, fd, threads=threads))

    verdict = check_vaisman_criterion(C, S, tol=tol.check_vaisman)

    def vaisman_report():
        status = {"satisfied": "pass", "violated": "fail", "inapplicable": "inapplicable"}
        worst = max(verdict.commutation, verdict.unitarity, verdict.shell_residual)
        return CheckReport("vaisman", status[verdict.verdict],
                           worst if math.isfinite(worst) else float("nan"),
                           tol.check_vaisman, details=verdict.to_dict())

    run("vaisman", vaisman_report)
    reason = f"Vaisman criterion {verdict.verdict}"
    if verdict.verdict == "satisfied":
        xi = canonical_xi(C)

        def reeb():
            reps = [check_reeb_transversal(xi, S, p, tol) for p in base]
            worst = max(reps, key=lambda r: r.residual / r.tolerance)
            status = "pass" if all(r.passed for r in reps) else "fail"
            return CheckReport("reeb_transversal", status, worst.residual, worst.tolerance,
                               worst.worst_sample, details=worst.details)

        def homothety():
            hc = homothety_constants(P, xi, fd, rtol=tol.check_homothety)
            return CheckReport("homothety", "pass", hc.c_spread, tol.check_homothety,
                               details=hc.to_dict())

        run("reeb_transversal", reeb)
        run("homothety", homothety)
    else:
        for name in ("reeb_transversal", "homothety"):
            if name in cfg.checks:
                done[name] = _inapplicable(name, reason)

    if "lee_parallel" in cfg.checks:
        if not cfg.slow:
            done["lee_parallel"] = _inapplicable("lee_parallel", "slow checks not enabled")
        elif cfg.n != 2:
            done["lee_parallel"] = _inapplicable("lee_parallel", "supported for n = 2 only")
        else:
            run("lee_parallel", lambda: check_lee_parallel(P, fd, threads=threads))
    return finish(0)
