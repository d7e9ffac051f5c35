"""Command-line interface: ``lcklab <subcommand> --config FILE``."""
import argparse
import sys

import numpy as np

from . import parallel
from .errors import ConfigError, LckError
from .linalg_core import lyapunov_residual, principal_log, spectral_check
from .pipeline import (RunConfig, build_shell, load_config, matrix_to_config,
                       project_to_shell, run_pipeline, sample_points, shell_directions)
from .potential import PotentialField, find_min_lambda, hessian_samples
from .reports import dumps_json, emit_report, samples_csv
from .shell import admissibility_check, levi_check, lyapunov_shell
from .vaisman import canonical_xi, check_vaisman_criterion, homothety_constants


def _write(args, data: bytes):
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _setup(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    if args.slow:
        cfg.slow = True
        if "lee_parallel" not in cfg.checks:
            cfg.checks = tuple(cfg.checks) + ("lee_parallel",)
    return cfg


def _prepare(cfg: RunConfig):
    tol = cfg.tol
    C = spectral_check(cfg.A, tol)
    flow = principal_log(C, tol)
    S, cert = build_shell(cfg, flow, tol)
    return tol, C, flow, S, cert


def cmd_analyze(args):
    cfg = _setup(args)
    res = run_pipeline(cfg)
    _write(args, emit_report(res.report, args.format))
    return res.exit_code


def _min_lambda(cfg, tol, C, flow, S):
    Z, _, _ = sample_points(cfg, flow, S, tol)
    probe = PotentialField(C, flow, S, 1.0, tol)
    return find_min_lambda(probe, Z, cfg.lambda_bracket)


def cmd_min_lambda(args):
    cfg = _setup(args)
    tol, C, flow, S, cert = _prepare(cfg)
    res = _min_lambda(cfg, tol, C, flow, S)
    out = {"schema": "lcklab.min_lambda/1", **res.to_dict(), "lambda": 2.0 * res.lam_star,
           "samples": cfg.count, "shell": {**S.describe(), "admissibility": cert.to_dict()}}
    _write(args, dumps_json(out).encode())
    return 0


def cmd_check_vaisman(args):
    cfg = _setup(args)
    tol, C, flow, S, cert = _prepare(cfg)
    cand = check_vaisman_criterion(C, S, tol=tol.check_vaisman)
    out = {"schema": "lcklab.vaisman/1", "contraction": C.summary(), **cand.to_dict()}
    if cand.verdict == "satisfied":
        lam = cfg.lam if cfg.lam != "auto" else 2.0 * _min_lambda(cfg, tol, C, flow, S).lam_star
        P = PotentialField(C, flow, S, lam, tol)
        Z, _, _ = sample_points(cfg, flow, S, tol)
        hc = homothety_constants(P, canonical_xi(C), Z[: cfg.fd_count], tol.check_homothety)
        out.update({"lambda": lam, "homothety": hc.to_dict()})
    _write(args, dumps_json(out).encode())
    return 0 if cand.verdict != "violated" else 1


def cmd_shell_suggest(args):
    cfg = _setup(args)
    tol = cfg.tol
    C = spectral_check(cfg.A, tol)
    flow = principal_log(C, tol)
    S = lyapunov_shell(flow, tol)
    cert = admissibility_check(S, flow, tol)
    rng = np.random.default_rng(cfg.seed)
    base = project_to_shell(shell_directions(cfg.n, cfg.count, rng), flow, S, tol)
    mins = np.array([levi_check(S, p, tol).min_eig for p in base])
    out = {"schema": "lcklab.shell/1", "P": matrix_to_config(S.P),
           "lyapunov_residual": lyapunov_residual(flow.L, S.P),
           "admissibility": cert.to_dict(),
           "levi": {"points": int(len(base)), "min_eig": float(mins.min()),
                    "passed": bool(np.all(mins > 0))}}
    _write(args, dumps_json(out).encode())
    return 0 if cert.passed and out["levi"]["passed"] else 1


def cmd_potential_dump(args):
    cfg = _setup(args)
    tol, C, flow, S, _ = _prepare(cfg)
    lam = cfg.lam if cfg.lam != "auto" else 2.0 * _min_lambda(cfg, tol, C, flow, S).lam_star
    P = PotentialField(C, flow, S, lam, tol)
    Z, _, taus = sample_points(cfg, flow, S, tol)
    hs = hessian_samples(P, Z)
    cols = {"t": taus, "phi": [h.phi for h in hs], "min_eig": [h.min_eig for h in hs]}
    if args.format == "csv":
        _write(args, samples_csv(Z, cols))
    else:
        out = {"schema": "lcklab.potential/1", "lambda": lam,
               "points": [[[float(c.real), float(c.imag)] for c in z] for z in Z],
               **{k: [float(x) for x in v] for k, v in cols.items()}}
        _write(args, dumps_json(out).encode())
    return 0


COMMANDS = {
    "analyze": (cmd_analyze, "run the full certification pipeline"),
    "min-lambda": (cmd_min_lambda, "empirical plurisubharmonicity threshold"),
    "check-vaisman": (cmd_check_vaisman, "decide the Vaisman criterion for (A, S)"),
    "shell-suggest": (cmd_shell_suggest, "Lyapunov ellipsoid shell for A"),
    "potential-dump": (cmd_potential_dump, "phi and min Hessian eigenvalue per sample"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lcklab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML or JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"),
                       default="csv" if name == "potential-dump" else "json")
        p.add_argument("--slow", action="store_true", help="enable slow evidence checks")
        p.add_argument("--threads", type=int, help="worker threads (overrides LCKLAB_THREADS)")
        p.add_argument("--seed", type=int, help="override sampling.seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("lcklab: --threads must be >= 1", file=sys.stderr)
            return 2
        parallel.set_threads(args.threads)
    try:
        return COMMANDS[args.command][0](args)
    except (ConfigError, OSError) as exc:
        print(f"lcklab: configuration error: {exc}", file=sys.stderr)
        return 2
    except LckError as exc:
        print(f"lcklab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    finally:
        if args.threads is not None:
            parallel.set_threads(None)


if __name__ == "__main__":
    sys.exit(main())
