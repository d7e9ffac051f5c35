"""Check and run reports with lossless JSON / CSV serialization."""
import csv
import io
import json
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

SCHEMA_VERSION = "lcklab.report/1"
STATUSES = ("pass", "fail", "inapplicable", "withheld")


def point_to_json(z):
    return [[float(c.real), float(c.imag)] for c in np.asarray(z, dtype=complex).ravel()]


def point_from_json(pairs):
    return np.array([complex(re, im) for re, im in pairs])


@dataclass
class CheckReport:
    """Outcome of one named check.

    ``status == "pass"`` implies ``residual <= tolerance``.  ``worst_sample``
    holds the point (as ``[re, im]`` pairs) and value where the residual is
    attained.
    """

    name: str
    status: str
    residual: float = float("nan")
    tolerance: float = float("nan")
    worst_sample: Optional[dict] = None
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def from_residuals(cls, name, residuals, tolerance, points, values=None, details=None):
        """Pass iff every residual is ``<= tolerance``; records the worst one."""
        residuals = np.asarray(residuals, dtype=float)
        bad = ~np.isfinite(residuals)
        i = int(np.argmax(np.where(bad, np.inf, residuals)))
        worst = float(residuals[i])
        value = worst if values is None else float(np.asarray(values)[i])
        status = "pass" if (not bad.any() and worst <= tolerance) else "fail"
        return cls(name, status, worst, float(tolerance),
                   {"point": point_to_json(np.atleast_2d(points)[i]), "value": value},
                   details=dict(details or {}))

    def to_dict(self):
        return {"name": self.name, "status": self.status, "residual": self.residual,
                "tolerance": self.tolerance, "worst_sample": self.worst_sample,
                "elapsed": self.elapsed, "details": self.details}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["status"], d["residual"], d["tolerance"],
                   d.get("worst_sample"), d.get("elapsed", 0.0), d.get("details") or {})


@contextmanager
def timed(holder):
    """Store wall time of the block in ``holder.elapsed``."""
    t0 = time.perf_counter()
    try:
        yield holder
    finally:
        holder.elapsed = time.perf_counter() - t0


@dataclass
class RunReport:
    config: dict
    contraction: Optional[dict] = None
    shell: Optional[dict] = None
    lam: Optional[float] = None
    lam_star: Optional[float] = None
    checks: list = field(default_factory=list)
    overall: str = "pass"
    error: Optional[dict] = None

    def to_dict(self):
        return {"schema": SCHEMA_VERSION, "config": self.config,
                "contraction": self.contraction, "shell": self.shell,
                "lambda": self.lam, "lambda_star": self.lam_star,
                "checks": [c.to_dict() for c in self.checks],
                "overall": self.overall, "error": self.error}

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["config"], d["contraction"], d["shell"], d["lambda"],
                   d["lambda_star"], [CheckReport.from_dict(c) for c in d["checks"]],
                   d["overall"], d["error"])

    def check(self, name) -> CheckReport:
        return next(c for c in self.checks if c.name == name)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _dump(obj, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for k, (key, val) in enumerate(obj.items()):
            out.append(pad + json.dumps(str(key)) + ": ")
            _dump(val, out, indent, level + 1)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items):
            out.append("[")
            for k, v in enumerate(items):
                _dump(v, out, indent, level + 1)
                if k < len(items) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for k, v in enumerate(items):
            out.append(pad)
            _dump(v, out, indent, level + 1)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj: Any, indent=2) -> str:
    """JSON with every float written to 17 significant digits."""
    out = []
    _dump(obj, out, indent, 0)
    return "".join(out) + "\n"


def strip_elapsed(d):
    """Copy of a report dict with all ``elapsed`` fields removed."""
    if isinstance(d, dict):
        return {k: strip_elapsed(v) for k, v in d.items() if k != "elapsed"}
    if isinstance(d, list):
        return [strip_elapsed(v) for v in d]
    return d


def emit_report(report: RunReport, fmt="json") -> bytes:
    if fmt == "json":
        return dumps_json(report.to_dict()).encode()
    if fmt == "csv":
        rows = report.to_dict().get("checks", [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "status", "residual", "tolerance"])
        for c in rows:
            w.writerow([c["name"], c["status"], _fmt_float(c["residual"]),
                        _fmt_float(c["tolerance"])])
        return buf.getvalue().encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_report(data) -> RunReport:
    if isinstance(data, bytes):
        data = data.decode()
    return RunReport.from_dict(json.loads(data))


def samples_csv(points, columns: dict) -> bytes:
    """One row per sample: ``re_z1,im_z1,...`` followed by the named columns."""
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    n = points.shape[1]
    header = [f"{p}_z{j + 1}" for j in range(n) for p in ("re", "im")] + list(columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    cols = [np.asarray(v, dtype=float) for v in columns.values()]
    for i, z in enumerate(points):
        row = [_fmt_float(x) for c in z for x in (c.real, c.imag)]
        row += [_fmt_float(c[i]) for c in cols]
        w.writerow(row)
    return buf.getvalue().encode()
