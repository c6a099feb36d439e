"""Command-line front end.

    gapfield solve  --eps 0.2 --p 0.1 --dir x --route both --points pts.csv --out field.csv
    gapfield sweep  --law gap --eps-min 1e-5 --eps-max 1e-2 --out gap.json
    gapfield verify --suite core-invariants --eps 0.1

Exit codes: 0 pass, 1 a check failed, 2 usage or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bem as B
from . import solver as V
from . import verify as VF
from .errors import DomainError, GapFieldError, RegimeError
from .geometry import DipoleSource, SphereConfig

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

LAWS = ("gap", "enhancement", "transverse", "axial", "farfield", "core-invariants", "bem-unit", "interpolation")
# laws that need q_perp or the integral solve default to the larger gaps
BEM_LAWS = ("axial", "farfield")
SERIES_RANGE = (1e-5, 1e-1)
BEM_RANGE = (1e-2, 0.5)
# per-law defaults where the generic grid is out of scope or far too costly
LAW_DEFAULT_EPS = {
    "transverse": [1e-2, 1e-3, 1e-4],
    "core-invariants": [0.5, 0.1, 0.01],
    "axial": [0.1, 0.05, 0.02, 0.01],
}

FIELD_HEADER = ["x1", "x2", "x3", "status", "u", "du1", "du2", "du3"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    eps: list = field(default_factory=list)
    p: float | None = None
    direction: str = "x"
    route: str = "images"
    tol: float = 1e-13
    L: int | None = None
    points: str | None = None
    out: str | None = None
    law: str | None = None
    eps_min: float | None = None
    eps_max: float | None = None
    per_decade: int = 4
    p_rule: str = "zero"
    constants: str | None = None
    reproducible: bool = False

    def validate(self) -> None:
        """Reject inconsistent settings before any computation starts."""
        for e in self.eps:
            SphereConfig(e)
        if not (0.0 < self.tol < 1.0):
            raise UsageError(f"--tol must lie in (0, 1), got {self.tol}")
        if self.command == "solve":
            if len(self.eps) != 1:
                raise UsageError("solve needs exactly one --eps value")
            if self.points is None or self.out is None:
                raise UsageError("solve needs --points and --out")
            if self.route in ("bem", "both") and self.eps[0] < B.BEM_MIN_EPS:
                raise UsageError(f"route {self.route} needs eps >= {B.BEM_MIN_EPS}")
            DipoleSource.on_axis(self.p or 0.0, self.direction).check(SphereConfig(self.eps[0]))
            return
        if self.law not in LAWS:
            raise UsageError(f"unknown law {self.law!r}; expected one of {', '.join(LAWS)}")
        if self.per_decade < 1:
            raise UsageError("--per-decade must be at least 1")
        if (self.eps_min is None) != (self.eps_max is None):
            raise UsageError("--eps-min and --eps-max go together")
        if self.eps_min is not None and not (0.0 < self.eps_min < self.eps_max <= 1.0):
            raise UsageError("need 0 < eps-min < eps-max <= 1")
        if self.law in BEM_LAWS and any(e < B.BEM_MIN_EPS for e in self.eps_grid()):
            raise UsageError(f"law {self.law} needs eps >= {B.BEM_MIN_EPS}")

    def eps_grid(self) -> list:
        if self.eps:
            return list(self.eps)
        if self.eps_min is not None:
            return VF.log_grid(self.eps_min, self.eps_max, self.per_decade)
        if self.law in LAW_DEFAULT_EPS:
            return list(LAW_DEFAULT_EPS[self.law])
        if self.law == "enhancement":
            c = VF.load_constants(self.constants)
            return VF.log_grid(c.get("enhancement", "eps_min"), c.get("enhancement", "eps_max"), self.per_decade)
        lo, hi = BEM_RANGE if self.law in BEM_LAWS else SERIES_RANGE
        return VF.log_grid(lo, hi, self.per_decade)


# ---------------------------------------------------------------------------
# serialisation


def _num(x) -> str:
    """17 significant digits; non-finite values become JSON null."""
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{to_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_text(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# solve


def read_points(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return np.zeros((0, 3))
        if [h.strip() for h in header] != ["x1", "x2", "x3"]:
            raise UsageError(f"{path}: header must be x1,x2,x3")
        rows = []
        for k, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise UsageError(f"{path}:{k}: expected 3 columns")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise UsageError(f"{path}:{k}: non-numeric coordinate") from None
    return np.array(rows, dtype=float).reshape(-1, 3)


def point_status(sol: V.FieldSolution, pts: np.ndarray) -> list:
    status = []
    for x in pts:
        if not np.all(np.isfinite(x)):
            status.append("invalid")
        elif not sol.config.is_exterior(x)[0]:
            status.append("inside_inclusion")
        elif np.linalg.norm(x - sol.dipole.p) == 0.0:
            status.append("at_emitter")
        else:
            status.append("ok")
    return status


def cmd_solve(cfg: RunConfig) -> int:
    pts = read_points(cfg.points)
    config = SphereConfig(cfg.eps[0])
    dipole = DipoleSource.on_axis(cfg.p or 0.0, cfg.direction)
    sol = V.solve_full(config, dipole, cfg.route, tol=cfg.tol, L=cfg.L)
    status = point_status(sol, pts)
    ok = np.array([s == "ok" for s in status], dtype=bool)
    u = np.full(len(pts), np.nan)
    g = np.full((len(pts), 3), np.nan)
    if ok.any():
        u[ok] = V.eval_u(sol, pts[ok])
        g[ok] = V.eval_grad_u(sol, pts[ok])
    with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_HEADER)
        for i, x in enumerate(pts):
            nums = [_num(v) if ok[i] else "" for v in (u[i], *g[i])]
            w.writerow([_num(x[0]), _num(x[1]), _num(x[2]), status[i], *nums])
    if sol.route == "both":
        # the combined solution carries the image constants unless the series was partial
        gaps = {"images": sol.gap if sol.uses_series else None, "bem": sol.diagnostics["bem_c2"] - sol.diagnostics["bem_c1"]}
    else:
        gaps = {cfg.route: sol.gap}
    sidecar = {
        "config": {
            "eps": config.eps,
            "p": float(dipole.p[2]),
            "direction": cfg.direction,
            "route": cfg.route,
            "tol": cfg.tol,
        },
        "c1": sol.c1,
        "c2": sol.c2,
        "gap": gaps,
        "lambda_q": sol.lambda_q,
        "lambda_perp": sol.lambda_perp,
        "partial": sol.partial,
        "n_points": int(len(pts)),
        "status_counts": {s: status.count(s) for s in sorted(set(status))},
        "diagnostics": {k: v for k, v in sol.diagnostics.items() if _serialisable(v)},
    }
    _write_text(cfg.out + ".json", to_json(sidecar) + "\n")
    return EXIT_PASS


def _serialisable(v) -> bool:
    try:
        to_json(v)
    except TypeError:
        return False
    return True


# ---------------------------------------------------------------------------
# sweep / verify


def _merge(law: str, reports: list, constants) -> VF.ScalingReport:
    rows = [r for rep in reports for r in rep.rows]
    lo = min(rep.band_min for rep in reports)
    hi = max(rep.band_max for rep in reports)
    return VF.ScalingReport(
        law=law,
        rows=rows,
        band_min=lo,
        band_max=hi,
        passed=all(rep.passed for rep in reports),
        runtime=sum(rep.runtime for rep in reports),
        config={**reports[0].config, "eps_list": sorted(r.config["eps_list"][0] for r in reports)},
        checks={str(rep.config["eps_list"][0]): rep.checks for rep in reports},
        constants_version=constants.version,
    )


def run_law(cfg: RunConfig) -> VF.ScalingReport:
    c = VF.load_constants(cfg.constants)
    law = cfg.law
    if law == "bem-unit":
        return VF.bem_unit_check(c)
    eps = cfg.eps_grid()
    if law == "gap":
        return VF.gap_scaling_sweep(eps, cfg.p_rule, c)
    if law == "enhancement":
        return VF.enhancement_sweep(eps, c)
    if law == "transverse":
        return VF.transverse_decay_check(eps, constants=c)
    if law == "axial":
        return VF.axial_case_check(eps, c, p=cfg.p)
    if law == "interpolation":
        return VF.interpolation_check(eps, c)
    if law == "core-invariants":
        return VF.core_invariants(eps, c)
    # farfield: one solution per gap width
    p = 0.0 if cfg.p is None else cfg.p
    reports = []
    for e in sorted(eps, reverse=True):
        sol = V.solve_full(SphereConfig(e), DipoleSource.on_axis(p, cfg.direction), cfg.route, tol=cfg.tol, L=cfg.L)
        reports.append(VF.far_field_check(sol, c))
    return _merge("farfield", reports, c)


def report_json(report: VF.ScalingReport, reproducible: bool) -> str:
    d = report.to_dict()
    if reproducible:
        d["runtime_s"] = None
    else:
        d["metadata"] = {"created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")}
    return to_json(d) + "\n"


def cmd_report(cfg: RunConfig) -> int:
    report = run_law(cfg)
    _write_text(cfg.out, report_json(report, cfg.reproducible))
    line = f"{report.law}: {'pass' if report.passed else 'FAIL'}"
    if report.band_min and report.band_max:
        line += f" (band {report.band:.4g})"
    print(line, file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapfield", description="Field of a dipole near two nearly touching conducting spheres.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--eps", type=float, nargs="+", default=[], help="gap width(s)")
        sp.add_argument("--p", type=float, default=None, help="emitter height on the x3-axis")
        sp.add_argument("--dir", dest="direction", choices=("x", "y", "z"), default="x")
        sp.add_argument("--route", choices=("images", "bem", "both"), default="images")
        sp.add_argument("--tol", type=float, default=1e-13)
        sp.add_argument("--L", type=int, default=None, help="harmonic degree for the integral route")
        sp.add_argument("--out", default=None)
        sp.add_argument("--constants", default=None, help="calibration constants file")

    s = sub.add_parser("solve", help="evaluate u and grad u at the points of a CSV file")
    common(s)
    s.add_argument("--points", required=True)

    for name in ("sweep", "verify"):
        r = sub.add_parser(name, help=f"run a scaling-law {'sweep' if name == 'sweep' else 'suite'}")
        common(r)
        r.add_argument("--law", "--suite", dest="law", required=True)
        r.add_argument("--eps-min", type=float, default=None)
        r.add_argument("--eps-max", type=float, default=None)
        r.add_argument("--per-decade", type=int, default=4)
        r.add_argument("--p-rule", choices=("zero", "sqrt", "admissible"), default="zero")
        r.add_argument("--reproducible", action="store_true", help="omit run-time and timestamp fields")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    cfg = RunConfig(**vars(args))
    try:
        cfg.validate()
        if cfg.command == "solve":
            return cmd_solve(cfg)
        return cmd_report(cfg)
    except (UsageError, DomainError, RegimeError) as exc:
        print(f"gapfield: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gapfield: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GapFieldError as exc:
        print(f"gapfield: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
