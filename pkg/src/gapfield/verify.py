"""Scaling-law checks for the field around two nearly touching spheres.

The estimates being tested fix orders in eps and |x - p| but leave the
constants open, so every check here is a bounded-ratio or band assertion
against constants read from a versioned calibration file
(``data/constants.ini``). Nothing is refitted per run.
"""
from __future__ import annotations

import configparser
import enum
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import bem as B
from . import grounded_images as G
from . import image_series as S
from . import solver as V
from .errors import DomainError, ScopeError
from .geometry import DipoleSource, SphereConfig, fibonacci_sphere, grad_dipole_field
from .quadrature import QuadratureMesh


# ---------------------------------------------------------------------------
# calibration constants


@dataclass(frozen=True)
class Constants:
    """Frozen calibration constants; see ``data/constants.ini`` for the meaning of each key."""

    version: str
    values: dict

    def get(self, section: str, key: str) -> float:
        return float(self.values[section][key.lower()])

    def get_list(self, section: str, key: str) -> list:
        return [float(v) for v in str(self.values[section][key.lower()]).split(",")]

    @property
    def C(self) -> float:
        return self.get("regime", "C")

    @property
    def C0(self) -> float:
        return self.get("regime", "C0")

    @property
    def A(self) -> float:
        return self.get("regime", "A")


def load_constants(path=None) -> Constants:
    """Read the calibration file (INI format); the packaged copy by default."""
    parser = configparser.ConfigParser()
    if path is None:
        text = resources.files("gapfield").joinpath("data/constants.ini").read_text(encoding="utf-8")
        parser.read_string(text)
    else:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    if not parser.has_option("meta", "version"):
        raise DomainError("constants file lacks [meta] version")
    values = {s: dict(parser.items(s)) for s in parser.sections()}
    return Constants(parser.get("meta", "version"), values)


def _consts(constants):
    return load_constants() if constants is None else constants


# ---------------------------------------------------------------------------
# report types


class RegimeLabel(str, enum.Enum):
    NEAR = "near"
    BETWEEN = "between"
    FAR = "far"
    FARTHER = "farther"


@dataclass(frozen=True)
class SweepRow:
    eps: float
    p: float
    x: tuple
    direction: str
    value: float
    comparator: float
    ratio: float


@dataclass
class ScalingReport:
    law: str
    rows: list
    slope: float | None = None
    intercept: float | None = None
    residual: float | None = None
    band_min: float | None = None
    band_max: float | None = None
    passed: bool = False
    runtime: float = 0.0
    config: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    constants_version: str = ""

    @property
    def band(self) -> float:
        return self.band_max / self.band_min

    def to_dict(self) -> dict:
        return {
            "law": self.law,
            "config": self.config,
            "rows": [
                {"eps": r.eps, "p": r.p, "x": list(r.x), "value": r.value, "comparator": r.comparator, "ratio": r.ratio}
                for r in sorted(self.rows, key=lambda r: (r.eps, r.p))
            ],
            "fit": {"slope": self.slope, "intercept": self.intercept, "residual": self.residual},
            "band": {"min": self.band_min, "max": self.band_max},
            "pass": bool(self.passed),
            "runtime_s": self.runtime,
            "constants_version": self.constants_version,
            "checks": self.checks,
        }


def _band(rows):
    ratios = [r.ratio for r in rows]
    return float(min(ratios)), float(max(ratios))


def fit_loglog(xs, ys):
    """Least-squares line through ``(log x, log y)``.

    Returns ``(slope, intercept, residual)`` with the residual the largest
    relative deviation of ``y`` from the fitted power law.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 3 or len(xs) != len(ys):
        raise DomainError("need at least three (x, y) pairs")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise DomainError("log-log fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(np.exp(ly - (slope * lx + intercept)) - 1.0)))
    return float(slope), float(intercept), resid


def log_grid(lo: float, hi: float, per_decade: int = 4):
    """Points ``lo..hi`` spaced evenly in log10 with ``per_decade`` steps per decade."""
    if not (0.0 < lo <= hi):
        raise DomainError("grid needs 0 < lo <= hi")
    k = int(round(np.log10(hi / lo) * per_decade))
    return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), k + 1)] if k else [float(lo)]


# ---------------------------------------------------------------------------
# regimes


def classify_regime(eps: float, p: float, x, constants: Constants | None = None) -> RegimeLabel:
    """Label ``x`` by its distance to the emitter ``(0, 0, p)``."""
    c = _consts(constants)
    le = abs(np.log(eps))
    if abs(p) > c.C0 / le**2:
        raise ScopeError(f"|p| = {abs(p):.3g} exceeds the admissible {c.C0:g} |log eps|^-2 = {c.C0 / le**2:.3g}")
    d = float(np.linalg.norm(np.asarray(x, dtype=float) - np.array([0.0, 0.0, p])))
    scale = eps + p * p
    if d <= c.C * scale:
        return RegimeLabel.NEAR
    if d <= scale * le / c.C:
        return RegimeLabel.BETWEEN
    if d <= 1.0 / le**2:
        return RegimeLabel.FAR
    return RegimeLabel.FARTHER


def _p_rule(rule):
    if callable(rule):
        return rule, getattr(rule, "__name__", "custom")
    rules = {
        "zero": lambda eps: 0.0,
        "sqrt": lambda eps: float(np.sqrt(eps)),
        "admissible": lambda eps: 0.25 / np.log(eps) ** 2,
    }
    if rule not in rules:
        raise DomainError(f"unknown p rule {rule!r}; expected one of {sorted(rules)}")
    return rules[rule], rule


# ---------------------------------------------------------------------------
# laws


def gap_scaling_sweep(eps_list, p_rule="zero", constants: Constants | None = None) -> ScalingReport:
    """Potential gap against ``1 / ((eps + p^2) |log eps|)``."""
    c = _consts(constants)
    start = time.perf_counter()
    rule, name = _p_rule(p_rule)
    rows = []
    gaps = []
    for eps in sorted(eps_list, reverse=True):
        p = rule(eps)
        series = S.build_series(SphereConfig(eps))
        gap = S.potential_gap_series(series, p)
        comp = 1.0 / ((eps + p * p) * abs(np.log(eps)))
        rows.append(SweepRow(eps, p, (0.0, 0.0, p), "x", gap, comp, gap / comp))
        gaps.append(gap)
    lo, hi = _band(rows)
    band = c.get("gap", "band")
    monotone = bool(np.all(np.diff(gaps) > 0.0))
    eps_arr = [r.eps for r in rows]
    slope, intercept, resid = fit_loglog(eps_arr, [r.value * abs(np.log(r.eps)) for r in rows]) if len(rows) >= 3 else (None, None, None)
    return ScalingReport(
        law="gap",
        rows=rows,
        slope=slope,
        intercept=intercept,
        residual=resid,
        band_min=lo,
        band_max=hi,
        passed=hi / lo <= band,
        runtime=time.perf_counter() - start,
        config={"eps_list": sorted(eps_arr), "p_rule": name, "direction": "x", "route": "series"},
        checks={"band_limit": band, "monotone_in_eps": monotone},
        constants_version=c.version,
    )


def enhancement_sweep(eps_list, constants: Constants | None = None) -> ScalingReport:
    """``|grad u(0)|`` for the x1-dipole at ``(0, 0, sqrt(eps))`` against ``1 / (eps^2 |log eps|)``."""
    c = _consts(constants)
    start = time.perf_counter()
    rows, free = [], []
    origin = np.zeros((1, 3))
    for eps in sorted(eps_list, reverse=True):
        p = float(np.sqrt(eps))
        label = classify_regime(eps, p, origin[0], c)
        if label is not RegimeLabel.FAR:
            raise ScopeError(f"x = 0 is in the {label.value} regime at eps={eps:g}; the law needs the far regime")
        dip = DipoleSource.on_axis(p, "x")
        sol = V.solve_full(SphereConfig(eps), dip, "series")
        g = float(np.linalg.norm(V.eval_grad_u(sol, origin)[0]))
        comp = 1.0 / (eps * eps * abs(np.log(eps)))
        rows.append(SweepRow(eps, p, (0.0, 0.0, 0.0), "x", g, comp, g / comp))
        free.append(float(np.linalg.norm(grad_dipole_field(dip.p, dip.a, origin)[0])))
    eps_arr = np.array([r.eps for r in rows])
    lo, hi = _band(rows)
    slope, intercept, resid = fit_loglog(eps_arr, [r.value * abs(np.log(r.eps)) for r in rows])
    free_slope = fit_loglog(eps_arr, free)[0]
    enhancement = [r.value / f for r, f in zip(rows, free)]
    factor = [e * np.sqrt(r.eps) * abs(np.log(r.eps)) for e, r in zip(enhancement, rows)]
    band = c.get("enhancement", "band")
    target, tol = c.get("enhancement", "slope"), c.get("enhancement", "slope_tol")
    return ScalingReport(
        law="enhancement",
        rows=rows,
        slope=slope,
        intercept=intercept,
        residual=resid,
        band_min=lo,
        band_max=hi,
        passed=(hi / lo <= band) and abs(slope - target) <= tol,
        runtime=time.perf_counter() - start,
        config={"eps_list": sorted(eps_arr.tolist()), "p_rule": "sqrt", "direction": "x", "route": "series"},
        checks={
            "band_limit": band,
            "slope_target": target,
            "slope_tol": tol,
            "free_field_slope": free_slope,
            "enhancement_factor": enhancement,
            "enhancement_times_sqrt_eps_log": factor,
        },
        constants_version=c.version,
    )


def near_singularity_check(sol, constants: Constants | None = None, fractions=(1e-2, 1e-3, 1e-4), n_dirs: int = 20) -> ScalingReport:
    """``|grad u| |x - p|^3`` on small spheres about the emitter, against ``1 / (4 pi)``."""
    c = _consts(constants)
    start = time.perf_counter()
    eps, p = sol.config.eps, sol.dipole.p
    scale = eps + float(p[0] ** 2 + p[1] ** 2 + p[2] ** 2)
    rows = []
    dirs = fibonacci_sphere(n_dirs)
    for frac in fractions:
        r = frac * scale
        pts = p + r * dirs
        g = np.linalg.norm(V.eval_grad_u(sol, pts), axis=1)
        comp = 1.0 / (4.0 * np.pi * r**3)
        rows += [SweepRow(eps, float(p[2]), tuple(x), _direction_name(sol.dipole), float(v), comp, float(v / comp)) for x, v in zip(pts, g)]
    lo, hi = _band(rows)
    factor = c.get("near", "factor")
    return ScalingReport(
        law="near",
        rows=rows,
        band_min=lo,
        band_max=hi,
        passed=lo >= 1.0 / factor and hi <= factor,
        runtime=time.perf_counter() - start,
        config={"eps_list": [eps], "p_rule": "given", "direction": _direction_name(sol.dipole), "route": sol.route},
        checks={"factor": factor},
        constants_version=c.version,
    )


def _direction_name(dipole) -> str:
    for name, k in (("x", 0), ("y", 1), ("z", 2)):
        if abs(abs(dipole.a[k]) - 1.0) < 1e-12:
            return name
    return "other"


def _safe_norms(g):
    """Row norms without underflow for vectors far below 1e-154."""
    g = np.asarray(g, dtype=float)
    m = np.max(np.abs(g), axis=1)
    scale = np.where(m > 0.0, m, 1.0)
    return m * np.linalg.norm(g / scale[:, None], axis=1)


def precise_digits(eps: float, radius: float) -> int:
    """Working digits for the transverse field at distance ``radius`` in the midplane.

    The field there falls roughly like ``exp(-(pi / sqrt(eps)) atan(radius / sqrt(eps)))``;
    30 guard digits are added on top.
    """
    s = np.sqrt(eps)
    return int(np.ceil(np.pi / s * np.arctan(radius / s) / np.log(10.0))) + 30


def transverse_decay_check(eps_list, x_fixed=(0.0, 0.5, 0.0), constants: Constants | None = None) -> ScalingReport:
    """Transverse dipole at the gap centre: no enhancement, and exponential decay at a fixed point."""
    c = _consts(constants)
    start = time.perf_counter()
    slack = c.get("transverse", "slack")
    drop = c.get("transverse", "drop_per_decade")
    x_fixed = np.asarray(x_fixed, dtype=float).reshape(1, 3)
    rows, sups, fixed = [], [], []
    eps_sorted = sorted(eps_list, reverse=True)
    for eps in eps_sorted:
        cfg = SphereConfig(eps)
        dip = DipoleSource.on_axis(0.0, "y")
        probes = V.standard_probes(cfg, dip.p)
        d = np.linalg.norm(probes - dip.p, axis=1)
        # the field is exponentially small away from the emitter, so both the
        # probes and the fixed point are evaluated in multi-precision
        psol = G.solve_grounded_precise(cfg, dip, precise_digits(eps, 0.5 * np.sqrt(eps)))
        vals = _safe_norms(G.eval_grad_r0_precise(psol, probes))
        k = int(np.argmax(vals * d**3))
        rows.append(SweepRow(eps, 0.0, tuple(probes[k]), "y", float(vals[k]), float(d[k] ** -3), float(vals[k] * d[k] ** 3)))
        sups.append(float(vals[k] * d[k] ** 3))
        psol = G.solve_grounded_precise(cfg, dip, precise_digits(eps, float(np.linalg.norm(x_fixed))))
        fixed.append(float(_safe_norms(G.eval_grad_r0_precise(psol, x_fixed))[0]))
    non_increasing = all(b <= a * (1.0 + slack) for a, b in zip(sups, sups[1:]))
    decades = [np.log10(a / b) for a, b in zip(eps_sorted, eps_sorted[1:])]
    drops = [(f0 / f1) ** (1.0 / dd) if f1 > 0 else np.inf for f0, f1, dd in zip(fixed, fixed[1:], decades)]
    fast = all(r >= drop for r in drops)
    inv = 1.0 / np.sqrt(np.array(eps_sorted))
    logs = np.log(np.array(fixed))
    slope, intercept = np.polyfit(inv, logs, 1)
    fit_resid = float(np.max(np.abs(logs - (slope * inv + intercept)) / np.abs(logs)))
    trend_ok = slope < 0.0 and fit_resid <= c.get("transverse", "fit_residual")
    lo, hi = _band(rows)
    return ScalingReport(
        law="transverse",
        rows=rows,
        slope=float(slope),
        intercept=float(intercept),
        residual=fit_resid,
        band_min=lo,
        band_max=hi,
        passed=non_increasing and fast and trend_ok,
        runtime=time.perf_counter() - start,
        config={"eps_list": sorted(eps_sorted), "p_rule": "zero", "direction": "y", "route": "series"},
        checks={
            "probe_sup": sups,
            "non_increasing": non_increasing,
            "fixed_point": x_fixed[0].tolist(),
            "fixed_point_grad": fixed,
            "drop_per_decade": drops,
            "drop_limit": drop,
            "exponential_trend": trend_ok,
        },
        constants_version=c.version,
    )


def _far_values(sol, radii, n_dirs=50):
    dirs = fibonacci_sphere(n_dirs)
    return [float(np.max(np.linalg.norm(V.eval_grad_u(sol, r * dirs), axis=1)) * r**3) for r in radii]


def axial_case_check(eps_list, constants: Constants | None = None, p: float | None = None) -> ScalingReport:
    """Axial dipole: bounded boundary constant, no enhancement on the probes, |x|^-3 decay."""
    c = _consts(constants)
    start = time.perf_counter()
    p = c.get("axial", "p") if p is None else float(p)
    if abs(p) > 0.5:
        raise ScopeError("the axial estimates cover |p| <= 1/2")
    radii = c.get_list("axial", "far_radii")
    rows, probe_max, far_ok, far_ratios = [], [], True, {}
    for eps in sorted(eps_list, reverse=True):
        if eps < B.BEM_MIN_EPS:
            raise ScopeError(f"q_perp needs eps >= {B.BEM_MIN_EPS}, got {eps}")
        cfg = SphereConfig(eps)
        dip = DipoleSource.on_axis(p, "z")
        sol = V.solve_full(cfg, dip, "series")
        rows.append(SweepRow(eps, p, (-cfg.eps / 2.0, 0.0, 0.0), "z", abs(sol.c1), 1.0, abs(sol.c1)))
        probes = V.standard_probes(cfg, dip.p)
        d = np.linalg.norm(probes - dip.p, axis=1)
        probe_max.append(float(np.max(np.linalg.norm(V.eval_grad_u(sol, probes), axis=1) * d**3)))
        far = _far_values(sol, radii)
        ratios = [v / far[0] for v in far]
        far_ratios[str(eps)] = ratios
        factor = c.get("axial", "far_factor")
        far_ok = far_ok and all(1.0 / factor <= r <= factor for r in ratios)
    lo, hi = _band(rows)
    bound = c.get("axial", "probe_bound")
    probes_ok = all(v <= bound for v in probe_max)
    band = c.get("axial", "band")
    return ScalingReport(
        law="axial",
        rows=rows,
        band_min=lo,
        band_max=hi,
        passed=(hi / lo <= band) and probes_ok and far_ok,
        runtime=time.perf_counter() - start,
        config={"eps_list": sorted(eps_list), "p_rule": f"fixed {p:g}", "direction": "z", "route": "series+bem"},
        checks={
            "band_limit": band,
            "probe_max": probe_max,
            "probe_bound": bound,
            "far_radii": radii,
            "far_ratio_to_first": far_ratios,
            "far_ok": far_ok,
        },
        constants_version=c.version,
    )


def shell_gradient_norm(sol, radius: float = 3.0, degree: int = 32) -> float:
    """``||grad u||_{L^2}`` over the sphere of the given radius about the origin."""
    mesh = QuadratureMesh.gauss(degree)
    g = V.eval_grad_u(sol, radius * mesh.directions)
    return float(np.sqrt(radius**2 * mesh.integrate(np.sum(g * g, axis=1))))


def far_field_check(sol, constants: Constants | None = None) -> ScalingReport:
    """``|grad u(x)| |x|^3 / ||grad u||_{L^2(dB_3)}`` at growing radii."""
    c = _consts(constants)
    start = time.perf_counter()
    radii = c.get_list("farfield", "radii")
    norm = shell_gradient_norm(sol)
    vals = _far_values(sol, radii)
    rows = [
        SweepRow(sol.config.eps, float(sol.dipole.p[2]), (r, 0.0, 0.0), _direction_name(sol.dipole), v / r**3, norm / r**3, v / norm)
        for r, v in zip(radii, vals)
    ]
    ratios = [r.ratio for r in rows]
    bound = c.get("farfield", "bound")
    slack = c.get("farfield", "slack")
    tail = [q for r, q in zip(radii, ratios) if r >= 8.0]
    trend = all(b <= a * (1.0 + slack) for a, b in zip(tail, tail[1:]))
    lo, hi = _band(rows)
    return ScalingReport(
        law="farfield",
        rows=rows,
        band_min=lo,
        band_max=hi,
        passed=hi <= bound and trend,
        runtime=time.perf_counter() - start,
        config={"eps_list": [sol.config.eps], "p_rule": "given", "direction": _direction_name(sol.dipole), "route": sol.route},
        checks={"shell_norm": norm, "bound": bound, "non_increasing_beyond_8": trend},
        constants_version=c.version,
    )


def interpolation_check(eps_list, constants: Constants | None = None, n: int = 6) -> ScalingReport:
    """Between-regime bound for the x1-dipole at the gap centre.

    Samples ``C (eps) <= |x| <= C^-1 eps |log eps|`` along the x3-axis and
    compares ``|grad u|`` with the sum of the screened emitter term and the
    gap term, using the frozen ``A`` and ``K``.
    """
    c = _consts(constants)
    start = time.perf_counter()
    rows = []
    for eps in sorted(eps_list, reverse=True):
        le = abs(np.log(eps))
        sol = V.solve_full(SphereConfig(eps), DipoleSource.on_axis(0.0, "x"), "series")
        lo_r, hi_r = c.C * eps, eps * le / c.C
        if hi_r <= lo_r:
            continue
        for r in np.geomspace(lo_r, hi_r, n):
            x = np.array([[0.0, 0.0, r]])
            g = float(np.linalg.norm(V.eval_grad_u(sol, x)[0]))
            comp = np.exp(-c.A * r / eps) / r**3 + 1.0 / (eps * eps * le)
            rows.append(SweepRow(eps, 0.0, tuple(x[0]), "x", g, comp, g / comp))
    lo, hi = _band(rows)
    K = c.get("interpolation", "K")
    return ScalingReport(
        law="interpolation",
        rows=rows,
        band_min=lo,
        band_max=hi,
        passed=hi <= K,
        runtime=time.perf_counter() - start,
        config={"eps_list": sorted(eps_list), "p_rule": "zero", "direction": "x", "route": "series"},
        checks={"K": K},
        constants_version=c.version,
    )


# ---------------------------------------------------------------------------
# suites


def _harmonicity(fn, config, rng, n=20, rel_h=1e-3):
    """Largest ``|Lap_h f| * ell / |grad f|`` over random exterior points (7-point stencil)."""
    worst = 0.0
    got = 0
    while got < n:
        x = rng.uniform(-3.0, 3.0, size=3)
        ell = float(config.distance_to_spheres(x)[0])
        if ell < 0.05:
            continue
        got += 1
        h = rel_h * ell
        st = [x]
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            st += [x + e, x - e]
        v = fn(np.array(st))
        lap = (np.sum(v[1:]) - 6.0 * v[0]) / h**2
        grad = np.array([(v[1 + 2 * k] - v[2 + 2 * k]) / (2.0 * h) for k in range(3)])
        worst = max(worst, abs(lap) * ell / max(np.linalg.norm(grad), 1e-300))
    return float(worst)


def core_invariants(eps_list=(0.5, 0.1, 0.01), constants: Constants | None = None, seed: int = 7) -> ScalingReport:
    """Fluxes, boundary constancy and harmonicity of the singular function q."""
    c = _consts(constants)
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    rows, checks, ok = [], {}, True
    for eps in sorted(eps_list, reverse=True):
        series = S.build_series(SphereConfig(eps))
        f1, f2 = S.q_flux(series, 1), S.q_flux(series, 2)
        samples = S.boundary_samples(series, 2, 200)
        constancy = float(np.std(samples) / abs(np.mean(samples)))
        harm = _harmonicity(lambda x: S.eval_q(series, x), series.config, rng)
        antisym_pts = rng.uniform(-2.0, 2.0, size=(20, 3))
        antisym_pts = antisym_pts[series.config.is_exterior(antisym_pts, 0.01)]
        mirrored = antisym_pts * np.array([-1.0, 1.0, 1.0])
        antisym = float(np.max(np.abs(S.eval_q(series, antisym_pts) + S.eval_q(series, mirrored)), initial=0.0))
        entry = {
            "flux_1": f1,
            "flux_2": f2,
            "constancy": constancy,
            "harmonicity": harm,
            "antisymmetry": antisym,
            "terms": series.N + 1,
        }
        passed = (
            abs(f1 + 1.0) <= 1e-6 and abs(f2 - 1.0) <= 1e-6 and constancy <= 1e-6 and harm <= 1e-5 and antisym <= 1e-12
        )
        entry["pass"] = passed
        ok = ok and passed
        checks[str(eps)] = entry
        rows.append(SweepRow(eps, 0.0, (0.0, 0.0, 0.0), "-", f2, 1.0, f2))
    return ScalingReport(
        law="core-invariants",
        rows=rows,
        band_min=min(r.ratio for r in rows),
        band_max=max(r.ratio for r in rows),
        passed=ok,
        runtime=time.perf_counter() - start,
        config={"eps_list": sorted(eps_list), "p_rule": "none", "direction": "-", "route": "series"},
        checks=checks,
        constants_version=c.version,
    )


def np_eigenvalues(degrees=range(5), L: int = 16):
    """Measured ``K*`` eigenvalues on the unit sphere for zonal harmonics of the given degrees.

    ``K*`` is applied by the polar quadrature rule at the nodes of a Gauss
    mesh and the result projected back onto the same harmonic.
    """
    from . import harmonics as H

    mesh = QuadratureMesh.gauss(L)
    out = []
    for n in degrees:
        e = np.zeros(L + 1)
        e[n] = 1.0
        coefs = {(0, "c"): e}
        k = B.np_operator_on_surface(lambda y: H.synthesize(coefs, y), mesh.directions)
        out.append(float(mesh.integrate(k * H.synthesize(coefs, mesh.directions))))
    return out


def jump_check(h: float = 1e-3, n_targets: int = 6):
    """Largest mismatch between ``d_r S[phi]`` on each side and ``(+-1/2 I + K*)[phi]``.

    One-sided second-order differences with step ``h`` use the on-surface
    value (polar rule) and off-surface values from a rule graded toward the
    target. The density is a smooth mix of several degrees.
    """

    def density(y):
        y = np.atleast_2d(y)
        return y[:, 0] + 0.5 * y[:, 1] ** 2 + 0.3 * y[:, 2] + 0.2 * y[:, 0] * y[:, 2]

    targets = fibonacci_sphere(n_targets)
    on = B.single_layer_on_surface(density, targets)
    kstar = B.np_operator_on_surface(density, targets)
    worst = 0.0
    for i, x in enumerate(targets):
        mesh = QuadratureMesh.graded(theta_min=h / 8.0, order=16, n_phi=64, axis=x)
        dens = density(mesh.directions)
        for side in (1.0, -1.0):
            s1 = B.single_layer(mesh, dens, (1.0 + side * h) * x)[0]
            s2 = B.single_layer(mesh, dens, (1.0 + 2.0 * side * h) * x)[0]
            # -d_nu = +d_r for the inward normal
            deriv = side * (-3.0 * on[i] + 4.0 * s1 - s2) / (2.0 * h)
            worst = max(worst, abs(deriv - (side * 0.5 * density(x)[0] + kstar[i])))
    return float(worst)


def bem_unit_check(constants: Constants | None = None) -> ScalingReport:
    """Single-sphere operator identities and the trivial exterior solve."""
    c = _consts(constants)
    start = time.perf_counter()
    eig = np_eigenvalues()
    expected = [1.0 / (2.0 * (2 * n + 1)) for n in range(5)]
    eig_err = max(abs(a - b) for a, b in zip(eig, expected))
    dirs = fibonacci_sphere(20)
    k_one = B.np_operator_on_surface(lambda y: np.ones(len(np.atleast_2d(y))), dirs)
    k_one_err = float(np.max(np.abs(k_one - 0.5)))
    jump = jump_check()
    cfg = SphereConfig(0.2)
    ext = B.solve_exterior(cfg, lambda x: np.ones(len(x)), L=B.DEFAULT_L)
    pts = np.array([[0.0, 0.0, 0.0], [0.0, 2.0, 0.0], [3.0, 1.0, -1.0]])
    v_max = float(np.max(np.abs(ext.eval_v(pts))))
    c_err = max(abs(ext.c1 - 1.0), abs(ext.c2 - 1.0))
    checks = {
        "np_eigenvalues": eig,
        "np_eigenvalue_error": eig_err,
        "kstar_one_error": k_one_err,
        "jump_error": jump,
        "unit_data_v_max": v_max,
        "unit_data_constant_error": c_err,
    }
    passed = eig_err <= 1e-8 and k_one_err <= 1e-10 and jump <= 1e-4 and v_max <= 1e-10 and c_err <= 1e-10
    rows = [SweepRow(0.0, 0.0, (0.0, 0.0, 0.0), "-", a, b, a / b) for a, b in zip(eig, expected)]
    return ScalingReport(
        law="bem-unit",
        rows=rows,
        band_min=min(r.ratio for r in rows),
        band_max=max(r.ratio for r in rows),
        passed=passed,
        runtime=time.perf_counter() - start,
        config={"eps_list": [0.2], "p_rule": "none", "direction": "-", "route": "bem"},
        checks=checks,
        constants_version=c.version,
    )


__all__ = [
    "Constants",
    "load_constants",
    "RegimeLabel",
    "SweepRow",
    "ScalingReport",
    "fit_loglog",
    "log_grid",
    "classify_regime",
    "gap_scaling_sweep",
    "enhancement_sweep",
    "near_singularity_check",
    "transverse_decay_check",
    "axial_case_check",
    "far_field_check",
    "interpolation_check",
    "core_invariants",
    "np_eigenvalues",
    "jump_check",
    "bem_unit_check",
    "precise_digits",
    "shell_gradient_norm",
]
