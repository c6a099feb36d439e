"""Full solution of the floating-conductor problem for one emitter.

The field is assembled as

    u = r0 + lambda_q q + lambda_perp q_perp

where ``r0`` is the grounded field (images), ``q`` the antisymmetric
singular function (image series) and ``q_perp`` its symmetric companion.
The two coefficients are fixed by the zero-flux condition on each sphere:
with ``F_j`` the inward flux of ``r0`` through ``dD_j`` (flux of q is -1,
+1 and of q_perp +1, +1),

    lambda_q = (F1 - F2) / 2,    lambda_perp = -(F1 + F2) / 2.

For the x1-dipole on the x3-axis the gap ``u|dD2 - u|dD1 = 2 lambda_q q|dD2``
is taken from the closed series instead and the flux balance is kept as a
mandatory cross-check. The integral-equation route solves ``u = f - v``
directly. ``route="both"`` runs the two and compares them on a fixed probe
set.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bem as B
from . import grounded_images as G
from . import image_series as S
from .errors import ConsistencyError, DomainError, ScopeError
from .geometry import DipoleSource, SphereConfig, as_points, dipole_field, grad_dipole_field
from .quadrature import QuadratureMesh

ROUTES = ("series", "bem", "both")
ROUTE_ALIASES = {"images": "series", "series": "series", "bem": "bem", "both": "both"}

GAP_BALANCE_RTOL = 1e-4
CROSS_ROUTE_RTOL = 1e-3
PROBE_SEED = 20140601


def qperp_degree(eps: float) -> int:
    """Harmonic degree used for q_perp; resolves the gap coupling to about 1e-10."""
    return max(64, int(np.ceil(40.0 / np.sqrt(eps))))


@dataclass(frozen=True)
class FieldSolution:
    """Assembled field with its boundary constants and provenance."""

    config: SphereConfig
    dipole: DipoleSource
    route: str
    c1: float
    c2: float
    lambda_q: float = 0.0
    lambda_perp: float = 0.0
    series: S.ImageChargeSeries | None = field(default=None, repr=False)
    grounded: G.GroundedSolution | None = field(default=None, repr=False)
    qperp: B.QPerpField | None = field(default=None, repr=False)
    exterior: B.ExteriorSolution | None = field(default=None, repr=False)
    partial: bool = False
    in_scope: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.c2 - self.c1

    @property
    def uses_series(self) -> bool:
        return self.grounded is not None


def _series_parts(config, dipole, tol):
    series = S.build_series(config)
    grounded = G.solve_grounded(config, dipole, tol=tol)
    return series, grounded, S.q_boundary_value(series)


def _solve_series(config: SphereConfig, dipole: DipoleSource, tol: float) -> FieldSolution:
    series, grounded, qb = _series_parts(config, dipole, tol)
    F1, F2 = grounded.flux_1, grounded.flux_2
    diag = {"flux_1": F1, "flux_2": F2, "q_boundary": qb, "n_images": grounded.n_images}
    direction = _axis_direction(dipole)
    lam_q = 0.5 * (F1 - F2)
    lam_perp = -0.5 * (F1 + F2)
    if direction == "x":
        gap = float(np.sign(dipole.a[0])) * S.potential_gap_series(series, float(dipole.p[2]))
        balance = 2.0 * qb * lam_q
        diag["gap_series"] = gap
        diag["gap_flux_balance"] = balance
        rel = abs(gap - balance) / abs(gap)
        diag["gap_balance_delta"] = rel
        if rel > GAP_BALANCE_RTOL:
            raise ConsistencyError(f"gap from the series {gap!r} and from flux balance {balance!r} differ by {rel:.2e}")
        lam_q, lam_perp = gap / (2.0 * qb), 0.0
    elif direction == "y":
        lam_q, lam_perp = 0.0, 0.0
    elif direction == "z":
        lam_q, lam_perp = 0.0, -F1
    qperp = None
    partial = False
    qperp_value = 0.0
    if lam_perp != 0.0:
        if config.eps < B.BEM_MIN_EPS:
            partial = True
            diag["qperp"] = f"unavailable below eps={B.BEM_MIN_EPS}; constants not computed"
        else:
            qperp = B.build_qperp(config, L=qperp_degree(config.eps), series=series)
            qperp_value = qperp.value
            image_value = S.qperp_boundary_value(series)
            diag["qperp_value"] = qperp_value
            diag["qperp_image_delta"] = abs(qperp_value - image_value) / abs(image_value)
    if partial:
        c1 = c2 = float("nan")
    else:
        c1 = -lam_q * qb + lam_perp * qperp_value
        c2 = lam_q * qb + lam_perp * qperp_value
    return FieldSolution(
        config=config,
        dipole=dipole,
        route="series",
        c1=float(c1),
        c2=float(c2),
        lambda_q=float(lam_q),
        lambda_perp=float(lam_perp),
        series=series,
        grounded=grounded,
        qperp=qperp,
        partial=partial,
        in_scope=direction is not None,
        diagnostics=diag,
    )


def _solve_bem(config, dipole, L, tail) -> FieldSolution:
    if config.eps < B.BEM_MIN_EPS:
        raise ScopeError(f"integral-equation route needs eps >= {B.BEM_MIN_EPS}, got {config.eps}")
    ext = B.solve_exterior(config, dipole, L=L, tail=tail, rtol=1e-5)
    diag = {"L": ext.L, "constancy": ext.constancy, "projection": ext.density.projection}
    return FieldSolution(
        config=config,
        dipole=dipole,
        route="bem",
        c1=ext.c1,
        c2=ext.c2,
        exterior=ext,
        in_scope=_axis_direction(dipole) is not None,
        diagnostics=diag,
    )


def _axis_direction(dipole: DipoleSource):
    """'x', 'y' or 'z' for an emitter on the x3-axis with a coordinate moment, else None."""
    if not dipole.axis_flag:
        return None
    for name, k in (("x", 0), ("y", 1), ("z", 2)):
        if abs(abs(dipole.a[k]) - 1.0) < 1e-12:
            return name
    return None


def solve_full(
    config: SphereConfig,
    dipole: DipoleSource,
    route: str = "series",
    *,
    tol: float = 1e-13,
    L: int | None = None,
    tail: float = 1e-8,
    cross_rtol: float = CROSS_ROUTE_RTOL,
) -> FieldSolution:
    """Solve for ``u`` by the image route, the integral-equation route or both.

    With ``route="both"`` the series solution is returned (or the integral
    one when the series is partial) and the cross-route deltas over the
    standard probe set are stored in its diagnostics; a delta above
    ``cross_rtol`` raises :class:`ConsistencyError`.
    """
    if route not in ROUTE_ALIASES:
        raise DomainError(f"unknown route {route!r}; expected one of {sorted(ROUTE_ALIASES)}")
    route = ROUTE_ALIASES[route]
    dipole.check(config)
    if route == "series":
        return _solve_series(config, dipole, tol)
    if route == "bem":
        return _solve_bem(config, dipole, L, tail)
    ser = _solve_series(config, dipole, tol)
    ext = _solve_bem(config, dipole, L, tail)
    deltas = cross_route_delta(ser, ext) if not ser.partial else {}
    diag = dict(ser.diagnostics)
    diag.update({f"bem_{k}": v for k, v in ext.diagnostics.items()})
    diag.update({"bem_c1": ext.c1, "bem_c2": ext.c2, **deltas})
    base = ext if ser.partial else ser
    sol = FieldSolution(
        config=config,
        dipole=dipole,
        route="both",
        c1=base.c1,
        c2=base.c2,
        lambda_q=ser.lambda_q,
        lambda_perp=ser.lambda_perp,
        series=None if ser.partial else ser.series,
        grounded=None if ser.partial else ser.grounded,
        qperp=ser.qperp,
        exterior=ext.exterior,
        in_scope=ser.in_scope,
        diagnostics=diag,
    )
    if deltas and max(deltas["delta_u"], deltas["delta_grad"]) > cross_rtol:
        raise ConsistencyError(
            f"series and integral routes disagree on the probe set (u {deltas['delta_u']:.2e}, "
            f"grad {deltas['delta_grad']:.2e})"
        )
    return sol


# ---------------------------------------------------------------------------
# evaluation


def eval_regular_part(sol: FieldSolution, x, grad: bool = True):
    """``u - a.grad N_p`` and its gradient; smooth across the emitter."""
    pts = as_points(x)
    if sol.uses_series:
        val, g = G.eval_images(sol.grounded, pts, grad=True)
        if sol.lambda_q != 0.0:
            val = val + sol.lambda_q * S.eval_q(sol.series, pts)
            g = g + sol.lambda_q * S.eval_grad_q(sol.series, pts)
        if sol.lambda_perp != 0.0 and sol.qperp is not None:
            val = val + sol.lambda_perp * sol.qperp.eval(pts)
            g = g + sol.lambda_perp * sol.qperp.eval_grad(pts)
    else:
        val = -sol.exterior.eval_v(pts)
        g = -sol.exterior.eval_grad_v(pts)
    return (val, g) if grad else val


def _check_points(sol, pts):
    sol.config.require_exterior(pts, "evaluation point")
    if np.any(np.linalg.norm(pts - sol.dipole.p, axis=1) == 0.0):
        raise DomainError("evaluation at the emitter location")


def eval_u(sol: FieldSolution, x) -> np.ndarray:
    pts = as_points(x)
    _check_points(sol, pts)
    return dipole_field(sol.dipole.p, sol.dipole.a, pts) + eval_regular_part(sol, pts, grad=False)


def eval_grad_u(sol: FieldSolution, x) -> np.ndarray:
    pts = as_points(x)
    _check_points(sol, pts)
    return grad_dipole_field(sol.dipole.p, sol.dipole.a, pts) + eval_regular_part(sol, pts)[1]


# ---------------------------------------------------------------------------
# probes and cross-route comparison


def standard_probes(config: SphereConfig, p=None, seed: int = PROBE_SEED) -> np.ndarray:
    """26 probe points: 10 in the midplane at radius 0.5 sqrt(eps), 8 at |x| = 1.5, 8 at |x| = 3.

    Shell points are drawn from a seeded generator and kept only if they are
    at least 0.05 from both spheres. Points closer to the emitter than a
    quarter of their shell radius are skipped.
    """
    rng = np.random.default_rng(seed)
    emitter = None if p is None else np.asarray(p, dtype=float).reshape(3)
    r0 = 0.5 * np.sqrt(config.eps)
    ang = 2.0 * np.pi * (np.arange(10) + 0.25) / 10.0
    mid = np.stack([np.zeros(10), r0 * np.cos(ang), r0 * np.sin(ang)], axis=1)
    pts = [x for x in mid if emitter is None or np.linalg.norm(x - emitter) >= 0.25 * r0]
    for radius in (1.5, 3.0):
        kept = 0
        while kept < 8:
            v = rng.normal(size=3)
            x = radius * v / np.linalg.norm(v)
            if config.distance_to_spheres(x)[0] < 0.05:
                continue
            kept += 1
            if emitter is not None and np.linalg.norm(x - emitter) < 0.25 * radius:
                continue
            pts.append(x)
    return np.array(pts)


def cross_route_delta(a: FieldSolution, b: FieldSolution, probes=None) -> dict:
    """Sup-norm relative differences of ``u`` and ``grad u`` over the probe set."""
    probes = standard_probes(a.config, a.dipole.p) if probes is None else as_points(probes)
    ua, ub = eval_u(a, probes), eval_u(b, probes)
    ga, gb = eval_grad_u(a, probes), eval_grad_u(b, probes)
    du = float(np.max(np.abs(ua - ub)) / max(np.max(np.abs(ua)), 1e-300))
    dg = float(np.max(np.linalg.norm(ga - gb, axis=1)) / max(np.max(np.linalg.norm(ga, axis=1)), 1e-300))
    return {"delta_u": du, "delta_grad": dg, "delta_c1": abs(a.c1 - b.c1), "delta_c2": abs(a.c2 - b.c2)}


# ---------------------------------------------------------------------------
# boundary constants by quadrature


def _constant_meshes(config: SphereConfig, dipole: DipoleSource, order: int):
    meshes = []
    for j in (1, 2):
        r = dipole.p - config.center(j)
        dist = float(np.linalg.norm(r))
        pole = 1.0 if j == 1 else -1.0
        theta = float(np.arccos(np.clip(pole * r[0] / dist, -1.0, 1.0)))
        phi = float(np.arctan2(r[2], r[1]))
        meshes.append(
            QuadratureMesh.focused(
                pole, theta, phi, 0.05 * (dist - 1.0), theta_min=0.05 * min(np.sqrt(config.eps), 0.5), order=order
            )
        )
    return meshes


def boundary_constants_via_q(config: SphereConfig, dipole: DipoleSource, series=None, qperp=None, order: int = 16):
    """``(u|dD1 - u|dD2, u|dD1 + u|dD2)`` from boundary integrals against q and q_perp.

    The difference is ``-int f d_nu q`` and the sum ``int f d_nu q_perp`` over
    both spheres, with ``f = a.grad N_p`` and the inward normal. ``qperp``
    is any object with ``eval_grad``; by default it is built by the integral
    route, and the sum is ``None`` below the supported gap.
    """
    dipole.check(config)
    series = series or S.build_series(config)
    if qperp is None and config.eps >= B.BEM_MIN_EPS:
        qperp = B.build_qperp(config, L=qperp_degree(config.eps), series=series)
    diff = 0.0
    total = 0.0
    for j, mesh in zip((1, 2), _constant_meshes(config, dipole, order)):
        pts = mesh.points(config.center(j))
        nu = -mesh.directions
        f = dipole_field(dipole.p, dipole.a, pts)
        dq = np.einsum("ij,ij->i", S.eval_grad_q(series, pts), nu)
        diff -= mesh.integrate(f * dq)
        if qperp is not None:
            dqp = np.einsum("ij,ij->i", qperp.eval_grad(pts), nu)
            total += mesh.integrate(f * dqp)
    return float(diff), (float(total) if qperp is not None else None)


# ---------------------------------------------------------------------------
# invariants of an assembled solution


def boundary_constancy(sol: FieldSolution, n: int = 200) -> float:
    """Largest ``|u - c_j|`` on sampled boundary points, relative to max(|c1|, |c2|, sup |f|)."""
    from .geometry import fibonacci_sphere

    dirs = fibonacci_sphere(n)
    worst, scale = 0.0, max(abs(sol.c1), abs(sol.c2))
    for j, c in ((1, sol.c1), (2, sol.c2)):
        pts = sol.config.boundary_points(j, dirs)
        # boundary samples may round to just inside the ball, so skip the exterior check
        u = dipole_field(sol.dipole.p, sol.dipole.a, pts) + eval_regular_part(sol, pts, grad=False)
        worst = max(worst, float(np.max(np.abs(u - c))))
        scale = max(scale, float(np.max(np.abs(dipole_field(sol.dipole.p, sol.dipole.a, pts)))))
    return worst / max(scale, 1e-300)


def boundary_flux(sol: FieldSolution, j: int) -> float:
    """Inward flux of ``u`` through ``dD_j`` by graded quadrature."""
    from .quadrature import inward_flux

    def grad(x):
        return grad_dipole_field(sol.dipole.p, sol.dipole.a, x) + eval_regular_part(sol, x)[1]

    return inward_flux(sol.config, j, grad, source=sol.dipole.p)


def far_field_exponent(sol: FieldSolution, radii=(20.0, 40.0, 80.0), n: int = 50) -> float:
    """Fitted decay exponent of ``max |u|`` over shells of the given radii."""
    from .geometry import fibonacci_sphere

    dirs = fibonacci_sphere(n)
    vals = [float(np.max(np.abs(eval_u(sol, r * dirs)))) for r in radii]
    return float(np.polyfit(np.log(radii), np.log(vals), 1)[0])


__all__ = [
    "FieldSolution",
    "solve_full",
    "eval_u",
    "eval_grad_u",
    "eval_regular_part",
    "standard_probes",
    "cross_route_delta",
    "boundary_constants_via_q",
    "boundary_constancy",
    "boundary_flux",
    "far_field_exponent",
    "qperp_degree",
]
