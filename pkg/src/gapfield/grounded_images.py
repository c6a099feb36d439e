"""Grounded field of the emitter: both spheres held at potential zero.

Reflecting a point source (charge Q, moment m) at ``s`` in the unit sphere
about ``c`` (Kelvin transform) gives, with ``r = s - c`` and ``d = |r|``,

    location  c + r / d^2
    charge    -Q / d + (m . r) / d^3
    moment    -(m - 2 (m . r_hat) r_hat) / d^3

and the source plus its image vanish identically on the sphere. Starting
from the emitter and alternately reflecting into the two spheres yields two
chains of images whose sum is the grounded field ``r0``. The inward flux of
``r0`` through ``dD_j`` equals the total image charge inside ``D_j``.

For fields that are exponentially small compared with the individual image
contributions (the transverse dipole deep in the gap) a multi-precision
variant built on gmpy2 is provided.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, ConvergenceError, DomainError
from .geometry import (
    FOUR_PI,
    DipoleSource,
    SphereConfig,
    as_points,
    dipole_field,
    fibonacci_sphere,
    grad_dipole_field,
    source_field,
)
from .quadrature import inward_flux

MAX_GENERATIONS = 1_000_000


@dataclass(frozen=True)
class PointSource:
    """Charge and dipole moment at one location; generation 0 is the emitter."""

    location: np.ndarray
    charge: float
    moment: np.ndarray
    generation: int = 0

    def __post_init__(self):
        if self.generation < 0:
            raise DomainError("generation must be non-negative")
        object.__setattr__(self, "location", np.asarray(self.location, dtype=float).reshape(3))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=float).reshape(3))


def kelvin_image(center, s: PointSource) -> PointSource:
    """Image of ``s`` in the grounded unit sphere about ``center``."""
    c = np.asarray(center, dtype=float)
    r = s.location - c
    d2 = float(r @ r)
    if d2 <= 1.0:
        raise DomainError("source must lie strictly outside the sphere it is reflected in")
    d = math.sqrt(d2)
    mr = float(s.moment @ r)
    charge = -s.charge / d + mr / (d2 * d)
    moment = -(s.moment - 2.0 * mr * r / d2) / (d2 * d)
    return PointSource(c + r / d2, charge, moment, s.generation + 1)


def reflect_source(config: SphereConfig, j: int, s: PointSource):
    """Image system making ``dD_j`` an equipotential at zero for ``s``."""
    return [kelvin_image(config.center(j), s)]


@dataclass(frozen=True)
class GroundedSolution:
    """Emitter plus image sources realising the grounded field r0."""

    config: SphereConfig
    dipole: DipoleSource
    locations: np.ndarray
    charges: np.ndarray
    moments: np.ndarray
    generations: np.ndarray
    spheres: np.ndarray  # index of the sphere containing each image
    residual_estimate: float
    flux_1: float
    flux_2: float
    tol: float

    @property
    def sources(self):
        emitter = PointSource(self.dipole.p, 0.0, self.dipole.a, 0)
        return [emitter] + [
            PointSource(l, q, m, int(g))
            for l, q, m, g in zip(self.locations, self.charges, self.moments, self.generations)
        ]

    @property
    def n_images(self) -> int:
        return len(self.charges)


def _boundary_scale(config, dipole, n=400):
    pts = np.concatenate([config.boundary_points(j, fibonacci_sphere(n)) for j in (1, 2)])
    # nearest boundary points to the emitter dominate the sup
    near = []
    for j in (1, 2):
        c = config.center(j)
        r = dipole.p - c
        near.append(c + r / np.linalg.norm(r))
    pts = np.concatenate([pts, np.array(near)])
    return float(np.max(np.abs(dipole_field(dipole.p, dipole.a, pts))))


def _chain(config, first_sphere, loc, mom, tol_abs, rate, max_gen):
    """Alternating reflections starting in ``first_sphere``; plain floats for speed."""
    centers = {1: (-config.half_distance, 0.0, 0.0), 2: (config.half_distance, 0.0, 0.0)}
    out = []
    x, y, z = loc
    mx, my, mz = mom
    Q = 0.0
    j = first_sphere
    for gen in range(1, max_gen + 1):
        cx = centers[j][0]
        rx, ry, rz = x - cx, y, z
        d2 = rx * rx + ry * ry + rz * rz
        d = math.sqrt(d2)
        d3 = d2 * d
        mr = mx * rx + my * ry + mz * rz
        Q = -Q / d + mr / d3
        k = 2.0 * mr / d2
        mx, my, mz = -(mx - k * rx) / d3, -(my - k * ry) / d3, -(mz - k * rz) / d3
        x, y, z = cx + rx / d2, ry / d2, rz / d2
        out.append((x, y, z, Q, mx, my, mz, gen, j))
        j = 3 - j
        # distance from the new image to the sphere it will be reflected in next
        ox = centers[j][0]
        delta = math.sqrt((x - ox) ** 2 + y * y + z * z) - 1.0
        mnorm = math.sqrt(mx * mx + my * my + mz * mz)
        bound = (abs(Q) / delta + mnorm / (delta * delta)) / FOUR_PI
        if bound / (1.0 - rate) < tol_abs:
            return out
    raise ConvergenceError(f"grounded image chain exceeded {max_gen} generations (eps={config.eps})")


def solve_grounded(
    config: SphereConfig,
    dipole: DipoleSource,
    tol: float = 1e-13,
    max_generations: int = MAX_GENERATIONS,
) -> GroundedSolution:
    """Grounded field of ``dipole`` by iterated Kelvin images."""
    dipole.check(config)
    scale = _boundary_scale(config, dipole)
    rate = 1.0 / (config.half_distance + config.p_inf)
    rows = []
    for first in (1, 2):
        rows += _chain(config, first, dipole.p, dipole.a, tol * scale, rate, max_generations)
    arr = np.array(rows, dtype=float).reshape(-1, 9)
    locs, charges, moments = arr[:, 0:3], arr[:, 3], arr[:, 4:7]
    gens, spheres = arr[:, 7].astype(int), arr[:, 8].astype(int)
    flux = {j: float(np.sum(charges[spheres == j])) for j in (1, 2)}
    sol = GroundedSolution(
        config=config,
        dipole=dipole,
        locations=locs,
        charges=charges,
        moments=moments,
        generations=gens,
        spheres=spheres,
        residual_estimate=0.0,
        flux_1=flux[1],
        flux_2=flux[2],
        tol=tol,
    )
    resid = boundary_residual(sol) / scale
    floor = rounding_floor(sol) / scale
    if resid > max(tol * 10.0, floor):
        raise AccuracyError(
            f"grounded residual {resid:.3e} exceeds tolerance {tol:.1e} (rounding floor {floor:.1e})"
        )
    object.__setattr__(sol, "residual_estimate", resid)
    return sol


def boundary_residual(sol: GroundedSolution, n: int = 200) -> float:
    """Largest ``|r0|`` over sampled boundary points (absolute)."""
    dirs = fibonacci_sphere(n)
    pts = [sol.config.boundary_points(j, dirs) for j in (1, 2)]
    # gap-side poles are where the truncation error concentrates
    pts.append(np.array([[-sol.config.eps / 2, 0.0, 0.0], [sol.config.eps / 2, 0.0, 0.0]]))
    return float(np.max(np.abs(eval_r0(sol, np.concatenate(pts)))))


def rounding_floor(sol: GroundedSolution) -> float:
    """Boundary error that double-precision image positions alone can cause.

    Near the gap the images sit within ``O(eps)`` of the boundary while their
    coordinates are ``O(1)``, so a relative rounding error ``u`` in a position
    shifts each term by about ``u |grad term|``. The floor is four times the
    sum of those shifts at the two gap poles.
    """
    cfg = sol.config
    pts = np.array([[-cfg.eps / 2, 0.0, 0.0], [cfg.eps / 2, 0.0, 0.0]])
    y = pts[:, None, :] - sol.locations[None, :, :]
    r = np.linalg.norm(y, axis=2)
    mom = np.linalg.norm(sol.moments, axis=1)
    grad = (np.abs(sol.charges) / r**2 + 2.0 * mom / r**3) / FOUR_PI
    size = np.maximum(np.linalg.norm(sol.locations, axis=1), 1.0)
    return float(4.0 * np.finfo(float).eps * np.max(grad @ size))


def eval_r0(sol: GroundedSolution, x) -> np.ndarray:
    pts = as_points(x)
    v = dipole_field(sol.dipole.p, sol.dipole.a, pts)
    return v + source_field(sol.locations, sol.charges, sol.moments, pts, grad=False, guard=1e-300)


def eval_grad_r0(sol: GroundedSolution, x) -> np.ndarray:
    pts = as_points(x)
    g = grad_dipole_field(sol.dipole.p, sol.dipole.a, pts)
    return g + source_field(sol.locations, sol.charges, sol.moments, pts, grad=True, guard=1e-300)[1]


def eval_images(sol: GroundedSolution, x, grad: bool = False):
    """Image part only, ``r0 - a.grad N_p`` (smooth near the emitter)."""
    return source_field(sol.locations, sol.charges, sol.moments, as_points(x), grad=grad, guard=1e-300)


def induced_flux(sol: GroundedSolution, j: int, rtol: float = 1e-8) -> float:
    """Inward flux of r0 through ``dD_j``: image-charge sum, checked by quadrature."""
    exact = sol.flux_1 if j == 1 else sol.flux_2
    quad = inward_flux(sol.config, j, lambda x: eval_grad_r0(sol, x), source=sol.dipole.p)
    scale = max(abs(sol.flux_1), abs(sol.flux_2), 1e-300)
    if abs(quad - exact) > rtol * max(scale, 1.0):
        raise AccuracyError(f"flux mismatch on sphere {j}: quadrature {quad!r} vs image sum {exact!r}")
    return exact


# ---------------------------------------------------------------------------
# multi-precision variant


@dataclass(frozen=True)
class PreciseGroundedSolution:
    """Image sources held as gmpy2 numbers for exponentially small fields."""

    config: SphereConfig
    dipole: DipoleSource
    digits: int
    locations: np.ndarray  # object arrays of mpfr, shape (n, 3)
    charges: np.ndarray
    moments: np.ndarray


def solve_grounded_precise(
    config: SphereConfig,
    dipole: DipoleSource,
    digits: int,
    max_generations: int = MAX_GENERATIONS,
) -> PreciseGroundedSolution:
    """Same construction as :func:`solve_grounded` carried out with ``digits`` digits.

    Chains stop once an image's boundary bound falls below ``10^-digits``
    relative to the emitter's boundary scale.
    """
    import gmpy2

    ctx = gmpy2.get_context().copy()
    ctx.precision = int(digits * 3.33) + 16
    with gmpy2.context(ctx):
        mpf = gmpy2.mpfr
        h = mpf(1) + mpf(config.eps) / 2
        p = [mpf(float(v)) for v in dipole.p]
        a = [mpf(float(v)) for v in dipole.a]
        scale = _boundary_scale(config, dipole)
        tol_abs = mpf(scale) * mpf(10) ** (-digits)
        rate = 1.0 / (config.half_distance + config.p_inf)
        rows = []
        for first in (1, 2):
            x, y, z = p
            mx, my, mz = a
            Q = mpf(0)
            j = first
            for gen in range(1, max_generations + 1):
                cx = -h if j == 1 else h
                rx = x - cx
                d2 = rx * rx + y * y + z * z
                d = gmpy2.sqrt(d2)
                d3 = d2 * d
                mr = mx * rx + my * y + mz * z
                Q = -Q / d + mr / d3
                k = 2 * mr / d2
                mx, my, mz = -(mx - k * rx) / d3, -(my - k * y) / d3, -(mz - k * z) / d3
                x, y, z = cx + rx / d2, y / d2, z / d2
                rows.append((x, y, z, Q, mx, my, mz))
                j = 3 - j
                ox = -h if j == 1 else h
                delta = gmpy2.sqrt((x - ox) ** 2 + y * y + z * z) - 1
                mnorm = gmpy2.sqrt(mx * mx + my * my + mz * mz)
                bound = (abs(Q) / delta + mnorm / (delta * delta)) / (4 * gmpy2.const_pi())
                if bound / (1 - rate) < tol_abs:
                    break
            else:
                raise ConvergenceError(f"precise image chain exceeded {max_generations} generations")
    arr = np.array(rows, dtype=object)
    return PreciseGroundedSolution(
        config=config,
        dipole=dipole,
        digits=digits,
        locations=arr[:, 0:3],
        charges=arr[:, 3],
        moments=arr[:, 4:7],
    )


def eval_grad_r0_precise(sol: PreciseGroundedSolution, x):
    """Gradient of r0 at points ``x`` in multi-precision; returns float array (n, 3).

    Values far below the double-precision range of the individual image terms
    are recovered because all cancellation happens at ``sol.digits`` digits.
    """
    import gmpy2

    ctx = gmpy2.get_context().copy()
    ctx.precision = int(sol.digits * 3.33) + 16
    pts = as_points(x)
    out = np.zeros((len(pts), 3))
    with gmpy2.context(ctx):
        mpf = gmpy2.mpfr
        four_pi = 4 * gmpy2.const_pi()
        L, Qs, M = sol.locations, sol.charges, sol.moments
        has_charge = any(q != 0 for q in Qs)
        src = [(sol.dipole.p, 0, sol.dipole.a)]
        for i, xp in enumerate(pts):
            xv = [mpf(float(v)) for v in xp]
            yx = xv[0] - L[:, 0]
            yy = xv[1] - L[:, 1]
            yz = xv[2] - L[:, 2]
            r2 = yx * yx + yy * yy + yz * yz
            inv2 = 1 / r2
            inv = np.array([gmpy2.sqrt(v) for v in inv2], dtype=object)
            inv3 = inv * inv2
            my_ = M[:, 0] * yx + M[:, 1] * yy + M[:, 2] * yz
            w = 3 * my_ * inv3 * inv2
            gx = M[:, 0] * inv3 - w * yx
            gy = M[:, 1] * inv3 - w * yy
            gz = M[:, 2] * inv3 - w * yz
            if has_charge:
                qi = Qs * inv3
                gx = gx - qi * yx
                gy = gy - qi * yy
                gz = gz - qi * yz
            g = [gmpy2.fsum(gx), gmpy2.fsum(gy), gmpy2.fsum(gz)]
            for loc, _q, mom in src:
                e = [xv[k] - mpf(float(loc[k])) for k in range(3)]
                rr2 = e[0] ** 2 + e[1] ** 2 + e[2] ** 2
                rr = gmpy2.sqrt(rr2)
                mm = [mpf(float(v)) for v in mom]
                me = mm[0] * e[0] + mm[1] * e[1] + mm[2] * e[2]
                for k in range(3):
                    g[k] += mm[k] / (rr2 * rr) - 3 * me * e[k] / (rr2 * rr2 * rr)
            out[i] = [float(v / four_pi) for v in g]
    return out
