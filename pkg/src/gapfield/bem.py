"""Boundary-integral route: single-layer densities on both spheres.

The exterior field is represented as ``v = S1[phi1] + S2[phi2]`` with
mean-zero densities and solved from the block system

    (1/2 I - K*) [phi1; phi2] = [Lambda_1 f; Lambda_2 f]

(inward normals, ``K*`` carrying ``-d_nu S`` of the other sphere off the
diagonal). Densities are expanded in the orthonormal real harmonics of
``harmonics`` about each centre. On a unit sphere

    S[Y_n] = -Y_n / (2n+1),   K*[Y_n] = Y_n / (2(2n+1)),   Lambda Y_n = -n Y_n,

so the self blocks are diagonal, ``n / (2n+1)``. The cross blocks follow
from the exact coaxial re-expansion of exterior harmonics, which keeps
azimuthal orders ``m`` and sine/cosine types decoupled, and mirror symmetry
``x1 -> -x1`` splits each ``m`` block into two half-size systems. The
degree-0 rows are dropped: they only fix the boundary constants, and the
densities are mean-zero by construction.

Quadrature-based operators (polar rule on the surface, graded product rules
off the surface) are provided as independent references.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import harmonics as H
from .errors import AccuracyError, DomainError, NumericalError, ResolutionError
from .geometry import FOUR_PI, DipoleSource, SphereConfig, as_points, dipole_field, fibonacci_sphere
from .quadrature import QuadratureMesh, polar_rule

log = logging.getLogger(__name__)

BEM_MIN_EPS = 1e-2
DEFAULT_L = 24
MAX_L = 5000
Y00 = 1.0 / np.sqrt(4.0 * np.pi)


@dataclass(frozen=True)
class HarmonicExpansion:
    """Coefficients ``a_nm`` up to degree ``L`` keyed by ``(m, kind)``."""

    L: int
    coefs: dict

    def __post_init__(self):
        for key, c in self.coefs.items():
            if len(c) != self.L + 1 or not np.all(np.isfinite(c)):
                raise DomainError(f"bad coefficient array for mode {key}")

    def synthesize(self, directions) -> np.ndarray:
        return H.synthesize(self.coefs, directions)

    def energy(self) -> float:
        return float(sum(np.sum(np.asarray(c) ** 2) for c in self.coefs.values()))

    @property
    def mean(self) -> float:
        """Surface mean ``(1/4pi) int a dsigma``."""
        c = self.coefs.get((0, "c"))
        return 0.0 if c is None else float(c[0] * Y00)


def analyze(mesh: QuadratureMesh, values, L: int | None = None) -> HarmonicExpansion:
    """Project nodal values on a Gauss mesh onto harmonics of degree <= L."""
    L = mesh.degree if L is None else L
    values = np.asarray(values, dtype=float)
    coefs = {}
    for m, kind in H.mode_keys(L):
        c = np.zeros(L + 1)
        for n in range(m, L + 1):
            e = np.zeros(L + 1)
            e[n] = 1.0
            c[n] = mesh.integrate(values * H.synthesize({(m, kind): e}, mesh.directions))
        coefs[(m, kind)] = c
    return HarmonicExpansion(L, coefs)


def analyze_fast(mesh: QuadratureMesh, values, L: int | None = None) -> HarmonicExpansion:
    """Same as :func:`analyze`, using one Legendre sweep per azimuthal order."""
    L = mesh.degree if L is None else L
    values = np.asarray(values, dtype=float)
    d = mesh.directions
    t = d[:, 0]
    s = np.hypot(d[:, 1], d[:, 2])
    phi = np.arctan2(d[:, 2], d[:, 1])
    coefs = {}
    for m, kind in H.mode_keys(L):
        if m == 0:
            az = np.full_like(phi, 1.0 / H.SQRT_2PI)
        elif kind == "c":
            az = np.cos(m * phi) / H.SQRT_PI
        else:
            az = np.sin(m * phi) / H.SQRT_PI
        wv = mesh.weights * values * az
        c = np.zeros(L + 1)
        for n, P, _ in H.legendre_sweep(m, L, t, s):
            c[n] = np.dot(wv, P)
        coefs[(m, kind)] = c
    return HarmonicExpansion(L, coefs)


@dataclass(frozen=True)
class DensityPair:
    """Single-layer densities on dD1 and dD2 as harmonic expansions."""

    config: SphereConfig
    phi1: HarmonicExpansion
    phi2: HarmonicExpansion
    projection: float = 0.0

    def __post_init__(self):
        if self.phi1.L != self.phi2.L:
            raise DomainError("density expansions must share the degree cap")

    @property
    def L(self) -> int:
        return self.phi1.L

    def expansion(self, j: int) -> HarmonicExpansion:
        return self.phi1 if j == 1 else self.phi2

    def values(self, j: int, mesh: QuadratureMesh) -> np.ndarray:
        """Nodal values of phi_j on ``mesh`` (directions about c_j)."""
        return self.expansion(j).synthesize(mesh.directions)

    def weighted_mean(self, j: int, mesh: QuadratureMesh) -> float:
        return mesh.integrate(self.values(j, mesh)) / np.sum(mesh.weights)


# ---------------------------------------------------------------------------
# layer potentials


def single_layer(mesh: QuadratureMesh, density, x, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``S[phi](x) = int Gamma(x - y) phi(y) dsigma(y)`` by mesh quadrature.

    ``density`` holds nodal values on ``mesh``; ``x`` must not be a node. For
    on-surface targets use :func:`single_layer_on_surface`.
    """
    pts = as_points(x)
    y = mesh.points(center)
    diff = pts[:, None, :] - y[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    if np.any(r == 0.0):
        raise DomainError("target coincides with a mesh node; use the on-surface rule")
    return -(1.0 / (FOUR_PI * r)) @ (np.asarray(density, dtype=float) * mesh.weights)


def single_layer_on_surface(density_fn, directions, n_theta: int = 48, n_phi: int = 64) -> np.ndarray:
    """On-surface ``S[phi]`` on the unit sphere with the singularity-cancelling polar rule.

    ``density_fn`` maps unit vectors to density values; ``directions`` are
    the target points on the sphere.
    """
    targets = as_points(directions)
    out = np.empty(len(targets))
    for i, x in enumerate(targets):
        nodes, w = polar_rule(x, n_theta, n_phi)
        r = np.linalg.norm(x - nodes, axis=1)
        out[i] = -np.dot(w, density_fn(nodes) / (FOUR_PI * r))
    return out


def np_operator_on_surface(density_fn, directions, n_theta: int = 48, n_phi: int = 64) -> np.ndarray:
    """``K*[phi]`` on the unit sphere by the polar rule.

    With the inward normal ``nu_x = -x``, the kernel
    ``-d_nu_x Gamma(x - y) = x.(x - y) / (4 pi |x - y|^3)`` equals
    ``1 / (8 pi |x - y|)`` on the unit sphere.
    """
    targets = as_points(directions)
    out = np.empty(len(targets))
    for i, x in enumerate(targets):
        nodes, w = polar_rule(x, n_theta, n_phi)
        r = np.linalg.norm(x - nodes, axis=1)
        kern = np.einsum("j,ij->i", x, x - nodes) / (FOUR_PI * r**3)
        out[i] = np.dot(w, density_fn(nodes) * kern)
    return out


def single_layer_field(expansion: HarmonicExpansion, center, x, grad: bool = False):
    """Exact ``S[phi]`` for a harmonic density on the unit sphere about ``center``.

    Outside: ``sum -a_nm / (2n+1) |y|^-(n+1) Y_nm``; inside: ``|y|^n`` instead.
    Points on the sphere (up to rounding) take the exterior limit of the
    gradient, which jumps across the surface.
    """
    pts = as_points(x)
    y = pts - np.asarray(center, dtype=float)
    r = np.linalg.norm(y, axis=1)
    scaled = {}
    n = np.arange(expansion.L + 1)
    for key, c in expansion.coefs.items():
        scaled[key] = -np.asarray(c) / (2.0 * n + 1.0)
    out_mask = r >= 1.0 - 1e-9
    val = np.zeros(len(pts))
    g = np.zeros((len(pts), 3))
    for mask, regular in ((out_mask, False), (~out_mask, True)):
        if not np.any(mask):
            continue
        res = H.evaluate(scaled, y[mask], regular=regular, grad=grad)
        if grad:
            val[mask], g[mask] = res
        else:
            val[mask] = res
    return (val, g) if grad else val


# ---------------------------------------------------------------------------
# block operators


def _cross_block(m: int, L: int, d: float) -> np.ndarray:
    """``B12[k, n] = k T[k, n] / (2n+1)``: the ``d_nu S_2`` block seen from sphere 1."""
    T = H.coaxial_translation(m, L, d)
    k = np.arange(L + 1, dtype=float)
    return T * k[:, None] / (2.0 * k[None, :] + 1.0)


def _mirror_signs(m: int, L: int) -> np.ndarray:
    n = np.arange(L + 1)
    return np.where((n + m) % 2 == 0, 1.0, -1.0)


def np_apply(config: SphereConfig, pair: DensityPair) -> DensityPair:
    """Apply the block NP operator ``K*`` to a density pair.

    Diagonal blocks are ``K*_{dD_j}`` (eigenvalues ``1/(2(2n+1))``);
    off-diagonal blocks are ``-d_nu S`` of the other sphere.
    """
    L = pair.L
    d = 2.0 * config.half_distance
    n = np.arange(L + 1, dtype=float)
    lam = 1.0 / (2.0 * (2.0 * n + 1.0))
    out1, out2 = {}, {}
    keys = set(pair.phi1.coefs) | set(pair.phi2.coefs)
    for key in keys:
        m = key[0]
        a = np.asarray(pair.phi1.coefs.get(key, np.zeros(L + 1)))
        b = np.asarray(pair.phi2.coefs.get(key, np.zeros(L + 1)))
        B12 = _cross_block(m, L, d)
        sgn = np.outer((-1.0) ** n, (-1.0) ** n)
        B21 = sgn * B12
        out1[key] = lam * a - B12 @ b
        out2[key] = lam * b - B21 @ a
    return DensityPair(config, HarmonicExpansion(L, out1), HarmonicExpansion(L, out2))


def dtn(config: SphereConfig, j: int, boundary_values, L: int = DEFAULT_L, rtol: float = 1e-10):
    """Dirichlet-to-Neumann map of ``D_j`` (inward normal) on a Gauss mesh.

    ``boundary_values`` are nodal values on ``QuadratureMesh.gauss(L)``;
    returns nodal values of ``d_nu`` of the interior harmonic extension.
    """
    if j not in (1, 2):
        raise DomainError("sphere index must be 1 or 2")
    mesh = QuadratureMesh.gauss(L)
    vals = np.asarray(boundary_values, dtype=float)
    if vals.shape != (mesh.size,):
        raise DomainError(f"expected {mesh.size} nodal values for degree {L}")
    exp = analyze_fast(mesh, vals, L)
    recon = exp.synthesize(mesh.directions)
    total = mesh.integrate(vals * vals)
    # the nodal residual misses aliasing along the polar axis (Gauss nodes
    # interpolate zonal data exactly), so the top two degrees count as tail too
    top = sum(float(np.sum(np.asarray(c)[max(L - 1, 0):] ** 2)) for c in exp.coefs.values())
    tail = mesh.integrate((vals - recon) ** 2) + top
    if tail > rtol * max(total, 1e-300):
        raise ResolutionError(f"boundary data not resolved at degree {L} (tail energy ratio {tail / total:.2e})")
    n = np.arange(L + 1, dtype=float)
    out = {key: -n * c for key, c in exp.coefs.items()}
    return H.synthesize(out, mesh.directions)


# ---------------------------------------------------------------------------
# solves


def point_source_coefficients(config: SphereConfig, j: int, L: int, keys, location, charge=0.0, moment=None):
    """Boundary coefficients on dD_j of ``Q/(4 pi |x-y|) + m.(x-y)/(4 pi |x-y|^3)``.

    Uses the addition theorem ``1/(4 pi |x - y|) = sum r_x^n Y(x) E(y) / (2n+1)``
    for a source outside the unit sphere.
    """
    y = np.asarray(location, dtype=float) - config.center(j)
    if np.linalg.norm(y) <= 1.0:
        raise DomainError("source must lie outside the sphere being expanded")
    n = np.arange(L + 1, dtype=float)
    out = {}
    for m, kind in keys:
        vals, grads = H.exterior_gradients(m, kind, L, y)
        c = charge * vals
        if moment is not None:
            c = c + grads @ np.asarray(moment, dtype=float)
        out[(m, kind)] = c / (2.0 * n + 1.0)
    return out


def dipole_data(config: SphereConfig, dipole: DipoleSource, L: int, cutoff: float = 1e-14):
    """Boundary coefficients of the emitter field on both spheres.

    Emitters on the x1-axis only excite azimuthal orders ``m <= 1``; for
    others, orders are added until three consecutive ones fall below
    ``cutoff`` relative to the largest coefficient.
    """
    p = dipole.p
    if p[1] == 0.0 and p[2] == 0.0:
        keys = [(0, "c"), (1, "c"), (1, "s")]
        data = [point_source_coefficients(config, j, L, keys, p, 0.0, dipole.a) for j in (1, 2)]
    else:
        data = [{}, {}]
        peak = 0.0
        quiet = 0
        for m in range(L + 1):
            level = 0.0
            for key in ([(0, "c")] if m == 0 else [(m, "c"), (m, "s")]):
                for j in (1, 2):
                    c = point_source_coefficients(config, j, L, [key], p, 0.0, dipole.a)[key]
                    data[j - 1][key] = c
                    level = max(level, float(np.max(np.abs(c))))
            peak = max(peak, level)
            quiet = quiet + 1 if level < cutoff * peak else 0
            if quiet >= 3:
                break
    return [{k: v for k, v in dj.items() if np.any(v)} for dj in data]


def choose_degree(config: SphereConfig, dipole: DipoleSource, tail: float = 1e-8, max_L: int = MAX_L) -> int:
    """Smallest degree whose truncated boundary data is below ``tail`` (relative).

    The degree-n part of the emitter field on a unit sphere at distance
    ``rho`` from the centre is bounded by ``(2n+1) rho^-(n+2) / (4 pi)``;
    this is compared with the field scale ``1 / (4 pi (rho - 1)^2)``.
    """
    rho = min(np.linalg.norm(dipole.p - config.center(j)) for j in (1, 2))
    n = np.arange(max_L + 2, dtype=float)
    with np.errstate(under="ignore"):
        terms = (2.0 * n + 1.0) * np.exp(-(n + 2.0) * np.log(rho)) * (rho - 1.0) ** 2
    remaining = np.cumsum(terms[::-1])[::-1]  # remaining[k] = sum_{n >= k}
    ok = np.nonzero(remaining[1:] <= tail)[0]
    if len(ok) == 0:
        raise ResolutionError(
            f"resolving the emitter data needs degree above the cap {max_L} (eps={config.eps})"
        )
    return max(DEFAULT_L, int(ok[0]))


def solve_modes(config: SphereConfig, data1: dict, data2: dict, L: int) -> DensityPair:
    """Solve the block system for boundary data given as harmonic coefficients."""
    d = 2.0 * config.half_distance
    n_all = np.arange(L + 1, dtype=float)
    phi1, phi2 = {}, {}
    worst = 0.0
    for key in sorted(set(data1) | set(data2)):
        m = key[0]
        f1 = np.asarray(data1.get(key, np.zeros(L + 1)), dtype=float)
        f2 = np.asarray(data2.get(key, np.zeros(L + 1)), dtype=float)
        lo = max(m, 1)
        a1 = np.zeros(L + 1)
        a2 = np.zeros(L + 1)
        if L >= lo and (np.any(f1[lo:]) or np.any(f2[lo:])):
            idx = np.arange(lo, L + 1)
            k = n_all[idx]
            B = _cross_block(m, L, d)[np.ix_(idx, idx)]
            D = k / (2.0 * k + 1.0)
            S = _mirror_signs(m, L)[idx]
            g1 = -k * f1[idx]
            g2 = -k * f2[idx]
            # mirror map: phi2 = sigma S phi1 for the even/odd parts
            for sigma in (1.0, -1.0):
                rhs = 0.5 * (g1 + sigma * S * g2)
                if not np.any(rhs):
                    continue
                A = B * (sigma * S)[None, :]
                A[np.diag_indices_from(A)] += D
                try:
                    x = scipy.linalg.solve(A, rhs, check_finite=False)
                except (np.linalg.LinAlgError, ValueError) as exc:
                    raise NumericalError(f"block solve failed for mode {key}: {exc}") from exc
                res = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
                worst = max(worst, res)
                a1[idx] += x
                a2[idx] += sigma * S * x
        phi1[key] = a1
        phi2[key] = a2
    if worst > 1e-10:
        raise NumericalError(f"block system residual {worst:.2e} exceeds 1e-10")
    return DensityPair(config, HarmonicExpansion(L, phi1), HarmonicExpansion(L, phi2), projection=0.0)


def _enforce_mean_zero(pair: DensityPair) -> DensityPair:
    proj = 0.0
    exps = []
    for j in (1, 2):
        e = pair.expansion(j)
        c = {k: np.array(v, dtype=float) for k, v in e.coefs.items()}
        if (0, "c") in c:
            proj = max(proj, abs(c[(0, "c")][0]))
            c[(0, "c")][0] = 0.0
        exps.append(HarmonicExpansion(e.L, c))
    if proj > 0.0:
        log.info("mean-zero projection removed %.3e", proj)
    return DensityPair(pair.config, exps[0], exps[1], projection=proj)


def solve_block(config: SphereConfig, f, L: int = DEFAULT_L) -> DensityPair:
    """Densities for nodal boundary data ``f = (values on dD1, values on dD2)``.

    Values live on ``QuadratureMesh.gauss(L)`` about each centre.
    """
    if config.eps < BEM_MIN_EPS:
        raise DomainError(f"integral-equation route needs eps >= {BEM_MIN_EPS}, got {config.eps}")
    mesh = QuadratureMesh.gauss(L)
    f1, f2 = (np.asarray(v, dtype=float) for v in f)
    if f1.shape != (mesh.size,) or f2.shape != (mesh.size,):
        raise DomainError(f"expected {mesh.size} nodal values per sphere for degree {L}")
    e1 = analyze_fast(mesh, f1, L)
    e2 = analyze_fast(mesh, f2, L)
    return _enforce_mean_zero(solve_modes(config, e1.coefs, e2.coefs, L))


@dataclass(frozen=True)
class ExteriorSolution:
    """``v = S1[phi1] + S2[phi2]`` with the constants ``c_j = (f - v)|dD_j``."""

    config: SphereConfig
    density: DensityPair
    c1: float
    c2: float
    data: tuple = field(repr=False, default=())
    constancy: float = 0.0

    @property
    def L(self) -> int:
        return self.density.L

    def eval_v(self, x) -> np.ndarray:
        pts = as_points(x)
        return sum(single_layer_field(self.density.expansion(j), self.config.center(j), pts) for j in (1, 2))

    def eval_grad_v(self, x) -> np.ndarray:
        pts = as_points(x)
        return sum(
            single_layer_field(self.density.expansion(j), self.config.center(j), pts, grad=True)[1]
            for j in (1, 2)
        )


def _constants(config: SphereConfig, pair: DensityPair, data1: dict, data2: dict):
    """Degree-0 Dirichlet rows: ``c_j = Y00 (f_j,00 + sum_n T[0, n] phi_k,n / (2n+1))``."""
    L = pair.L
    d = 2.0 * config.half_distance
    T = H.coaxial_translation(0, L, d)[0]
    n = np.arange(L + 1, dtype=float)
    a1 = np.asarray(pair.phi1.coefs.get((0, "c"), np.zeros(L + 1)))
    a2 = np.asarray(pair.phi2.coefs.get((0, "c"), np.zeros(L + 1)))
    f1 = np.asarray(data1.get((0, "c"), np.zeros(L + 1)))
    f2 = np.asarray(data2.get((0, "c"), np.zeros(L + 1)))
    c1 = Y00 * (f1[0] + np.sum(T * a2 / (2.0 * n + 1.0)))
    c2 = Y00 * (f2[0] + np.sum(((-1.0) ** n) * T * a1 / (2.0 * n + 1.0)))
    return float(c1), float(c2)


def _check_constancy(config, sol: ExteriorSolution, f_eval, rtol: float, n: int = 200):
    dirs = fibonacci_sphere(n)
    worst = 0.0
    scale = 0.0
    for j, c in ((1, sol.c1), (2, sol.c2)):
        pts = config.boundary_points(j, dirs)
        pole = np.array([[-config.eps / 2 if j == 1 else config.eps / 2, 0.0, 0.0]])
        pts = np.concatenate([pts, pole])
        fv = f_eval(pts)
        resid = fv - sol.eval_v(pts) - c
        worst = max(worst, float(np.max(np.abs(resid))))
        scale = max(scale, float(np.max(np.abs(fv))))
    rel = worst / max(scale, 1e-300)
    if rel > rtol:
        raise AccuracyError(f"f - v is not constant on the boundary (relative variation {rel:.2e} > {rtol:.0e})")
    return rel


def solve_exterior(
    config: SphereConfig,
    f,
    L: int | None = None,
    *,
    tail: float = 1e-8,
    rtol: float = 1e-6,
    check: bool = True,
) -> ExteriorSolution:
    """Solve the exterior problem for data ``f`` and return v with the constants.

    ``f`` is a :class:`DipoleSource` (exact coefficients via the addition
    theorem; degree chosen from the data decay unless ``L`` is given) or a
    callable mapping points (n, 3) to values (analysed on a Gauss mesh of
    degree ``L``, default 24).
    """
    if config.eps < BEM_MIN_EPS:
        raise DomainError(f"integral-equation route needs eps >= {BEM_MIN_EPS}, got {config.eps}")
    if isinstance(f, DipoleSource):
        f.check(config)
        if L is None:
            L = choose_degree(config, f, tail)
        data = dipole_data(config, f, L)

        def f_eval(x, _f=f):
            return dipole_field(_f.p, _f.a, x)

    elif callable(f):
        L = DEFAULT_L if L is None else L
        mesh = QuadratureMesh.gauss(L)
        data = [analyze_fast(mesh, f(mesh.points(config.center(j))), L).coefs for j in (1, 2)]
        f_eval = f
    else:
        raise DomainError("f must be a DipoleSource or a callable")
    pair = _enforce_mean_zero(solve_modes(config, data[0], data[1], L))
    c1, c2 = _constants(config, pair, data[0], data[1])
    sol = ExteriorSolution(config, pair, c1, c2, data=tuple(data))
    if check:
        rel = _check_constancy(config, sol, f_eval, rtol)
        object.__setattr__(sol, "constancy", rel)
    return sol


@dataclass(frozen=True)
class QPerpField:
    """Symmetric companion built as ``v_f - 2 N_c1 + q`` from the exterior solve."""

    config: SphereConfig
    exterior: ExteriorSolution
    series: object
    value: float

    def eval(self, x) -> np.ndarray:
        from .image_series import eval_q

        pts = as_points(x)
        charge = 2.0 / (FOUR_PI * np.linalg.norm(pts - self.config.c1, axis=1))
        return self.exterior.eval_v(pts) + charge + eval_q(self.series, pts)

    def eval_grad(self, x) -> np.ndarray:
        from .image_series import eval_grad_q

        pts = as_points(x)
        y = pts - self.config.c1
        r = np.linalg.norm(y, axis=1)[:, None]
        charge = -2.0 * y / (FOUR_PI * r**3)
        return self.exterior.eval_grad_v(pts) + charge + eval_grad_q(self.series, pts)


def build_qperp(config: SphereConfig, L: int = 64, series=None) -> QPerpField:
    """Symmetric companion (flux +1 through each sphere) from the integral equation.

    The data ``f = 2 N_c1 = -2 / (4 pi |x - c1|)`` is constant on dD1 and,
    on dD2, is the field of a charge ``-2`` at ``c1`` in the source
    convention of :mod:`geometry`.
    """
    from .image_series import build_series, q_boundary_value

    if config.eps < BEM_MIN_EPS:
        raise DomainError(f"integral-equation route needs eps >= {BEM_MIN_EPS}, got {config.eps}")
    series = series or build_series(config)
    data1 = {(0, "c"): np.zeros(L + 1)}
    data1[(0, "c")][0] = -2.0 / (FOUR_PI * Y00)
    data2 = point_source_coefficients(config, 2, L, [(0, "c")], config.c1, charge=-2.0)
    pair = _enforce_mean_zero(solve_modes(config, data1, data2, L))
    c1, c2 = _constants(config, pair, data1, data2)
    ext = ExteriorSolution(config, pair, c1, c2, data=(data1, data2))
    # f - v = c_j on dD_j, so v - 2N_c1 = -c_j there
    qb = q_boundary_value(series)
    value1 = -c1 - qb
    value2 = -c2 + qb
    if abs(value1 - value2) > 1e-6 * abs(value1):
        raise AccuracyError(f"companion constants differ between spheres: {value1!r} vs {value2!r}")
    return QPerpField(config, ext, series, float(0.5 * (value1 + value2)))
