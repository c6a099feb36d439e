"""Image-charge series for the singular function q and its symmetric companion.

Reflecting the centre ``c2`` back and forth through the two spheres gives
image points ``p_n`` on the x1-axis inside D2 (and their mirrors ``-p_n``
inside D1):

    p_0 = 1 + eps/2,    p_{n+1} = c - 1 / (c + p_n),    c = 1 + eps/2,

with weights ``mu_n = 1 / (c + p_n)`` (the distance from ``c1`` to ``p_n`` is
``c + p_n``) and charges ``q_0 = 1``, ``q_{n+1} = q_n mu_n``.
Unit charges ``q_n`` at ``p_n`` and ``-q_n`` at ``-p_n`` make both spheres
equipotentials, so

    q(x) = (1 / (4 pi sum q_n)) sum_n q_n (1/|x - p_n| - 1/|x + p_n|)

is constant on each sphere with inward flux -1 through dD1 and +1 through
dD2. Alternating signs ``(-1)^n q_n`` with symmetric placement give the
companion with flux +1 through both spheres.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, ConvergenceError, DomainError, RegimeError
from .geometry import SphereConfig, as_points, fibonacci_sphere, source_field
from .quadrature import inward_flux

DEFAULT_TOL = 1e-14
MAX_TERMS = 10_000_000


@dataclass(frozen=True)
class ImageChargeSeries:
    """Truncated image-charge data for a two-sphere configuration."""

    eps: float
    N: int
    p_seq: np.ndarray
    mu_seq: np.ndarray
    q_seq: np.ndarray
    sum_q: float
    tail_bound: float
    tol: float

    @property
    def config(self) -> SphereConfig:
        return SphereConfig(self.eps)

    @property
    def mu_inf(self) -> float:
        c = self.config.half_distance
        return 1.0 / (c + self.config.p_inf)


def fixed_point(config: SphereConfig, tol: float = 1e-14, max_iter: int = MAX_TERMS) -> float:
    """Fixed point of the map ``p -> c - 1/(c + p)`` found by iteration."""
    c = config.half_distance
    p = c
    for _ in range(max_iter):
        nxt = c - 1.0 / (c + p)
        if abs(nxt - p) <= tol * max(abs(p), 1e-300):
            return nxt
        p = nxt
    raise ConvergenceError(f"fixed-point iteration did not settle (eps={config.eps})")


def build_series(config: SphereConfig, tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS) -> ImageChargeSeries:
    """Generate image points and charges until the geometric tail is below ``tol``.

    Since ``mu_n`` increases toward ``mu_inf < 1``, the remainder after
    ``q_N`` is at most ``q_N mu_inf / (1 - mu_inf)``; we stop once
    ``q_N / (1 - mu_inf) < tol * sum_q``, which also implies the
    ``q_N / (1 - mu_N) < tol * sum_q`` rule.
    """
    if not (0.0 < tol <= 1e-2):
        raise DomainError(f"tol must lie in (0, 1e-2], got {tol!r}")
    c = config.half_distance
    mu_inf = 1.0 / (c + config.p_inf)
    gap = 1.0 - mu_inf
    block = 4096
    ps, qs = [np.array([c])], [np.array([1.0])]
    p_last, q_last, total, n = c, 1.0, 1.0, 1
    while True:
        if n >= max_terms:
            raise ConvergenceError(
                f"image series did not reach tol={tol} within {max_terms} terms (eps={config.eps})"
            )
        m = min(block, max_terms - n)
        pb = np.empty(m)
        qb = np.empty(m)
        p, q = p_last, q_last
        for i in range(m):
            mu = 1.0 / (c + p)
            p = c - mu
            q = q * mu
            pb[i] = p
            qb[i] = q
        # locate first index meeting the stopping rule
        csum = total + np.cumsum(qb)
        hit = np.nonzero(qb / gap < tol * csum)[0]
        if len(hit):
            k = hit[0] + 1
            ps.append(pb[:k])
            qs.append(qb[:k])
            n += k
            total = csum[k - 1]
            break
        ps.append(pb)
        qs.append(qb)
        p_last, q_last, total = p, q, csum[-1]
        n += m
    p_seq = np.concatenate(ps)
    q_seq = np.concatenate(qs)
    mu_seq = 1.0 / (c + p_seq)
    tail = q_seq[-1] * mu_inf / gap
    return ImageChargeSeries(
        eps=config.eps,
        N=len(p_seq) - 1,
        p_seq=p_seq,
        mu_seq=mu_seq,
        q_seq=q_seq,
        sum_q=float(total),
        tail_bound=float(tail),
        tol=tol,
    )


def _charges(series: ImageChargeSeries, symmetric: bool):
    p, q = series.p_seq, series.q_seq
    zeros = np.zeros_like(p)
    locs = np.concatenate([np.stack([p, zeros, zeros], 1), np.stack([-p, zeros, zeros], 1)])
    if symmetric:
        t = np.where(np.arange(len(q)) % 2 == 0, q, -q)
        w = t / t.sum()
        return locs, np.concatenate([w, w])
    w = q / series.sum_q
    return locs, np.concatenate([w, -w])


def _eval(series, x, symmetric, grad):
    locs, charges = _charges(series, symmetric)
    pts = as_points(x)
    return source_field(locs, charges, None, pts, grad=grad, guard=1e-300)


def eval_q(series: ImageChargeSeries, x) -> np.ndarray:
    """Value of q at points ``x`` (shape (n,) for input (n, 3))."""
    return _eval(series, x, False, False)


def eval_grad_q(series: ImageChargeSeries, x) -> np.ndarray:
    return _eval(series, x, False, True)[1]


def eval_qperp(series: ImageChargeSeries, x) -> np.ndarray:
    """Value of the symmetric companion (flux +1 through both spheres)."""
    return _eval(series, x, True, False)


def eval_grad_qperp(series: ImageChargeSeries, x) -> np.ndarray:
    return _eval(series, x, True, True)[1]


def q_boundary_value(series: ImageChargeSeries, rtol: float = 1e-6) -> float:
    """Value of q on dD2, checked between the gap pole and an equatorial point."""
    c = series.config.half_distance
    pts = np.array([[series.eps / 2.0, 0.0, 0.0], [c, 1.0, 0.0]])
    v = eval_q(series, pts)
    if abs(v[0] - v[1]) > rtol * abs(v[0]):
        raise AccuracyError(
            f"q is not constant on dD2 (pole {v[0]!r}, equator {v[1]!r}); truncation too coarse"
        )
    return float(v[0])


def qperp_boundary_value(series: ImageChargeSeries, rtol: float = 1e-6) -> float:
    """Common value of the symmetric companion on either sphere."""
    c = series.config.half_distance
    pts = np.array([[series.eps / 2.0, 0.0, 0.0], [c, 1.0, 0.0], [-c, 0.0, 1.0]])
    v = eval_qperp(series, pts)
    if np.max(np.abs(v - v[0])) > rtol * abs(v[0]):
        raise AccuracyError("symmetric companion is not constant on the spheres")
    return float(v[0])


def boundary_samples(series: ImageChargeSeries, j: int = 2, n: int = 200, symmetric: bool = False):
    """Values on ``n`` quasi-uniform points of dD_j."""
    pts = series.config.boundary_points(j, fibonacci_sphere(n))
    return eval_qperp(series, pts) if symmetric else eval_q(series, pts)


def q_flux(series: ImageChargeSeries, j: int, symmetric: bool = False) -> float:
    """Inward flux through dD_j by graded surface quadrature."""
    fn = (lambda x: eval_grad_qperp(series, x)) if symmetric else (lambda x: eval_grad_q(series, x))
    return inward_flux(series.config, j, fn)


def sum_q_trend(eps_list, tol: float = DEFAULT_TOL):
    """Pairs ``(eps, sum q_n)`` for each gap width."""
    out = []
    for eps in eps_list:
        if not (0.0 < eps <= 0.5):
            raise DomainError(f"eps must lie in (0, 0.5], got {eps!r}")
        out.append((float(eps), build_series(SphereConfig(float(eps)), tol).sum_q))
    return out


def potential_gap_series(series: ImageChargeSeries, p: float) -> float:
    """Gap ``u|dD2 - u|dD1`` for the x1-dipole at ``(0, 0, p)``.

    Green's identity against q reduces the gap to
    ``(1 / (2 pi sum q_n)) sum_n q_n p_n / (p^2 + p_n^2)^(3/2)``.
    """
    pn = series.p_seq
    terms = series.q_seq * pn / (p * p + pn * pn) ** 1.5
    return float(np.sum(terms[::-1]) / (2.0 * np.pi * series.sum_q))


def midline_gradient_estimate(series: ImageChargeSeries, x) -> float:
    """``|grad q(x)| / (2 q|dD2)`` for ``x`` near the gap centre."""
    x = np.asarray(x, dtype=float).reshape(3)
    eps = series.eps
    if np.linalg.norm(x) > 2.0 / np.log(eps) ** 2:
        raise RegimeError("point lies outside the gap neighbourhood |x| <= 2 |log eps|^-2")
    series.config.require_exterior(x, "evaluation point")
    g = eval_grad_q(series, x)[0]
    return float(np.linalg.norm(g) / (2.0 * q_boundary_value(series)))


def image_charges_inside(series: ImageChargeSeries, j: int, symmetric: bool = False) -> float:
    """Sum of the image charges lying in D_j (equals the inward flux)."""
    locs, charges = _charges(series, symmetric)
    side = locs[:, 0] > 0 if j == 2 else locs[:, 0] < 0
    return float(np.sum(charges[side]))


__all__ = [
    "ImageChargeSeries",
    "build_series",
    "fixed_point",
    "eval_q",
    "eval_grad_q",
    "eval_qperp",
    "eval_grad_qperp",
    "q_boundary_value",
    "qperp_boundary_value",
    "boundary_samples",
    "q_flux",
    "sum_q_trend",
    "potential_gap_series",
    "midline_gradient_estimate",
    "image_charges_inside",
]
