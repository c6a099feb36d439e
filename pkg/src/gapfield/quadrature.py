"""Surface quadrature on the unit sphere.

Two families of product rules are provided:

* ``QuadratureMesh.gauss(L)``: Gauss-Legendre in ``t = cos(theta)`` times the
  trapezoid rule in azimuth. Integrates spherical harmonics products of total
  degree up to ``2L+1`` exactly and is the nodal mesh for degree-``L``
  harmonic analysis.
* ``QuadratureMesh.graded(...)``: composite Gauss-Legendre panels in the
  polar angle, geometrically refined toward one pole. Used for integrands
  that peak near the gap-side pole, where image charges accumulate.

``polar_rule`` builds a rule centred on a target direction so that the
``1/|x - y|`` singularity of on-surface layer potentials is cancelled by the
area element.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _directions(t, phi):
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    return np.stack([t, s * np.cos(phi), s * np.sin(phi)], axis=-1)


def _frame(axis):
    """Orthonormal frame whose first vector is ``axis``."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    helper = np.array([0.0, 0.0, 1.0]) if abs(a[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    b = np.cross(a, helper)
    b /= np.linalg.norm(b)
    c = np.cross(a, b)
    return np.stack([a, b, c])


def _composite(edges, order):
    """Gauss-Legendre nodes and weights on consecutive intervals."""
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = np.asarray(edges[:-1]), np.asarray(edges[1:])
    half = 0.5 * (hi - lo)
    nodes = (lo[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    return nodes, (half[:, None] * w[None, :]).ravel()


def _graded_edges(lo, hi, first, ratio):
    edges = [lo]
    h = first
    while lo + h < hi:
        edges.append(lo + h)
        h *= ratio
    edges.append(hi)
    return edges


def _two_sided_edges(center, lo, hi, first, ratio):
    """Edges refined geometrically on both sides of ``center`` within [lo, hi]."""
    edges = {lo, hi}
    if lo < center < hi:
        edges.add(center)
    h = first
    while center - h > lo or center + h < hi:
        for e in (center - h, center + h):
            if lo < e < hi:
                edges.add(e)
        h *= ratio
    return np.array(sorted(edges))


@dataclass(frozen=True)
class QuadratureMesh:
    """Product quadrature on the unit sphere (directions relative to a centre)."""

    directions: np.ndarray
    weights: np.ndarray
    degree: int
    grading: float = 0.0
    pole: float = 1.0

    def __post_init__(self):
        if self.directions.shape != (len(self.weights), 3):
            raise DomainError("directions and weights have inconsistent shapes")

    @property
    def size(self) -> int:
        return len(self.weights)

    @classmethod
    def gauss(cls, L: int) -> "QuadratureMesh":
        """Rule exact for band-limited products up to degree ``2L+1``."""
        t, w = np.polynomial.legendre.leggauss(L + 1)
        n_phi = 2 * L + 2
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        T, P = np.meshgrid(t, phi, indexing="ij")
        W = np.outer(w, np.full(n_phi, 2.0 * np.pi / n_phi))
        return cls(_directions(T.ravel(), P.ravel()), W.ravel(), degree=L)

    @classmethod
    def graded(
        cls,
        pole: float = 1.0,
        theta_min: float = 1e-3,
        ratio: float = 2.0,
        order: int = 16,
        n_phi: int = 64,
        axis=None,
    ) -> "QuadratureMesh":
        """Panels in the polar angle measured from ``pole`` (+1 or -1 in t).

        Panel edges are ``0, theta_min, theta_min*ratio, ...`` up to pi. If
        ``axis`` (a unit vector) is given the refinement is centred on that
        direction instead of a pole of the x1-axis.
        """
        if theta_min <= 0.0 or ratio <= 1.0:
            raise DomainError("grading needs theta_min > 0 and ratio > 1")
        edges = [0.0]
        th = theta_min
        while th < np.pi:
            edges.append(th)
            th *= ratio
        edges.append(np.pi)
        x, w = np.polynomial.legendre.leggauss(order)
        thetas, wts = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            th_nodes = lo + half * (x + 1.0)
            thetas.append(th_nodes)
            wts.append(half * w * np.sin(th_nodes))
        theta = np.concatenate(thetas)
        wt = np.concatenate(wts)
        t = np.cos(theta) if pole > 0 else -np.cos(theta)
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        T, P = np.meshgrid(t, phi, indexing="ij")
        W = np.outer(wt, np.full(n_phi, 2.0 * np.pi / n_phi))
        dirs = _directions(T.ravel(), P.ravel())
        if axis is not None:
            dirs = (dirs * np.sign(pole)) @ _frame(axis)
        return cls(dirs, W.ravel(), degree=order, grading=ratio, pole=float(np.sign(pole)))

    @classmethod
    def focused(
        cls,
        pole: float,
        theta_focus: float,
        phi_focus: float,
        width: float,
        theta_min: float = 1e-3,
        ratio: float = 2.0,
        order: int = 16,
    ) -> "QuadratureMesh":
        """Composite product rule refined toward the pole and toward one more point.

        The second point sits at polar angle ``theta_focus`` (from ``pole``)
        and azimuth ``phi_focus``; panels shrink geometrically down to
        ``width`` around it in both angles. Suited to integrands that peak
        both at the gap pole and below a nearby emitter.
        """
        if width <= 0.0:
            raise DomainError("focus width must be positive")
        th_edges = set(_graded_edges(0.0, np.pi, theta_min, ratio))
        th_edges |= set(_two_sided_edges(theta_focus, 0.0, np.pi, width, ratio))
        th_edges = np.array(sorted(th_edges))
        ph_edges = _two_sided_edges(np.pi, 0.0, 2.0 * np.pi, width / max(np.sin(theta_focus), width), ratio)
        ph_edges = np.union1d(ph_edges, np.linspace(0.0, 2.0 * np.pi, 9))
        theta, wt = _composite(th_edges, order)
        wt = wt * np.sin(theta)
        phi, wp = _composite(ph_edges, order)
        phi = phi + (phi_focus - np.pi)
        t = np.cos(theta) if pole > 0 else -np.cos(theta)
        T, P = np.meshgrid(t, phi, indexing="ij")
        W = np.outer(wt, wp)
        return cls(_directions(T.ravel(), P.ravel()), W.ravel(), degree=order, grading=ratio, pole=float(np.sign(pole)))

    def points(self, center) -> np.ndarray:
        return np.asarray(center, dtype=float) + self.directions

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def polar_rule(target, n_theta: int = 48, n_phi: int = 64):
    """Rule on the unit sphere centred at the unit vector ``target``.

    Gauss-Legendre in the angular distance ``theta`` from the target (weight
    ``sin theta``) times the trapezoid rule around it. The nodes avoid the
    target itself, and ``sin(theta) / |x - y| = cos(theta/2)`` is smooth, so
    weakly singular integrands converge spectrally.
    """
    F = _frame(target)
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = 0.5 * np.pi * (x + 1.0)
    wt = 0.5 * np.pi * w * np.sin(theta)
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    TH, PH = np.meshgrid(theta, phi, indexing="ij")
    local = np.stack([np.cos(TH), np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH)], axis=-1).reshape(-1, 3)
    W = np.outer(wt, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    return local @ F, W


def flux_mesh(config, j: int, order: int = 16, n_phi: int = 64, source=None) -> QuadratureMesh:
    """Graded rule for sphere ``j``.

    Refined toward the gap-side pole, or toward the boundary point nearest
    to ``source`` when an exterior source sits closer to the sphere than the
    gap-side image cluster.
    """
    theta_min = 0.05 * min(np.sqrt(config.eps), 0.5)
    pole = 1.0 if j == 1 else -1.0
    if source is not None:
        r = np.asarray(source, dtype=float) - config.center(j)
        dist = np.linalg.norm(r) - 1.0
        if dist < np.sqrt(config.eps):
            return QuadratureMesh.graded(
                theta_min=0.05 * min(dist, 0.5), order=order, n_phi=n_phi, axis=r / np.linalg.norm(r)
            )
    return QuadratureMesh.graded(pole=pole, theta_min=theta_min, order=order, n_phi=n_phi)


def inward_flux(config, j: int, grad_fn, mesh: QuadratureMesh | None = None, source=None) -> float:
    """``int_{dD_j} grad g . nu dsigma`` with nu pointing into D_j."""
    mesh = mesh or flux_mesh(config, j, source=source)
    pts = mesh.points(config.center(j))
    g = grad_fn(pts)
    return mesh.integrate(-np.einsum("ij,ij->i", g, mesh.directions))
