"""Two-sphere geometry, sphere inversions and free-space Laplace kernels.

Conventions used throughout the package:

* the spheres have unit radius and centres ``c1 = (-(1 + eps/2), 0, 0)`` and
  ``c2 = (1 + eps/2, 0, 0)``, so the gap ``[-eps/2, eps/2]`` sits on the
  x1-axis around the origin;
* the fundamental solution is ``Gamma(x) = -1 / (4 pi |x|)``;
* a point source with ``charge`` Q and ``moment`` m at y has potential
  ``Q / (4 pi |x - y|) + m . (x - y) / (4 pi |x - y|^3)``. With this choice
  the free dipole field ``a . grad N_p`` is the source (charge 0, moment a).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

FOUR_PI = 4.0 * np.pi

# Points per evaluation chunk when summing many sources at many targets.
_CHUNK = 2_000_000

DIRECTIONS = {
    "x": (1.0, 0.0, 0.0),
    "y": (0.0, 1.0, 0.0),
    "z": (0.0, 0.0, 1.0),
}


def as_points(x) -> np.ndarray:
    """Return ``x`` as a float array of shape (n, 3)."""
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != 3:
        raise DomainError(f"expected 3-vectors, got shape {pts.shape}")
    return pts.reshape(-1, 3)


@dataclass(frozen=True)
class SphereConfig:
    """Two unit spheres on the x1-axis separated by a gap of width ``eps``."""

    eps: float

    def __post_init__(self):
        if not np.isfinite(self.eps) or self.eps <= 0.0:
            raise DomainError(f"gap width must be positive, got eps={self.eps!r}")
        if self.eps > 1.0:
            raise DomainError(f"gap width above 1 is not supported, got eps={self.eps!r}")

    @property
    def half_distance(self) -> float:
        """Distance from the origin to either centre, ``1 + eps/2``."""
        return 1.0 + 0.5 * self.eps

    @property
    def c1(self) -> np.ndarray:
        return np.array([-self.half_distance, 0.0, 0.0])

    @property
    def c2(self) -> np.ndarray:
        return np.array([self.half_distance, 0.0, 0.0])

    def center(self, j: int) -> np.ndarray:
        if j not in (1, 2):
            raise DomainError(f"sphere index must be 1 or 2, got {j!r}")
        return self.c1 if j == 1 else self.c2

    @property
    def p_inf(self) -> float:
        """x1-coordinate of the fixed point of R2 R1 inside D2."""
        h = self.half_distance
        return float(np.sqrt(h * h - 1.0))

    def distance_to_spheres(self, x) -> np.ndarray:
        """Signed distance from each point to the nearer sphere (negative inside)."""
        pts = as_points(x)
        d1 = np.linalg.norm(pts - self.c1, axis=1) - 1.0
        d2 = np.linalg.norm(pts - self.c2, axis=1) - 1.0
        return np.minimum(d1, d2)

    def is_exterior(self, x, margin: float = 0.0) -> np.ndarray:
        return self.distance_to_spheres(x) > margin

    def require_exterior(self, x, what: str = "point") -> None:
        if not np.all(self.is_exterior(x)):
            raise DomainError(f"{what} must lie outside both closed balls (eps={self.eps})")

    def boundary_points(self, j: int, directions) -> np.ndarray:
        return self.center(j) + as_points(directions)


@dataclass(frozen=True)
class DipoleSource:
    """Point dipole emitter at ``p`` with unit moment ``a``."""

    p: np.ndarray
    a: np.ndarray
    axis_flag: bool = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(3)
        a = np.asarray(self.a, dtype=float).reshape(3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(a))):
            raise DomainError("dipole location and moment must be finite")
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise DomainError(f"dipole moment must be a unit vector, |a|={np.linalg.norm(a)!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "axis_flag", bool(p[0] == 0.0 and p[1] == 0.0))

    @classmethod
    def on_axis(cls, p: float, direction="x") -> "DipoleSource":
        """Emitter at ``(0, 0, p)``; ``direction`` is 'x', 'y', 'z' or a vector."""
        if isinstance(direction, str):
            try:
                a = DIRECTIONS[direction]
            except KeyError:
                raise DomainError(f"unknown direction {direction!r}") from None
        else:
            a = np.asarray(direction, dtype=float)
            a = a / np.linalg.norm(a)
        return cls(p=np.array([0.0, 0.0, float(p)]), a=np.asarray(a, dtype=float))

    def check(self, config: SphereConfig) -> None:
        config.require_exterior(self.p, "emitter")


def invert_point(center, x) -> np.ndarray:
    """Inversion in the unit sphere about ``center``: ``(x-c)/|x-c|^2 + c``."""
    c = np.asarray(center, dtype=float)
    y = np.asarray(x, dtype=float) - c
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    if np.any(r2 == 0.0):
        raise DomainError("inversion pole: x coincides with the centre")
    return y / r2 + c


def fundamental_solution(x) -> np.ndarray:
    """``Gamma(x) = -1/(4 pi |x|)``."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    if np.any(r == 0.0):
        raise DomainError("fundamental solution is singular at the origin")
    return -1.0 / (FOUR_PI * r)


def grad_fundamental_solution(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(r == 0.0):
        raise DomainError("fundamental solution is singular at the origin")
    return x / (FOUR_PI * r**3)


def dipole_field(p, a, x) -> np.ndarray:
    """Free emitter potential ``a . grad N_p(x) = a.(x-p) / (4 pi |x-p|^3)``."""
    y = np.asarray(x, dtype=float) - np.asarray(p, dtype=float)
    r = np.linalg.norm(y, axis=-1)
    if np.any(r == 0.0):
        raise DomainError("dipole field evaluated at the emitter")
    return (y @ np.asarray(a, dtype=float)) / (FOUR_PI * r**3)


def grad_dipole_field(p, a, x) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    y = np.asarray(x, dtype=float) - np.asarray(p, dtype=float)
    r = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(r == 0.0):
        raise DomainError("dipole field evaluated at the emitter")
    ay = np.sum(y * a, axis=-1, keepdims=True)
    return (a / r**3 - 3.0 * ay * y / r**5) / FOUR_PI


def source_field(locations, charges, moments, x, *, grad: bool = True, guard: float = 0.0):
    """Potential (and gradient) of a set of point sources at points ``x``.

    ``locations`` (n, 3), ``charges`` (n,), ``moments`` (n, 3) or None.
    Raises DomainError if a target lies within ``guard`` of a source.
    """
    locs = as_points(locations)
    q = np.asarray(charges, dtype=float).reshape(-1)
    m = None if moments is None else as_points(moments)
    pts = as_points(x)
    n_src = max(len(locs), 1)
    step = max(1, _CHUNK // n_src)
    val = np.empty(len(pts))
    g = np.empty((len(pts), 3)) if grad else None
    for lo in range(0, len(pts), step):
        y = pts[lo:lo + step, None, :] - locs[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", y, y)
        if np.any(r2 <= guard * guard):
            raise DomainError("evaluation point coincides with a point source")
        inv = 1.0 / np.sqrt(r2)
        inv3 = inv**3
        val[lo:lo + step] = inv @ q
        if grad:
            g[lo:lo + step] = -np.einsum("ij,ijk->ik", inv3 * q, y)
        if m is not None:
            my = np.einsum("ijk,jk->ij", y, m)
            val[lo:lo + step] += np.einsum("ij,ij->i", my, inv3)
            if grad:
                g[lo:lo + step] += inv3 @ m - 3.0 * np.einsum("ij,ijk->ik", my * inv3 * inv * inv, y)
    val /= FOUR_PI
    if grad:
        g /= FOUR_PI
        return val, g
    return val


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform unit vectors (golden-angle spiral), deterministic."""
    k = np.arange(n) + 0.5
    t = 1.0 - 2.0 * k / n
    s = np.sqrt(1.0 - t * t)
    phi = np.pi * (1.0 + 5.0**0.5) * k
    return np.stack([t, s * np.cos(phi), s * np.sin(phi)], axis=1)
