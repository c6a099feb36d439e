import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gapfield.errors import DomainError
from gapfield.geometry import (
    DipoleSource,
    SphereConfig,
    dipole_field,
    fibonacci_sphere,
    fundamental_solution,
    grad_dipole_field,
    grad_fundamental_solution,
    invert_point,
)

coord = st.floats(-3.0, 3.0, allow_nan=False)
vec = st.tuples(coord, coord, coord).map(np.array)


def central_diff(f, x, h=1e-5):
    g = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


# --- configuration and emitter ---------------------------------------------


def test_centres_and_separation():
    cfg = SphereConfig(0.1)
    assert np.allclose(cfg.c1, [-1.05, 0, 0])
    assert np.allclose(cfg.c2, [1.05, 0, 0])
    assert np.linalg.norm(cfg.c2 - cfg.c1) == pytest.approx(2.1)


@pytest.mark.parametrize("eps", [0.0, -0.1, 1.5, np.nan])
def test_bad_gap_rejected(eps):
    with pytest.raises(DomainError):
        SphereConfig(eps)


def test_dipole_must_be_unit():
    with pytest.raises(DomainError):
        DipoleSource(p=np.zeros(3), a=np.array([1.0, 1.0, 0.0]))


def test_axis_flag():
    assert DipoleSource.on_axis(0.3, "y").axis_flag
    assert not DipoleSource(p=np.array([0.1, 0.0, 0.5]), a=np.array([0, 0, 1.0])).axis_flag


def test_emitter_inside_ball_rejected():
    cfg = SphereConfig(0.1)
    dip = DipoleSource(p=np.array([1.0, 0.0, 0.0]), a=np.array([1.0, 0, 0]))
    with pytest.raises(DomainError):
        dip.check(cfg)


def test_signed_distance():
    cfg = SphereConfig(0.2)
    d = cfg.distance_to_spheres(np.array([[0.0, 0, 0], [1.1, 0, 0]]))
    assert d[0] == pytest.approx(0.1)
    assert d[1] == pytest.approx(-1.0)


# --- inversion --------------------------------------------------------------


def test_inversion_examples():
    assert np.allclose(invert_point([0, 0, 0], [2.0, 0, 0]), [0.5, 0, 0])
    x = np.array([0.6, 0.0, 0.8])
    assert np.allclose(invert_point([0, 0, 0], x), x)
    cfg = SphereConfig(0.1)
    y = invert_point(cfg.c2, cfg.c1)
    assert y[0] == pytest.approx(1.05 - 1.0 / 2.1, rel=1e-14)
    assert y[0] == pytest.approx(0.5738095238095238, rel=1e-14)


def test_inversion_pole():
    with pytest.raises(DomainError):
        invert_point([1.0, 0, 0], [1.0, 0, 0])


@given(vec, vec)
def test_inversion_is_involution(c, x):
    assume(np.linalg.norm(x - c) > 1e-3)
    y = invert_point(c, x)
    assert np.linalg.norm(y - c) * np.linalg.norm(x - c) == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(invert_point(c, y), x, rtol=1e-9, atol=1e-9)


@given(vec, st.floats(0.0, 2 * np.pi), st.floats(-1.0, 1.0))
def test_inversion_fixes_unit_sphere(c, phi, t):
    s = np.sqrt(1 - t * t)
    x = c + np.array([t, s * np.cos(phi), s * np.sin(phi)])
    assert np.allclose(invert_point(c, x), x, atol=1e-12)


# --- kernels ----------------------------------------------------------------


def test_fundamental_solution_values():
    assert fundamental_solution([1.0, 0, 0]) == pytest.approx(-1 / (4 * np.pi))
    assert fundamental_solution([0.0, 2.0, 0]) == pytest.approx(-1 / (8 * np.pi))
    with pytest.raises(DomainError):
        fundamental_solution([0.0, 0, 0])
    with pytest.raises(DomainError):
        grad_fundamental_solution([0.0, 0, 0])


def test_fundamental_gradient_fd():
    x = np.array([0.3, 0.4, 0.0])
    fd = central_diff(fundamental_solution, x)
    g = grad_fundamental_solution(x)
    assert np.linalg.norm(fd - g) <= 1e-8 * np.linalg.norm(g)


def test_dipole_values():
    p = np.array([0.2, -0.1, 0.4])
    assert dipole_field(p, [0, 0, 1.0], p + np.array([1.0, 0.5, 0])) == pytest.approx(0.0, abs=1e-17)
    assert dipole_field(p, [1.0, 0, 0], p + np.array([1.0, 0, 0])) == pytest.approx(1 / (4 * np.pi))
    with pytest.raises(DomainError):
        dipole_field(p, [1.0, 0, 0], p)
    with pytest.raises(DomainError):
        grad_dipole_field(p, [1.0, 0, 0], p)


def test_dipole_discrete_laplacian():
    p = np.zeros(3)
    a = np.array([0.0, 0.6, 0.8])
    x = p + np.array([0.5, 0.2, 0.1])
    h = 1e-3
    lap = -6 * dipole_field(p, a, x)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        lap += dipole_field(p, a, x + e) + dipole_field(p, a, x - e)
    lap /= h * h
    # second-derivative scale of a dipole field is |a| / |x - p|^5
    scale = 1.0 / (4 * np.pi * np.linalg.norm(x - p) ** 5)
    assert abs(lap) <= 1e-4 * scale


@given(vec, st.sampled_from(["x", "y", "z"]))
def test_dipole_reflection_antisymmetry(y, direction):
    assume(np.linalg.norm(y) > 1e-2)
    dip = DipoleSource.on_axis(0.0, direction)
    k = "xyz".index(direction)
    y2 = y.copy()
    y2[k] = -y2[k]
    assert dipole_field(dip.p, dip.a, y2) == pytest.approx(-dipole_field(dip.p, dip.a, y), rel=1e-12, abs=1e-15)


@given(vec, vec)
def test_gradients_match_finite_differences(x, p):
    assume(np.linalg.norm(x - p) >= 0.1)
    a = np.array([0.48, 0.6, 0.64])
    for f, g in (
        (lambda z: dipole_field(p, a, z), grad_dipole_field(p, a, x)),
        (lambda z: fundamental_solution(z - p), grad_fundamental_solution(x - p)),
    ):
        h = 1e-5 * np.linalg.norm(x - p)
        fd = central_diff(f, x, h)
        assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g) + 1e-12


def test_fibonacci_unit_and_distinct():
    d = fibonacci_sphere(100)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert len(np.unique(np.round(d, 12), axis=0)) == 100
