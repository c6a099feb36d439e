import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gapfield import bem as B
from gapfield import harmonics as H
from gapfield import image_series as S
from gapfield.errors import DomainError, ResolutionError
from gapfield.geometry import DipoleSource, SphereConfig, fibonacci_sphere
from gapfield.quadrature import QuadratureMesh, inward_flux


def zonal(n, L=16):
    e = np.zeros(L + 1)
    e[n] = 1.0
    return {(0, "c"): e}


@pytest.fixture(scope="module")
def qperp02():
    return B.build_qperp(SphereConfig(0.2))


# --- meshes and single sphere -----------------------------------------------


@pytest.mark.parametrize("L", [4, 16, 24])
def test_gauss_mesh(L):
    mesh = QuadratureMesh.gauss(L)
    assert np.sum(mesh.weights) == pytest.approx(4 * np.pi, abs=1e-12)
    assert len(np.unique(np.round(mesh.directions, 12), axis=0)) == mesh.size


def test_uniform_layer():
    mesh = QuadratureMesh.gauss(40)
    ones = np.ones(mesh.size)
    assert B.single_layer(mesh, ones, [[2.0, 0, 0]])[0] == pytest.approx(-0.5, rel=1e-12)
    on = B.single_layer_on_surface(lambda y: np.ones(len(y)), fibonacci_sphere(5))
    assert np.allclose(on, -1.0, atol=1e-10)
    with pytest.raises(DomainError):
        B.single_layer(mesh, ones, mesh.directions[:1])


def test_layer_eigenrelation():
    dirs = fibonacci_sphere(8)
    coefs = zonal(2)
    y2 = H.synthesize(coefs, dirs)
    on = B.single_layer_on_surface(lambda y: H.synthesize(coefs, y), dirs)
    assert np.max(np.abs(on + y2 / 5.0)) <= 1e-8
    # the closed form used by the solver agrees on the surface
    exact = B.single_layer_field(B.HarmonicExpansion(16, coefs), np.zeros(3), dirs)
    assert np.allclose(exact, -y2 / 5.0, atol=1e-14)


def test_np_operator_single_sphere():
    dirs = fibonacci_sphere(10)
    k1 = B.np_operator_on_surface(lambda y: np.ones(len(y)), dirs)
    assert np.max(np.abs(k1 - 0.5)) <= 1e-10
    coefs = zonal(1)
    k = B.np_operator_on_surface(lambda y: H.synthesize(coefs, y), dirs)
    assert np.allclose(k, H.synthesize(coefs, dirs) / 6.0, atol=1e-10)


def test_jump_formula():
    # density with an azimuthal part; one-sided differences against (+-1/2 + K*)
    coefs = {(1, "c"): np.array([0, 1.0, 0.5, 0, 0])}

    def density(y):
        return H.synthesize(coefs, np.atleast_2d(y))

    h = 1e-3
    targets = fibonacci_sphere(4)
    on = B.single_layer_on_surface(density, targets)
    kstar = B.np_operator_on_surface(density, targets)
    for i, x in enumerate(targets):
        mesh = QuadratureMesh.graded(theta_min=h / 8.0, order=16, n_phi=64, axis=x)
        dens = density(mesh.directions)
        for side in (1.0, -1.0):
            s1 = B.single_layer(mesh, dens, (1.0 + side * h) * x)[0]
            s2 = B.single_layer(mesh, dens, (1.0 + 2.0 * side * h) * x)[0]
            deriv = side * (-3.0 * on[i] + 4.0 * s1 - s2) / (2.0 * h)
            assert deriv == pytest.approx(side * 0.5 * density(x)[0] + kstar[i], abs=1e-4)


# --- DtN --------------------------------------------------------------------


def test_dtn_examples():
    cfg = SphereConfig(0.2)
    L = 12
    mesh = QuadratureMesh.gauss(L)
    assert np.allclose(B.dtn(cfg, 1, np.ones(mesh.size), L), 0.0, atol=1e-13)
    x3 = mesh.directions[:, 2]
    assert np.allclose(B.dtn(cfg, 2, x3, L), -x3, atol=1e-13)
    with pytest.raises(ResolutionError):
        B.dtn(cfg, 1, np.exp(20.0 * mesh.directions[:, 0]), L)
    with pytest.raises(DomainError):
        B.dtn(cfg, 3, x3, L)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_dtn_has_zero_mean(c):
    L = 10
    mesh = QuadratureMesh.gauss(L)
    d = mesh.directions
    f = c[0] + c[1] * d[:, 0] + c[2] * d[:, 1] * d[:, 2] + c[3] * d[:, 0] ** 3 + c[4] * d[:, 2] ** 2 + c[5] * d[:, 1] ** 4
    out = B.dtn(SphereConfig(0.5), 1, f, L)
    assert abs(mesh.integrate(out)) <= 1e-12 * (1 + np.max(np.abs(f)))


# --- two-sphere blocks ------------------------------------------------------


def test_np_apply_on_constants():
    cfg = SphereConfig(0.1)
    L = 16
    ones = B.HarmonicExpansion(L, {(0, "c"): np.r_[1.0 / B.Y00, np.zeros(L)]})
    out = B.np_apply(cfg, B.DensityPair(cfg, ones, ones))
    # the cross blocks are derivatives of fields harmonic inside the target sphere, so the mean is K*[1] = 1/2
    assert out.phi1.mean == pytest.approx(0.5, rel=1e-12)
    assert out.phi2.mean == pytest.approx(0.5, rel=1e-12)


def test_np_apply_preserves_mean_zero():
    cfg = SphereConfig(0.1)
    L = 16
    rng = np.random.default_rng(1)
    c = {k: rng.normal(size=L + 1) for k in H.mode_keys(3)}
    c[(0, "c")][0] = 0.0
    e = B.HarmonicExpansion(L, c)
    out = B.np_apply(cfg, B.DensityPair(cfg, e, e))
    assert abs(out.phi1.mean) <= 1e-14 and abs(out.phi2.mean) <= 1e-14


def test_solve_block_constant_data():
    cfg = SphereConfig(0.2)
    mesh = QuadratureMesh.gauss(B.DEFAULT_L)
    pair = B.solve_block(cfg, (np.ones(mesh.size), np.ones(mesh.size)))
    assert pair.phi1.energy() <= 1e-20 and pair.phi2.energy() <= 1e-20


def test_solve_block_mirror():
    cfg = SphereConfig(0.2)
    L = B.DEFAULT_L
    mesh = QuadratureMesh.gauss(L)
    f1 = mesh.points(cfg.c1)[:, 0]
    f2 = mesh.points(cfg.c2)[:, 0]
    pair = B.solve_block(cfg, (f1, f2), L)
    dirs = fibonacci_sphere(30)
    mirror = dirs * np.array([-1.0, 1, 1])
    a = pair.phi1.synthesize(dirs)
    b = pair.phi2.synthesize(mirror)
    assert np.allclose(b, -a, atol=1e-12 * np.max(np.abs(a)))
    assert abs(pair.weighted_mean(1, mesh)) <= 1e-8


def test_solve_block_rejects_small_gap():
    mesh = QuadratureMesh.gauss(4)
    with pytest.raises(DomainError):
        B.solve_block(SphereConfig(1e-3), (np.ones(mesh.size), np.ones(mesh.size)), 4)


# --- exterior solve ---------------------------------------------------------


def test_exterior_unit_data():
    ext = B.solve_exterior(SphereConfig(0.2), lambda x: np.ones(len(x)))
    assert ext.c1 == pytest.approx(1.0, abs=1e-10) and ext.c2 == pytest.approx(1.0, abs=1e-10)
    pts = np.array([[0.0, 0, 0], [0, 2.0, 0], [3.0, 1, -1]])
    assert np.max(np.abs(ext.eval_v(pts))) <= 1e-10


def test_exterior_transverse_dipole():
    ext = B.solve_exterior(SphereConfig(0.2), DipoleSource.on_axis(0.1, "y"))
    assert abs(ext.c1) <= 1e-12 and abs(ext.c2) <= 1e-12


def test_exterior_gap_dipole():
    cfg = SphereConfig(0.2)
    ext = B.solve_exterior(cfg, DipoleSource.on_axis(0.0, "x"))
    assert ext.c1 == pytest.approx(-ext.c2, rel=1e-12)
    assert ext.constancy <= 1e-6
    gap = S.potential_gap_series(S.build_series(cfg), 0.0)
    assert ext.c2 - ext.c1 == pytest.approx(gap, rel=1e-4)
    # mean-zero densities carry no net flux; measured against the flux magnitude
    for j in (1, 2):
        flux = inward_flux(cfg, j, ext.eval_grad_v)
        size = inward_flux(cfg, j, lambda x: ext.eval_grad_v(x) * np.sign(np.sum(ext.eval_grad_v(x) * (cfg.center(j) - x), axis=1))[:, None])
        assert abs(flux) <= 1e-8 * size


def test_exterior_far_decay():
    ext = B.solve_exterior(SphereConfig(0.2), DipoleSource.on_axis(0.3, "z"))
    d = np.array([[0.0, 0.6, 0.8]])
    v = [abs(ext.eval_v(r * d)[0]) * r**2 for r in (40.0, 80.0, 160.0)]
    assert v[2] == pytest.approx(v[1], rel=0.05)


def test_degree_convergence():
    cfg = SphereConfig(0.05)
    dip = DipoleSource.on_axis(0.2, "z")
    a = B.solve_exterior(cfg, dip, L=64, check=False)
    b = B.solve_exterior(cfg, dip, L=72, check=False)
    assert abs(a.c1 - b.c1) < 1e-6 and abs(a.c2 - b.c2) < 1e-6


def test_exterior_bad_input():
    with pytest.raises(DomainError):
        B.solve_exterior(SphereConfig(1e-3), DipoleSource.on_axis(0.1, "x"))
    with pytest.raises(DomainError):
        B.solve_exterior(SphereConfig(0.1), 3.0)


# --- q_perp -----------------------------------------------------------------


def test_qperp_fluxes(qperp02):
    for j in (1, 2):
        assert inward_flux(qperp02.config, j, qperp02.eval_grad) == pytest.approx(1.0, abs=1e-5)


def test_qperp_symmetry_and_constancy(qperp02, rng):
    cfg = qperp02.config
    pts = []
    while len(pts) < 10:
        x = rng.uniform(-2.5, 2.5, 3)
        if cfg.distance_to_spheres(x)[0] > 0.05:
            pts.append(x)
    pts = np.array(pts)
    assert np.allclose(qperp02.eval(pts * [-1, 1, 1]), qperp02.eval(pts), rtol=1e-10)
    dirs = fibonacci_sphere(200)
    v1 = qperp02.eval(cfg.boundary_points(1, dirs))
    v2 = qperp02.eval(cfg.boundary_points(2, dirs))
    assert np.ptp(np.r_[v1, v2]) <= 1e-6 * abs(qperp02.value)
    assert np.mean(v1) == pytest.approx(np.mean(v2), rel=1e-6)


def test_qperp_matches_images(qperp02):
    # the alternating image series gives the same symmetric companion
    series = S.build_series(qperp02.config)
    x = np.array([[0.0, 0.5, 0.3], [2.0, -1.0, 0.5], [0.0, 0.0, 3.0]])
    assert np.allclose(qperp02.eval(x), S.eval_qperp(series, x), rtol=1e-10)
    assert qperp02.value == pytest.approx(S.qperp_boundary_value(series), rel=1e-10)
