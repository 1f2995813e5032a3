import numpy as np
import pytest

from errors import BadDimension, BadResolution, GridMismatch, TooFewNodes
from radial_mesh import (MIN_ANNULUS_NODES, RadialField, build_grid, dirichlet_eig_first, field_from_function,
                         grad_sq, integrate, l2_norm_sq, local_grid, lp_norm, sphere_area)


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * np.pi)
    assert sphere_area(4) == pytest.approx(2 * np.pi ** 2)


def test_grid_layout():
    grid = build_grid(3, 30.0, 6000)
    assert grid.h == pytest.approx(30.0 / 6001)
    assert grid.nodes[0] == pytest.approx(grid.h)
    assert grid.closed_nodes[-1] == 30.0
    assert grid.nodes.shape == grid.quad_weights.shape == grid.couplings.shape == (6000,)
    assert grid.critical_exponent == 6.0


@pytest.mark.parametrize('N, R, n, exc', [(2, 1.0, 100, BadDimension), (3.5, 1.0, 100, BadDimension),
                                          (3, 0.0, 100, BadResolution), (3, 1.0, 3, BadResolution),
                                          (3, np.inf, 100, BadResolution)])
def test_grid_validation(N, R, n, exc):
    with pytest.raises(exc):
        build_grid(N, R, n)


def test_ball_volume_quadrature():
    grid = build_grid(3, 2.0, 2000)
    assert integrate(grid, np.ones(grid.n + 2)) == pytest.approx(grid.ball_volume, rel=1e-5)
    with pytest.raises(GridMismatch):
        integrate(grid, np.ones(5))


def test_quadrature_of_smooth_radial_function():
    grid = build_grid(3, 8.0, 4000)
    vals = np.exp(-grid.nodes ** 2)
    # integral of exp(-|x|^2) over R^3 is pi^(3/2)
    assert integrate(grid, vals) == pytest.approx(np.pi ** 1.5, rel=1e-6)


def test_norms():
    grid = build_grid(3, 8.0, 4000)
    u = field_from_function(grid, lambda r: np.exp(-r ** 2 / 2))
    assert l2_norm_sq(u) == pytest.approx(np.pi ** 1.5, rel=1e-6)
    assert lp_norm(u, 2.0) ** 2 == pytest.approx(l2_norm_sq(u))
    # |grad u|^2 = r^2 exp(-r^2); its integral over R^3 is 3 pi^(3/2) / 2
    assert grad_sq(u) == pytest.approx(1.5 * np.pi ** 1.5, rel=1e-4)


def test_stiffness_consistency(rng):
    grid = build_grid(3, 5.0, 300)
    v = rng.normal(size=grid.n)
    assert float(v @ grid.apply_stiffness(v)) == pytest.approx(grad_sq(RadialField(grid, v)), rel=1e-12)
    d, e = grid.stiffness_diagonals()
    dense = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    np.testing.assert_allclose(dense @ v, grid.apply_stiffness(v), rtol=1e-12, atol=1e-8)


def test_annulus_snapping():
    grid = build_grid(3, 30.0, 6000)
    ann = grid.annulus(1.0 / 3.0, 0.5)
    assert ann.count == MIN_ANNULUS_NODES
    assert abs(ann.rho - 1.0 / 3.0) <= grid.h / 2
    assert grid.mask(ann).sum() == ann.count
    whole = grid.whole()
    assert whole.count == grid.n
    with pytest.raises(TooFewNodes):
        grid.annulus(1.0, 1.05)


def test_field_validation():
    grid = build_grid(3, 1.0, 50)
    with pytest.raises(GridMismatch):
        RadialField(grid, np.ones(10))
    with pytest.raises(ValueError):
        RadialField(grid, np.full(50, np.nan))
    other = build_grid(3, 2.0, 50)
    with pytest.raises(GridMismatch):
        RadialField(grid, np.ones(50)) + RadialField(other, np.ones(50))


def test_signed_parts():
    grid = build_grid(3, 1.0, 50)
    u = RadialField(grid, np.cos(np.pi * grid.nodes * 2))
    np.testing.assert_array_equal((u.positive_part() + u.negative_part()).values, u.values)
    assert np.all(u.positive_part().values >= 0)
    assert (-u).values[0] == -u.values[0]
    assert (2 * u).values[3] == 2 * u.values[3]


def test_local_grid_aligns_inner_radius():
    grid = local_grid(3, 1.0 / 3.0, 0.5, 128)
    ann = grid.annulus(1.0 / 3.0, 0.5)
    assert ann.count == 128
    assert ann.rho == pytest.approx(1.0 / 3.0, rel=1e-14)


@pytest.mark.parametrize('rho, sigma', [(0.0, 0.25), (1.0 / 3.0, 0.5)])
def test_first_dirichlet_eigenvalue(rho, sigma):
    lam, u = dirichlet_eig_first(local_grid(3, rho, sigma, 4096), (rho, sigma))
    assert lam == pytest.approx((np.pi / (sigma - rho)) ** 2, rel=1e-4)
    assert np.all(u.values >= 0)
    assert l2_norm_sq(u) == pytest.approx(1.0, rel=1e-12)
    assert grad_sq(u) == pytest.approx(lam, rel=1e-10)


def test_eigenfield_vanishes_outside_annulus():
    grid = build_grid(3, 4.0, 1600)
    lam, u = dirichlet_eig_first(grid, (1.0, 2.0))
    ann = grid.annulus(1.0, 2.0)
    assert not np.any(u.values[~grid.mask(ann)])
    with pytest.raises(ValueError):
        dirichlet_eig_first(grid, (2.0, 1.0))
    with pytest.raises(BadDimension):
        dirichlet_eig_first(grid, (1.0, 2.0), N=4)


def test_first_eigenvalue_on_fine_ball():
    grid = build_grid(3, 30.0, 6000)
    lam, u = dirichlet_eig_first(grid, (0.0, 30.0))
    assert lam == pytest.approx((np.pi / 30.0) ** 2, rel=1e-4)
    assert np.all(u.values >= 0)
    assert grad_sq(u) == pytest.approx(lam, rel=1e-8)
