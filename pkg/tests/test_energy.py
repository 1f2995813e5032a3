import numpy as np
import pytest

from dual_transform import DualTransform
from energy import (EnergyModel, energy_terms, euler_lagrange_residual, functional_I, nehari_bracket, nehari_psi,
                    nehari_residual, project_nehari, project_sign_changing, theta_test)
from errors import GridMismatch, MissingSign, NotProjectable, ZeroField
from model import Nonlinearity, Potential
from radial_mesh import RadialField, _banded_matvec, build_grid, dirichlet_eig_first, grad_sq
from verification import run_gradient_suite


@pytest.fixture
def wide_model():
    return EnergyModel(DualTransform(), Nonlinearity.builtin(1.0), Potential.constant(1.0), build_grid(3, 30.0, 1500))


def sign_changing_field(grid):
    r = grid.nodes
    return RadialField(grid, np.exp(-(r / 10.0) ** 2) * np.cos(np.pi * r / 20.0))


def test_zero_field_has_zero_energy(builtin_model):
    zero = RadialField(builtin_model.grid, np.zeros(builtin_model.grid.n))
    assert functional_I(builtin_model, zero) == 0.0
    assert not np.any(builtin_model.gradient(zero.values))


def test_energy_terms_add_up(builtin_model, make_bump):
    u = make_bump(builtin_model.grid)
    terms = energy_terms(builtin_model, u)
    assert set(terms) == {'gradient', 'potential', 'nonlinear'}
    assert terms['gradient'] == pytest.approx(0.5 * grad_sq(u), rel=1e-14)
    assert functional_I(builtin_model, u) == pytest.approx(terms['gradient'] + terms['potential'] - terms['nonlinear'])


def test_grid_mismatch(builtin_model):
    other = build_grid(3, 5.0, 400)
    with pytest.raises(GridMismatch):
        functional_I(builtin_model, RadialField(other, np.ones(400)))


@pytest.mark.parametrize('name', ['builtin_model', 'semilinear_model'])
def test_gradient_consistency(name, request):
    em = request.getfixturevalue(name)
    report = run_gradient_suite(em, n_fields=10, eps=1e-5, seed=7)
    assert report.passed, report.to_dict()


def test_hessian_matches_gradient_differences(builtin_model, make_bump, rng):
    em = builtin_model
    v = make_bump(em.grid, width=2.5, amplitude=3.0).values
    e = make_bump(em.grid, width=4.0, wobble=0.5).values * rng.uniform(0.5, 1.5)
    eps = 1e-6
    fd = (em.gradient(v + eps * e) - em.gradient(v - eps * e)) / (2 * eps)
    d, off = em.hessian_diagonals(v, em.grid.whole())
    exact = _banded_matvec(d, off, e)
    assert np.linalg.norm(fd - exact) <= 1e-6 * np.linalg.norm(exact)


def test_annulus_hessian_matches_gradient_differences(vanishing_model, rng):
    # varying potential across the annulus, so a misaligned V slice shows up
    em = vanishing_model
    grid = em.grid
    ann = grid.annulus(1.5, 3.0)
    r = grid.nodes
    v = 0.2 * np.exp(-(r - 2.0) ** 2)
    e = np.where(grid.mask(ann), np.sin(np.pi * (r - ann.rho) / (ann.sigma - ann.rho)), 0.0)
    e *= rng.uniform(0.5, 1.5)
    eps = 1e-6
    fd = (em.gradient(v + eps * e) - em.gradient(v - eps * e)) / (2 * eps)
    d, off = em.hessian_diagonals(v, ann)
    assert d.size == ann.count
    exact = _banded_matvec(d, off, e[ann.sl])
    assert np.linalg.norm(fd[ann.sl] - exact) <= 1e-6 * np.linalg.norm(exact)


def test_euler_lagrange_residual_norm(builtin_model, make_bump):
    em = builtin_model
    u = make_bump(em.grid)
    res, norm = euler_lagrange_residual(em, u)
    grad = em.gradient(u.values)
    assert norm == pytest.approx(np.sqrt(np.sum(grad ** 2 / em.grid.quad_weights)), rel=1e-12)
    ann = em.grid.annulus(2.0, 4.0)
    res_ann, norm_ann = euler_lagrange_residual(em, u, ann)
    assert not np.any(res_ann.values[~em.grid.mask(ann)])
    assert norm_ann < norm


def test_semilinear_projection_closed_form(semilinear_model, make_bump, rng):
    em = semilinear_model
    w = em.grid.quad_weights
    for _ in range(20):
        u = make_bump(em.grid, width=rng.uniform(2.5, 4.0), amplitude=rng.uniform(0.1, 5.0),
                      wobble=rng.uniform(-0.3, 0.3))
        A = grad_sq(u) + np.dot(w, em.V * u.values ** 2)
        B = np.dot(w, u.values ** 4)
        t, projected = project_nehari(em, u)
        assert t == pytest.approx(np.sqrt(A / B), rel=1e-10)
        np.testing.assert_allclose(projected.values, t * u.values)


def test_projection_maximizes_along_ray(builtin_model, make_bump, rng):
    em = builtin_model
    for _ in range(5):
        u = make_bump(em.grid, width=rng.uniform(2.5, 4.0), amplitude=rng.uniform(0.1, 5.0))
        assert theta_test(em, u)
        t, tu = project_nehari(em, u)
        A = grad_sq(u)
        assert abs(nehari_psi(em, u, t)) <= 1e-10 * max(1.0, t * t * A)
        assert nehari_residual(em, tu)[0] <= 1e-10
        peak = functional_I(em, tu)
        assert peak > 0
        for alpha in (0.5, 0.9, 1.1, 2.0):
            assert peak > functional_I(em, tu * alpha)


def test_projection_is_scale_invariant(builtin_model, make_bump):
    em = builtin_model
    u = make_bump(em.grid)
    t1, p1 = project_nehari(em, u)
    t2, p2 = project_nehari(em, u * 7.0)
    assert t2 == pytest.approx(t1 / 7.0, rel=1e-10)
    np.testing.assert_allclose(p1.values, p2.values, rtol=1e-9, atol=1e-14)


def test_bracket_certificate(builtin_model, make_bump):
    br = nehari_bracket(builtin_model, make_bump(builtin_model.grid, amplitude=0.01))
    assert br.s_lo < br.s_hi
    assert br.psi_lo > 0 > br.psi_hi
    assert set(br.to_dict()) == {'s_lo', 's_hi', 'psi_lo', 'psi_hi'}


def test_concentrated_field_is_not_projectable():
    grid = build_grid(3, 10.0, 4000)
    em = EnergyModel(DualTransform(), Nonlinearity.builtin(1.0), Potential.constant(1.0), grid)
    _, eig = dirichlet_eig_first(grid, (0.0, 0.25))
    assert not theta_test(em, eig)
    with pytest.raises(NotProjectable):
        project_nehari(em, eig)


def test_nehari_psi_preconditions(builtin_model, make_bump):
    zero = RadialField(builtin_model.grid, np.zeros(builtin_model.grid.n))
    with pytest.raises(ZeroField):
        nehari_psi(builtin_model, zero, 1.0)
    with pytest.raises(ValueError):
        nehari_psi(builtin_model, make_bump(builtin_model.grid), 0.0)


def test_sign_changing_projection_needs_both_signs(builtin_model, make_bump):
    with pytest.raises(MissingSign):
        project_sign_changing(builtin_model, make_bump(builtin_model.grid))


def test_sign_changing_projection_with_coupled_parts(wide_model):
    em = wide_model
    u = sign_changing_field(em.grid)
    kappa = float(np.dot(u.positive_part().values, em.grid.apply_stiffness(u.negative_part().values)))
    assert kappa != 0.0
    s, t, w = project_sign_changing(em, u)
    assert s > 0 and t > 0
    residuals = nehari_residual(em, w)
    assert len(residuals) == 2
    assert max(residuals) <= 1e-10


def test_sign_changing_projection_with_separated_parts(wide_model):
    em = wide_model
    u = sign_changing_field(em.grid).values.copy()
    i = int(np.argmin(np.abs(em.grid.nodes - 10.0)))
    u[i] = 0.0
    fld = RadialField(em.grid, u)
    s, t, w = project_sign_changing(em, fld)
    s_alone, _ = project_nehari(em, fld.positive_part())
    t_alone, _ = project_nehari(em, fld.negative_part())
    assert s == s_alone
    assert t == t_alone
