import numpy as np
import pytest

import solvers
from dual_transform import DualTransform
from energy import EnergyModel
from errors import (InfeasiblePartition, InnerSolveFailed, MaxItersExceeded, NonConvergence, SeedConstructionFailed,
                    SeedNotProjectable)
from model import NONVANISHING, VANISHING, Nonlinearity, Potential
from radial_mesh import RadialField, build_grid
from run_records import profile_text
from solvers import (NodalPartition, SolveReport, SolverOptions, _AnnulusCache, golden_section_minimize,
                     node_radii, solve_annulus_ground, solve_k_node, solve_least_energy_sign_changing,
                     subdomain_seed)
from verification import compare_energies, count_nodes


def test_golden_section_finds_quadratic_minimum():
    calls = []

    def f(x):
        calls.append(x)
        return (x - 2.0) ** 2

    x, fx = golden_section_minimize(f, 0.0, 5.0, 1e-6)
    assert abs(x - 2.0) < 1e-5
    assert fx == pytest.approx(0.0, abs=1e-10)
    # one new evaluation per shrink after the first two
    assert len(calls) < 40


def test_golden_section_degenerate_interval():
    x, fx = golden_section_minimize(lambda t: t * t, 1.0, 1.0 + 1e-9, 1e-6)
    assert x == pytest.approx(1.0, abs=1e-8)
    assert fx == pytest.approx(1.0, abs=1e-8)


def test_partition_validation():
    NodalPartition(2, (3.0, 6.0), 1.0).validate(10.0)
    with pytest.raises(InfeasiblePartition):
        NodalPartition(2, (3.0,), 1.0).validate(10.0)
    with pytest.raises(InfeasiblePartition):
        NodalPartition(2, (3.0, 3.5), 1.0).validate(10.0)
    with pytest.raises(InfeasiblePartition):
        NodalPartition(1, (9.5,), 1.0).validate(10.0)


def test_partition_dict_round_trip():
    part = NodalPartition(2, (3.0, 6.5), 0.4)
    assert NodalPartition.from_dict(part.to_dict()) == part
    assert part.bounds(10.0) == (0.0, 3.0, 6.5, 10.0)


def test_negative_k_is_infeasible(builtin_model):
    with pytest.raises(InfeasiblePartition):
        solve_k_node(builtin_model, -1)


def test_tiny_ball_seed_is_not_projectable():
    grid = build_grid(3, 10.0, 4000)
    em = EnergyModel(DualTransform(), Nonlinearity.builtin(1.0), Potential.constant(1.0), grid)
    with pytest.raises(SeedNotProjectable):
        solve_annulus_ground(em, (0.0, 0.25))


def test_descent_energy_is_monotone(builtin_model):
    opts = SolverOptions(max_iters=15, newton_polish=False)
    fld, report = solve_annulus_ground(builtin_model, (0.0, 10.0), 1, opts, raise_on_max_iters=False)
    energies = [row['energy'] for row in report.trace if row['phase'] == 'descent']
    assert energies
    floor = 1e-12 * max(1.0, abs(energies[0]))
    assert all(b <= a + floor for a, b in zip(energies, energies[1:]))
    assert np.all(fld.values >= 0.0)
    assert report.nehari_residuals[0] < 1e-6
    assert report.iterations <= 15


def test_descent_cap_raises_with_partial_report(builtin_model):
    opts = SolverOptions(max_iters=2, newton_polish=False, el_tol=1e-14)
    with pytest.raises(MaxItersExceeded) as info:
        solve_annulus_ground(builtin_model, (0.0, 10.0), 1, opts)
    assert info.value.report is not None
    assert not info.value.report.converged
    assert info.value.field is not None


def test_negative_sign_mirrors_positive(builtin_model):
    opts = SolverOptions(max_iters=10, newton_polish=False)
    pos, rp = solve_annulus_ground(builtin_model, (0.0, 10.0), 1, opts, raise_on_max_iters=False)
    neg, rn = solve_annulus_ground(builtin_model, (0.0, 10.0), -1, opts, raise_on_max_iters=False)
    assert np.allclose(pos.values, -neg.values, rtol=1e-9, atol=1e-12)
    assert rp.energy == pytest.approx(rn.energy, rel=1e-9)


def test_node_radii_interpolates_crossings():
    grid = build_grid(3, 3.0, 600)
    radii = node_radii(RadialField(grid, np.sin(np.pi * grid.nodes)))
    assert radii == pytest.approx([1.0, 2.0], abs=grid.h ** 2)


def test_report_round_trip(builtin_model):
    opts = SolverOptions(max_iters=3, newton_polish=False)
    _, report = solve_annulus_ground(builtin_model, (0.0, 10.0), 1, opts, raise_on_max_iters=False)
    clone = SolveReport.from_dict(report.to_dict())
    assert clone.to_dict() == report.to_dict()
    assert clone.k == 0


def test_subdomain_seed_fails_when_subdomain_eigenvalue_exceeds_l():
    grid = build_grid(3, 4.0, 1600)
    em = EnergyModel(DualTransform(), Nonlinearity.builtin(100.0), Potential.remark13(), grid)
    with pytest.raises(SeedConstructionFailed) as info:
        subdomain_seed(em, SolverOptions())
    assert info.value.subdomain is not None
    assert info.value.mu > info.value.l


def test_subdomain_seed_brackets_and_scalars(vanishing_model):
    seed, info = subdomain_seed(vanishing_model, SolverOptions())
    assert len(info['mu']) == 2
    assert all(mu < vanishing_model.nl.l for mu in info['mu'])
    for bracket in info['brackets']:
        assert bracket['psi_lo'] > 0 > bracket['psi_hi']
    assert all(s > 0 for s in info['scalars'])
    assert count_nodes(seed) == 1
    # supported on the zero set, up to one snapped node
    nodes, h = vanishing_model.grid.nodes, vanishing_model.grid.h
    outside = np.ones(nodes.size, dtype=bool)
    for lo, hi in info['subdomains']:
        outside &= ~((nodes > lo - 2 * h) & (nodes < hi + 2 * h))
    assert np.all(seed.values[outside] == 0.0)


def test_newton_polish_on_inner_annulus(vanishing_model):
    em = vanishing_model
    ann = em.grid.annulus(1.5, 3.0)
    opts = SolverOptions(max_iters=30, newton_switch=np.inf)
    fld, report = solve_annulus_ground(em, (1.5, 3.0), -1, opts, raise_on_max_iters=False)
    assert np.isfinite(report.energy)
    assert not np.any(fld.values[~em.grid.mask(ann)])
    assert np.all(fld.values <= 0.0)
    assert report.sign == -1


def test_annulus_cache_skips_failed_eigensolve(builtin_model, monkeypatch):
    def stuck(grid, annulus, N=None, max_iters=1000):
        raise NonConvergence("inverse iteration stuck")

    monkeypatch.setattr(solvers, 'dirichlet_eig_first', stuck)
    cache = _AnnulusCache(builtin_model, SolverOptions(), NONVANISHING)
    assert cache.solve(0, 0.0, 10.0, 1) is None
    assert cache.energy(0, 0.0, 10.0, 1) == np.inf


def test_sign_changing_falls_through_failed_nodal_path(builtin_model, monkeypatch):
    def stuck(*args, **kwargs):
        raise NonConvergence("inverse iteration stuck")

    monkeypatch.setattr(solvers, 'solve_k_node', stuck)
    with pytest.raises(InnerSolveFailed, match='No seed available'):
        solve_least_energy_sign_changing(builtin_model)


def test_rerun_is_deterministic(builtin_model):
    opts = SolverOptions(max_iters=40)
    first, r1 = solve_annulus_ground(builtin_model, (0.0, 10.0), 1, opts, raise_on_max_iters=False)
    second, r2 = solve_annulus_ground(builtin_model, (0.0, 10.0), 1, opts, raise_on_max_iters=False)
    assert r1.energy == r2.energy
    assert r1.to_dict() == r2.to_dict()
    assert profile_text(first, builtin_model.transform) == profile_text(second, builtin_model.transform)


@pytest.fixture(scope='module')
def acceptance_model():
    grid = build_grid(3, 20.0, 2000)
    return EnergyModel(DualTransform(), Nonlinearity.builtin(1.0), Potential.constant(1.0), grid)


@pytest.fixture(scope='module')
def ground(acceptance_model):
    return solve_annulus_ground(acceptance_model, (0.0, acceptance_model.grid.R))


@pytest.fixture(scope='module')
def one_node(acceptance_model):
    return solve_k_node(acceptance_model, 1)


@pytest.mark.slow
def test_ground_state_converges_from_two_seeds(acceptance_model, ground, make_bump):
    fld, report = ground
    assert report.converged
    assert report.el_residual <= 1e-6
    assert report.energy > 0
    assert report.node_count == 0
    assert np.all(fld.values >= 0.0)
    _, other = solve_annulus_ground(acceptance_model, (0.0, acceptance_model.grid.R),
                                    seed=make_bump(acceptance_model.grid, width=3.0))
    assert other.energy == pytest.approx(report.energy, rel=1e-4)


@pytest.mark.slow
def test_one_node_level_exceeds_twice_ground(ground, one_node):
    _, d = ground
    _, c1 = one_node
    assert c1.node_count == 1
    assert c1.energy >= 2 * d.energy * (1 - 1e-2)
    assert c1.extras['sweeps'] >= 1
    assert len(c1.extras['annulus_energies']) == 2


@pytest.fixture(scope='module')
def two_node(acceptance_model):
    return solve_k_node(acceptance_model, 2)


@pytest.mark.slow
def test_two_node_solution(ground, one_node, two_node):
    _, c2 = two_node
    assert c2.node_count == 2
    assert c2.energy > one_node[1].energy
    check = compare_energies([ground[1], one_node[1], c2])
    assert check.passed, check.failures


@pytest.mark.slow
def test_sign_changing_paths_agree(acceptance_model, one_node):
    fld, report = solve_least_energy_sign_changing(acceptance_model)
    assert report.kind == 'sign_changing'
    assert report.node_count == 1
    assert report.extras['direct_energies']
    assert report.extras['path_gap'] <= 1e-2
    assert report.energy <= one_node[1].energy * (1 + 1e-2)
    assert fld.values.max() > 0 > fld.values.min()


@pytest.mark.slow
def test_vanishing_sign_changing_solution():
    grid = build_grid(3, 6.0, 2400)
    em = EnergyModel(DualTransform(), Nonlinearity.builtin(400.0), Potential.remark13(), grid)
    _, report = solve_least_energy_sign_changing(em, mode=VANISHING)
    assert report.converged
    assert report.mode == VANISHING
    assert report.el_residual <= 1e-5
    assert report.node_count == 1
    assert report.extras['seed']['scalars']


@pytest.mark.slow
def test_three_node_solution(acceptance_model, ground, one_node, two_node):
    _, c3 = solve_k_node(acceptance_model, 3)
    assert c3.node_count == 3
    assert len(c3.partition.radii) == 3
    check = compare_energies([ground[1], one_node[1], two_node[1], c3])
    assert check.passed, check.failures


@pytest.mark.slow
@pytest.mark.parametrize('R, n', [(40.0, 4001), (20.0, 4001)])
def test_ground_level_is_stable_under_refinement(ground, R, n):
    # same h on a ball twice as large, then half the h on the same ball
    em = EnergyModel(DualTransform(), Nonlinearity.builtin(1.0), Potential.constant(1.0), build_grid(3, R, n))
    _, report = solve_annulus_ground(em, (0.0, R))
    assert report.converged
    assert report.energy == pytest.approx(ground[1].energy, rel=1e-2)
