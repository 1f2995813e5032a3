import numpy as np
import pytest

from dual_transform import DualTransform
from errors import GridMismatch, QuasinodalError, SeedConstructionFailed
from radial_mesh import build_grid
from reports import PropertyReport
from run_records import PROFILE_HEADER, RunRecord, load_record, profile_text, read_profile, save_run
from solvers import SolverOptions, solve_annulus_ground


def test_profile_text_layout(small_grid, make_bump):
    fld = make_bump(small_grid, width=2.5)
    lines = profile_text(fld, DualTransform()).splitlines()
    assert lines[0] == PROFILE_HEADER
    assert len(lines) == small_grid.n + 1
    r, u, fu = (float(x) for x in lines[1].split(','))
    assert r == small_grid.nodes[0]
    assert u == fld.values[0]
    assert 0 < fu < u


def test_profile_round_trip_is_exact(tmp_path, small_grid, make_bump):
    fld = make_bump(small_grid, width=2.5, wobble=0.3)
    record = RunRecord('solve ground', {'N': 3})
    written = save_run(record, tmp_path, 'ground', {'profile': (fld, DualTransform())})
    assert written['profile'].name == 'ground_profile.csv'
    back = read_profile(written['profile'], small_grid)
    assert np.array_equal(back.values, fld.values)
    r, u, fu = read_profile(written['profile'])
    assert np.array_equal(r, small_grid.nodes)
    assert np.allclose(fu, DualTransform().f_forward(fld.values), rtol=0, atol=0)


def test_profile_on_wrong_grid(tmp_path, small_grid, make_bump):
    written = save_run(RunRecord('solve ground', {}), tmp_path, 'ground',
                       {'profile': (make_bump(small_grid), DualTransform())})
    with pytest.raises(GridMismatch):
        read_profile(written['profile'], build_grid(3, 10.0, 401))


def test_profile_header_is_checked(tmp_path):
    path = tmp_path / 'bad.csv'
    path.write_text('r,u\n0.1,0.2\n', encoding='utf-8')
    with pytest.raises(QuasinodalError):
        read_profile(path)


def test_record_round_trip(tmp_path, builtin_model):
    _, report = solve_annulus_ground(builtin_model, (0.0, 10.0), 1, SolverOptions(max_iters=3),
                                     raise_on_max_iters=False)
    prop = PropertyReport('transform', meta={'samples': 3})
    prop.add('odd', True, margin=0.0, samples=3)
    record = RunRecord('solve ground', {'N': 3, 'R': 10.0, 'n': 400, 'sign': '+'})
    record.add_solve(report)
    record.add_property(prop)
    record.log = ['[WARNING] example']
    written = save_run(record, tmp_path, 'ground')
    loaded = load_record(written['record'])
    assert loaded.payload() == record.payload()
    assert set(loaded.wall_clock) == {'unix_time', 'elapsed_s'}
    assert 'wall_clock' not in record.payload()
    assert loaded.solves[0]['energy'] == report.energy


def test_failure_keeps_error_details():
    record = RunRecord('solve vanishing', {})
    record.fail(SeedConstructionFailed('no root', subdomain=(0.0, 0.5), mu=150.0, l=100.0))
    data = record.to_dict()
    assert data['status'] == 'failed'
    assert data['error']['type'] == 'SeedConstructionFailed'
    assert data['error']['subdomain'] == [0.0, 0.5]
    assert data['error']['mu'] == 150.0
    assert data['error']['l'] == 100.0
