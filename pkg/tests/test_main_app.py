import pytest
import yaml
from typer.testing import CliRunner

import main_app
from main_app import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, app

runner = CliRunner()


def invoke(tmp_path, *args):
    return runner.invoke(app, ['--output', str(tmp_path), *args])


def record(tmp_path, stem):
    with open(tmp_path / f'{stem}.yml', 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def test_transform_check_passes(tmp_path):
    result = invoke(tmp_path, 'check', '--transform')
    assert result.exit_code == EXIT_OK, result.output
    data = record(tmp_path, 'check')
    assert data['status'] == 'ok'
    assert data['properties'][0]['suite'] == 'transform'
    assert data['config']['N'] == 3


def test_semilinear_model_fails_hypotheses(tmp_path):
    result = invoke(tmp_path, 'check', '--model', 'semilinear')
    assert result.exit_code == EXIT_NUMERICAL
    data = record(tmp_path, 'check')
    assert data['status'] == 'failed'


def test_unknown_model_is_usage_error(tmp_path):
    assert invoke(tmp_path, 'check', '--model', 'quintic').exit_code == EXIT_USAGE


def test_malformed_config_is_usage_error(tmp_path):
    path = tmp_path / 'bad.yml'
    path.write_text("grid: {N: 3\n", encoding='utf-8')
    result = invoke(tmp_path, '--config', str(path), 'check', '--transform')
    assert result.exit_code == EXIT_USAGE
    assert not (tmp_path / 'check.yml').exists()


def test_bad_dimension_is_usage_error(tmp_path):
    assert invoke(tmp_path, '--set', 'grid.N=2', 'solve', 'ground').exit_code == EXIT_USAGE


def test_single_point_sweep_is_usage_error(tmp_path):
    assert invoke(tmp_path, 'sweep', '--R', '30').exit_code == EXIT_USAGE
    assert invoke(tmp_path, 'sweep', '--target', 'vanishing', '--R', '20,30').exit_code == EXIT_USAGE
    assert invoke(tmp_path, 'sweep', '--R', '20,abc').exit_code == EXIT_USAGE


def test_vanishing_seed_failure_is_recorded(tmp_path):
    result = invoke(tmp_path, '--set', 'grid.R=4', '--set', 'grid.n=1600', 'solve', 'vanishing', '--l', '100')
    assert result.exit_code == EXIT_NUMERICAL
    data = record(tmp_path, 'vanishing_l100')
    assert data['status'] == 'failed'
    assert data['error']['type'] == 'SeedConstructionFailed'
    assert data['error']['mu'] > data['error']['l'] == 100.0
    assert data['config']['mode'] == 'vanishing'
    assert data['config']['potential'] == 'remark13_piecewise'


def test_capped_solve_writes_partial_record(tmp_path):
    result = invoke(tmp_path, '--set', 'grid.R=10', '--set', 'grid.n=400', '--set', 'iterations.max_iters=2',
                    '--set', 'tolerances.el_residual=1e-14', 'solve', 'ground')
    assert result.exit_code == EXIT_NUMERICAL
    data = record(tmp_path, 'ground')
    assert data['error']['type'] == 'MaxItersExceeded'
    assert data['solves'][0]['converged'] is False
    assert (tmp_path / 'ground_profile.csv').read_text(encoding='utf-8').startswith('r,u,f_u\n')


@pytest.mark.slow
def test_ground_solve_end_to_end(tmp_path):
    result = invoke(tmp_path, '--set', 'grid.R=20', '--set', 'grid.n=2000', 'solve', 'ground')
    assert result.exit_code == EXIT_OK, result.output
    data = record(tmp_path, 'ground')
    assert data['status'] == 'ok'
    assert data['solves'][0]['el_residual'] <= 1e-6
    assert 'elapsed_s' in data['wall_clock']


@pytest.mark.slow
def test_nodal_stem_names_sign(tmp_path):
    result = invoke(tmp_path, '--set', 'grid.R=20', '--set', 'grid.n=2000', 'solve', 'nodal', '--k', '1',
                    '--sign', '-')
    assert result.exit_code == EXIT_OK, result.output
    data = record(tmp_path, 'nodal_k1_minus')
    assert data['solves'][0]['sign'] == -1
    assert data['solves'][0]['node_count'] == 1


def test_unexpected_error_is_recorded_and_reraised(tmp_path, monkeypatch):
    def broken(task, scfg, progress=False):
        raise ValueError("operands could not be broadcast together")

    monkeypatch.setattr(main_app, 'run_task', broken)
    result = invoke(tmp_path, '--set', 'grid.R=10', '--set', 'grid.n=400', 'solve', 'ground')
    assert isinstance(result.exception, ValueError)
    data = record(tmp_path, 'ground')
    assert data['status'] == 'failed'
    assert data['error']['type'] == 'ValueError'
    assert any('ValueError' in line for line in data['log'])
