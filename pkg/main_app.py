# main_app.py
"""Command-line front end: property checks, solves and (R, n) sweeps."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Dict, List, Optional

import typer
from rich import box
from rich.console import Console
from rich.table import Table

from energy import EnergyModel
from errors import ConfigError, MaxItersExceeded, QuasinodalError
from model import REMARK13, VANISHING, Nonlinearity, Potential
from project_config import Config, SolverConfig, output_dir, worker_count
from radial_mesh import build_grid
from reports import FAIL, PASS, PropertyReport
from run_logger import attach_record_handler, detach_record_handler, logger, set_verbosity
from run_records import RunRecord, save_run
from verification import run_eigen_suite, run_gradient_suite, run_model_suite, run_transform_suite
from worker_thread import GROUND, NODAL, SIGNCHANGE, TASKS, VANISHING_TASK, SweepWorker, run_task, spread, sweep_points

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

app = typer.Typer(
    name="quasinodal",
    help="Radial ground states and nodal solutions of an asymptotically cubic quasilinear Schrodinger equation",
    add_completion=False,
    rich_markup_mode="rich",
)
solve_app = typer.Typer(help="Solve for a ground state, a sign-changing or a k-node solution", add_completion=False)
app.add_typer(solve_app, name="solve")

console = Console()


@dataclass
class State:
    config_path: Optional[Path] = None
    overrides: List[str] = field(default_factory=list)
    output: Optional[Path] = None
    verbose: bool = False


@app.callback()
def common(
    ctx: typer.Context,
    config: Annotated[Optional[Path], typer.Option("--config", "-c", help="YAML configuration file")] = None,
    set_: Annotated[Optional[List[str]], typer.Option("--set", help="Override a config key: a.b=value (repeatable)")] = None,
    output: Annotated[Optional[Path], typer.Option("--output", "-o", help="Output directory for records and profiles")] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log solver iterations")] = False,
):
    ctx.obj = State(config, list(set_ or []), output, verbose)
    set_verbosity(verbose)


def _load(state: State, extra: Optional[Dict[str, object]] = None):
    """Config + overrides + command-specific settings; ConfigError ends the command with exit 2."""
    try:
        cfg = Config(state.config_path)
        cfg.apply_overrides(state.overrides)
        for path, value in (extra or {}).items():
            cfg.set(value, *path.split('.'))
        return cfg, SolverConfig.from_config(cfg)
    except ConfigError as e:
        console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(EXIT_USAGE)


def _report_table(reports: List[PropertyReport]) -> Table:
    table = Table(title="Property suites", box=box.SIMPLE_HEAVY)
    table.add_column("suite")
    table.add_column("property")
    table.add_column("status")
    table.add_column("margin", justify="right")
    table.add_column("samples", justify="right")
    colors = {PASS: 'green', FAIL: 'red'}
    for report in reports:
        for check in report.checks:
            color = colors.get(check.status, 'yellow')
            margin = '' if check.margin is None else f"{check.margin:.3e}"
            table.add_row(report.suite, check.name, f"[{color}]{check.status}[/{color}]", margin, str(check.samples))
    return table


@app.command()
def check(
    ctx: typer.Context,
    all_: Annotated[bool, typer.Option("--all", help="Run every suite")] = False,
    transform: Annotated[bool, typer.Option("--transform", help="Transform properties")] = False,
    model: Annotated[Optional[str], typer.Option("--model", help="Model audit: builtin | semilinear")] = None,
    eigen: Annotated[bool, typer.Option("--eigen", help="Eigenvalue oracles and convergence order")] = False,
    gradient: Annotated[bool, typer.Option("--gradient", help="Discrete gradient against finite differences")] = False,
):
    """Run property suites; exit 0 iff every selected suite passes."""
    state: State = ctx.obj
    cfg, scfg = _load(state)
    if model is not None and model not in ('builtin', 'semilinear'):
        console.print(f"[red]--model must be 'builtin' or 'semilinear', got '{model}'[/red]")
        raise typer.Exit(EXIT_USAGE)
    if not any((all_, transform, model, eigen, gradient)):
        all_ = True

    handler = attach_record_handler()
    record = RunRecord('check', scfg.echo())
    reports: List[PropertyReport] = []
    try:
        if all_ or transform:
            reports.append(run_transform_suite(scfg.transform()))
        if all_ or model:
            if model == 'semilinear':
                reports.append(run_model_suite(Nonlinearity.semilinear(), Potential.constant(1.0)))
            else:
                reports.append(run_model_suite(scfg.nonlinearity_obj(), scfg.potential_obj(), scfg.mode, dim=scfg.N))
        if all_ or eigen:
            reports.append(run_eigen_suite(scfg.N))
        if all_ or gradient:
            small = build_grid(scfg.N, scfg.R, min(scfg.n, 1000))
            em = EnergyModel(scfg.transform(), scfg.nonlinearity_obj(), scfg.potential_obj(), small)
            reports.append(run_gradient_suite(em, seed=scfg.random_seed or 0))
    except QuasinodalError as e:
        record.fail(e)
    finally:
        detach_record_handler(handler)
    for report in reports:
        record.add_property(report)
    record.log = handler.messages
    passed = record.status == 'ok' and all(r.passed for r in reports)
    if not passed:
        record.status = 'failed'
    save_run(record, output_dir(cfg, state.output), 'check')
    console.print(_report_table(reports))
    raise typer.Exit(EXIT_OK if passed else EXIT_NUMERICAL)


def _solve(state: State, task: str, extra: Optional[Dict[str, object]] = None, stem: Optional[str] = None):
    cfg, scfg = _load(state, extra)
    handler = attach_record_handler()
    record = RunRecord(f"solve {task}", scfg.echo())
    profiles = {}
    code = EXIT_OK
    report = None
    try:
        em, fld, report = run_task(task, scfg, progress=True)
        record.add_solve(report)
        profiles['profile'] = (fld, em.transform)
        if not report.converged:
            record.status = 'not_converged'
            code = EXIT_NUMERICAL
    except MaxItersExceeded as e:
        record.fail(e)
        report = e.report
        if e.field is not None:
            profiles['profile'] = (e.field, scfg.transform())
        code = EXIT_NUMERICAL
    except QuasinodalError as e:
        logger.error(f"{type(e).__name__}: {e}")
        record.fail(e)
        code = EXIT_NUMERICAL
    except Exception as e:
        logger.error(f"Unexpected {type(e).__name__} in solve {task}: {e}")
        record.fail(e)
        record.log = handler.messages
        save_run(record, output_dir(cfg, state.output), stem or task, profiles)
        raise
    finally:
        detach_record_handler(handler)
    record.log = handler.messages
    save_run(record, output_dir(cfg, state.output), stem or task, profiles)

    if report is not None:
        table = Table(title=f"solve {task}", box=box.SIMPLE_HEAVY)
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_row("energy", f"{report.energy:.12g}")
        table.add_row("EL residual", f"{report.el_residual:.3e}")
        table.add_row("Nehari residuals", ", ".join(f"{x:.2e}" for x in report.nehari_residuals))
        table.add_row("nodes", str(report.node_count))
        table.add_row("radii", ", ".join(f"{x:.6g}" for x in report.partition.radii))
        table.add_row("iterations", str(report.iterations))
        table.add_row("converged", str(report.converged))
        console.print(table)
    if record.error:
        console.print(f"[red]{record.error['type']}:[/red] {record.error['message']}")
    raise typer.Exit(code)


@solve_app.command("ground")
def solve_ground(ctx: typer.Context):
    """Positive least-energy solution on B_R (the level d)."""
    _solve(ctx.obj, GROUND)


@solve_app.command("signchange")
def solve_signchange(ctx: typer.Context):
    """Least-energy sign-changing solution (the level c) by the nodal and direct paths."""
    _solve(ctx.obj, SIGNCHANGE)


@solve_app.command("nodal")
def solve_nodal(
    ctx: typer.Context,
    k: Annotated[int, typer.Option("--k", min=0, help="Number of nodes")] = 1,
    sign: Annotated[str, typer.Option("--sign", help="Sign at the origin: + or -")] = '+',
):
    """Radial solution with exactly k nodes (the level c_k)."""
    tag = 'plus' if sign.strip() in ('+', '+1', 'plus') else 'minus'
    _solve(ctx.obj, NODAL, {'solve.k': k, 'solve.sign': sign}, stem=f"nodal_k{k}_{tag}")


@solve_app.command("vanishing")
def solve_vanishing(
    ctx: typer.Context,
    l: Annotated[float, typer.Option("--l", help="Asymptote of g(t)/t^3; must exceed the subdomain eigenvalues")] = 400.0,
):
    """Sign-changing solution for the piecewise potential vanishing on B_1."""
    _solve(ctx.obj, VANISHING_TASK,
           {'model.mode': VANISHING, 'model.potential': REMARK13, 'model.l': l},
           stem=f"vanishing_l{l:g}")


def _parse_list(raw: Optional[str], cast):
    if raw is None or not raw.strip():
        return []
    try:
        return [cast(x) for x in raw.split(',') if x.strip()]
    except ValueError as e:
        raise ConfigError(f"Bad sweep list '{raw}': {e}")


def _doubling_factors(rows: List[Dict[str, object]]) -> List[Dict[str, object]]:
    """Ratios of successive energy differences along n at fixed R."""
    out = []
    for R in sorted({row['R'] for row in rows}):
        series = sorted((row for row in rows if row['R'] == R and row['energy'] is not None), key=lambda r: r['n'])
        diffs = [abs(b['energy'] - a['energy']) for a, b in zip(series[:-1], series[1:])]
        for i in range(len(diffs) - 1):
            if diffs[i + 1] > 0:
                out.append({'R': R, 'n': series[i + 2]['n'], 'factor': diffs[i] / diffs[i + 1]})
    return out


@app.command()
def sweep(
    ctx: typer.Context,
    target: Annotated[str, typer.Option("--target", help="ground | signchange | nodal")] = GROUND,
    R: Annotated[Optional[str], typer.Option("--R", help="Comma-separated truncation radii")] = None,
    n: Annotated[Optional[str], typer.Option("--n", help="Comma-separated grid sizes")] = None,
    fixed_density: Annotated[bool, typer.Option("--fixed-density/--fixed-n",
                                                help="Scale n with R to keep h fixed")] = True,
    threshold: Annotated[Optional[float], typer.Option("--threshold", help="Maximum relative energy spread")] = None,
    threads: Annotated[Optional[int], typer.Option("--threads", help="Parallel sweep workers")] = None,
):
    """Energy table over (R, n); exit 0 iff the relative spread is within the threshold."""
    state: State = ctx.obj
    cfg, scfg = _load(state)
    try:
        if target not in TASKS or target == VANISHING_TASK:
            raise ConfigError(f"Unknown sweep target '{target}'")
        R_values = _parse_list(R, float)
        n_values = _parse_list(n, int)
        points = sweep_points(R_values, n_values, scfg.R, scfg.n, fixed_density)
        workers = threads if threads is not None else worker_count(cfg)
        if workers < 1:
            raise ConfigError("--threads must be positive")
    except (ConfigError, ValueError) as e:
        console.print(f"[red]Bad sweep specification:[/red] {e}")
        raise typer.Exit(EXIT_USAGE)
    limit = threshold if threshold is not None else float(cfg.get('sweep', 'threshold', default=1e-2))

    handler = attach_record_handler()
    record = RunRecord(f"sweep {target}", scfg.echo())
    try:
        rows = SweepWorker(scfg, target, workers).run(points)
    finally:
        detach_record_handler(handler)
    record.convergence = rows + _doubling_factors(rows)
    record.log = handler.messages
    max_spread = spread(rows)
    ok = max_spread is not None and max_spread <= limit
    record.status = 'ok' if ok else 'failed'
    record.properties.append({'suite': 'sweep', 'passed': ok,
                              'checks': [{'name': 'relative_spread', 'status': PASS if ok else FAIL,
                                          'margin': None if max_spread is None else limit - max_spread,
                                          'samples': len(rows), 'note': f'threshold {limit:g}'}],
                              'meta': {'spread': max_spread}})
    save_run(record, output_dir(cfg, state.output), f"sweep_{target}")

    table = Table(title=f"sweep {target}", box=box.SIMPLE_HEAVY)
    for col in ("R", "n", "h", "energy", "EL residual", "converged"):
        table.add_column(col, justify="right")
    for row in rows:
        table.add_row(f"{row['R']:g}", str(row['n']), f"{row['h']:.4g}",
                      '-' if row['energy'] is None else f"{row['energy']:.12g}",
                      '-' if row['el_residual'] is None else f"{row['el_residual']:.2e}",
                      str(row['converged']))
    console.print(table)
    console.print(f"max relative spread: {'n/a' if max_spread is None else f'{max_spread:.3e}'} (threshold {limit:g})")
    raise typer.Exit(EXIT_OK if ok else EXIT_NUMERICAL)


def main():
    app()


if __name__ == '__main__':
    main()
