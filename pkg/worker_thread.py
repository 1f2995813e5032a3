# worker_thread.py
"""Task dispatch for single solves and the parallel (R, n) sweep."""
import asyncio
import traceback
from typing import Any, Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from errors import QuasinodalError
from model import VANISHING
from project_config import SolverConfig
from run_logger import logger

GROUND = 'ground'
SIGNCHANGE = 'signchange'
NODAL = 'nodal'
VANISHING_TASK = 'vanishing'
TASKS = (GROUND, SIGNCHANGE, NODAL, VANISHING_TASK)


def run_task(task_name: str, scfg: SolverConfig, progress: bool = False):
    """Builds the model for ``scfg`` and runs one solve; returns (model, field, report)."""
    from solvers import solve_annulus_ground, solve_k_node, solve_least_energy_sign_changing

    em = scfg.build_model()
    opts = scfg.solver_options(progress=progress)
    logger.info(f"Starting task: {task_name} (N={scfg.N}, R={scfg.R:g}, n={scfg.n}, l={scfg.l:g}, mode={scfg.mode})")
    if task_name == GROUND:
        fld, report = solve_annulus_ground(em, (0.0, scfg.R), scfg.sign, opts, mode=scfg.mode)
    elif task_name == NODAL:
        fld, report = solve_k_node(em, scfg.k, scfg.sign, opts, mode=scfg.mode)
    elif task_name == SIGNCHANGE:
        fld, report = solve_least_energy_sign_changing(em, opts, mode=scfg.mode)
    elif task_name == VANISHING_TASK:
        if scfg.mode != VANISHING:
            raise QuasinodalError("The vanishing task needs mode=vanishing")
        fld, report = solve_least_energy_sign_changing(em, opts, mode=VANISHING)
    else:
        raise ValueError(f"Unknown task: {task_name}")
    logger.info(f"Task '{task_name}' finished: I={report.energy:.12g}, converged={report.converged}")
    return em, fld, report


class SweepWorker:
    """Runs one target over a list of (R, n) points with at most ``threads`` solves in flight."""

    def __init__(self, scfg: SolverConfig, target: str = GROUND, threads: int = 1, progress: bool = True):
        if target not in TASKS:
            raise ValueError(f"Unknown sweep target: {target}")
        self.scfg = scfg
        self.target = target
        self.threads = threads
        self.progress = progress

    def run_point(self, R: float, n: int) -> Dict[str, Any]:
        scfg = self.scfg.model_copy(update={'R': float(R), 'n': int(n)})
        row: Dict[str, Any] = {'R': float(R), 'n': int(n), 'h': float(R) / (int(n) + 1)}
        try:
            _, _, report = run_task(self.target, scfg)
            row.update(energy=report.energy, converged=report.converged, el_residual=report.el_residual,
                       iterations=report.iterations, error=None)
        except QuasinodalError as e:
            partial = getattr(e, 'report', None)
            row.update(energy=partial.energy if partial is not None else None, converged=False,
                       el_residual=partial.el_residual if partial is not None else None,
                       iterations=partial.iterations if partial is not None else None,
                       error=f"{type(e).__name__}: {e}")
            logger.error(f"Sweep point R={R:g}, n={n} failed: {e}")
        except Exception as e:
            logger.error(f"Error in sweep point R={R:g}, n={n}: {e}\n{traceback.format_exc()}")
            row.update(energy=None, converged=False, el_residual=None, iterations=None,
                       error=f"{type(e).__name__}: {e}")
        return row

    async def _run_all(self, points: Sequence[Tuple[float, int]]) -> List[Dict[str, Any]]:
        semaphore = asyncio.Semaphore(self.threads)
        bar = tqdm(total=len(points), desc=f'sweep {self.target}', disable=not self.progress)

        async def one(R: float, n: int) -> Dict[str, Any]:
            async with semaphore:
                row = await asyncio.to_thread(self.run_point, R, n)
            bar.update(1)
            return row

        try:
            return list(await asyncio.gather(*(one(R, n) for R, n in points)))
        finally:
            bar.close()

    def run(self, points: Sequence[Tuple[float, int]]) -> List[Dict[str, Any]]:
        """Results come back in the order of ``points``."""
        return asyncio.run(self._run_all(points))


def sweep_points(R_values: Sequence[float], n_values: Sequence[int], base_R: float, base_n: int,
                 fixed_density: bool = True) -> List[Tuple[float, int]]:
    """
    Cartesian (R, n) grid. With fixed density, an R-only sweep scales n so that h stays at its
    base value.
    """
    R_values = list(R_values) or [base_R]
    n_values = list(n_values) or [base_n]
    if len(R_values) < 2 and len(n_values) < 2:
        raise ValueError("A sweep needs at least two values on one axis")
    points = []
    for R in R_values:
        for n in n_values:
            if fixed_density and len(n_values) == 1:
                n = int(round((n + 1) * R / base_R)) - 1
            points.append((float(R), int(n)))
    return points


def spread(rows: Sequence[Dict[str, Any]]) -> Optional[float]:
    """Maximum relative spread of the energies in ``rows``; None if any point failed."""
    energies = [row['energy'] for row in rows]
    if any(e is None for e in energies) or not all(row['converged'] for row in rows):
        return None
    ref = max(abs(e) for e in energies)
    return (max(energies) - min(energies)) / ref if ref else 0.0
