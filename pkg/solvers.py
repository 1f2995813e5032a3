# solvers.py
"""
Ground states, k-node radial solutions and least-energy sign-changing solutions.

Inner problem: Nehari-reprojected descent along the H^1 (Sobolev) gradient with Armijo
backtracking on I, finished by damped Newton on the tridiagonal Euler-Lagrange system.
Outer problem (k-node): cyclic golden-section search over the node radii, each trial being a
pair of annulus ground-state solves.
"""
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from tqdm import tqdm

from errors import (InfeasiblePartition, InnerSolveFailed, MaxItersExceeded, MissingSign, NonConvergence,
                    NotProjectable, SeedConstructionFailed, SeedNotProjectable, TooFewNodes, ZeroField)
from energy import (EnergyModel, nehari_bracket, nehari_residual, project_nehari,
                    project_sign_changing, theta_test)
from model import NONVANISHING, VANISHING
from radial_mesh import Annulus, RadialField, dirichlet_eig_first, grad_sq, l2_norm_sq
from reports import plain
from run_logger import logger
from verification import count_nodes, nodal_domains

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

_PROJECTION_ERRORS = (NotProjectable, ZeroField, MissingSign)


@dataclass
class SolverOptions:
    el_tol: float = 1e-6
    nehari_tol: float = 1e-10
    max_iters: int = 2000
    armijo_c: float = 1e-4
    step0: float = 1.0
    shrink: float = 0.5
    min_step: float = 1e-10
    newton_polish: bool = True
    newton_switch: float = 1e-3
    newton_max_iters: int = 40
    radius_tol: float = 1e-3       # fraction of R
    min_sep_factor: float = 0.05   # min_sep = factor * R / (k + 1)
    max_sweeps: int = 12
    polish_glued: bool = True
    perturbation: float = 0.05
    random_seed: Optional[int] = None
    restarts: int = 0
    progress: bool = False


@dataclass(frozen=True)
class NodalPartition:
    k: int
    radii: Tuple[float, ...] = ()
    min_sep: float = 0.0

    def validate(self, R: float):
        if self.k != len(self.radii):
            raise InfeasiblePartition(f"Partition declares k={self.k} but holds {len(self.radii)} radii")
        bounds = (0.0,) + tuple(self.radii) + (R,)
        gaps = np.diff(bounds)
        if self.k and (self.radii[0] <= 0 or np.any(gaps < self.min_sep - 1e-12 * R)):
            raise InfeasiblePartition(
                f"Radii {self.radii} violate the minimal separation {self.min_sep:.4g} inside (0, {R:g})")

    def bounds(self, R: float) -> Tuple[float, ...]:
        return (0.0,) + tuple(self.radii) + (R,)

    def to_dict(self) -> Dict[str, Any]:
        return {'k': self.k, 'radii': [float(r) for r in self.radii], 'min_sep': float(self.min_sep)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NodalPartition':
        return cls(k=int(data['k']), radii=tuple(data.get('radii', ())), min_sep=float(data.get('min_sep', 0.0)))


@dataclass
class SolveReport:
    kind: str
    energy: float
    nehari_residuals: List[float]
    el_residual: float
    node_count: int
    partition: NodalPartition
    iterations: int
    converged: bool
    grid_meta: Dict[str, Any]
    mode: str = NONVANISHING
    sign: int = 1
    trace: List[Dict[str, Any]] = field(default_factory=list)
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.partition.k

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['partition'] = self.partition.to_dict()
        return plain(data)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolveReport':
        data = dict(data)
        data['partition'] = NodalPartition.from_dict(data['partition'])
        return cls(**data)


def _grid_meta(em: EnergyModel) -> Dict[str, Any]:
    g = em.grid
    return {'N': g.dim, 'R': g.R, 'n': g.n, 'h': g.h}


def _masked_el(em: EnergyModel, grad: np.ndarray, ann: Annulus) -> float:
    sub = grad[ann.sl]
    return float(np.sqrt(np.dot(sub, sub / em.grid.quad_weights[ann.sl])))


def _banded(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, d.size))
    ab[0, 1:] = e
    ab[1, :] = d
    ab[2, :-1] = e
    return ab


@dataclass
class _DescentResult:
    values: np.ndarray
    energy: float
    el: float
    iterations: int
    converged: bool
    trace: List[Dict[str, Any]]


def _newton_polish(em: EnergyModel, v: np.ndarray, ann: Annulus, opts: SolverOptions,
                   accept: Optional[Callable[[np.ndarray], bool]] = None,
                   trace: Optional[List[Dict[str, Any]]] = None) -> Tuple[np.ndarray, float, bool]:
    """Damped Newton on the restricted Euler-Lagrange system; returns (values, el, success)."""
    v = v.copy()
    grad = em.gradient(v)
    el = _masked_el(em, grad, ann)
    for it in range(opts.newton_max_iters):
        if el <= opts.el_tol:
            return v, el, accept is None or accept(v)
        d, e = em.hessian_diagonals(v, ann)
        try:
            delta = solve_banded((1, 1), _banded(d, e), -grad[ann.sl])
        except (np.linalg.LinAlgError, ValueError) as exc:
            logger.warning(f"Newton polish: singular Jacobian ({exc})")
            return v, el, False
        alpha = 1.0
        for _ in range(20):
            cand = v.copy()
            cand[ann.sl] += alpha * delta
            cand_grad = em.gradient(cand)
            cand_el = _masked_el(em, cand_grad, ann)
            if cand_el < el and (accept is None or accept(cand)):
                break
            alpha *= 0.5
        else:
            return v, el, False
        v, grad, el = cand, cand_grad, cand_el
        if trace is not None:
            trace.append({'it': len(trace), 'energy': em.energy(v), 'el': el, 'step': alpha, 'phase': 'newton'})
        logger.debug(f"Newton polish step {it}: el={el:.3e} (alpha={alpha:g})")
    return v, el, el <= opts.el_tol and (accept is None or accept(v))


def _descend(em: EnergyModel, v0: np.ndarray, ann: Annulus, opts: SolverOptions,
             project: Callable[[np.ndarray], np.ndarray],
             constrain: Callable[[np.ndarray], np.ndarray] = lambda x: x,
             accept: Optional[Callable[[np.ndarray], bool]] = None) -> _DescentResult:
    """Projected Sobolev-gradient descent with Armijo backtracking, then Newton polish."""
    w = em.grid.quad_weights[ann.sl]
    d, e = em.grid.stiffness_diagonals(ann.sl)
    ab = np.zeros((2, d.size))
    ab[0, 1:] = e
    ab[1, :] = d + w
    precond = cholesky_banded(ab, lower=False)

    v = v0.copy()
    E = em.energy(v)
    switch = opts.newton_switch
    trace: List[Dict[str, Any]] = []
    converged = False
    el = np.inf
    it = 0
    for it in range(opts.max_iters):
        grad = em.gradient(v)
        el = _masked_el(em, grad, ann)
        if el <= opts.el_tol:
            converged = True
            break
        if opts.newton_polish and el <= switch:
            polished, pel, ok = _newton_polish(em, v, ann, opts, accept, trace)
            if ok:
                v, el, E = polished, pel, em.energy(polished)
                converged = True
                break
            logger.warning(f"Newton polish rejected at el={el:.3e}; continuing descent")
            switch *= 0.1
        p = cho_solve_banded((precond, False), grad[ann.sl])
        slope = float(np.dot(grad[ann.sl], p))
        eta = opts.step0
        floor = 1e-14 * max(1.0, abs(E))
        while eta >= opts.min_step:
            cand = v.copy()
            cand[ann.sl] -= eta * p
            try:
                cand = project(constrain(cand))
            except _PROJECTION_ERRORS:
                eta *= opts.shrink
                continue
            E_c = em.energy(cand)
            if E_c <= E - opts.armijo_c * eta * slope or (
                    opts.armijo_c * eta * slope <= floor and E_c <= E + floor):
                break
            eta *= opts.shrink
        else:
            logger.warning(f"Line search stalled at iteration {it} (el={el:.3e}, I={E:.12g})")
            break
        v, E = cand, E_c
        trace.append({'it': it, 'energy': E, 'el': el, 'step': eta, 'phase': 'descent'})
        logger.debug(f"descent {it}: I={E:.12g} el={el:.3e} step={eta:g}")
    if not converged:
        el = _masked_el(em, em.gradient(v), ann)
        converged = el <= opts.el_tol
    return _DescentResult(v, E, el, it + 1, converged, trace)


def _report(em: EnergyModel, kind: str, values: np.ndarray, el: float, iterations: int,
            converged: bool, partition: NodalPartition, sign: int, mode: str,
            trace: List[Dict[str, Any]], extras: Optional[Dict[str, Any]] = None) -> SolveReport:
    fld = RadialField(em.grid, values)
    return SolveReport(
        kind=kind,
        energy=em.energy(values),
        nehari_residuals=domain_residuals(em, fld),
        el_residual=el,
        node_count=count_nodes(fld) if not fld.is_zero() else 0,
        partition=partition,
        iterations=iterations,
        converged=converged,
        grid_meta=_grid_meta(em),
        mode=mode,
        sign=sign,
        trace=trace,
        extras=extras or {},
    )


def domain_residuals(em: EnergyModel, w: RadialField) -> List[float]:
    """Relative Nehari residuals of every nodal domain of w."""
    grad = em.gradient(w.values)
    out = []
    for part in nodal_domains(w):
        out.append(abs(float(np.dot(grad, part.values))) / max(1.0, grad_sq(part)))
    return out


def solve_annulus_ground(em: EnergyModel, annulus: Tuple[float, float], sign: int = 1,
                         opts: Optional[SolverOptions] = None, seed: Optional[RadialField] = None,
                         raise_on_max_iters: bool = True, mode: str = NONVANISHING
                         ) -> Tuple[RadialField, SolveReport]:
    """Least-energy one-signed solution of the Dirichlet problem on Omega(rho, sigma)."""
    opts = opts or SolverOptions()
    sign = 1 if sign >= 0 else -1
    grid = em.grid
    ann = grid.annulus(*annulus)
    mask = grid.mask(ann)
    extras: Dict[str, Any] = {'annulus': [ann.rho, ann.sigma]}
    if seed is None:
        lam, eig = dirichlet_eig_first(grid, (ann.rho, ann.sigma))
        start = sign * eig.values
        extras['seed'] = 'eigenfunction'
        extras['seed_eigenvalue'] = lam
    else:
        grid.check(seed.grid)
        start = np.where(mask, seed.values, 0.0)
        start = np.maximum(sign * start, 0.0) * sign
        extras['seed'] = 'supplied'
    start_field = RadialField(grid, start)
    if start_field.is_zero() or not theta_test(em, start_field):
        raise SeedNotProjectable(
            f"Seed on ({ann.rho:.6g}, {ann.sigma:.6g}) is not projectable: its Rayleigh quotient "
            f"is not below l={em.nl.l:g}")
    try:
        _, projected = project_nehari(em, start_field, opts.nehari_tol)
    except NotProjectable as e:
        raise SeedNotProjectable(str(e))

    def constrain(x: np.ndarray) -> np.ndarray:
        return np.where(mask, np.maximum(sign * x, 0.0) * sign, 0.0)

    def project(x: np.ndarray) -> np.ndarray:
        return project_nehari(em, RadialField(grid, x), opts.nehari_tol)[1].values

    def accept(x: np.ndarray) -> bool:
        return bool(np.all(sign * x[ann.sl] >= 0.0))

    res = _descend(em, projected.values, ann, opts, project, constrain, accept)
    report = _report(em, 'annulus_ground', res.values, res.el, res.iterations, res.converged,
                     NodalPartition(0, (), 0.0), sign, mode, res.trace, extras)
    fld = RadialField(grid, res.values)
    if report.energy <= 0:
        logger.warning(f"Annulus ground state on ({ann.rho:.4g}, {ann.sigma:.4g}) has nonpositive energy {report.energy:.6g}")
    logger.info(f"Annulus ({ann.rho:.4g}, {ann.sigma:.4g}) sign {sign:+d}: I={report.energy:.10g}, "
                f"el={report.el_residual:.2e}, iterations={report.iterations}, converged={report.converged}")
    if not report.converged and raise_on_max_iters:
        raise MaxItersExceeded(
            f"Annulus solve on ({ann.rho:.4g}, {ann.sigma:.4g}) stopped at el={report.el_residual:.3e}",
            field=fld, report=report)
    return fld, report


def golden_section_minimize(func: Callable[[float], float], a: float, b: float,
                            tol: float) -> Tuple[float, float]:
    """Golden-section search on [a, b]; returns the best point evaluated and its value."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, func(x)
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = func(c)
    yd = func(d)
    best = (c, yc) if yc <= yd else (d, yd)
    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = func(c)
            if yc < best[1]:
                best = (c, yc)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = func(d)
            if yd < best[1]:
                best = (d, yd)
    return best


def _remap(values: np.ndarray, nodes: np.ndarray, old: Tuple[float, float], new: Tuple[float, float]) -> np.ndarray:
    """Stretches a profile supported on ``old`` onto ``new``."""
    (a0, b0), (a1, b1) = old, new
    x = a0 + (nodes - a1) * (b0 - a0) / (b1 - a1)
    inside = (nodes > a1) & (nodes < b1)
    xp = np.concatenate([[a0], nodes[(nodes > a0) & (nodes < b0)], [b0]])
    fp = np.concatenate([[0.0], values[(nodes > a0) & (nodes < b0)], [0.0]])
    if a0 == 0.0:
        fp[0] = fp[1] if fp.size > 1 else 0.0
    return np.where(inside, np.interp(x, xp, fp), 0.0)


class _AnnulusCache:
    """Annulus ground states keyed by snapped node indices and sign; warm-starts per slot."""

    def __init__(self, em: EnergyModel, opts: SolverOptions, mode: str):
        self.em = em
        self.opts = opts
        self.mode = mode
        self.store: Dict[Tuple[int, int, int], Optional[Tuple[RadialField, SolveReport]]] = {}
        self.warm: Dict[int, Tuple[np.ndarray, Tuple[float, float]]] = {}

    def solve(self, slot: int, rho: float, sigma: float, sign: int):
        grid = self.em.grid
        try:
            ann = grid.annulus(rho, sigma)
        except TooFewNodes:
            return None
        key = (ann.lo, ann.hi, sign)
        if key in self.store:
            return self.store[key]
        result = None
        seeds = []
        if slot in self.warm:
            vals, span = self.warm[slot]
            seeds.append(RadialField(grid, _remap(vals, grid.nodes, span, (ann.rho, ann.sigma))))
        seeds.append(None)
        for seed in seeds:
            try:
                result = solve_annulus_ground(self.em, (ann.rho, ann.sigma), sign, self.opts, seed=seed,
                                              raise_on_max_iters=False, mode=self.mode)
                break
            except (NonConvergence, SeedNotProjectable):
                continue
        if result is not None:
            self.warm[slot] = (result[0].values, (ann.rho, ann.sigma))
        self.store[key] = result
        return result

    def energy(self, slot: int, rho: float, sigma: float, sign: int) -> float:
        result = self.solve(slot, rho, sigma, sign)
        return np.inf if result is None else result[1].energy


def solve_k_node(em: EnergyModel, k: int, sign: int = 1, opts: Optional[SolverOptions] = None,
                 mode: str = NONVANISHING) -> Tuple[RadialField, SolveReport]:
    """Radial solution with exactly k nodes, glued from alternating-sign annulus ground states."""
    opts = opts or SolverOptions()
    sign = 1 if sign >= 0 else -1
    if k < 0:
        raise InfeasiblePartition(f"k must be nonnegative, got {k}")
    grid = em.grid
    R = grid.R
    if k == 0:
        fld, rep = solve_annulus_ground(em, (0.0, R), sign, opts, mode=mode)
        rep.kind = 'k_node'
        return fld, rep

    min_sep = opts.min_sep_factor * R / (k + 1)
    tol_r = max(opts.radius_tol * R, grid.h)
    radii = [round(R * j / (k + 1) / grid.h) * grid.h for j in range(1, k + 1)]
    NodalPartition(k, tuple(radii), min_sep).validate(R)
    signs = [sign * (-1) ** j for j in range(k + 1)]
    cache = _AnnulusCache(em, opts, mode)

    bounds = [0.0] + radii + [R]
    for j in range(k + 1):
        if cache.solve(j, bounds[j], bounds[j + 1], signs[j]) is None:
            raise InnerSolveFailed(
                f"Initial annulus ({bounds[j]:.4g}, {bounds[j + 1]:.4g}) admits no ground state",
                annulus=(bounds[j], bounds[j + 1]))

    def total(bnds: List[float]) -> float:
        return sum(cache.energy(j, bnds[j], bnds[j + 1], signs[j]) for j in range(k + 1))

    trace = [{'sweep': 0, 'energy': total(bounds), 'radii': list(radii)}]
    sweeps = 0
    for sweep in tqdm(range(1, opts.max_sweeps + 1), desc=f'k={k} sweeps', disable=not opts.progress):
        sweeps = sweep
        moved = 0.0
        for j in range(k):
            left, right = bounds[j], bounds[j + 2]
            a, b = left + min_sep, right - min_sep
            if b - a <= tol_r:
                continue

            def objective(x: float, j=j, left=left, right=right) -> float:
                x = round(x / grid.h) * grid.h
                return (cache.energy(j, left, x, signs[j])
                        + cache.energy(j + 1, x, right, signs[j + 1]))

            current = objective(bounds[j + 1])
            x_best, f_best = golden_section_minimize(objective, a, b, tol_r)
            x_best = round(x_best / grid.h) * grid.h
            if f_best < current:
                moved = max(moved, abs(x_best - bounds[j + 1]))
                bounds[j + 1] = x_best
        energy = total(bounds)
        trace.append({'sweep': sweep, 'energy': energy, 'radii': list(bounds[1:-1])})
        logger.info(f"k={k} sweep {sweep}: total I={energy:.10g}, max radius move {moved:.3g}")
        if moved < tol_r:
            break

    parts = [cache.solve(j, bounds[j], bounds[j + 1], signs[j]) for j in range(k + 1)]
    if any(p is None for p in parts):
        raise InnerSolveFailed("An annulus of the final partition has no ground state")
    glued = np.sum([p[0].values for p in parts], axis=0)
    glued_energy = float(sum(p[1].energy for p in parts))
    inner_el = max(p[1].el_residual for p in parts)
    whole = grid.whole()
    glued_el = _masked_el(em, em.gradient(glued), whole)
    partition = NodalPartition(k, tuple(bounds[1:-1]), min_sep)
    extras: Dict[str, Any] = {
        'glued_energy': glued_energy,
        'annulus_energies': [p[1].energy for p in parts],
        'annulus_el_residuals': [p[1].el_residual for p in parts],
        'glued_el_residual': glued_el,
        'sweeps': sweeps,
        'polished': False,
    }
    values, el = glued, inner_el
    converged = all(p[1].converged for p in parts)
    if opts.polish_glued:
        polish_trace: List[Dict[str, Any]] = []
        polished, pel, ok = _newton_polish(
            em, glued, whole, opts, lambda x: count_nodes(RadialField(grid, x)) == k, polish_trace)
        if ok and abs(em.energy(polished) - glued_energy) <= 1e-2 * abs(glued_energy):
            values, el = polished, pel
            extras['polished'] = True
            extras['polished_nodes'] = node_radii(RadialField(grid, polished))
        else:
            logger.warning(f"Glued {k}-node profile kept unpolished (Newton ok={ok}, el={pel:.3e})")
    report = _report(em, 'k_node', values, el, sum(p[1].iterations for p in parts), converged,
                     partition, sign, mode, trace, extras)
    if report.node_count != k:
        logger.warning(f"Glued profile has {report.node_count} sign changes, expected {k}")
        report.converged = False
    if not extras['polished']:
        report.energy = glued_energy
    return RadialField(grid, values), report


def node_radii(fld: RadialField) -> List[float]:
    """Linear-interpolated zero crossings between opposite-sign neighbours."""
    v = fld.values
    r = fld.grid.nodes
    out = []
    for i in np.nonzero(v[:-1] * v[1:] < 0)[0]:
        out.append(float(r[i] - v[i] * (r[i + 1] - r[i]) / (v[i + 1] - v[i])))
    return out


def subdomain_seed(em: EnergyModel, opts: SolverOptions) -> Tuple[RadialField, Dict[str, Any]]:
    """
    s0 v1 - t0 v2 from the first Dirichlet eigenfunctions of two zero-set subdomains, with
    s0, t0 chosen so that each part lies on its Nehari set.
    """
    subs = list(em.pot.subdomains)
    if len(subs) < 2:
        raise SeedConstructionFailed("Vanishing mode needs two zero-set subdomains")
    info: Dict[str, Any] = {'subdomains': [list(s) for s in subs[:2]], 'mu': [], 'scalars': [], 'brackets': []}
    seed = np.zeros(em.grid.n)
    for i, sub in enumerate(subs[:2]):
        try:
            mu, eig = dirichlet_eig_first(em.grid, sub)
        except TooFewNodes as e:
            raise SeedConstructionFailed(f"Subdomain {sub} is under-resolved: {e}", subdomain=tuple(sub))
        info['mu'].append(mu)
        part = eig if i == 0 else -eig
        try:
            bracket = nehari_bracket(em, part)
            s, _ = project_nehari(em, part, opts.nehari_tol)
        except NotProjectable as e:
            raise SeedConstructionFailed(
                f"No root of psi on subdomain {tuple(sub)} (mu={mu:.6g}, l={em.nl.l:g}): {e}",
                subdomain=tuple(sub), mu=mu, l=em.nl.l)
        info['brackets'].append(bracket.to_dict())
        info['scalars'].append(s)
        seed += s * part.values
    logger.info(f"Seed scalars s0={info['scalars'][0]:.6g}, t0={info['scalars'][1]:.6g} "
                f"(mu={', '.join(f'{m:.6g}' for m in info['mu'])})")
    return RadialField(em.grid, seed), info


def _solve_direct(em: EnergyModel, seed: RadialField, opts: SolverOptions, mode: str,
                  label: str) -> Tuple[RadialField, SolveReport]:
    grid = em.grid
    whole = grid.whole()
    _, _, start = project_sign_changing(em, seed, opts.nehari_tol)

    def project(x: np.ndarray) -> np.ndarray:
        return project_sign_changing(em, RadialField(grid, x), opts.nehari_tol)[2].values

    def accept(x: np.ndarray) -> bool:
        return count_nodes(RadialField(grid, x)) == 1

    res = _descend(em, start.values, whole, opts, project, accept=accept)
    fld = RadialField(grid, res.values)
    parts = [fld.positive_part(), fld.negative_part()]
    norms = [math.sqrt(grad_sq(p) + float(np.dot(grid.quad_weights, em.V * p.values ** 2))) for p in parts]
    report = _report(em, 'sign_changing', res.values, res.el, res.iterations, res.converged,
                     NodalPartition(1, tuple(node_radii(fld)[:1]), 0.0), 1, mode, res.trace,
                     {'path': label, 'part_norms': norms,
                      'nehari_split_residuals': nehari_residual(em, fld)})
    if report.node_count != 1:
        logger.warning(f"Direct path ({label}) ended with {report.node_count} sign changes")
        report.converged = False
    return fld, report


def _perturb(seed: RadialField, amplitude: float, rng: Optional[np.random.Generator] = None) -> RadialField:
    r = seed.grid.nodes / seed.grid.R
    if rng is None:
        factor = 1.0 + amplitude * np.cos(np.pi * r)
    else:
        coeffs = rng.normal(size=6)
        modes = np.cos(np.pi * np.outer(np.arange(1, 7), r))
        factor = 1.0 + amplitude * (coeffs @ modes) / np.abs(coeffs).sum()
    return seed.with_values(seed.values * factor)


def solve_least_energy_sign_changing(em: EnergyModel, opts: Optional[SolverOptions] = None,
                                     mode: str = NONVANISHING) -> Tuple[RadialField, SolveReport]:
    """
    Least-energy sign-changing solution via two independent paths: the 1-node construction and
    direct descent on the sign-changing Nehari set; the lower converged energy is reported.
    """
    opts = opts or SolverOptions()
    seed_info: Dict[str, Any] = {}
    seeded = None
    if mode == VANISHING:
        seeded, seed_info = subdomain_seed(em, opts)

    nodal = None
    try:
        nodal = solve_k_node(em, 1, 1, opts, mode=mode)
    except (InnerSolveFailed, InfeasiblePartition, MaxItersExceeded, NonConvergence, SeedNotProjectable,
            TooFewNodes) as e:
        logger.warning(f"Nodal path failed: {e}")

    candidates: List[Tuple[RadialField, SolveReport]] = []
    if nodal is not None:
        candidates.append(nodal)
    seeds: List[Tuple[str, RadialField]] = []
    if seeded is not None:
        seeds.append(('direct:seeded', seeded))
    if nodal is not None:
        seeds.append(('direct:perturbed', _perturb(nodal[0], opts.perturbation)))
    if opts.restarts and seeds:
        rng = np.random.default_rng(opts.random_seed)
        base = seeds[0][1]
        for i in range(opts.restarts):
            seeds.append((f'direct:restart{i}', _perturb(base, opts.perturbation, rng)))
    if not seeds:
        raise InnerSolveFailed("No seed available for the sign-changing solve")

    direct = []
    for label, seed in seeds:
        try:
            result = _solve_direct(em, seed, opts, mode, label)
        except _PROJECTION_ERRORS as e:
            logger.warning(f"{label}: seed not projectable onto the sign-changing Nehari set ({e})")
            continue
        direct.append(result)
        candidates.append(result)

    converged = [c for c in candidates if c[1].converged]
    pool = converged or candidates
    if not pool:
        raise InnerSolveFailed("Neither the nodal nor the direct path produced a solution")
    best_field, best = min(pool, key=lambda c: c[1].energy)

    report = replace(best, kind='sign_changing', extras=dict(best.extras))
    report.extras.update({
        'nodal_energy': nodal[1].energy if nodal is not None else None,
        'nodal_converged': nodal[1].converged if nodal is not None else None,
        'direct_energies': [d[1].energy for d in direct],
        'direct_converged': [d[1].converged for d in direct],
        'random_seed': opts.random_seed,
        'selected': best.extras.get('path', 'nodal'),
        'theta_generalized': em.theta_generalized,
    })
    if nodal is not None and direct:
        report.extras['path_gap'] = abs(nodal[1].energy - direct[0][1].energy) / abs(nodal[1].energy)
    if seed_info:
        report.extras['seed'] = seed_info
    if not converged:
        raise MaxItersExceeded("No path converged for the sign-changing solve", field=best_field, report=report)
    return best_field, report
