# verification.py
"""
Property suites over the transform, the model, the discretization and finished solves.

Every suite is deterministic and returns a PropertyReport; property failures are report entries,
never exceptions. Strict inequalities are checked with a 1e-12 margin and the worst margin is
recorded so a tightening can be judged from the data.
"""
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from dual_transform import SQRT2, TWO_QUARTER, DualTransform
from errors import MissingBaseline, ZeroField
from model import (BUILTIN, NONVANISHING, G_eval, Nonlinearity, Potential, check_samples, g_eval,
                   validate_hypotheses)
from radial_mesh import RadialField, dirichlet_eig_first, local_grid
from reports import PropertyReport
from run_logger import logger

if TYPE_CHECKING:
    from energy import EnergyModel
    from solvers import SolveReport

MARGIN = 1e-12
NODE_THRESHOLD = 1e-8


def transform_samples(per_sign: int = 10_000) -> np.ndarray:
    pos = np.logspace(-8, 8, per_sign)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _worst(values: np.ndarray) -> float:
    return float(np.min(values)) if values.size else 0.0


def run_transform_suite(trans: Optional[DualTransform] = None, samples=None) -> PropertyReport:
    trans = trans or DualTransform()
    report = PropertyReport('transform', meta={'transform': trans.name, 'newton_tol': trans.newton_tol})
    names = ['odd', 'f_prime_bounds', 'growth_bounds', 'small_t_ratio', 'sqrt_asymptote',
             'tff_sandwich', 'monotone_ratios', 'lower_bound_witness', 'ff_prime_bound',
             'prime_asymptote', 'round_trip']
    t = np.asarray(transform_samples() if samples is None else samples, dtype=float).ravel()
    if t.size == 0:
        for name in names:
            report.skip(name, 'empty sample set')
        return report
    t = check_samples(t)
    a = np.abs(t)
    f = np.asarray(trans.f_forward(t))
    fp = np.asarray(trans.f_prime(t))
    fa = np.abs(f)
    report.meta['samples'] = int(t.size)

    report.add('odd', bool(np.array_equal(np.asarray(trans.f_forward(-t)), -f)) and trans.f_forward(0.0) == 0.0,
               samples=t.size)
    report.add('f_prime_bounds', bool(np.all(fp > 0)) and _worst(1.0 - fp) >= -MARGIN,
               margin=min(_worst(fp), _worst(1.0 - fp)), samples=t.size)

    scale = np.maximum(1.0, a)
    growth = np.minimum((a - fa) / scale, (TWO_QUARTER * np.sqrt(a) - fa) / scale)
    report.add('growth_bounds', _worst(growth) >= -MARGIN, margin=_worst(growth), samples=t.size)

    tiny = 1e-8
    err = abs(trans.f_forward(tiny) / tiny - 1.0)
    report.add('small_t_ratio', err <= 1e-6, margin=1e-6 - err, samples=1, note='f(t)/t at t=1e-8')
    big = 1e8
    err = abs(trans.f_forward(big) / np.sqrt(big) - TWO_QUARTER)
    report.add('sqrt_asymptote', err <= 1e-3, margin=1e-3 - err, samples=1, note='f(t)/sqrt(t) at t=1e8')

    nz = t != 0
    tff = t[nz] * fp[nz] * f[nz]
    f2 = f[nz] ** 2
    rel = np.maximum(f2, np.finfo(float).tiny)
    sandwich = np.minimum((f2 - tff) / rel, (tff - 0.5 * f2) / rel)
    report.add('tff_sandwich', _worst(sandwich) >= -MARGIN, margin=_worst(sandwich), samples=int(nz.sum()))

    pos = t > 0
    tp, fpos, fppos = t[pos], f[pos], fp[pos]
    if tp.size > 1:
        dec = fpos * fppos / tp
        inc = fpos ** 3 * fppos / tp
        m1 = _worst(-np.diff(dec) / dec[:-1])
        m2 = _worst(np.diff(inc) / inc[:-1])
        report.add('monotone_ratios', min(m1, m2) >= -MARGIN, margin=min(m1, m2), samples=int(tp.size),
                   note='f f\'/t non-increasing, f^3 f\'/t non-decreasing')
    else:
        report.skip('monotone_ratios', 'needs two positive samples')

    C = trans.f_forward(1.0)
    bound = np.where(a <= 1.0, C * a, C * np.sqrt(a))
    witness = (fa - bound) / scale
    report.add('lower_bound_witness', _worst(witness) >= -MARGIN, margin=_worst(witness), samples=t.size,
               note=f'C = f(1) = {C:.12g}')

    ffp = 1.0 / SQRT2 - np.abs(f * fp)
    report.add('ff_prime_bound', _worst(ffp) >= -MARGIN, margin=_worst(ffp), samples=t.size)

    err = abs(trans.f_prime(big) * np.sqrt(big) - 2.0 ** -0.75)
    report.add('prime_asymptote', err <= 1e-3, margin=1e-3 - err, samples=1, note="f'(t) sqrt(t) at t=1e8")

    back = np.asarray(trans.f_inverse_closed_form(f))
    trip = 1e-10 - np.abs(back - t) / scale
    report.add('round_trip', _worst(trip) >= 0, margin=_worst(trip), samples=t.size)
    logger.info(f"Transform suite: {'pass' if report.passed else 'FAIL ' + ', '.join(report.failures)}")
    return report


def run_model_suite(nl: Nonlinearity, pot: Potential, mode: str = NONVANISHING, samples=None,
                    dim: int = 3, n_local: int = 4096) -> PropertyReport:
    """The hypothesis audit plus closed-form oracles for the builtin nonlinearity."""
    hyp = validate_hypotheses(nl, pot, mode, samples, dim=dim, n_local=n_local)
    report = PropertyReport('model', checks=list(hyp.checks), meta=dict(hyp.meta))
    t = check_samples(samples if samples is not None else np.linspace(-1e3, 1e3, 2001))

    if nl.kind == BUILTIN:
        nz = t != 0
        gap = nl.l - np.atleast_1d(g_eval(nl, t[nz])) / t[nz] ** 3
        expected = nl.l / (1.0 + t[nz] ** 2)
        # the gap cancels for large |t|, so compare on the scale of l
        err = float(np.max(np.abs(gap - expected))) if gap.size else 0.0
        report.add('ratio_gap_closed_form', err <= 1e-10 * nl.l, margin=1e-10 * nl.l - err, samples=int(gap.size),
                   note='l - g(t)/t^3 = l/(1+t^2)')
    else:
        report.skip('ratio_gap_closed_form', 'builtin nonlinearity only')

    points = np.concatenate([-np.logspace(-3, 3, 13)[::-1], np.logspace(-3, 3, 13)])
    worst = 0.0
    for x in points:
        val, _ = quad(lambda s: g_eval(nl, s), 0.0, x, epsabs=0.0, epsrel=1e-13, limit=200)
        closed = G_eval(nl, x)
        worst = max(worst, abs(closed - val) / max(abs(val), np.finfo(float).tiny))
    report.add('primitive_matches_quadrature', worst <= 1e-10, margin=1e-10 - worst, samples=points.size)
    logger.info(f"Model suite ({nl.kind}, l={nl.l:g}, {mode}): "
                f"{'pass' if report.passed else 'FAIL ' + ', '.join(report.failures)}")
    return report


def run_eigen_suite(dim: int = 3, n_local: int = 4096, levels: Sequence[int] = (128, 256, 512)) -> PropertyReport:
    """First Dirichlet eigenvalues against (pi / width)^2 in three dimensions, plus the observed order."""
    report = PropertyReport('eigen', meta={'dim': dim, 'n_local': n_local})
    if dim != 3:
        for name in ('ball_quarter', 'annulus_third_half', 'convergence_order'):
            report.skip(name, 'closed-form oracles exist for N=3 only')
        return report
    cases = {'ball_quarter': (0.0, 0.25), 'annulus_third_half': (1.0 / 3.0, 0.5)}
    for name, (rho, sigma) in cases.items():
        exact = (np.pi / (sigma - rho)) ** 2
        lam, _ = dirichlet_eig_first(local_grid(dim, rho, sigma, n_local), (rho, sigma))
        err = abs(lam - exact) / exact
        report.meta[name] = float(lam)
        report.add(name, err <= 1e-4, margin=1e-4 - err, samples=1, note=f'exact {exact:.10g}')

    rho, sigma = cases['annulus_third_half']
    exact = (np.pi / (sigma - rho)) ** 2
    errors = []
    for m in levels:
        lam, _ = dirichlet_eig_first(local_grid(dim, rho, sigma, m), (rho, sigma))
        errors.append(abs(lam - exact))
    factors = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
    report.meta['convergence_factors'] = factors
    ok = all(3.5 <= fac <= 4.5 for fac in factors)
    report.add('convergence_order', ok, margin=min(min(fac - 3.5, 4.5 - fac) for fac in factors),
               samples=len(levels), note=', '.join(f'{fac:.3f}' for fac in factors))
    return report


def _smooth_field(grid, rng: np.random.Generator) -> np.ndarray:
    r = grid.nodes / grid.R
    coeffs = rng.normal(size=4)
    modes = np.cos(np.pi * np.outer(np.arange(4) + 0.5, r))
    return rng.uniform(0.5, 2.0) * np.exp(-(r * rng.uniform(2.0, 6.0)) ** 2) * (1.0 + 0.3 * (coeffs @ modes))


def run_gradient_suite(em: 'EnergyModel', n_fields: int = 10, eps: float = 1e-5, seed: int = 0,
                       rel_tol: float = 1e-6) -> PropertyReport:
    """Discrete gradient against central differences of I along random smooth directions."""
    rng = np.random.default_rng(seed)
    report = PropertyReport('gradient', meta={'seed': seed, 'eps': eps, 'grid': list(em.grid.key)})
    worst = 0.0
    for _ in range(n_fields):
        v = _smooth_field(em.grid, rng)
        d = _smooth_field(em.grid, rng)
        analytic = float(np.dot(em.gradient(v), d))
        fd = (em.energy(v + eps * d) - em.energy(v - eps * d)) / (2.0 * eps)
        worst = max(worst, abs(fd - analytic) / max(1.0, abs(analytic)))
    report.add('gradient_consistency', worst <= rel_tol, margin=rel_tol - worst, samples=n_fields)
    return report


def _thresholded_signs(fld: RadialField) -> np.ndarray:
    if fld.is_zero():
        raise ZeroField("Node counting needs a nonzero field")
    v = fld.values
    s = np.sign(v)
    s[np.abs(v) < NODE_THRESHOLD * np.max(np.abs(v))] = 0
    return s


def count_nodes(fld: RadialField) -> int:
    """Sign changes of the profile, ignoring entries below 1e-8 max|u|."""
    s = _thresholded_signs(fld)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def nodal_domains(fld: RadialField) -> List[RadialField]:
    """Splits the field into its consecutive one-signed pieces (small entries join the current piece)."""
    s = _thresholded_signs(fld)
    v = fld.values
    cuts = [0]
    current = 0
    for i, si in enumerate(s):
        if si == 0:
            continue
        if current and si != current:
            cuts.append(i)
        current = si
    cuts.append(v.size)
    parts = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        vals = np.zeros_like(v)
        vals[a:b] = v[a:b]
        if np.any(vals):
            parts.append(fld.with_values(vals))
    return parts


def compare_energies(reports: Sequence['SolveReport'], tol: float = 1e-2) -> PropertyReport:
    """Energy ordering across runs: c_k >= (k+1) d, c >= 2 d and c_k increasing in k."""
    base = [r for r in reports if r.kind in ('annulus_ground', 'k_node') and r.partition.k == 0]
    if not base:
        raise MissingBaseline("Energy comparison needs a k=0 (ground state) report")
    d = min(r.energy for r in base)
    report = PropertyReport('energies', meta={'d': d, 'tol': tol})
    report.add('ground_positive', d > 0, margin=d, samples=len(base))

    by_sign: Dict[int, Dict[int, float]] = {}
    for r in reports:
        if r.kind == 'k_node' and r.partition.k >= 1:
            k = r.partition.k
            bound = (k + 1) * d * (1.0 - tol)
            report.add(f'c{k}_{"+" if r.sign > 0 else "-"}_above_{k + 1}d', r.energy >= bound,
                       margin=(r.energy - bound) / d, samples=1)
            by_sign.setdefault(r.sign, {})[k] = min(r.energy, by_sign.get(r.sign, {}).get(k, np.inf))
        elif r.kind == 'sign_changing':
            bound = 2.0 * d * (1.0 - tol)
            report.add('c_above_2d', r.energy >= bound, margin=(r.energy - bound) / d, samples=1)
            norms = r.extras.get('part_norms')
            if norms:
                report.meta['min_part_norm'] = min(float(x) for x in norms)
                report.add('signed_parts_nonzero', min(norms) > 0, margin=min(norms), samples=2)
            nodal = r.extras.get('nodal_energy')
            if nodal is not None:
                report.meta['c_vs_c1_gap'] = (nodal - r.energy) / r.energy

    for sign, levels in sorted(by_sign.items()):
        ks = sorted(levels)
        energies = [d] + [levels[k] for k in ks]
        if ks != list(range(1, len(ks) + 1)):
            logger.warning(f"k-node levels {ks} are not consecutive; monotonicity checked on the given ones")
        steps = np.diff(energies)
        report.add(f'c_k_increasing_{"+" if sign > 0 else "-"}', bool(np.all(steps > 0)),
                   margin=float(steps.min()) / d, samples=len(energies))
    return report
