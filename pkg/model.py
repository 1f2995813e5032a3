# model.py
"""
Nonlinearity and radial potential families, plus a sampled audit of the standing hypotheses
(growth, monotonicity of g(t)/t^3, the Ambrosetti-Rabinowitz type inequality, and the
eigenvalue threshold required in the vanishing-potential setting).

The audit is evidence on explicit grids and large-t proxies, not a proof.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from errors import InvalidSampleSpec
from reports import HypothesisReport
from run_logger import logger

BUILTIN = 'builtin_asymptotic'
SEMILINEAR = 'semilinear_diagnostic'
CUSTOM = 'custom'

CONSTANT = 'constant'
REMARK13 = 'remark13_piecewise'
CUSTOM_RADIAL = 'custom_radial'

NONVANISHING = 'nonvanishing'
VANISHING = 'vanishing'

# Growth exponents recorded in the audit: p in (2, 2*) and q in (4, 2*2*) for N = 3.
DEFAULT_P = 3.0
DEFAULT_Q = 6.0

# Below this |t| the primitive of the builtin g is summed as a series to avoid cancellation.
_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 12

StrictTol = 1e-12


@dataclass(frozen=True)
class Nonlinearity:
    kind: str = BUILTIN
    l: float = 1.0
    g_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    G_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    g_prime_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in (BUILTIN, SEMILINEAR, CUSTOM):
            raise ValueError(f"Unknown nonlinearity kind '{self.kind}'")
        if self.l <= 0:
            raise ValueError(f"Asymptote l must be positive, got {self.l}")
        if self.kind == CUSTOM and (self.g_fn is None or self.G_fn is None or self.g_prime_fn is None):
            raise ValueError("Custom nonlinearities must supply g, G and g' evaluators")
        if self.kind == SEMILINEAR and self.l != 1.0:
            raise ValueError("The semilinear diagnostic g(t) = t^3 has asymptote l = 1")

    @classmethod
    def builtin(cls, l: float = 1.0) -> 'Nonlinearity':
        return cls(kind=BUILTIN, l=l)

    @classmethod
    def semilinear(cls) -> 'Nonlinearity':
        return cls(kind=SEMILINEAR, l=1.0)

    @classmethod
    def custom(cls, g, G, g_prime, l: float) -> 'Nonlinearity':
        return cls(kind=CUSTOM, l=l, g_fn=g, G_fn=G, g_prime_fn=g_prime)


def g_eval(nl: Nonlinearity, t):
    t = np.asarray(t, dtype=float)
    if nl.kind == BUILTIN:
        t2 = t * t
        out = nl.l * t2 * t2 * t / (1.0 + t2)
    elif nl.kind == SEMILINEAR:
        out = t ** 3
    else:
        out = np.asarray(nl.g_fn(t), dtype=float)
    return float(out) if out.ndim == 0 else out


def G_eval(nl: Nonlinearity, t):
    t = np.asarray(t, dtype=float)
    if nl.kind == BUILTIN:
        t2 = t * t
        closed = 0.25 * t2 * t2 - 0.5 * t2 + 0.5 * np.log1p(t2)
        # l * sum_j (-1)^j t^(6+2j) / (6+2j), accurate where the closed form cancels
        series = np.zeros_like(t2)
        power = t2 ** 3
        for j in range(_SERIES_TERMS):
            series = series + (-1) ** j * power / (6 + 2 * j)
            power = power * t2
        out = nl.l * np.where(np.abs(t) < _SERIES_CUTOFF, series, closed)
    elif nl.kind == SEMILINEAR:
        out = 0.25 * t ** 4
    else:
        out = np.asarray(nl.G_fn(t), dtype=float)
    return float(out) if out.ndim == 0 else out


def g_prime_eval(nl: Nonlinearity, t):
    t = np.asarray(t, dtype=float)
    if nl.kind == BUILTIN:
        t2 = t * t
        out = nl.l * t2 * t2 * (5.0 + 3.0 * t2) / (1.0 + t2) ** 2
    elif nl.kind == SEMILINEAR:
        out = 3.0 * t * t
    else:
        out = np.asarray(nl.g_prime_fn(t), dtype=float)
    return float(out) if out.ndim == 0 else out


def _remark13(r: np.ndarray) -> np.ndarray:
    return np.where(r <= 1.0, 0.0, np.where(r <= 2.0, (r - 1.0) ** 2, 1.0))


@dataclass(frozen=True)
class Potential:
    kind: str = CONSTANT
    v0: float = 1.0
    fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # Radial subdomains (rho, sigma) of the zero set {V = 0}; used in vanishing mode.
    subdomains: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in (CONSTANT, REMARK13, CUSTOM_RADIAL):
            raise ValueError(f"Unknown potential kind '{self.kind}'")
        if self.kind == CONSTANT and self.v0 < 0:
            raise ValueError("Constant potential must be nonnegative")
        if self.kind == CUSTOM_RADIAL and self.fn is None:
            raise ValueError("custom_radial potential needs an evaluator")
        if self.kind == REMARK13 and not self.subdomains:
            object.__setattr__(self, 'subdomains', ((0.0, 0.25), (1.0 / 3.0, 0.5)))

    @classmethod
    def constant(cls, v0: float = 1.0) -> 'Potential':
        return cls(kind=CONSTANT, v0=v0)

    @classmethod
    def remark13(cls) -> 'Potential':
        return cls(kind=REMARK13)

    @classmethod
    def custom(cls, fn, subdomains: Sequence[Tuple[float, float]] = ()) -> 'Potential':
        return cls(kind=CUSTOM_RADIAL, fn=fn, subdomains=tuple(tuple(s) for s in subdomains))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == CONSTANT:
            out = np.full_like(r, self.v0)
        elif self.kind == REMARK13:
            out = _remark13(r)
        else:
            out = np.asarray(self.fn(r), dtype=float) * np.ones_like(r)
        return float(out) if out.ndim == 0 else out


def default_samples() -> np.ndarray:
    pos = np.logspace(-4, 3, 2001)
    return np.concatenate([-pos[::-1], [0.0], pos])


def check_samples(samples) -> np.ndarray:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InvalidSampleSpec("Sample grid is empty")
    if not np.all(np.isfinite(samples)):
        raise InvalidSampleSpec("Sample grid contains non-finite values")
    srt = np.sort(samples)
    if not np.allclose(srt, -srt[::-1], rtol=0.0, atol=1e-15 * max(1.0, float(np.max(np.abs(srt))))):
        raise InvalidSampleSpec("Sample grid must be symmetric about 0")
    return srt


def subdomain_eigenvalues(pot: Potential, dim: int = 3, n_local: int = 4096) -> List[float]:
    """First radial Dirichlet eigenvalues mu_i of the declared zero-set subdomains."""
    from radial_mesh import local_grid, dirichlet_eig_first

    mus = []
    for rho, sigma in pot.subdomains:
        grid = local_grid(dim, rho, sigma, n_local)
        lam, _ = dirichlet_eig_first(grid, (rho, sigma))
        mus.append(lam)
    return mus


def validate_hypotheses(nl: Nonlinearity, pot: Potential, mode: str = NONVANISHING,
                        samples=None, dim: int = 3, n_local: int = 4096,
                        p: float = DEFAULT_P, q: float = DEFAULT_Q) -> HypothesisReport:
    if mode not in (NONVANISHING, VANISHING):
        raise ValueError(f"Unknown mode '{mode}'")
    t = check_samples(default_samples() if samples is None else samples)
    report = HypothesisReport('hypotheses', meta={
        'nonlinearity': nl.kind, 'l': nl.l, 'potential': pot.kind, 'mode': mode,
        'p': p, 'q': q, 'dim': dim,
    })
    pos = t[t > 0]
    g = np.atleast_1d(g_eval(nl, t))
    G = np.atleast_1d(G_eval(nl, t))

    # (g1): g(t)/t^3 -> 0 at the origin
    if pos.size:
        tiny = pos[: max(1, min(5, pos.size))]
        ratio0 = np.abs(np.atleast_1d(g_eval(nl, tiny)) / tiny ** 3)
        report.add('g1_small_t', bool(np.all(ratio0 <= 1e-6 * nl.l) and np.all(np.diff(ratio0) >= -StrictTol)),
                   margin=float(1e-6 * nl.l - ratio0.max()), samples=tiny.size)
    else:
        report.skip('g1_small_t', 'no positive samples')
    report.add('g_zero_at_origin', g_eval(nl, 0.0) == 0.0 and G_eval(nl, 0.0) == 0.0, samples=1)

    # (g2)/(g6): g(t)/t^3 -> l, sampled at t = 1e6
    big = 1e6
    err = abs(g_eval(nl, big) / big ** 3 - nl.l)
    report.add('asymptote_l', err <= 1e-6 * nl.l, margin=1e-6 * nl.l - err, samples=1,
               note='g2 (l=1)' if mode == NONVANISHING else 'g6')

    # (g3): g(t)/t^3 increasing on (0, inf) and decreasing on (-inf, 0)
    if pos.size > 1:
        rp = np.atleast_1d(g_eval(nl, pos)) / pos ** 3
        neg = t[t < 0]
        rn = np.atleast_1d(g_eval(nl, neg)) / neg ** 3
        dmin = min(float(np.min(np.diff(rp))), float(np.min(-np.diff(rn))) if neg.size > 1 else np.inf)
        report.add('g3_monotone_ratio', dmin >= -StrictTol, margin=dmin, samples=pos.size + neg.size,
                   note='non-decreasing within 1e-12 (ties where the ratio saturates)')
    else:
        report.skip('g3_monotone_ratio', 'needs at least two positive samples')

    # g(t)/t^3 < l strictly
    nz = t != 0
    ratio = g[nz] / t[nz] ** 3
    gap = nl.l - ratio
    strict_ok = bool(np.all(gap > 0)) if gap.size else None
    report.add('ratio_below_l', strict_ok, margin=float(gap.min()) if gap.size else None,
               samples=int(gap.size), note='' if nl.l == 1.0 or mode == VANISHING else 'generalized to l != 1')

    # 0 <= 4G(t) <= g(t) t
    scale = np.maximum(1.0, np.abs(g * t))
    upper = (g * t - 4.0 * G) / scale
    lower = 4.0 * G / scale
    margin = float(min(upper.min(), lower.min()))
    report.add('ar_inequality', margin >= -StrictTol, margin=margin, samples=t.size)

    # (g4) divergence proxy: g t/4 - G strictly increasing at 1e2, 1e3, 1e4 and > 1e3 at the end
    far = np.array([1e2, 1e3, 1e4])
    h = np.atleast_1d(g_eval(nl, far)) * far / 4.0 - np.atleast_1d(G_eval(nl, far))
    report.add('g4_divergence_proxy', bool(np.all(np.diff(h) > 0) and h[-1] > 1e3),
               margin=float(h[-1] - 1e3), samples=3)

    # (g5): g'(0) = 0 and |g'(t)| <= C (1 + |t|^(q-2)) with a fitted C
    gp = np.atleast_1d(g_prime_eval(nl, t))
    C = float(np.max(np.abs(gp) / (1.0 + np.abs(t) ** (q - 2.0))))
    report.add('g5_growth', bool(np.isfinite(C)) and g_prime_eval(nl, 0.0) == 0.0, margin=C,
               samples=t.size, note=f'fitted C={C:.6g}, q={q:g}')
    report.meta['g5_C'] = C

    # (V1): V >= 0 and bounded
    r = np.concatenate([np.linspace(0.0, 10.0, 1001), np.abs(pos)])
    V = np.atleast_1d(pot(r))
    report.add('V_nonnegative', bool(np.all(V >= 0)), margin=float(V.min()), samples=r.size)
    report.add('V_bounded', bool(np.all(np.isfinite(V))), margin=float(V.max()), samples=r.size)

    if mode == NONVANISHING:
        report.add('V2_positive_infimum', float(V.min()) > 0, margin=float(V.min()), samples=r.size)
        return report

    # (V3): {V < a} nonempty with finite measure
    if pot.kind == REMARK13:
        a = 0.5
        radius = 1.0 + np.sqrt(a)
        inside = r[V < a]
        report.add('V3_finite_measure', bool(inside.size > 0 and inside.max() <= radius + 1e-12),
                   margin=float(radius - inside.max()) if inside.size else None, samples=r.size,
                   note=f'a={a}: {{V<a}} = B({radius:.6g})')
    else:
        report.skip('V3_finite_measure', 'not checked for this potential')

    # (V4): declared subdomains lie in {V = 0} and have disjoint closures
    if not pot.subdomains:
        report.add('V4_zero_set_subdomains', False, note='no zero-set subdomains declared')
        return report
    ok = True
    for rho, sigma in pot.subdomains:
        rr = np.linspace(rho, sigma, 257)[1:-1]
        ok &= bool(np.all(np.atleast_1d(pot(rr)) == 0.0))
    doms = sorted(pot.subdomains)
    disjoint = all(doms[i][1] < doms[i + 1][0] for i in range(len(doms) - 1))
    report.add('V4_zero_set_subdomains', bool(ok and disjoint and len(doms) >= 2), samples=255 * len(doms))

    mus = subdomain_eigenvalues(pot, dim=dim, n_local=n_local)
    mu = max(mus)
    report.meta['mu'] = [float(m) for m in mus]
    report.add('g6_l_exceeds_mu', nl.l > mu, margin=nl.l - mu, samples=len(mus),
               note=f'mu = max(mu_i) = {mu:.6g}')
    if nl.l <= mu:
        logger.warning(f"Asymptote l={nl.l} does not exceed mu={mu:.6g}; the seed construction will fail.")
    return report
