# energy.py
"""
The transformed energy

    I(v) = 1/2 |grad v|_2^2 + 1/2 int V f(v)^2 - int G(f(v)),

its discrete gradient, the Nehari maps psi and the scaling projections onto the Nehari set
and the sign-changing Nehari set.

All array-level quantities use the quadrature weights w of the grid: the Euclidean gradient of
the discrete energy is K v + w (V f f' - g(f) f'), and dividing by w gives the weighted-L2
Riesz representative, which doubles as the discrete Euler-Lagrange residual.
"""
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from dual_transform import DualTransform
from errors import MissingSign, NotProjectable, ZeroField
from model import G_eval, Nonlinearity, Potential, g_eval, g_prime_eval
from radial_mesh import Annulus, RadialField, RadialGrid, grad_sq, l2_norm_sq
from run_logger import logger

NEHARI_TOL = 1e-10
S_MAX = 1e8
S_MIN = 1e-12


@dataclass(frozen=True, eq=False)
class EnergyModel:
    transform: DualTransform
    nl: Nonlinearity
    pot: Potential
    grid: RadialGrid
    V: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'V', np.asarray(self.pot(self.grid.nodes), dtype=float))

    @property
    def theta_generalized(self) -> bool:
        return self.nl.l != 1.0

    # --- pointwise pieces ---
    def pointwise(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.transform.evaluate(v)

    def source(self, v: np.ndarray) -> np.ndarray:
        """V f(v) f'(v) - g(f(v)) f'(v), node by node."""
        fv, fp, _ = self.pointwise(v)
        return (self.V * fv - g_eval(self.nl, fv)) * fp

    def source_prime(self, v: np.ndarray, V: Optional[np.ndarray] = None) -> np.ndarray:
        # (f f')' = f'^4 and (g(f) f')' = g'(f) f'^2 + g(f) f''; V must match v node for node
        fv, fp, fpp = self.pointwise(v)
        V = self.V if V is None else V
        return V * fp ** 4 - g_prime_eval(self.nl, fv) * fp ** 2 - g_eval(self.nl, fv) * fpp

    # --- array-level energy and gradient ---
    def energy(self, v: np.ndarray) -> float:
        terms = self.energy_terms(v)
        return terms['gradient'] + terms['potential'] - terms['nonlinear']

    def energy_terms(self, v: np.ndarray) -> Dict[str, float]:
        fv = np.asarray(self.transform.f_forward(v), dtype=float)
        w = self.grid.quad_weights
        ext = np.append(v, 0.0)
        return {
            'gradient': 0.5 * float(np.dot(self.grid.couplings, (ext[1:] - ext[:-1]) ** 2)),
            'potential': 0.5 * float(np.dot(w, self.V * fv * fv)),
            'nonlinear': float(np.dot(w, G_eval(self.nl, fv))),
        }

    def gradient(self, v: np.ndarray) -> np.ndarray:
        """Euclidean gradient of the discrete energy."""
        return self.grid.apply_stiffness(v) + self.grid.quad_weights * self.source(v)

    def hessian_diagonals(self, v: np.ndarray, ann: Annulus) -> Tuple[np.ndarray, np.ndarray]:
        """Tridiagonal Euclidean Hessian restricted to the annulus unknowns."""
        d, e = self.grid.stiffness_diagonals(ann.sl)
        d = d + self.grid.quad_weights[ann.sl] * self.source_prime(v[ann.sl], self.V[ann.sl])
        return d, e

    def psi(self, u: np.ndarray, s: float, A: Optional[float] = None) -> float:
        """psi(s) = <I'(s u), s u>."""
        if A is None:
            A = _grad_sq_values(self.grid, u)
        su = s * u
        nz = su != 0
        fv, fp, _ = self.pointwise(su[nz])
        w = self.grid.quad_weights[nz]
        nonlinear = np.dot(w, (self.V[nz] * fv - g_eval(self.nl, fv)) * fp * su[nz])
        return float(s * s * A + nonlinear)

    def psi_prime(self, u: np.ndarray, s: float, A: Optional[float] = None) -> float:
        if A is None:
            A = _grad_sq_values(self.grid, u)
        su = s * u
        nz = su != 0
        fv, fp, fpp = self.pointwise(su[nz])
        Vn = self.V[nz]
        g = g_eval(self.nl, fv)
        gp = g_prime_eval(self.nl, fv)
        inner = Vn * (fp ** 4 * su[nz] + fv * fp) - (gp * fp ** 2 + g * fpp) * su[nz] - g * fp
        return float(2.0 * s * A + np.dot(self.grid.quad_weights[nz], u[nz] * inner))


class NehariBracket(NamedTuple):
    s_lo: float
    s_hi: float
    psi_lo: float
    psi_hi: float

    def to_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self._asdict().items()}


def _grad_sq_values(grid: RadialGrid, u: np.ndarray) -> float:
    ext = np.append(u, 0.0)
    return float(np.dot(grid.couplings, (ext[1:] - ext[:-1]) ** 2))


def _require_nonzero(u: RadialField):
    if u.is_zero():
        raise ZeroField("Operation requires a nonzero field")


def functional_I(em: EnergyModel, v: RadialField) -> float:
    em.grid.check(v.grid)
    return em.energy(v.values)


def energy_terms(em: EnergyModel, v: RadialField) -> Dict[str, float]:
    em.grid.check(v.grid)
    return em.energy_terms(v.values)


def euler_lagrange_residual(em: EnergyModel, v: RadialField,
                            annulus: Optional[Annulus] = None) -> Tuple[RadialField, float]:
    """Weighted-L2 representative of I'(v) (restricted to ``annulus`` if given) and its norm."""
    em.grid.check(v.grid)
    w = em.grid.quad_weights
    res = em.gradient(v.values) / w
    if annulus is not None:
        res = np.where(em.grid.mask(annulus), res, 0.0)
    return RadialField(em.grid, res), float(np.sqrt(np.dot(w, res * res)))


def nehari_psi(em: EnergyModel, u: RadialField, s: float) -> float:
    em.grid.check(u.grid)
    _require_nonzero(u)
    if not s > 0:
        raise ValueError(f"psi needs s > 0, got {s}")
    return em.psi(u.values, s)


def theta_test(em: EnergyModel, u: RadialField) -> bool:
    """|grad u^+-|^2 < l |u^+-|^2 for every nonzero signed part."""
    em.grid.check(u.grid)
    _require_nonzero(u)
    for part in (u.positive_part(), u.negative_part()):
        if part.is_zero():
            continue
        if not grad_sq(part) < em.nl.l * l2_norm_sq(part):
            return False
    return True


def nehari_residual(em: EnergyModel, w: RadialField) -> List[float]:
    """Relative residuals |<I'(w), w^+->| / max(1, |grad w^+-|^2) of the nonzero signed parts."""
    em.grid.check(w.grid)
    grad = em.gradient(w.values)
    out = []
    for part in (w.positive_part(), w.negative_part()):
        if part.is_zero():
            continue
        out.append(abs(float(np.dot(grad, part.values))) / max(1.0, grad_sq(part)))
    return out


def nehari_bracket(em: EnergyModel, u: RadialField, s_max: float = S_MAX) -> NehariBracket:
    """Finds s_lo < s_hi with psi(s_lo) > 0 > psi(s_hi), expanding from s = 1."""
    em.grid.check(u.grid)
    _require_nonzero(u)
    v = u.values
    A = _grad_sq_values(em.grid, v)
    s = 1.0
    p = em.psi(v, s, A)
    if p == 0.0:
        return NehariBracket(s, s, p, p)
    if p > 0:
        lo, p_lo = s, p
        while True:
            s *= 2.0
            if s > s_max:
                raise NotProjectable(
                    f"psi(s) stays positive up to s_max={s_max:g}; the field is outside the projectable set")
            p = em.psi(v, s, A)
            if p < 0:
                return NehariBracket(lo, s, p_lo, p)
            lo, p_lo = s, p
    hi, p_hi = s, p
    while True:
        s *= 0.5
        if s < S_MIN:
            raise NotProjectable("psi(s) stays negative for small s")
        p = em.psi(v, s, A)
        if p > 0:
            return NehariBracket(s, hi, p, p_hi)
        hi, p_hi = s, p


def project_nehari(em: EnergyModel, u: RadialField, tol: float = NEHARI_TOL,
                   s_max: float = S_MAX) -> Tuple[float, RadialField]:
    """Unique t_u > 0 with t_u u on the Nehari set; t_u maximizes t -> I(t u)."""
    br = nehari_bracket(em, u, s_max)
    v = u.values
    A = _grad_sq_values(em.grid, v)
    if br.s_lo == br.s_hi:
        t = br.s_lo
    else:
        t = brentq(lambda s: em.psi(v, s, A), br.s_lo, br.s_hi,
                   xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
        p = em.psi(v, t, A)
        for _ in range(3):
            dp = em.psi_prime(v, t, A)
            if dp == 0.0 or p == 0.0:
                break
            t_new = t - p / dp
            if not br.s_lo <= t_new <= br.s_hi:
                break
            p_new = em.psi(v, t_new, A)
            if abs(p_new) >= abs(p):
                break
            t, p = t_new, p_new
    resid = abs(em.psi(v, t, A)) / max(1.0, t * t * A)
    if resid > tol:
        logger.warning(f"Nehari projection residual {resid:.3e} exceeds tolerance {tol:.1e} (t_u={t:.6g})")
    return t, u * t


def project_sign_changing(em: EnergyModel, u: RadialField, tol: float = NEHARI_TOL,
                          s_max: float = S_MAX, max_newton: int = 50) -> Tuple[float, float, RadialField]:
    """
    The unique pair (s_u, t_u) with s_u u^+ + t_u u^- in the sign-changing Nehari set.

    The parts are projected independently first; adjacent opposite-sign nodes couple the two
    equations through kappa = u^+ K u^-, which a 2x2 Newton iteration then removes.
    """
    em.grid.check(u.grid)
    up, um = u.positive_part(), u.negative_part()
    if up.is_zero() or um.is_zero():
        raise MissingSign("Sign-changing projection needs nonzero positive and negative parts")
    s, _ = project_nehari(em, up, tol, s_max)
    t, _ = project_nehari(em, um, tol, s_max)
    kappa = float(np.dot(up.values, em.grid.apply_stiffness(um.values)))
    if kappa != 0.0:
        a, b = up.values, um.values
        Aa, Ab = _grad_sq_values(em.grid, a), _grad_sq_values(em.grid, b)

        def system(s_, t_):
            return np.array([em.psi(a, s_, Aa) + s_ * t_ * kappa, em.psi(b, t_, Ab) + s_ * t_ * kappa])

        def converged(F, s_, t_):
            return abs(F[0]) / max(1.0, s_ * s_ * Aa) <= tol and abs(F[1]) / max(1.0, t_ * t_ * Ab) <= tol

        F = system(s, t)
        for _ in range(max_newton):
            if converged(F, s, t):
                break
            J = np.array([[em.psi_prime(a, s, Aa) + t * kappa, s * kappa],
                          [t * kappa, em.psi_prime(b, t, Ab) + s * kappa]])
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError as e:
                raise NotProjectable(f"Singular Jacobian in the coupled projection: {e}")
            alpha = 1.0
            for _ in range(30):
                s_new, t_new = s + alpha * step[0], t + alpha * step[1]
                if s_new > 0 and t_new > 0:
                    F_new = system(s_new, t_new)
                    if np.max(np.abs(F_new)) < np.max(np.abs(F)):
                        break
                alpha *= 0.5
            else:
                raise NotProjectable("Coupled projection line search failed")
            s, t, F = s_new, t_new, F_new
        else:
            if not converged(F, s, t):
                raise NotProjectable(f"Coupled projection did not converge (residuals {F[0]:.3e}, {F[1]:.3e})")
    return s, t, up * s + um * t
