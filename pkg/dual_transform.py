# dual_transform.py
"""
The change of variables f: the odd, increasing solution of f'(t) = (1 + 2 f(t)^2)^(-1/2).

Its inverse is elementary, t = F(y) = integral_0^y sqrt(1 + 2 s^2) ds, so f is evaluated by
inverting F with a safeguarded Newton iteration instead of integrating the ODE.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from errors import NonConvergence
from run_logger import logger

ArrayLike = Union[float, np.ndarray]

SQRT2 = np.sqrt(2.0)
TWO_QUARTER = 2.0 ** 0.25
# Beyond this |t| the asymptotic branch is used (2 f^2 would overflow inside F).
OVERFLOW_GUARD = 1e300


def _wrap(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


@dataclass(frozen=True)
class DualTransform:
    newton_tol: float = 1e-13
    max_newton_iters: int = 100

    name = 'dual'

    def f_inverse_closed_form(self, y: ArrayLike) -> ArrayLike:
        """F(y) = y sqrt(1+2y^2)/2 + asinh(sqrt(2) y)/(2 sqrt(2)), odd in y."""
        arr = np.asarray(y, dtype=float)
        a = np.abs(arr)
        root = np.hypot(1.0, SQRT2 * a)  # sqrt(1 + 2 a^2) without overflow
        val = 0.5 * a * root + np.arcsinh(SQRT2 * a) / (2.0 * SQRT2)
        return _wrap(np.copysign(val, arr), np.ndim(y) == 0)

    def f_forward(self, t: ArrayLike) -> ArrayLike:
        arr = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("f_forward requires finite input")
        a = np.abs(np.atleast_1d(arr))
        y = np.empty_like(a)

        huge = a > OVERFLOW_GUARD
        y[huge] = TWO_QUARTER * np.sqrt(a[huge])

        work = ~huge
        target = a[work]
        # F(y) >= y and F(y) >= y^2/sqrt(2), so this start lies at or right of the root;
        # F is convex on y >= 0, hence Newton decreases monotonically from here.
        yy = np.minimum(target, TWO_QUARTER * np.sqrt(target))
        lo = np.zeros_like(yy)
        hi = yy.copy()
        tol = self.newton_tol * np.maximum(1.0, target)
        for _ in range(self.max_newton_iters):
            resid = self.f_inverse_closed_form(yy) - target
            done = np.abs(resid) <= tol
            if np.all(done):
                break
            hi = np.where(resid > 0, yy, hi)
            lo = np.where(resid < 0, yy, lo)
            step = yy - resid / np.hypot(1.0, SQRT2 * yy)
            outside = (step <= lo) | (step >= hi)
            step = np.where(outside, 0.5 * (lo + hi), step)
            yy = np.where(done, yy, step)
        else:
            worst = float(np.max(np.abs(self.f_inverse_closed_form(yy) - target) / np.maximum(1.0, target)))
            logger.error(f"f_forward: Newton inversion did not converge (worst relative residual {worst:.3e}).")
            raise NonConvergence(
                f"f_forward exceeded {self.max_newton_iters} iterations (newton_tol={self.newton_tol})")
        y[work] = yy
        out = np.copysign(y, np.atleast_1d(arr))
        if np.ndim(t) == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def prime_from_value(self, fv: ArrayLike) -> ArrayLike:
        """f'(t) expressed through the value f(t)."""
        return 1.0 / np.hypot(1.0, SQRT2 * np.asarray(fv, dtype=float))

    def second_from_value(self, fv: ArrayLike) -> ArrayLike:
        fv = np.asarray(fv, dtype=float)
        return -2.0 * fv * self.prime_from_value(fv) ** 4

    def f_prime(self, t: ArrayLike) -> ArrayLike:
        return _wrap(np.asarray(self.prime_from_value(self.f_forward(t))), np.ndim(t) == 0)

    def f_second(self, t: ArrayLike) -> ArrayLike:
        return _wrap(np.asarray(self.second_from_value(self.f_forward(t))), np.ndim(t) == 0)

    def evaluate(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns (f, f', f'') at t with a single inversion."""
        fv = np.asarray(self.f_forward(np.asarray(t, dtype=float)), dtype=float)
        fp = np.asarray(self.prime_from_value(fv))
        return fv, fp, np.asarray(self.second_from_value(fv))


@dataclass(frozen=True)
class IdentityTransform(DualTransform):
    """f = id; turns the energy into the plain semilinear one (diagnostic mode)."""

    name = 'identity'

    def f_inverse_closed_form(self, y: ArrayLike) -> ArrayLike:
        return _wrap(np.asarray(y, dtype=float), np.ndim(y) == 0)

    def f_forward(self, t: ArrayLike) -> ArrayLike:
        return _wrap(np.asarray(t, dtype=float), np.ndim(t) == 0)

    def prime_from_value(self, fv: ArrayLike) -> ArrayLike:
        return np.ones_like(np.asarray(fv, dtype=float))

    def second_from_value(self, fv: ArrayLike) -> ArrayLike:
        return np.zeros_like(np.asarray(fv, dtype=float))
