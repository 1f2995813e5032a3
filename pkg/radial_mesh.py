# radial_mesh.py
"""
Truncated radial discretization of H^1_r(R^N) on the ball B_R.

Interior nodes r_i = i h (i = 1..n, h = R/(n+1)); the value at R is 0 and the origin uses a
mirror value (u'(0) = 0), so the segment [0, h] carries no gradient. The stiffness form

    grad_sq(u) = sum_i c_i (u_{i+1} - u_i)^2,   c_i = sigma_{N-1} r_{i+1/2}^{N-1} / h

and the trapezoid weights w_i = sigma_{N-1} r_i^{N-1} h define everything else: annulus
problems are principal sub-blocks of the same tridiagonal matrix.
"""
from dataclasses import dataclass
from math import gamma, pi
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from errors import BadDimension, BadResolution, GridMismatch, NonConvergence, TooFewNodes
from run_logger import logger

MIN_ANNULUS_NODES = 32


def sphere_area(dim: int) -> float:
    return 2.0 * pi ** (dim / 2.0) / gamma(dim / 2.0)


@dataclass(frozen=True)
class Annulus:
    """Snapped annulus: boundary node indices lo < hi (0 is the origin, n+1 is R)."""
    lo: int
    hi: int
    rho: float
    sigma: float

    @property
    def sl(self) -> slice:
        # interior node i (1-based) lives at array index i-1
        return slice(self.lo, self.hi - 1)

    @property
    def count(self) -> int:
        return self.hi - self.lo - 1

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.rho, self.sigma


@dataclass(frozen=True, eq=False)
class RadialGrid:
    dim: int
    R: float
    n: int
    h: float
    nodes: np.ndarray
    quad_weights: np.ndarray
    closed_nodes: np.ndarray
    closed_weights: np.ndarray
    couplings: np.ndarray
    sphere_area: float

    @property
    def key(self) -> Tuple[int, float, int]:
        return self.dim, self.R, self.n

    @property
    def critical_exponent(self) -> float:
        return 2.0 * self.dim / (self.dim - 2.0)

    @property
    def ball_volume(self) -> float:
        return self.sphere_area * self.R ** self.dim / self.dim

    def annulus(self, rho: float, sigma: float, min_nodes: int = MIN_ANNULUS_NODES) -> Annulus:
        lo = 0 if rho <= 0 else int(round(rho / self.h))
        hi = self.n + 1 if sigma >= self.R else int(round(sigma / self.h))
        lo = min(max(lo, 0), self.n + 1)
        hi = min(max(hi, 0), self.n + 1)
        if hi - lo - 1 < min_nodes:
            raise TooFewNodes(
                f"Annulus ({rho:.6g}, {sigma:.6g}) holds {max(hi - lo - 1, 0)} grid nodes; "
                f"at least {min_nodes} are required (h={self.h:.3g})")
        return Annulus(lo, hi, lo * self.h, hi * self.h)

    def whole(self) -> Annulus:
        return Annulus(0, self.n + 1, 0.0, self.R)

    def mask(self, ann: Annulus) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[ann.sl] = True
        return m

    def stiffness_diagonals(self, sl: slice = slice(None)) -> Tuple[np.ndarray, np.ndarray]:
        """Main and off diagonal of the principal sub-block of K on ``sl``."""
        c = self.couplings
        diag = c.copy()
        diag[1:] += c[:-1]
        off = -c[:-1]
        d = diag[sl]
        idx = np.arange(self.n)[sl]
        return d, off[idx[:-1]] if idx.size > 1 else np.empty(0)

    def apply_stiffness(self, v: np.ndarray) -> np.ndarray:
        ext = np.append(v, 0.0)
        flux = self.couplings * (ext[1:] - ext[:-1])
        out = -flux
        out[1:] += flux[:-1]
        return out

    def check(self, other: 'RadialGrid'):
        if other is not self and other.key != self.key:
            raise GridMismatch(f"Field lives on grid {other.key}, expected {self.key}")


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise GridMismatch(f"Field has {vals.shape} values for a grid of {self.grid.n} nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("Field values must be finite")
        object.__setattr__(self, 'values', vals)

    def with_values(self, values: np.ndarray) -> 'RadialField':
        return RadialField(self.grid, values)

    def positive_part(self) -> 'RadialField':
        return self.with_values(np.maximum(self.values, 0.0))

    def negative_part(self) -> 'RadialField':
        return self.with_values(np.minimum(self.values, 0.0))

    def __mul__(self, s: float) -> 'RadialField':
        return self.with_values(s * self.values)

    __rmul__ = __mul__

    def __add__(self, other: 'RadialField') -> 'RadialField':
        self.grid.check(other.grid)
        return self.with_values(self.values + other.values)

    def __neg__(self) -> 'RadialField':
        return self.with_values(-self.values)

    def is_zero(self) -> bool:
        return not np.any(self.values)


def build_grid(N: int, R: float, n: int) -> RadialGrid:
    if int(N) != N or N < 3:
        raise BadDimension(f"Dimension N={N} is not supported; N >= 3 is required")
    if not (R > 0) or not np.isfinite(R):
        raise BadResolution(f"Truncation radius must be positive, got {R}")
    if int(n) != n or n < 16:
        raise BadResolution(f"At least 16 interior nodes are required, got {n}")
    N, n = int(N), int(n)
    h = R / (n + 1)
    area = sphere_area(N)
    closed = h * np.arange(n + 2)
    closed[-1] = R
    cw = area * closed ** (N - 1) * h
    cw[0] *= 0.5
    cw[-1] *= 0.5
    mids = h * (np.arange(1, n + 1) + 0.5)
    couplings = area * mids ** (N - 1) / h
    return RadialGrid(dim=N, R=float(R), n=n, h=h, nodes=closed[1:-1].copy(),
                      quad_weights=cw[1:-1].copy(), closed_nodes=closed, closed_weights=cw,
                      couplings=couplings, sphere_area=area)


def local_grid(N: int, rho: float, sigma: float, n_local: int) -> RadialGrid:
    """Grid on B_sigma whose nodes hit rho, with about n_local nodes inside (rho, sigma)."""
    h = (sigma - rho) / (n_local + 1)
    n = int(round(sigma / h)) - 1
    return build_grid(N, sigma, n)


def field_from_function(grid: RadialGrid, fn: Callable[[np.ndarray], np.ndarray]) -> RadialField:
    return RadialField(grid, np.asarray(fn(grid.nodes), dtype=float))


def integrate(grid: RadialGrid, values) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape == (grid.n,):
        return float(np.dot(grid.quad_weights, values))
    if values.shape == (grid.n + 2,):
        return float(np.dot(grid.closed_weights, values))
    raise GridMismatch(f"Expected {grid.n} or {grid.n + 2} values, got {values.shape}")


def lp_norm(field: RadialField, p: float = 2.0) -> float:
    return float(np.dot(field.grid.quad_weights, np.abs(field.values) ** p) ** (1.0 / p))


def l2_norm_sq(field: RadialField) -> float:
    return float(np.dot(field.grid.quad_weights, field.values ** 2))


def grad_sq(field: RadialField) -> float:
    ext = np.append(field.values, 0.0)
    return float(np.dot(field.grid.couplings, (ext[1:] - ext[:-1]) ** 2))


def _banded_matvec(diag: np.ndarray, off: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def dirichlet_eig_first(grid: RadialGrid, annulus: Tuple[float, float], N: Optional[int] = None,
                        max_iters: int = 1000) -> Tuple[float, RadialField]:
    """
    Smallest eigenpair of the radial Dirichlet Laplacian on Omega(rho, sigma).

    Inverse iteration on the symmetrized pencil W^{-1/2} K W^{-1/2}; the returned field is
    positive, vanishes outside the annulus and has unit weighted L2 norm.
    """
    if N is not None and N != grid.dim:
        raise BadDimension(f"Requested N={N} on a grid of dimension {grid.dim}")
    rho, sigma = annulus
    if not (0 <= rho < sigma <= grid.R + 1e-12 * grid.R):
        raise ValueError(f"Invalid annulus ({rho}, {sigma}) for R={grid.R}")
    ann = grid.annulus(rho, sigma)
    d, e = grid.stiffness_diagonals(ann.sl)
    s = 1.0 / np.sqrt(grid.quad_weights[ann.sl])
    bd = d * s * s
    be = e * s[:-1] * s[1:]
    ab = np.zeros((2, bd.size))
    ab[0, 1:] = be
    ab[1, :] = bd
    chol = cholesky_banded(ab, lower=False)

    x = np.ones(bd.size) / np.sqrt(bd.size)
    scale = float(np.max(np.abs(bd)) + 2.0 * np.max(np.abs(be), initial=0.0))
    lam = np.inf
    prev_moved = np.inf
    for it in range(max_iters):
        y = cho_solve_banded((chol, False), x)
        x_new = y / np.linalg.norm(y)
        Ax = _banded_matvec(bd, be, x_new)
        lam_new = float(np.dot(x_new, Ax))
        moved = np.linalg.norm(x_new - x)
        x = x_new
        # on fine grids the iterate and the Rayleigh quotient both hit a round-off floor
        stalled = moved >= 0.5 * prev_moved and np.linalg.norm(Ax - lam_new * x) <= 1e-8 * scale
        if moved <= 1e-8 or abs(lam_new - lam) <= 1e-12 * lam_new or stalled:
            lam = lam_new
            break
        lam = lam_new
        prev_moved = moved
    else:
        raise NonConvergence(f"Inverse iteration on ({rho}, {sigma}) did not converge in {max_iters} steps")
    logger.debug(f"First Dirichlet eigenvalue on ({ann.rho:.6g}, {ann.sigma:.6g}): {lam:.12g} after {it + 1} iterations")

    u = np.zeros(grid.n)
    u[ann.sl] = x * s
    if u.sum() < 0:
        u = -u
    return lam, RadialField(grid, u)
