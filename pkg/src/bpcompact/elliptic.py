"""Fast fourth-order Poisson solvers and implicit heat stepping.

All solvers discretize ``u_xx + u_yy = f`` with the compact left-hand side

    W2y Dxx u / dx**2 + W2x Dyy u / dy**2 = R(f)

where the right side ``R(f)`` is ``W2x W2y f`` (compact scheme) or the
classical nine-point weighting ``(8 f_ij + f_i+-1,j + f_i,j+-1) / 12``.
The left operator is diagonalized by sine transforms (Dirichlet), Fourier
transforms (periodic) or a precomputed eigendecomposition of the two small
one-dimensional matrices (Neumann).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .compact import DXX, W2, apply_along, solve_along
from .grid import DimensionError, Field2D, Grid2D

SCHEMES = ("compact", "ninepoint")

# one-sided fourth-order closure: u_0 = (48 u_1 - 36 u_2 + 16 u_3 - 3 u_4 + 12 h g) / 25
NEUMANN_CLOSURE = np.array([48.0, -36.0, 16.0, -3.0]) / 25.0
NEUMANN_DATA_WEIGHT = 12.0 / 25.0


class ConfigurationError(ValueError):
    """Raised for parameter choices outside a method's validity window."""


@dataclass(frozen=True)
class BoundaryData:
    """Edge data on a bounded grid.

    ``left``/``right`` have ``ny + 2`` entries (along ``y_full``),
    ``bottom``/``top`` have ``nx + 2`` entries (along ``x_full``).
    Dirichlet data are boundary values of ``u`` (left/right win at the
    corners); Neumann data are outward normal derivatives ``du/dn``.
    """

    left: np.ndarray
    right: np.ndarray
    bottom: np.ndarray
    top: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid2D) -> "BoundaryData":
        return cls(np.zeros(grid.ny + 2), np.zeros(grid.ny + 2), np.zeros(grid.nx + 2), np.zeros(grid.nx + 2))

    @classmethod
    def from_function(cls, grid: Grid2D, func) -> "BoundaryData":
        """Dirichlet data sampled from ``func(x, y)`` on the boundary ring."""
        x, y = grid.x_full, grid.y_full
        return cls(
            np.broadcast_to(func(0.0 * y, y), y.shape).astype(float),
            np.broadcast_to(func(0.0 * y + grid.lx, y), y.shape).astype(float),
            np.broadcast_to(func(x, 0.0 * x), x.shape).astype(float),
            np.broadcast_to(func(x, 0.0 * x + grid.ly), x.shape).astype(float),
        )

    @classmethod
    def from_edges(cls, grid: Grid2D, left, right, bottom, top) -> "BoundaryData":
        """Per-edge data; each entry is a constant or a callable of the edge coordinate."""
        def ev(g, s):
            return np.broadcast_to(g(s) if callable(g) else g, s.shape).astype(float)
        x, y = grid.x_full, grid.y_full
        return cls(ev(left, y), ev(right, y), ev(bottom, x), ev(top, x))

    def check(self, grid: Grid2D):
        if self.left.shape != (grid.ny + 2,) or self.right.shape != (grid.ny + 2,):
            raise DimensionError("left/right boundary data need ny + 2 entries")
        if self.bottom.shape != (grid.nx + 2,) or self.top.shape != (grid.nx + 2,):
            raise DimensionError("bottom/top boundary data need nx + 2 entries")


def periodic_symbols(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the circulant Dxx and W2 in FFT mode order."""
    c = np.cos(2 * np.pi * np.arange(n) / n)
    return 2 * c - 2, c / 6 + 5 / 6


def sine_symbols(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of the bounded Dxx and W2 for sine modes m = 1..n."""
    c = np.cos(np.pi * np.arange(1, n + 1) / (n + 1))
    return 2 * c - 2, 5 / 6 + c / 6


def sine_transform(a: np.ndarray, axis: int) -> np.ndarray:
    """Multiply by ``S = [sin(m*pi*i/(n+1))]``; ``S`` is symmetric and ``S @ S = (n+1)/2 I``."""
    return 0.5 * sfft.dst(a, type=1, axis=axis)


def inverse_sine_transform(a: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    return (2.0 / (n + 1)) * sine_transform(a, axis)


def neumann_extension(n: int) -> np.ndarray:
    """``(n+2) x n`` matrix expressing both wall values through interior ones."""
    E = np.zeros((n + 2, n))
    E[1:-1] = np.eye(n)
    E[0, :4] = NEUMANN_CLOSURE
    E[-1, -4:] = NEUMANN_CLOSURE[::-1]
    return E


def _bar_dxx(n: int) -> np.ndarray:
    D = np.zeros((n, n + 2))
    for i in range(n):
        D[i, i:i + 3] = (1.0, -2.0, 1.0)
    return D


@dataclass(frozen=True, eq=False)
class PoissonPlan:
    """Precomputed eigen-data for one grid, boundary kind and right-side scheme.

    ``eig`` holds the ``nx x ny`` denominators of the diagonalized left side.
    Neumann plans also hold the 1D eigenvector matrices ``sx``, ``sy``, their
    inverses, and the left null vectors used to project out incompatible data.
    """

    grid: Grid2D
    bc: str
    scheme: str
    eig: np.ndarray
    rhs_symbol: np.ndarray | None = None
    sx: np.ndarray | None = None
    sx_inv: np.ndarray | None = None
    sy: np.ndarray | None = None
    sy_inv: np.ndarray | None = None
    null_left: np.ndarray | None = None
    zero_mode: tuple = field(default=(0, 0))


def _neumann_eigen(n: int):
    D = _bar_dxx(n) @ neumann_extension(n)
    lam, S = np.linalg.eig(D)
    lam, S = lam.real, S.real
    order = np.argsort(-lam)
    lam, S = lam[order], S[:, order]
    lam[0] = 0.0  # constant mode; the largest eigenvalue is zero up to roundoff
    S_inv = np.linalg.inv(S)
    return lam, S, S_inv


@lru_cache(maxsize=32)
def make_poisson_plan(grid: Grid2D, scheme: str = "compact") -> PoissonPlan:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    dx2, dy2 = grid.dx**2, grid.dy**2
    if grid.bc == "periodic":
        l1x, l2x = periodic_symbols(grid.nx)
        l1y, l2y = periodic_symbols(grid.ny)
        eig = np.outer(l1x, l2y) / dx2 + np.outer(l2x, l1y) / dy2
        eig[0, 0] = 0.0
        if scheme == "compact":
            rhs = np.outer(l2x, l2y)
        else:
            rhs = (8 + (l1x[:, None] + 2) + (l1y[None, :] + 2)) / 12
        ky = grid.ny // 2 + 1
        return PoissonPlan(grid, "periodic", scheme, eig[:, :ky].copy(), rhs[:, :ky].copy())
    if grid.bc == "dirichlet":
        l1x, l2x = sine_symbols(grid.nx)
        l1y, l2y = sine_symbols(grid.ny)
        eig = np.outer(l1x, l2y) / dx2 + np.outer(l2x, l1y) / dy2
        return PoissonPlan(grid, "dirichlet", scheme, eig)
    l1x, sx, sx_inv = _neumann_eigen(grid.nx)
    l1y, sy, sy_inv = _neumann_eigen(grid.ny)
    l2x, l2y = 1 + l1x / 12, 1 + l1y / 12
    eig = np.outer(l1x, l2y) / dx2 + np.outer(l2x, l1y) / dy2
    eig[0, 0] = 0.0
    # rows of S^{-1} are left eigenvectors; the zero-eigenvalue row spans null(D^T)
    null_left = np.outer(sx_inv[0], sy_inv[0])
    return PoissonPlan(grid, "neumann", scheme, eig, None, sx, sx_inv, sy, sy_inv, null_left)


def _full_rhs(F: np.ndarray, scheme: str) -> np.ndarray:
    """Right side at interior points from ``f`` on the full ``(nx+2, ny+2)`` grid."""
    c = F[1:-1, 1:-1]
    if scheme == "compact":
        t = (F[:-2] + 10 * F[1:-1] + F[2:]) / 12
        return (t[:, :-2] + 10 * t[:, 1:-1] + t[:, 2:]) / 12
    return (8 * c + F[:-2, 1:-1] + F[2:, 1:-1] + F[1:-1, :-2] + F[1:-1, 2:]) / 12


def _full_lhs(U: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """``W2y Dxx U / dx^2 + W2x Dyy U / dy^2`` at interior points of a full array."""
    dxx = U[:-2] - 2 * U[1:-1] + U[2:]
    dyy = U[:, :-2] - 2 * U[:, 1:-1] + U[:, 2:]
    return ((dxx[:, :-2] + 10 * dxx[:, 1:-1] + dxx[:, 2:]) / (12 * dx**2)
            + (dyy[:-2] + 10 * dyy[1:-1] + dyy[2:]) / (12 * dy**2))


def _full_values(f, grid: Grid2D) -> np.ndarray:
    if callable(f):
        X, Y = grid.mesh_full()
        return np.broadcast_to(f(X, Y), X.shape).astype(float)
    F = np.asarray(f, dtype=float)
    if F.shape != (grid.nx + 2, grid.ny + 2):
        raise DimensionError(f"right side must be given on the full {(grid.nx + 2, grid.ny + 2)} grid")
    return F


def solve_poisson_periodic(f: Field2D, scheme: str = "compact") -> Field2D:
    """Zero-mean least-squares solution of the periodic compact Poisson problem.

    The mean of ``f`` (the incompatible component) is discarded.
    """
    grid = f.grid
    if not grid.periodic:
        raise ValueError("periodic solver needs a periodic grid")
    plan = make_poisson_plan(grid, scheme)
    fh = sfft.rfft2(f.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        uh = np.where(plan.eig != 0.0, fh * plan.rhs_symbol / plan.eig, 0.0)
    return f.like(sfft.irfft2(uh, s=grid.shape))


def solve_poisson_dirichlet(f, grid: Grid2D, g: BoundaryData | None = None,
                            scheme: str = "compact") -> Field2D:
    """Sine-transform solve with (possibly nonhomogeneous) Dirichlet data.

    ``f`` is an ``(nx+2, ny+2)`` array on the full grid, or a callable
    ``f(x, y)``; ``g`` holds the boundary values of ``u``.
    """
    if grid.bc != "dirichlet":
        raise ValueError("Dirichlet solver needs a dirichlet grid")
    F = _full_values(f, grid)
    g = g if g is not None else BoundaryData.zeros(grid)
    g.check(grid)
    Ub = np.zeros((grid.nx + 2, grid.ny + 2))
    Ub[:, 0], Ub[:, -1] = g.bottom, g.top
    Ub[0, :], Ub[-1, :] = g.left, g.right
    R = _full_rhs(F, scheme) - _full_lhs(Ub, grid.dx, grid.dy)
    plan = make_poisson_plan(grid, scheme)
    T = inverse_sine_transform(inverse_sine_transform(R, 0), 1) / plan.eig
    return Field2D(grid, sine_transform(sine_transform(T, 0), 1))


def neumann_wall_values(U: np.ndarray, grid: Grid2D, g: BoundaryData) -> np.ndarray:
    """Extend interior values to the full grid through the one-sided closures.

    Edge values come from the closure across the wall; corners are obtained
    by applying the y-closure along the left/right columns with the
    bottom/top data at the corner.
    """
    Ex, Ey = neumann_extension(grid.nx), neumann_extension(grid.ny)
    C = np.zeros((grid.nx + 2, grid.ny))
    C[0] = NEUMANN_DATA_WEIGHT * grid.dx * g.left[1:-1]
    C[-1] = NEUMANN_DATA_WEIGHT * grid.dx * g.right[1:-1]
    full = (Ex @ U + C) @ Ey.T
    full[:, 0] += NEUMANN_DATA_WEIGHT * grid.dy * g.bottom
    full[:, -1] += NEUMANN_DATA_WEIGHT * grid.dy * g.top
    return full


def solve_poisson_neumann(f, grid: Grid2D, g: BoundaryData | None = None,
                          scheme: str = "compact") -> Field2D:
    """Eigendecomposition solve with Neumann data (outward normal derivatives).

    The constant null mode makes the system singular: the right side is
    projected onto the range of the operator (least squares) and the
    returned solution has zero mean.
    """
    if grid.bc != "neumann":
        raise ValueError("Neumann solver needs a neumann grid")
    F = _full_values(f, grid)
    g = g if g is not None else BoundaryData.zeros(grid)
    g.check(grid)
    C = neumann_wall_values(np.zeros(grid.shape), grid, g)
    R = _full_rhs(F, scheme) - _full_lhs(C, grid.dx, grid.dy)
    plan = make_poisson_plan(grid, scheme)
    return Field2D(grid, _neumann_solve(plan, R))


def _neumann_solve(plan: PoissonPlan, R: np.ndarray) -> np.ndarray:
    w = plan.null_left
    R = R - (np.sum(w * R) / np.sum(w * w)) * w
    T = plan.sx_inv @ R @ plan.sy_inv.T
    with np.errstate(divide="ignore", invalid="ignore"):
        T = np.where(plan.eig != 0.0, T / plan.eig, 0.0)
    U = plan.sx @ T @ plan.sy.T
    return U - U.mean()


def solve_poisson_ninepoint(f, grid: Grid2D, g: BoundaryData | None = None) -> Field2D:
    """Same left side, classical nine-point right-side weighting."""
    if grid.bc == "periodic":
        if not isinstance(f, Field2D):
            f = grid.sample(f) if callable(f) else Field2D(grid, f)
        return solve_poisson_periodic(f, scheme="ninepoint")
    if grid.bc == "dirichlet":
        return solve_poisson_dirichlet(f, grid, g, scheme="ninepoint")
    return solve_poisson_neumann(f, grid, g, scheme="ninepoint")


def compact_laplacian(u: Field2D) -> Field2D:
    """``W2x^{-1} Dxx u / dx^2 + W2y^{-1} Dyy u / dy^2`` on a periodic grid."""
    g = u.grid
    a = u.values
    return u.like(solve_along(W2, apply_along(DXX, a, 0), 0) / g.dx**2
                  + solve_along(W2, apply_along(DXX, a, 1), 1) / g.dy**2)


# --- implicit heat stepping -------------------------------------------------

HEAT_METHODS = ("backward-euler", "crank-nicolson")
BE_MIN_RATIO = 5 / 48
CN_RATIO_WINDOW = (5 / 24, 5 / 12)
_WINDOW_RTOL = 1e-12

W2_STENCIL = np.outer([1.0, 10.0, 1.0], [1.0, 10.0, 1.0]) / 144
LAPLACE_STENCIL = np.array([[1.0, 4.0, 1.0], [4.0, -20.0, 4.0], [1.0, 4.0, 1.0]]) / 6


@dataclass(frozen=True, eq=False)
class HeatStepPlan:
    """One implicit step ``A u^{n+1} = B u^n`` of ``u_t = u_xx + u_yy``.

    The discrete maximum principle holds for backward Euler when
    ``dt/h^2 >= 5/48`` and for Crank-Nicolson when
    ``5/24 <= dt/h^2 <= 5/12``; plans outside these windows are rejected
    unless ``enforce_window`` is False (for experiments past the guarantee).
    """

    grid: Grid2D
    dt: float
    method: str = "backward-euler"
    enforce_window: bool = True

    def __post_init__(self):
        g = self.grid
        if not g.periodic:
            raise ConfigurationError("heat stepping is implemented for periodic grids")
        if not np.isclose(g.dx, g.dy, rtol=1e-12, atol=0.0):
            raise ConfigurationError("heat stepping needs square cells (dx == dy)")
        if self.method not in HEAT_METHODS:
            raise ConfigurationError(f"unknown heat method {self.method!r}")
        if not self.dt > 0:
            raise ConfigurationError("heat step needs dt > 0")
        if not self.enforce_window:
            return
        r = self.ratio
        lo_tol = 1 - _WINDOW_RTOL
        hi_tol = 1 + _WINDOW_RTOL
        if self.method == "backward-euler" and r < BE_MIN_RATIO * lo_tol:
            raise ConfigurationError(f"backward Euler needs dt/h^2 >= 5/48, got {r:.6g}")
        if self.method == "crank-nicolson":
            lo, hi = CN_RATIO_WINDOW
            if not (lo * lo_tol <= r <= hi * hi_tol):
                raise ConfigurationError(f"Crank-Nicolson needs 5/24 <= dt/h^2 <= 5/12, got {r:.6g}")

    @property
    def ratio(self) -> float:
        return self.dt / self.grid.dx**2

    @property
    def theta(self) -> float:
        return 1.0 if self.method == "backward-euler" else 0.5

    def stencils(self) -> tuple[np.ndarray, np.ndarray]:
        """3x3 stencils of A and B (rows follow y from top, columns x)."""
        r, th = self.ratio, self.theta
        A = W2_STENCIL - th * r * LAPLACE_STENCIL
        B = W2_STENCIL + (1 - th) * r * LAPLACE_STENCIL
        return A, B

    def symbols(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        l1x, l2x = periodic_symbols(g.nx)
        l1y, l2y = periodic_symbols(g.ny)
        w = np.outer(l2x, l2y)
        lap = np.outer(l1x, l2y) + np.outer(l2x, l1y)
        r, th = self.ratio, self.theta
        return w - th * r * lap, w + (1 - th) * r * lap


def assemble_stencil_matrix(stencil: np.ndarray, nx: int, ny: int) -> np.ndarray:
    """Dense periodic matrix of a symmetric 3x3 stencil, unknowns ordered ``i*ny + j``."""
    A = np.zeros((nx * ny, nx * ny))
    for i in range(nx):
        for j in range(ny):
            row = i * ny + j
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    col = ((i + di) % nx) * ny + (j + dj) % ny
                    A[row, col] += stencil[1 - dj, 1 + di]
    return A


def implicit_heat_step(u: Field2D, plan: HeatStepPlan) -> Field2D:
    if u.grid != plan.grid:
        raise DimensionError("field and plan live on different grids")
    a_sym, b_sym = plan.symbols()
    return u.like(np.real(sfft.ifft2(sfft.fft2(u.values) * (b_sym / a_sym))))
