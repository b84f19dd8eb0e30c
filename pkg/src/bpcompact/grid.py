"""Uniform rectangular grids, point-value fields and error norms."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

BC_KINDS = ("periodic", "dirichlet", "neumann")
# one-sided Neumann closures reach four points in from the wall
MIN_POINTS = 4


class DimensionError(ValueError):
    """Raised when array shapes or grids do not match."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid on ``[0, lx] x [0, ly]``.

    Periodic grids hold ``nx`` samples per period at ``x_i = i*dx``,
    ``i = 1..nx`` with ``dx = lx/nx``.  Bounded grids (dirichlet/neumann)
    hold the ``nx`` interior points of ``x_i = i*dx``, ``i = 0..nx+1``,
    with ``dx = lx/(nx+1)``.
    """

    nx: int
    ny: int
    lx: float = 2 * np.pi
    ly: float = 2 * np.pi
    bc: str = "periodic"

    def __post_init__(self):
        if self.bc not in BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.bc!r}")
        if self.nx < MIN_POINTS or self.ny < MIN_POINTS:
            raise ValueError(f"grids need at least {MIN_POINTS} points per axis")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.lx / (self.nx if self.periodic else self.nx + 1)

    @property
    def dy(self) -> float:
        return self.ly / (self.ny if self.periodic else self.ny + 1)

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(1, self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return self.dy * np.arange(1, self.ny + 1)

    @property
    def x_full(self) -> np.ndarray:
        """x coordinates including both boundary points (bounded grids)."""
        return self.dx * np.arange(0, self.nx + 2)

    @property
    def y_full(self) -> np.ndarray:
        return self.dy * np.arange(0, self.ny + 2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def mesh_full(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_full, self.y_full, indexing="ij")

    def sample(self, func) -> "Field2D":
        """Evaluate ``func(x, y)`` at the stored grid points."""
        X, Y = self.mesh()
        return Field2D(self, np.broadcast_to(func(X, Y), self.shape))


class Field2D:
    """Point values on a :class:`Grid2D`, axis 0 = x, axis 1 = y.

    The stored array is read-only; every operation returns a new field.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values):
        arr = np.array(values, dtype=float)
        if arr.shape != grid.shape:
            raise DimensionError(f"values of shape {arr.shape} do not match grid {grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("field contains non-finite values")
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    def __repr__(self):
        return f"Field2D(grid={self.grid!r}, min={self.values.min():.6g}, max={self.values.max():.6g})"

    def like(self, values) -> "Field2D":
        return Field2D(self.grid, values)

    def __add__(self, other):
        return self.like(self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return self.like(self.values - _vals(other, self.grid))

    def __mul__(self, other):
        return self.like(self.values * _vals(other, self.grid))

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def sum(self) -> float:
        return float(self.values.sum())

    def mean(self) -> float:
        return float(self.values.mean())


def _vals(other, grid):
    if isinstance(other, Field2D):
        if other.grid != grid:
            raise DimensionError("fields live on different grids")
        return other.values
    return other


def error_norms(numeric: Field2D, exact: Field2D) -> tuple[float, float]:
    """Area-weighted L2 and max-norm of ``numeric - exact``.

    ``l2 = sqrt(dx*dy*sum(e**2))`` so that a constant error ``c`` on
    ``[0, 2pi]^2`` has ``l2 = 2*pi*|c|``.
    """
    if numeric.grid != exact.grid:
        raise DimensionError("error norms need fields on the same grid")
    g = numeric.grid
    e = numeric.values - exact.values
    l2 = float(np.sqrt(g.dx * g.dy * np.sum(e * e)))
    linf = float(np.max(np.abs(e)))
    return l2, linf


def convergence_order(errors: Sequence[tuple[float, float]]) -> list[float]:
    """Observed orders ``log(e[k-1]/e[k]) / log(n[k]/n[k-1])``."""
    if len(errors) < 2:
        raise ValueError("need at least two (n, error) pairs")
    ns = [float(n) for n, _ in errors]
    es = [float(e) for _, e in errors]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("grid sizes must be strictly increasing")
    if any(not e > 0 for e in es):
        raise ValueError("order undefined for zero or negative errors")
    return [float(np.log(es[k - 1] / es[k]) / np.log(ns[k] / ns[k - 1])) for k in range(1, len(es))]


def write_field_csv(path, field: Field2D) -> None:
    """Write ``x,y,value`` rows with 17 significant digits."""
    X, Y = field.grid.mesh()
    data = np.column_stack([X.ravel(), Y.ravel(), field.values.ravel()])
    np.savetxt(path, data, delimiter=",", fmt="%.17g", header="x,y,value", comments="")


def read_field_csv(path, grid: Grid2D) -> Field2D:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.nx * grid.ny:
        raise DimensionError(f"{path}: {data.shape[0]} rows for a {grid.nx}x{grid.ny} grid")
    return Field2D(grid, data[:, 2].reshape(grid.shape))


def write_field_matrix(path, field: Field2D) -> None:
    """Gnuplot ``nonuniform matrix`` dump: first row holds x, first column y."""
    g = field.grid
    out = np.empty((g.ny + 1, g.nx + 1))
    out[0, 0] = g.nx
    out[0, 1:] = g.x
    out[1:, 0] = g.y
    out[1:, 1:] = field.values.T
    np.savetxt(path, out, fmt="%.17g")
