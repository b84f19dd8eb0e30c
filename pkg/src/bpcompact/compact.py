"""Fourth-order compact finite-difference line operators.

Four tridiagonal operators act along one axis of an array::

    W1  = (1, 4, 1) / 6        Dx  = (-1, 0, 1) / 2
    W2  = (1, 10, 1) / 12      Dxx = (1, -2, 1)

The compact derivatives are ``f' = W1^{-1} Dx f / dx`` and
``f'' = W2^{-1} Dxx f / dx**2``.  Periodic operators are circulant; bounded
operators are the same bands without the wrap-around corners.
"""

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .grid import DimensionError, Field2D

W1, W2, DX, DXX = "W1", "W2", "Dx", "Dxx"

# (sub, diag, super) bands
STENCILS = {
    W1: (1 / 6, 4 / 6, 1 / 6),
    W2: (1 / 12, 10 / 12, 1 / 12),
    DX: (-0.5, 0.0, 0.5),
    DXX: (1.0, -2.0, 1.0),
}


class NotInvertibleError(ValueError):
    """Raised when solving with a singular operator (Dx, Dxx)."""


@numba.njit(cache=True)
def _tri_factor(a, diag, c):
    n = diag.shape[0]
    cp = np.empty(n)
    inv = np.empty(n)
    inv[0] = 1.0 / diag[0]
    cp[0] = c * inv[0]
    for i in range(1, n):
        inv[i] = 1.0 / (diag[i] - a * cp[i - 1])
        cp[i] = c * inv[i]
    return cp, inv


@numba.njit(cache=True)
def _tri_solve(a, cp, inv, d):
    # d is (n, m); every column is an independent right-hand side
    n, m = d.shape
    x = np.empty_like(d)
    for j in range(m):
        x[0, j] = d[0, j] * inv[0]
    for i in range(1, n):
        for j in range(m):
            x[i, j] = (d[i, j] - a * x[i - 1, j]) * inv[i]
    for i in range(n - 2, -1, -1):
        for j in range(m):
            x[i, j] -= cp[i] * x[i + 1, j]
    return x


@numba.njit(cache=True)
def _cyclic_correct(x, z, coef_last, denom):
    n, m = x.shape
    for j in range(m):
        f = (x[0, j] + coef_last * x[n - 1, j]) / denom
        for i in range(n):
            x[i, j] -= z[i] * f
    return x


@dataclass(frozen=True)
class _Factors:
    a: float
    cp: np.ndarray
    inv: np.ndarray
    # Sherman-Morrison data, periodic only
    z: np.ndarray | None = None
    coef_last: float = 0.0
    denom: float = 1.0


@lru_cache(maxsize=None)
def _factors(kind: str, bc: str, n: int) -> _Factors:
    a, b, c = STENCILS[kind]
    diag = np.full(n, b)
    if bc == "bounded":
        cp, inv = _tri_factor(a, diag, c)
        return _Factors(a, cp, inv)
    # A = B + u v^T with u = (gamma, 0.., 0, c_corner), v = (1, 0.., 0, a_corner/gamma)
    # where a_corner = A[0, n-1] = a and c_corner = A[n-1, 0] = c
    gamma = -b
    diag[0] -= gamma
    diag[-1] -= c * a / gamma
    cp, inv = _tri_factor(a, diag, c)
    u = np.zeros((n, 1))
    u[0, 0] = gamma
    u[-1, 0] = c
    z = _tri_solve(a, cp, inv, u)[:, 0]
    coef_last = a / gamma
    denom = 1.0 + z[0] + coef_last * z[-1]
    for arr in (cp, inv, z):
        arr.flags.writeable = False
    return _Factors(a, cp, inv, z, coef_last, denom)


@dataclass(frozen=True)
class LineOperator:
    """One of W1, W2, Dx, Dxx on lines of length ``n``.

    ``bc`` is ``"periodic"`` (circulant) or ``"bounded"`` (plain band).
    """

    kind: str
    bc: str
    n: int

    def __post_init__(self):
        if self.kind not in STENCILS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.bc not in ("periodic", "bounded"):
            raise ValueError(f"unknown line boundary {self.bc!r}")
        if self.n < 3:
            raise ValueError("compact operators need at least 3 points")

    @property
    def invertible(self) -> bool:
        return self.kind in (W1, W2)

    def matrix(self) -> np.ndarray:
        lo, d, hi = STENCILS[self.kind]
        n = self.n
        A = d * np.eye(n) + lo * np.eye(n, k=-1) + hi * np.eye(n, k=1)
        if self.bc == "periodic":
            A[0, -1] += lo
            A[-1, 0] += hi
        return A

    def apply(self, line, axis: int = 0) -> np.ndarray:
        f = np.asarray(line, dtype=float)
        if f.shape[axis] != self.n:
            raise DimensionError(f"line length {f.shape[axis]} != operator size {self.n}")
        lo, d, hi = STENCILS[self.kind]
        if self.bc == "periodic":
            out = lo * np.roll(f, 1, axis=axis) + hi * np.roll(f, -1, axis=axis)
            if d:
                out += d * f
            return out
        f = np.moveaxis(f, axis, 0)
        out = d * f
        out[1:] += lo * f[:-1]
        out[:-1] += hi * f[1:]
        return np.moveaxis(out, 0, axis)

    def solve(self, rhs, axis: int = 0) -> np.ndarray:
        if not self.invertible:
            raise NotInvertibleError(f"{self.kind} is singular and cannot be inverted")
        r = np.asarray(rhs, dtype=float)
        if r.shape[axis] != self.n:
            raise DimensionError(f"rhs length {r.shape[axis]} != operator size {self.n}")
        fac = _factors(self.kind, self.bc, self.n)
        moved = np.moveaxis(r, axis, 0)
        shape = moved.shape
        d = np.ascontiguousarray(moved.reshape(self.n, -1))
        x = _tri_solve(fac.a, fac.cp, fac.inv, d)
        if fac.z is not None:
            x = _cyclic_correct(x, fac.z, fac.coef_last, fac.denom)
        return np.moveaxis(x.reshape(shape), 0, axis)


@lru_cache(maxsize=None)
def line_operator(kind: str, n: int, bc: str = "periodic") -> LineOperator:
    return LineOperator(kind, bc, n)


def apply(op: LineOperator, line, axis: int = 0) -> np.ndarray:
    return op.apply(line, axis)


def solve(op: LineOperator, rhs, axis: int = 0) -> np.ndarray:
    return op.solve(rhs, axis)


# periodic array helpers used throughout the solver

def apply_along(kind: str, arr: np.ndarray, axis: int) -> np.ndarray:
    return line_operator(kind, arr.shape[axis]).apply(arr, axis)


def solve_along(kind: str, arr: np.ndarray, axis: int) -> np.ndarray:
    return line_operator(kind, arr.shape[axis]).solve(arr, axis)


def _spacing(field: Field2D, axis: int) -> float:
    if not field.grid.periodic:
        raise ValueError("compact derivatives are defined on periodic axes only")
    if axis not in (0, 1):
        raise ValueError("axis must be 0 (x) or 1 (y)")
    return field.grid.dx if axis == 0 else field.grid.dy


def derivative_1(field: Field2D, axis: int) -> Field2D:
    """Fourth-order compact first derivative along ``axis`` (0 = x, 1 = y)."""
    h = _spacing(field, axis)
    return field.like(solve_along(W1, apply_along(DX, field.values, axis), axis) / h)


def derivative_2(field: Field2D, axis: int) -> Field2D:
    """Fourth-order compact second derivative along ``axis``."""
    h = _spacing(field, axis)
    return field.like(solve_along(W2, apply_along(DXX, field.values, axis), axis) / h**2)
