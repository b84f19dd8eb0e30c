import numpy as np
import pytest

from bpcompact.compact import line_operator
from bpcompact.elliptic import (
    BoundaryData, ConfigurationError, HeatStepPlan, assemble_stencil_matrix, compact_laplacian,
    implicit_heat_step, inverse_sine_transform, make_poisson_plan, neumann_extension, sine_transform,
    solve_poisson_dirichlet, solve_poisson_neumann, solve_poisson_ninepoint, solve_poisson_periodic,
)
from bpcompact.grid import DimensionError, Field2D, Grid2D, convergence_order, error_norms

W = np.array([1.0, 10.0, 1.0]) / 12
D2 = np.array([1.0, -2.0, 1.0])
NINE = np.array([[0.0, 1.0, 0.0], [1.0, 8.0, 1.0], [0.0, 1.0, 0.0]]) / 12


def stencil_coef(di, dj, dx, dy):
    return W[dj + 1] * D2[di + 1] / dx**2 + W[di + 1] * D2[dj + 1] / dy**2


def rhs_coef(di, dj, scheme):
    return W[di + 1] * W[dj + 1] if scheme == "compact" else NINE[di + 1, dj + 1]


# --- dense oracles built node by node -----------------------------------------

def dense_periodic(grid, f, scheme):
    nx, ny = grid.shape
    A = np.zeros((nx * ny, nx * ny))
    b = np.zeros(nx * ny)
    for i in range(nx):
        for j in range(ny):
            r = i * ny + j
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    c = ((i + di) % nx) * ny + (j + dj) % ny
                    A[r, c] += stencil_coef(di, dj, grid.dx, grid.dy)
                    b[r] += rhs_coef(di, dj, scheme) * f[(i + di) % nx, (j + dj) % ny]
    u = np.linalg.pinv(A) @ b
    return u.reshape(nx, ny)


def full_grid_map(grid, bc, g):
    """Affine map interior -> full grid: full = M @ u + m0."""
    nx, ny = grid.shape
    M = np.zeros((nx + 2, ny + 2, nx * ny))
    m0 = np.zeros((nx + 2, ny + 2))
    for i in range(nx):
        for j in range(ny):
            M[i + 1, j + 1, i * ny + j] = 1.0
    if bc == "dirichlet":
        m0[:, 0], m0[:, -1] = g.bottom, g.top
        m0[0, :], m0[-1, :] = g.left, g.right
        return M, m0
    cl = np.array([48.0, -36.0, 16.0, -3.0]) / 25
    # edges without corners
    for j in range(1, ny + 1):
        M[0, j] = cl @ M[1:5, j]
        m0[0, j] = 12 * grid.dx * g.left[j] / 25
        M[-1, j] = cl @ M[-2:-6:-1, j]
        m0[-1, j] = 12 * grid.dx * g.right[j] / 25
    for i in range(1, nx + 1):
        M[i, 0] = cl @ M[i, 1:5]
        m0[i, 0] = 12 * grid.dy * g.bottom[i] / 25
        M[i, -1] = cl @ M[i, -2:-6:-1]
        m0[i, -1] = 12 * grid.dy * g.top[i] / 25
    # corners through the bottom/top data along the left/right columns
    for i in (0, nx + 1):
        M[i, 0] = cl @ M[i, 1:5]
        m0[i, 0] = cl @ m0[i, 1:5] + 12 * grid.dy * g.bottom[i] / 25
        M[i, -1] = cl @ M[i, -2:-6:-1]
        m0[i, -1] = cl @ m0[i, -2:-6:-1] + 12 * grid.dy * g.top[i] / 25
    return M, m0


def dense_bounded(grid, F, g, scheme):
    nx, ny = grid.shape
    M, m0 = full_grid_map(grid, grid.bc, g)
    A = np.zeros((nx * ny, nx * ny))
    b = np.zeros(nx * ny)
    for i in range(1, nx + 1):
        for j in range(1, ny + 1):
            r = (i - 1) * ny + (j - 1)
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    c = stencil_coef(di, dj, grid.dx, grid.dy)
                    A[r] += c * M[i + di, j + dj]
                    b[r] -= c * m0[i + di, j + dj]
                    b[r] += rhs_coef(di, dj, scheme) * F[i + di, j + dj]
    if grid.bc == "dirichlet":
        return np.linalg.solve(A, b).reshape(nx, ny)
    u = (np.linalg.pinv(A) @ b).reshape(nx, ny)
    return u - u.mean()


rng = np.random.default_rng(7)


@pytest.mark.parametrize("scheme", ["compact", "ninepoint"])
@pytest.mark.parametrize("shape", [(8, 8), (6, 8), (5, 7)])
def test_periodic_matches_dense_least_squares(scheme, shape):
    grid = Grid2D(*shape, lx=2 * np.pi, ly=3.0)
    f = rng.standard_normal(shape)
    fast = solve_poisson_periodic(Field2D(grid, f), scheme)
    assert np.max(np.abs(fast.values - dense_periodic(grid, f, scheme))) < 1e-9
    assert abs(fast.mean()) < 1e-12


@pytest.mark.parametrize("scheme", ["compact", "ninepoint"])
@pytest.mark.parametrize("shape", [(6, 6), (5, 8), (8, 7)])
def test_dirichlet_matches_dense_solve(scheme, shape):
    grid = Grid2D(*shape, lx=1.0, ly=2.0, bc="dirichlet")
    F = rng.standard_normal((shape[0] + 2, shape[1] + 2))
    g = BoundaryData(*(rng.standard_normal(k) for k in (shape[1] + 2, shape[1] + 2, shape[0] + 2, shape[0] + 2)))
    fast = solve_poisson_dirichlet(F, grid, g, scheme)
    assert np.max(np.abs(fast.values - dense_bounded(grid, F, g, scheme))) < 1e-11


@pytest.mark.parametrize("scheme", ["compact", "ninepoint"])
@pytest.mark.parametrize("shape", [(6, 6), (5, 8), (8, 7)])
def test_neumann_matches_dense_least_squares(scheme, shape):
    grid = Grid2D(*shape, lx=1.0, ly=2.0, bc="neumann")
    F = rng.standard_normal((shape[0] + 2, shape[1] + 2))
    g = BoundaryData(*(rng.standard_normal(k) for k in (shape[1] + 2, shape[1] + 2, shape[0] + 2, shape[0] + 2)))
    fast = solve_poisson_neumann(F, grid, g, scheme)
    assert np.max(np.abs(fast.values - dense_bounded(grid, F, g, scheme))) < 1e-9
    assert abs(fast.mean()) < 1e-12


def test_ninepoint_dispatches_by_boundary():
    F = rng.standard_normal((8, 8))
    grid = Grid2D(6, 6, 1.0, 1.0, "dirichlet")
    a = solve_poisson_ninepoint(F, grid)
    b = solve_poisson_dirichlet(F, grid, scheme="ninepoint")
    assert np.array_equal(a.values, b.values)
    pg = Grid2D(6, 6)
    assert np.array_equal(solve_poisson_ninepoint(F[:6, :6], pg).values,
                          solve_poisson_periodic(Field2D(pg, F[:6, :6]), "ninepoint").values)


@pytest.mark.parametrize("n", [4, 7, 16, 33])
def test_sine_transform_normalization(n):
    S = sine_transform(np.eye(n), 0)
    m = np.arange(1, n + 1)
    assert np.allclose(S, np.sin(np.pi * np.outer(m, m) / (n + 1)), atol=1e-13)
    assert np.allclose(S, S.T, atol=1e-14)
    assert np.allclose(S @ S, (n + 1) / 2 * np.eye(n), atol=1e-12)
    assert np.allclose(inverse_sine_transform(S, 0), np.eye(n), atol=1e-12)


def test_plan_eigenvalue_invariants():
    p = make_poisson_plan(Grid2D(8, 6))
    assert p.eig[0, 0] == 0.0 and np.count_nonzero(p.eig == 0.0) == 1
    d = make_poisson_plan(Grid2D(8, 6, 1.0, 1.0, "dirichlet"))
    assert np.all(d.eig < 0)
    n = make_poisson_plan(Grid2D(8, 6, 1.0, 1.0, "neumann"))
    assert np.count_nonzero(n.eig == 0.0) == 1
    # the 1D Neumann operator really has the constant vector in its kernel
    nx = 8
    D = np.zeros((nx, nx + 2))
    for i in range(nx):
        D[i, i:i + 3] = (1, -2, 1)
    assert np.allclose(D @ neumann_extension(nx) @ np.ones(nx), 0, atol=1e-13)


def test_zero_data_gives_zero():
    for bc in ("dirichlet", "neumann"):
        grid = Grid2D(6, 6, 1.0, 1.0, bc)
        solver = solve_poisson_dirichlet if bc == "dirichlet" else solve_poisson_neumann
        assert np.all(solver(np.zeros((8, 8)), grid).values == 0.0)
    grid = Grid2D(6, 6)
    assert np.all(solve_poisson_periodic(Field2D(grid, np.zeros((6, 6)))).values == 0.0)


def test_periodic_solve_then_apply_recovers_compatible_part():
    grid = Grid2D(16, 12, 2 * np.pi, 4.0)
    f = Field2D(grid, rng.standard_normal(grid.shape))
    u = solve_poisson_periodic(f)
    back = compact_laplacian(u).values
    assert np.max(np.abs(back - (f.values - f.mean()))) < 1e-10


def test_dimension_checks():
    grid = Grid2D(6, 6, 1.0, 1.0, "dirichlet")
    with pytest.raises(DimensionError):
        solve_poisson_dirichlet(np.zeros((6, 6)), grid)
    with pytest.raises(DimensionError):
        solve_poisson_dirichlet(np.zeros((8, 8)), grid, BoundaryData.zeros(Grid2D(5, 6, 1.0, 1.0, "dirichlet")))


# --- convergence on manufactured solutions ------------------------------------

def sol1(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y) + 2 * x


def lap1(x, y):
    return -2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)


def sol2(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y) + 4 * x**4 * y**4


def lap2(x, y):
    return lap1(x, y) + 48 * x**2 * y**4 + 48 * x**4 * y**2


def dirichlet_errors(sol, lap, scheme, ns=(32, 64)):
    out = []
    for n in ns:
        # [0,1] x [0,2] with dx = (2/3) dy
        grid = Grid2D(3 * n // 4 - 1, n - 1, 1.0, 2.0, "dirichlet")
        u = solve_poisson_dirichlet(lap, grid, BoundaryData.from_function(grid, sol), scheme)
        out.append((n, error_norms(u, grid.sample(sol))[1]))
    return out


@pytest.mark.parametrize("scheme", ["compact", "ninepoint"])
@pytest.mark.parametrize("sol,lap", [(sol1, lap1), (sol2, lap2)])
def test_dirichlet_fourth_order(scheme, sol, lap):
    errs = dirichlet_errors(sol, lap, scheme)
    assert convergence_order(errs)[-1] >= 3.8


def neu_exact(x, y):
    return np.cos(np.pi * x) * np.cos(3 * np.pi * y) + np.sin(np.pi * y) + x**4


def neu_lap(x, y):
    return (-10 * np.pi**2 * np.cos(np.pi * x) * np.cos(3 * np.pi * y)
            - np.pi**2 * np.sin(np.pi * y) + 12 * x**2)


@pytest.mark.parametrize("scheme", ["compact", "ninepoint"])
def test_neumann_fourth_order(scheme):
    errs = []
    for n in (32, 64):
        # [0,1] x [0,2] with dx = (3/2) dy; data are outward normal derivatives
        grid = Grid2D(n - 1, 3 * n - 1, 1.0, 2.0, "neumann")
        g = BoundaryData.from_edges(grid, 0.0, 4.0, -np.pi, np.pi)
        u = solve_poisson_neumann(neu_lap, grid, g, scheme)
        exact = grid.sample(neu_exact)
        errs.append((n, error_norms(u + (exact.mean() - u.mean()), exact)[1]))
    assert convergence_order(errs)[-1] >= 3.8


def test_periodic_fourth_order():
    errs = []
    for n in (32, 64):
        grid = Grid2D(n, n)
        u = solve_poisson_periodic(grid.sample(lambda x, y: -2 * np.sin(x) * np.sin(y)))
        errs.append((n, error_norms(u, grid.sample(lambda x, y: np.sin(x) * np.sin(y)))[1]))
    assert convergence_order(errs)[-1] >= 3.9


# --- implicit heat stepping ---------------------------------------------------

def heat_plan(ratio, method, n=12):
    grid = Grid2D(n, n)
    return HeatStepPlan(grid, ratio * grid.dx**2, method)


def test_heat_windows_rejected_outside():
    with pytest.raises(ConfigurationError):
        heat_plan(5 / 48 * 0.99, "backward-euler")
    for r in (5 / 24 * 0.99, 5 / 12 * 1.01):
        with pytest.raises(ConfigurationError):
            heat_plan(r, "crank-nicolson")
    with pytest.raises(ConfigurationError):
        HeatStepPlan(Grid2D(8, 8, 1.0, 2.0), 1.0)


@pytest.mark.parametrize("ratio,method", [(5 / 48, "backward-euler"), (3.0, "backward-euler"),
                                          (5 / 24, "crank-nicolson"), (5 / 12, "crank-nicolson")])
def test_heat_m_matrix_and_maximum_principle(ratio, method):
    plan = heat_plan(ratio, method)
    A_st, B_st = plan.stencils()
    n = plan.grid.nx
    A = assemble_stencil_matrix(A_st, n, n)
    off = A - np.diag(np.diag(A))
    assert np.all(np.diag(A) > 0) and np.all(off <= 1e-15)
    assert np.all(np.diag(A) - np.abs(off).sum(axis=1) >= -1e-12)
    assert np.all(B_st >= -1e-15)
    B = assemble_stencil_matrix(B_st, n, n)
    for _ in range(100):
        u = rng.random((n, n))
        out = implicit_heat_step(Field2D(plan.grid, u), plan).values
        assert out.min() >= u.min() - 1e-12 and out.max() <= u.max() + 1e-12
    dense = np.linalg.solve(A, B @ u.ravel()).reshape(n, n)
    assert np.max(np.abs(dense - out)) < 1e-12


def test_heat_preserves_constants():
    plan = heat_plan(0.3, "crank-nicolson")
    out = implicit_heat_step(Field2D(plan.grid, np.full((12, 12), 2.5)), plan)
    assert np.allclose(out.values, 2.5, atol=1e-14, rtol=0)


def test_bounded_line_operators_match_neumann_identity():
    # W2 - Dxx/12 stays the identity after the closure
    n = 9
    E = neumann_extension(n)
    Db = np.zeros((n, n + 2))
    Wb = np.zeros((n, n + 2))
    for i in range(n):
        Db[i, i:i + 3] = D2
        Wb[i, i:i + 3] = W
    assert np.allclose((Wb - Db / 12) @ E, np.eye(n), atol=1e-14)
    assert line_operator("W2", n, "bounded").matrix().shape == (n, n)
