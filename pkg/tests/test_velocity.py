import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bpcompact.compact import LineOperator
from bpcompact.grid import Field2D, Grid2D, convergence_order, error_norms
from bpcompact.velocity import VelocityPair, divergence_residual, reconstruct_velocity


def test_constant_stream_function_gives_rest():
    g = Grid2D(8, 8)
    vel = reconstruct_velocity(Field2D(g, np.full(g.shape, 3.0)))
    assert np.allclose(vel.u.values, 0, atol=1e-13) and np.allclose(vel.v.values, 0, atol=1e-13)


def test_fourth_order_velocity():
    eu, ev = [], []
    for n in (32, 64):
        g = Grid2D(n, n)
        vel = reconstruct_velocity(g.sample(lambda x, y: np.sin(x) * np.sin(y)))
        eu.append((n, error_norms(vel.u, g.sample(lambda x, y: -np.sin(x) * np.cos(y)))[1]))
        ev.append((n, error_norms(vel.v, g.sample(lambda x, y: np.cos(x) * np.sin(y)))[1]))
    assert convergence_order(eu)[0] > 3.9 and convergence_order(ev)[0] > 3.9


def test_steady_state_stream_function():
    # psi = (2/5) sin 2x sin y solves lap psi = -2 sin 2x sin y
    g = Grid2D(64, 64)
    vel = reconstruct_velocity(g.sample(lambda x, y: 0.4 * np.sin(2 * x) * np.sin(y)))
    assert np.max(np.abs(vel.u.values + 0.4 * np.sin(2 * g.mesh()[0]) * np.cos(g.mesh()[1]))) < 1e-5
    assert np.max(np.abs(vel.v.values - 0.8 * np.cos(2 * g.mesh()[0]) * np.sin(g.mesh()[1]))) < 1e-5


def test_residual_matches_dense_operator():
    g = Grid2D(8, 6, 2.0, 3.0)
    X, _ = g.mesh()
    u = np.sin(np.pi * X)
    vel = VelocityPair(Field2D(g, u), Field2D(g, np.zeros(g.shape)))
    Dx = LineOperator("Dx", "periodic", 8).matrix()
    W1y = LineOperator("W1", "periodic", 6).matrix()
    expected = Dx @ u @ W1y.T / g.dx
    res = divergence_residual(vel).values
    assert np.allclose(res, expected, atol=1e-13)
    assert np.max(np.abs(res)) > 0.1


def test_constant_velocity_has_no_residual():
    g = Grid2D(7, 9)
    vel = VelocityPair(Field2D(g, np.full(g.shape, 2.0)), Field2D(g, np.full(g.shape, -1.0)))
    assert np.max(np.abs(divergence_residual(vel).values)) < 1e-13


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (10, 12), elements=st.floats(-10, 10)))
def test_reconstruction_is_discretely_solenoidal(psi):
    g = Grid2D(10, 12, 1.0, 2.5)
    vel = reconstruct_velocity(Field2D(g, psi))
    scale = max(np.max(np.abs(vel.u.values)), np.max(np.abs(vel.v.values)), 1e-300)
    assert np.max(np.abs(divergence_residual(vel).values)) <= 1e-11 * scale + 1e-300


def test_reconstruction_is_linear():
    rng = np.random.default_rng(3)
    g = Grid2D(9, 9)
    a, b = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    va, vb = reconstruct_velocity(Field2D(g, a)), reconstruct_velocity(Field2D(g, b))
    vc = reconstruct_velocity(Field2D(g, 2 * a - 3 * b))
    assert np.allclose(vc.u.values, 2 * va.u.values - 3 * vb.u.values, atol=1e-12)
    assert np.allclose(vc.v.values, 2 * va.v.values - 3 * vb.v.values, atol=1e-12)
