import numpy as np
import pytest

from perihyp.characteristics import damping
from perihyp.diagnostics import wave_R0S0
from perihyp.field import Field, PeriodicGrid, time_derivative
from perihyp.problem import WaveProblem, builtin_problems
from perihyp.wave import as_first_order, fd_matrix, pde_residual, recover, reduce, wave_solve

P = builtin_problems()


def wave(a, dxa, b=None, d4=0.0, d5=0.0, d6=0.0):
    b = b or (lambda t, x, lam, u, p, q: 0 * t)
    return WaveProblem(a=a, dxa=dxa, b=b,
                       d4b=lambda t, x, lam, u, p, q: d4 + 0 * t,
                       d5b=lambda t, x, lam, u, p, q: d5 + 0 * t,
                       d6b=lambda t, x, lam, u, p, q: d6 + 0 * t)


UNIT = wave(lambda x, lam: 1 + 0 * x, lambda x, lam: 0 * x)
VAR = wave(lambda x, lam: 1 + 0.5 * x + 0.1 * lam, lambda x, lam: 0.5 + 0 * x)


def test_fd_matrix_exact_on_polynomials():
    x = np.linspace(0, 1, 21)
    for p in range(9):
        d1 = p * x ** max(p - 1, 0)
        d2 = p * (p - 1) * x ** max(p - 2, 0)
        assert np.abs(fd_matrix(21, 1) @ x ** p - d1).max() <= 1e-9
        assert np.abs(fd_matrix(21, 2) @ x ** p - d2).max() <= 1e-7


def test_reduce_zero():
    g = PeriodicGrid(16, 9)
    assert reduce(UNIT, Field.zeros(g), 0.0).sup() == 0.0


def test_reduce_closed_form():
    g = PeriodicGrid(32, 17)
    T, X = g.mesh()
    v = reduce(UNIT, Field(g, (np.sin(T) * X)[None]), 0.0).values
    assert np.abs(v[0] - (X * np.cos(T) + np.sin(T))).max() <= 1e-12
    assert np.abs(v[1] - (X * np.cos(T) - np.sin(T))).max() <= 1e-12


def test_reduce_rejects_boundary_violation():
    g = PeriodicGrid(16, 9)
    with pytest.raises(ValueError):
        reduce(UNIT, Field(g, np.ones((1,) + g.shape)), 0.0)


def test_recover_zero_and_linear():
    g = PeriodicGrid(16, 9)
    assert recover(VAR, Field.zeros(g, 2), 0.2).sup() == 0.0
    _, X = g.mesh()
    a = 1 + 0.5 * X + 0.02
    u = recover(VAR, Field(g, np.stack([a, -a])), 0.2).values[0]
    assert np.abs(u - X).max() <= 1e-12


def test_round_trip_and_compatibility():
    g = PeriodicGrid(128, 128)
    T, X = g.mesh()
    u = Field(g, (np.sin(T) * np.sin(0.5 * np.pi * X) + 0.3 * np.cos(2 * T) * X * (1 - X / 3))[None])
    v = reduce(VAR, u, 0.3)
    back = recover(VAR, v, 0.3)
    assert np.abs(back.values - u.values).max() <= 1e-8
    ut = time_derivative(u, 1).values[0]
    assert np.abs(v.values[0] + v.values[1] - 2 * ut).max() <= 1e-8


def test_first_order_form_of_free_wave():
    fo = as_first_order(UNIT)
    assert np.allclose(fo.eval_speed(np.array([0.0, 0.5, 1.0]), 0.0), [[-1] * 3, [1] * 3])
    assert np.array_equal(fo.coupling.r(0.0, 0.0), [[0.0, -1.0], [1.0, 0.0]])
    t = np.array([0.3, 1.0])
    x = np.array([0.2, 0.9])
    v = np.ones((2, 2))
    assert np.abs(fo.eval_source(t, x, 0.0, v, np.ones((1, 2)))).max() == 0.0


def test_first_order_form_of_telegraph():
    a1 = 0.7
    fo = as_first_order(wave(lambda x, lam: 1.3 + 0 * x, lambda x, lam: 0 * x,
                             lambda t, x, lam, u, p, q: a1 * p, d5=a1))
    t = np.linspace(0, 6, 5)
    x = np.linspace(0, 1, 5)
    J = fo.eval_jacobian(t, x, 0.0, np.zeros((2, 5)), np.zeros((1, 5)))
    assert np.allclose(J, a1 / 2)


def test_first_order_damping_is_speed_ratio():
    fo = as_first_order(VAR)
    g = PeriodicGrid(16, 9)
    a = lambda x: 1 + 0.5 * x
    for x, xi in [(0.1, 0.9), (0.8, 0.0)]:
        c = damping(fo, 0, 0.4, x, xi, 0.0, Field.zeros(g, 2))
        assert c == pytest.approx(np.sqrt(a(x) / a(xi)), rel=1e-10)


def test_wave_solve_zero_data():
    u, rep = wave_solve(UNIT, 0.0, grid=PeriodicGrid(16, 9))
    assert rep.converged and u.sup() == 0.0


def test_wave_solve_manufactured():
    wp = P["manufactured-wave"]()
    g = PeriodicGrid(64, 64)
    u, rep = wave_solve(wp, 0.2, grid=g, tol=1e-10)
    T, X = g.mesh()
    assert rep.converged
    assert np.abs(u.values[0] - wp.exact(T, X, 0.2)).max() <= 1e-5
    assert rep.extra["pde_residual"] <= 1e-5


def test_wave_solve_telegraph():
    wp = P["telegraph"]()
    g = PeriodicGrid(32, 33)
    u, rep = wave_solve(wp, 0.1, grid=g)
    assert rep.converged and u.sup() > 1e-3
    R0, S0 = wave_R0S0(wp, u, 0.1)
    assert np.abs(R0).min() > 0.5 and np.abs(S0).min() > 0.5
    # the recovered field satisfies the boundary conditions
    assert np.abs(u.trace(0)).max() <= 1e-12
    ux = u.values[0] @ fd_matrix(g.n_x, 1).T
    assert np.abs(ux[:, -1]).max() <= 1e-4


def test_pde_residual_routes_agree():
    wp = P["manufactured-wave"]()
    g = PeriodicGrid(64, 64)
    T, X = g.mesh()
    gt = np.sin(T) + 0.2 * np.cos(2 * T)
    u = Field(g, (gt * np.sin(0.5 * np.pi * X))[None])
    ut = (np.cos(T) - 0.4 * np.sin(2 * T)) * np.sin(0.5 * np.pi * X)
    ux = 0.5 * np.pi * gt * np.cos(0.5 * np.pi * X)
    a = wp.eval_a(X, 0.0)
    v = Field(g, np.stack([ut + a * ux, ut - a * ux]))
    assert np.abs(u.values[0] - wp.exact(T, X, 0.0)).max() <= 1e-15
    assert pde_residual(wp, u, 0.0).sup() <= 1e-6
    assert pde_residual(wp, u, 0.0, v).sup() <= 1e-6


def test_final_residual_within_ten_tolerances():
    wp = P["manufactured-wave"]()
    u, rep = wave_solve(wp, 0.0, tol=1e-8, grid=PeriodicGrid(128, 128))
    assert rep.converged and rep.extra["pde_residual"] <= 10 * 1e-8
