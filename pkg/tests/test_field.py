import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perihyp.field import (Field, PeriodicGrid, _kernel_fast, eval_at, norm_l, periodic_kernel,
                           sample_points, sample_shifted, shift_matrix, shift_time,
                           space_derivative, time_derivative)
from oracles import band_limited

G64 = PeriodicGrid(64, 64)
G128 = PeriodicGrid(128, 16)


def scalar(grid, fn):
    return Field.from_function(grid, lambda T, X: fn(T, X)[None])


# ------------------------------------------------------------------- grid

@pytest.mark.parametrize("n_t,n_x", [(2, 8), (6, 1), (7, 8), (0, 4)])
def test_grid_rejects_bad_sizes(n_t, n_x):
    with pytest.raises(ValueError):
        PeriodicGrid(n_t, n_x)


def test_grid_nodes():
    g = PeriodicGrid(8, 5)
    assert np.allclose(g.t, 2 * np.pi * np.arange(8) / 8)
    assert np.allclose(g.x, [0, 0.25, 0.5, 0.75, 1.0])


def test_field_rejects_nonfinite():
    vals = np.zeros((1, 8, 5))
    vals[0, 2, 3] = np.nan
    with pytest.raises(ValueError):
        Field(PeriodicGrid(8, 5), vals)


def test_field_is_immutable():
    u = Field.zeros(PeriodicGrid(8, 5), 2)
    with pytest.raises(ValueError):
        u.values[0, 0, 0] = 1.0


# ------------------------------------------------------------------ shifts

def test_shift_zero_is_identity():
    u = Field(G64, band_limited(G64, 2, seed=1))
    assert np.array_equal(shift_time(u, 0.0).values, u.values)


def test_shift_inverse():
    u = Field(G64, band_limited(G64, 2, seed=2))
    back = shift_time(shift_time(u, 0.7373), -0.7373)
    assert np.abs(back.values - u.values).max() <= 1e-12


def test_shift_cos_quarter_period():
    u = scalar(G64, lambda T, X: np.cos(T) + 0 * X)
    got = shift_time(u, np.pi / 2)
    T, _ = G64.mesh()
    assert np.abs(got.values[0] + np.sin(T)).max() <= 1e-12


def test_shift_rejects_nonfinite():
    with pytest.raises(ValueError):
        shift_time(Field.zeros(G64), np.inf)


@settings(max_examples=40, deadline=None)
@given(s1=st.floats(-20, 20), s2=st.floats(-20, 20), seed=st.integers(0, 2 ** 16))
def test_shift_group_law(s1, s2, seed):
    g = PeriodicGrid(32, 6)
    u = Field(g, band_limited(g, 2, degree=15, seed=seed))
    lhs = shift_time(shift_time(u, s1), s2).values
    rhs = shift_time(u, s1 + s2).values
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, u.sup())


@settings(max_examples=25, deadline=None)
@given(s=st.floats(-10, 10), seed=st.integers(0, 2 ** 16))
def test_derivative_commutes_with_shift(s, seed):
    g = PeriodicGrid(32, 6)
    u = Field(g, band_limited(g, 1, degree=12, seed=seed))
    lhs = time_derivative(shift_time(u, s), 1).values
    rhs = shift_time(time_derivative(u, 1), s).values
    assert np.abs(lhs - rhs).max() <= 1e-10


def test_periodic_kernel_matches_fft_shift():
    # cosine-sum kernel and FFT shift are two independent routes to the same interpolant
    for n_t in (8, 16, 64):
        for s in (0.0, 0.31, -2.2, np.pi):
            K = periodic_kernel(n_t, s - 2 * np.pi * np.arange(n_t) / n_t)
            S = shift_matrix(n_t, s)
            assert np.abs(S[0] - K).max() <= 1e-13


@settings(max_examples=50, deadline=None)
@given(s=st.floats(-30, 30))
def test_fast_kernel_agrees_with_cosine_sum(s):
    for n_t in (8, 64):
        assert abs(_kernel_fast(n_t, s) - periodic_kernel(n_t, s)) <= 1e-12


def test_fast_kernel_at_full_periods():
    assert np.allclose(_kernel_fast(16, np.array([0.0, 2 * np.pi, -4 * np.pi])), 1.0)


# -------------------------------------------------------------- derivatives

def test_derivative_of_constant_is_zero():
    u = scalar(G64, lambda T, X: 3.0 + 0 * T)
    assert time_derivative(u, 1).sup() <= 1e-13


def test_second_derivative_of_sine():
    u = scalar(G64, lambda T, X: np.sin(T) + 0 * X)
    d2 = time_derivative(u, 2)
    assert np.abs(d2.values + u.values).max() <= 1e-10


def test_order_zero_is_identity():
    u = Field(G64, band_limited(G64))
    assert time_derivative(u, 0) is u


def test_derivative_order_guard():
    u = Field.zeros(PeriodicGrid(8, 4))
    time_derivative(u, 3)
    with pytest.raises(ValueError):
        time_derivative(u, 4)
    with pytest.raises(ValueError):
        time_derivative(u, -1)


def test_odd_derivative_drops_nyquist_mode():
    g = PeriodicGrid(8, 4)
    u = scalar(g, lambda T, X: np.cos(4 * T) + 0 * X)
    assert time_derivative(u, 1).sup() <= 1e-13
    assert np.abs(time_derivative(u, 2).values + 16 * u.values).max() <= 1e-11


# -------------------------------------------------------------------- norms

def test_norm_of_zero():
    for l in range(4):
        assert norm_l(Field.zeros(G64), l) == 0.0


def test_norm_sine():
    u = scalar(PeriodicGrid(128, 8), lambda T, X: np.sin(T) + 0 * X)
    assert abs(norm_l(u, 0) - 1.0) <= 1e-3
    # dense-sampling oracle for sup|sin| + sup|cos|
    dense = np.linspace(0, 2 * np.pi, 100001)
    expected = np.abs(np.sin(dense)).max() + np.abs(np.cos(dense)).max()
    assert abs(norm_l(u, 1) - expected) <= 1e-3


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 16), l=st.integers(0, 5))
def test_norm_monotone_in_l(seed, l):
    g = PeriodicGrid(16, 5)
    u = Field(g, band_limited(g, 2, degree=6, seed=seed))
    assert norm_l(u, l + 1) >= norm_l(u, l)


# ------------------------------------------------------------ interpolation

def test_eval_at_nodes_is_exact():
    u = Field(G64, band_limited(G64, 2, seed=4))
    for i, k, j in [(0, 0, 0), (5, 63, 1), (17, 31, 0), (63, 10, 1)]:
        assert eval_at(u, G64.t[i], G64.x[k], j) == u.values[j, i, k]


def test_eval_at_analytic():
    u = scalar(G64, lambda T, X: np.cos(T) * X)
    assert abs(eval_at(u, np.pi / 3, 0.5) - 0.25) <= 1e-8


def test_eval_at_time_independent():
    u = scalar(G64, lambda T, X: np.exp(X) + 0 * T)
    vals = [eval_at(u, t, 0.37) for t in (0.1, 1.9, 4.4, 100.0)]
    assert max(vals) - min(vals) <= 1e-12
    assert abs(vals[0] - np.exp(0.37)) <= 1e-6


def test_eval_at_rejects_outside():
    with pytest.raises(ValueError):
        eval_at(Field.zeros(G64), 0.0, 1.2)


def test_sample_shifted_matches_pointwise():
    u = Field(G128, band_limited(G128, 2, degree=5, seed=7))
    theta = np.array([0.3, -1.1, 2.0])
    x = np.array([0.0, 0.41, 0.93])
    got = sample_shifted(u.values, theta, x)
    T = G128.t[:, None] + theta[None, :]
    ref = sample_points(u.values, T, np.broadcast_to(x, T.shape))
    assert np.abs(got - ref).max() <= 1e-12


def test_space_derivative_of_cubic_is_exact():
    g = PeriodicGrid(8, 9)
    u = scalar(g, lambda T, X: X ** 3 - 2 * X + 0 * T)
    _, X = g.mesh()
    assert np.abs(space_derivative(u, 1).values[0] - (3 * X ** 2 - 2)).max() <= 1e-12
