import numpy as np
import pytest

from perihyp.errors import ResonanceError
from perihyp.field import Field, PeriodicGrid, shift_matrix
from perihyp.operators import apply_calC
from perihyp.problem import BoundaryCoupling, FirstOrderProblem, builtin_problems
from perihyp.tracesolve import (build_trace_system, solve_I_minus_calC, trace_condition)
from oracles import band_limited, oracle_problem

G = PeriodicGrid(32, 17)
REMA = builtin_problems()["remark-rema"]()


def constant_pair(alpha=(1.3, 0.7), beta=(0.2, -0.1), r=(0.9, -0.8)):
    """Constant speeds alpha_1, -alpha_2, damping b_j = beta_j u_j and constant reflection."""
    return FirstOrderProblem(
        n=2, m=1, speed=lambda x, lam: [alpha[0] + 0 * x, -alpha[1] + 0 * x],
        source=lambda t, x, lam, u: np.stack([beta[0] * u[0], beta[1] * u[1]]),
        jacobian=lambda t, x, lam, u: np.stack([np.stack([beta[0] + 0 * t, 0 * t]),
                                                np.stack([0 * t, beta[1] + 0 * t])]),
        coupling=BoundaryCoupling.reflection(2, 1, lambda t, lam: [[0.0, r[0]], [r[1], 0.0]]))


def round_trip(alpha=(1.3, 0.7), beta=(0.2, -0.1), r=(0.9, -0.8)):
    """(gamma, s) of the closed-form round trip x=1 -> x=0 -> x=1."""
    gamma = r[0] * r[1] * np.exp(-beta[0] / alpha[0] - beta[1] / alpha[1])
    return gamma, 1 / alpha[0] + 1 / alpha[1]


def test_transport_pair_row_structure():
    ts = build_trace_system(REMA, 0.0, Field.zeros(PeriodicGrid(16, 5), 2))
    assert ts.kind.startswith("reduced")
    # two unit transports; the composed shift equals the shift by 2 off the Nyquist mode
    S1 = shift_matrix(16, -1.0)
    assert np.abs(ts.matrix - (np.eye(16) - S1 @ S1)).max() <= 1e-13
    v = np.fft.irfft(np.r_[np.random.default_rng(0).normal(size=8), 0.0] + 0j, 16)
    assert np.abs(ts.matrix @ v - (v - shift_matrix(16, -2.0) @ v)).max() <= 1e-13


def test_zero_coupling_is_trivial():
    p = constant_pair(r=(0.0, 0.0))
    u0 = Field.zeros(G, 2)
    ts = build_trace_system(p, 0.0, u0)
    assert ts.kind == "empty"
    assert ts.condition().sigma_min == 1.0
    f = Field(G, band_limited(G, 2, seed=1))
    assert np.array_equal(solve_I_minus_calC(p, 0.0, u0, f).values, f.values)


def test_constant_coefficient_multipliers():
    p = constant_pair()
    ts = build_trace_system(p, 0.0, Field.zeros(G, 2))
    gamma, s = round_trip()
    mult = ts.multipliers()
    assert mult is not None and mult.shape == (32, 1, 1)
    k = np.arange(1, 16)
    assert np.abs(mult[1:16, 0, 0] - (1 - gamma * np.exp(-1j * k * s))).max() <= 1e-10
    assert abs(mult[0, 0, 0] - (1 - gamma)) <= 1e-10


def test_time_dependent_coefficients_have_no_multipliers():
    ts = build_trace_system(oracle_problem(), 0.1, Field.zeros(G, 2))
    assert ts.multipliers() is None
    assert ts.condition().min_mode_multiplier is None


def test_fourier_shortcut_matches_dense_solve():
    p = constant_pair()
    ts = build_trace_system(p, 0.0, Field.zeros(G, 2))
    rhs = np.random.default_rng(0).normal(size=32)
    dense = np.linalg.solve(ts.matrix, rhs)
    fourier = np.real(np.fft.ifft(np.fft.fft(rhs) / ts.multipliers()[:, 0, 0]))
    assert np.abs(dense - fourier).max() <= 1e-10


def test_better_conditioned_reduction_is_chosen():
    ts = build_trace_system(oracle_problem(), 0.1, Field.zeros(G, 2))
    A1 = np.eye(32) - ts.K @ ts.L
    A2 = np.eye(32) - ts.L @ ts.K
    chosen = A1 if ts.kind == "reduced-right" else A2
    assert np.linalg.cond(chosen) <= min(np.linalg.cond(A1), np.linalg.cond(A2)) * (1 + 1e-12)


@pytest.mark.parametrize("make,lam", [(oracle_problem, 0.1), (constant_pair, 0.0),
                                      (lambda: builtin_problems()["manufactured-2x2"](), 0.2)])
def test_solve_recovers_constructed_rhs(make, lam):
    p = make()
    u0 = Field(G, 0.2 * band_limited(G, 2, degree=2, seed=3))
    w = Field(G, band_limited(G, 2, seed=4))
    f = w - apply_calC(p, lam, u0, w)
    got = solve_I_minus_calC(p, lam, u0, f)
    assert np.abs(got.values - w.values).max() <= 1e-8
    back = got - apply_calC(p, lam, u0, got)
    assert np.abs(back.values - f.values).max() <= 1e-8 * f.sup()


def test_calC_zero_gives_identity_solve():
    p = builtin_problems()["remark-mn1"]()
    f = Field(G, band_limited(G, 1, seed=5))
    assert np.array_equal(solve_I_minus_calC(p, 0.2, Field.zeros(G), f).values, f.values)


def test_resonance_raises_with_lambda():
    lam = np.sqrt(np.pi - 1)
    with pytest.raises(ResonanceError) as info:
        solve_I_minus_calC(REMA, lam, Field.zeros(G, 2), Field(G, band_limited(G, 2, seed=6)))
    assert info.value.lam == pytest.approx(lam)


def test_mode_multiplier_transport_pair():
    cond = trace_condition(REMA, 0.0, Field.zeros(PeriodicGrid(128, 5), 2))
    ref = 2 * np.abs(np.sin(np.arange(1, 64))).min()
    assert cond.min_mode_multiplier == pytest.approx(ref, abs=1e-10)
    assert ref == pytest.approx(0.0178, abs=1e-4)
    assert cond.sigma_min_nonzero == pytest.approx(ref, abs=1e-10)
    assert cond.sigma_min <= 1e-12          # the constant mode is always in the kernel


def test_half_gain_multipliers_bounded_below():
    gamma, _ = round_trip(r=(0.5, 1.0), beta=(0.0, 0.0))
    assert abs(gamma) == pytest.approx(0.5)
    cond = trace_condition(constant_pair(r=(0.5, 1.0), beta=(0.0, 0.0)), 0.0, Field.zeros(G, 2))
    assert cond.min_mode_multiplier >= 0.5 - 1e-12
    assert cond.sigma_min >= 0.5 - 1e-12


def test_norm_bound_dominates():
    p = oracle_problem()
    u0 = Field.zeros(G, 2)
    ts = build_trace_system(p, 0.1, u0)
    d = ts.norm_bound()
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = rng.normal(size=(2,) + G.shape)
        assert np.abs(ts.solve(f)).max() <= d * np.abs(f).max()


def test_neumann_path_matches_dense():
    p = builtin_problems()["linear-2x2"]()
    u0 = Field.zeros(G, 2)
    f = Field(G, band_limited(G, 2, seed=8))
    a = solve_I_minus_calC(p, 0.1, u0, f, method="dense").values
    b = solve_I_minus_calC(p, 0.1, u0, f, method="neumann").values
    assert np.abs(a - b).max() <= 1e-12
