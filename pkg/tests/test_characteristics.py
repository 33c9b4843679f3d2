import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from perihyp.characteristics import damping, tau, travel_time
from perihyp.errors import SingularSpeedError
from perihyp.field import Field, PeriodicGrid
from perihyp.problem import BoundaryCoupling, FirstOrderProblem, builtin_problems


def scalar(speed, dbdu=None, source=None):
    """One-component problem with speed(x, lam) and d b / d u = dbdu(t, x, lam, u)."""
    dbdu = dbdu or (lambda t, x, lam, u: 0 * t)
    return FirstOrderProblem(
        n=1, m=1, speed=lambda x, lam: [speed(x, lam)],
        source=source or (lambda t, x, lam, u: [dbdu(t, x, lam, u[0]) * u[0]]),
        jacobian=lambda t, x, lam, u: [[dbdu(t, x, lam, u[0])]],
        coupling=BoundaryCoupling.reflection(1, 1))


UNIT = scalar(lambda x, lam: 1 + 0 * x)
MN1 = builtin_problems()["remark-mn1"]()
INV = scalar(lambda x, lam: 1 / (1 + x))
V0 = Field.zeros(PeriodicGrid(16, 9))


def test_tau_unit_speed():
    assert tau(UNIT, 0, 0.0, 0.0, 1.0, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_tau_mn1_at_lambda_one():
    ref = quad(lambda e: 1 / (1 + 1.0 ** 2), 0, 1, epsabs=1e-14)[0]
    assert tau(MN1, 0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(ref, abs=1e-13)
    assert ref == pytest.approx(0.5)


def test_tau_variable_speed():
    ref = quad(lambda e: 1 + e, 0, 1, epsabs=1e-14)[0]
    assert tau(INV, 0, 0.0, 0.0, 1.0, 0.0) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(1.5)


def test_travel_time_examples():
    two = scalar(lambda x, lam: 2 + 0 * x)
    assert travel_time(two, 0, 0.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-14)
    assert travel_time(MN1, 0, 0.0, 1.0, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert travel_time(INV, 0, 0.0, 1.0, 0.0) == pytest.approx(1.5, abs=1e-12)


def test_travel_time_signed():
    assert travel_time(INV, 0, 0.8, 0.2, 0.0) == pytest.approx(-travel_time(INV, 0, 0.2, 0.8, 0.0))


def test_singular_speed_raises():
    p = scalar(lambda x, lam: x - 0.5)
    with pytest.raises(SingularSpeedError):
        tau(p, 0, 0.0, 0.0, 1.0, 0.0)


def test_damping_trivial():
    assert damping(UNIT, 0, 0.3, 0.0, 1.0, 0.0, V0) == 1.0


def test_damping_constant_coefficients():
    p = scalar(lambda x, lam: 1 + 0 * x, lambda t, x, lam, u: 1 + 0 * t)
    assert damping(p, 0, 0.0, 0.0, 1.0, 0.0, V0) == pytest.approx(np.e, abs=1e-10)


def test_damping_against_quadrature_oracle():
    # d b / d u = cos(t) * (1 + x) along a variable-speed curve, v = 0
    p = scalar(lambda x, lam: 1 / (1 + x), lambda t, x, lam, u: np.cos(t) * (1 + x))
    t0, x0, xi = 0.4, 0.1, 0.9
    curve = lambda e: t0 + (e + e * e / 2) - (x0 + x0 * x0 / 2)
    ref = np.exp(quad(lambda e: np.cos(curve(e)) * (1 + e) ** 2, x0, xi, epsabs=1e-14)[0])
    assert damping(p, 0, t0, x0, xi, 0.0, V0) == pytest.approx(ref, rel=1e-10)


DAMPED = scalar(lambda x, lam: 1 + 0.4 * x + 0.1 * lam,
                lambda t, x, lam, u: 0.3 * np.sin(t + x) + u ** 2)
VFIELD = Field.from_function(PeriodicGrid(32, 17),
                             lambda T, X: (0.5 * np.cos(T) * (1 + X) + 0.2 * np.sin(2 * T))[None])


@settings(max_examples=40, deadline=None)
@given(t=st.floats(-10, 10), s=st.floats(-50, 50), x=st.floats(0, 1), xi=st.floats(0, 1))
def test_tau_shift_equivariance(t, s, x, xi):
    lhs = tau(DAMPED, 0, t + s, x, xi, 0.2)
    rhs = tau(DAMPED, 0, t, x, xi, 0.2) + s
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(t) + abs(s))


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0, 6.3), x=st.floats(0, 1), xi=st.floats(0, 1), zeta=st.floats(0, 1))
def test_damping_cocycle(t, x, xi, zeta):
    lam = 0.2
    c1 = damping(DAMPED, 0, t, x, xi, lam, VFIELD)
    c2 = damping(DAMPED, 0, tau(DAMPED, 0, t, x, xi, lam), xi, zeta, lam, VFIELD)
    c3 = damping(DAMPED, 0, t, x, zeta, lam, VFIELD)
    assert abs(c1 * c2 - c3) <= 1e-8 * c3


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0, 6.3), x=st.floats(0, 1), xi=st.floats(0, 1))
def test_damping_reversal(t, x, xi):
    lam = -0.3
    back = damping(DAMPED, 0, tau(DAMPED, 0, t, x, xi, lam), xi, x, lam, VFIELD)
    assert abs(damping(DAMPED, 0, t, x, xi, lam, VFIELD) * back - 1.0) <= 1e-8


def test_tau_monotone_in_xi():
    xs = np.linspace(0, 1, 50)
    vals = tau(INV, 0, 0.0, 0.3, xs, 0.0)
    assert np.all(np.diff(vals) > 0)
    rema = builtin_problems()["remark-rema"]()
    vals2 = tau(rema, 1, 0.0, 0.3, xs, 0.4)
    assert np.all(np.diff(vals2) < 0)
