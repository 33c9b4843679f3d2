import numpy as np
import pytest

from perihyp.problem import (BoundaryCoupling, FirstOrderProblem, Tabulated, WaveProblem,
                             builtin_problems, validate)


def transport(speeds, m=1, r=None):
    n = len(speeds)
    return FirstOrderProblem(
        n=n, m=m, speed=lambda x, lam: [s(x, lam) for s in speeds],
        source=lambda t, x, lam, u: np.zeros_like(u),
        jacobian=lambda t, x, lam, u: np.zeros((n, n) + np.shape(t)),
        coupling=BoundaryCoupling.reflection(n, m, r))


def wave(a):
    zero = lambda t, x, lam, u, p, q: 0 * t
    return WaveProblem(a=a, dxa=lambda x, lam: 0 * x, b=zero, d4b=zero, d5b=zero, d6b=zero)


def test_opposite_unit_speeds_pass():
    rep = validate(transport([lambda x, l: 1 + 0 * x, lambda x, l: -1 + 0 * x]))
    assert rep.passed and not rep.violations


def test_equal_speeds_fail_with_witness():
    rep = validate(transport([lambda x, l: 1 + 0 * x, lambda x, l: 1 + 0 * x]))
    assert not rep.passed
    v = rep.violations[0]
    assert v.check == "distinct-speeds"
    assert 0.0 <= v.location["x"] <= 1.0


def test_vanishing_speed_located():
    # a(x, lam) = x - lam changes sign at x = lam; the first sampled lam is 0 (zero at x = 0)
    # and the scan reports a witness with x close to lam
    p = transport([lambda x, l: x - l + 0 * x, lambda x, l: -1 + 0 * x])
    rep = validate(p, (0.0, 0.5), samples=16)
    assert not rep.passed
    v = rep.violations[0]
    assert v.check == "nonzero-speed"
    assert abs(v.location["x"] - v.location["lambda"]) <= 1.0 / 15


def test_vanishing_wave_speed():
    rep = validate(wave(lambda x, l: x - l), (0.0, 0.5), samples=16)
    assert not rep.passed
    v = rep.violations[0]
    assert v.check == "positive-speed"
    assert abs(v.location["x"] - v.location["lambda"]) <= 1.0 / 15


def test_sign_change_witness_is_refined():
    # zero strictly inside a cell: brentq refines the location
    p = transport([lambda x, l: x - 0.3 + 0 * l, lambda x, l: -1 + 0 * x])
    rep = validate(p, (0.1, 0.2), samples=8)
    assert abs(rep.violations[0].location["x"] - 0.3) <= 1e-10


def test_nonfinite_reported_not_raised():
    p = transport([lambda x, l: 1 / (x - 2) * np.inf, lambda x, l: -1 + 0 * x])
    rep = validate(p)
    assert not rep.passed
    assert rep.violations[0].check == "finite"


def test_raising_evaluator_reported():
    def bad(x, lam):
        raise RuntimeError("boom")
    p = FirstOrderProblem(n=1, m=1, speed=bad, source=lambda *a: [0.0],
                          jacobian=lambda t, x, lam, u: np.zeros((1, 1) + np.shape(t)),
                          coupling=BoundaryCoupling.reflection(1, 1))
    rep = validate(p)
    assert rep.violations[0].check == "evaluator"


def test_nonperiodic_source_flagged():
    p = FirstOrderProblem(
        n=1, m=1, speed=lambda x, lam: [1 + 0 * x],
        source=lambda t, x, lam, u: [t * 1.0],
        jacobian=lambda t, x, lam, u: np.zeros((1, 1) + np.shape(t)),
        coupling=BoundaryCoupling.reflection(1, 1))
    rep = validate(p)
    assert any(v.check == "periodic" for v in rep.violations)


def test_samples_guard():
    with pytest.raises(ValueError):
        validate(builtin_problems()["remark-mn1"](), samples=4)


def test_validate_is_deterministic():
    p = transport([lambda x, l: x - l + 0 * x, lambda x, l: -1 + 0 * x])
    a = validate(p, (0, 0.5), 20).to_dict()
    b = validate(p, (0, 0.5), 20).to_dict()
    assert a == b


@pytest.mark.parametrize("name", sorted(builtin_problems()))
def test_presets_pass_validation(name):
    rep = validate(builtin_problems()[name](), (-0.5, 0.5))
    assert rep.passed, rep.to_dict()


def test_preset_catalog():
    cat = builtin_problems()
    assert {"remark-mn1", "remark-rema", "telegraph"} <= set(cat)
    mn1 = cat["remark-mn1"]()
    assert mn1.n == 1 and mn1.a(0, 0.5, 1.0) == pytest.approx(2.0)
    assert mn1.b(0, 0.3, 0.2, 0.0, [0.0]) == pytest.approx(np.cos(0.3))
    rema = cat["remark-rema"]()
    r = rema.coupling.r(0.0, 0.0)
    assert r[0, 1] == 1 and r[1, 0] == 1
    assert rema.a(0, 0.2, 1.0) == pytest.approx(-rema.a(1, 0.2, 1.0))
    assert isinstance(cat["telegraph"](), WaveProblem)


def test_reflection_pattern_masks_illegal_entries():
    c = BoundaryCoupling.reflection(3, 1, lambda t, lam: np.ones((3, 3)))
    r = c.r(np.array([0.0, 1.0]), 0.0)
    legal = np.zeros((3, 3), bool)
    legal[0, 1:] = True
    legal[1:, 0] = True
    assert np.all(r[~legal] == 0)
    assert np.all(r[legal] == 1)


def test_general_coupling_blocks():
    c = BoundaryCoupling.general(2, 1, r01=lambda t, lam: [[0.0, 0.5], [0.0, 0.0]],
                                 r10=lambda t, lam: [[0.0, 0.0], [0.25, 0.0]])
    M = c.matrices(0.0, 0.0)
    assert M[0, 1, 1] == 0.5 and M[1, 0, 0] == 0.25
    assert np.count_nonzero(M) == 2


def test_tabulated_matches_function():
    t = 2 * np.pi * np.arange(32) / 32
    x = np.linspace(0, 1, 17)
    T, X = np.meshgrid(t, x, indexing="ij")
    tab = Tabulated({"t": t, "x": x}, np.cos(T) * (1 + X ** 2))
    tt = np.array([0.05, 3.3, 6.2, 8.0])
    xx = np.array([0.11, 0.5, 0.97, 0.3])
    ref = np.cos(tt) * (1 + xx ** 2)
    assert np.abs(tab(t=tt, x=xx) - ref).max() <= 5e-4


def test_m_range_checked():
    with pytest.raises(ValueError):
        transport([lambda x, l: 1 + 0 * x], m=2)
