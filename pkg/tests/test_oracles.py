import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from energy_threshold.ansatz import ExponentialAnsatz, RiseHoldAnsatz
from energy_threshold.clamp import Tolerances, supplied_energy
from energy_threshold.models import CubicRC, FitzHughNagumo, LinearRC, cubic_current
from energy_threshold.oracles import (
    Passive,
    UnboundedBelow,
    bistable_required_supply,
    closed_form_J_fhn,
    closed_form_J_linear_rc,
    dJ_dalpha_linear_rc,
    fhn_recovery,
    hold_supply_cubic_rc,
    singular_arc_residual,
)

FHN = FitzHughNagumo(epsilon=0.01, gamma=0.5, vb=0.4)
BISTABLE = CubicRC(0.0, 2.0, 4.0, 1.0, 1.0)


def test_linear_rc_examples():
    assert closed_form_J_linear_rc(1, 1, 1, 10) == pytest.approx(0.55, rel=1e-15)
    assert closed_form_J_linear_rc(3.0, 0.2, 0.0, 5.0) == 0.0
    assert closed_form_J_linear_rc(1, 1, 1, 1e12) == pytest.approx(0.5, rel=1e-11)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 5), st.floats(0.01, 1e3))
def test_linear_rc_decreasing_in_rate(C, R, A, alpha):
    d = dJ_dalpha_linear_rc(C, R, A, alpha)
    assert d == pytest.approx(-(A**2) / (2 * R * alpha**2))
    assert d < 0
    assert closed_form_J_linear_rc(C, R, A, alpha * 1.5) < closed_form_J_linear_rc(C, R, A, alpha)
    assert closed_form_J_linear_rc(C, R, A, alpha) > 0.5 * C * A**2


def test_fhn_term_by_term():
    # 0.005 - 0.025 + 0.0466667 - 0.02 + 0.0047619
    eps, g, vb, A, a = 0.01, 0.5, 0.4, 1.0, 10.0
    terms = [
        0.5 * eps * A**2,
        -(A**4) / (4 * a),
        (vb + 1) * A**3 / (3 * a),
        -vb * A**2 / (2 * a),
        A**2 / (2 * a * (a + g)),
    ]
    expected = 0.005 - 0.025 + 0.04666666666666667 - 0.02 + 0.004761904761904762
    assert sum(terms) == pytest.approx(expected, rel=1e-15)
    assert closed_form_J_fhn(FHN, A, a) == pytest.approx(0.011428571428571429, rel=1e-12)
    assert closed_form_J_fhn(FHN, 0.0, a) == 0.0


@given(st.floats(0.0, 2.0))
def test_fhn_large_rate_limit(A):
    assert closed_form_J_fhn(FHN, A, 1e9) == pytest.approx(0.5 * FHN.epsilon * A**2, rel=1e-6, abs=1e-12)


def test_fhn_recovery_solves_ode():
    A, a = 1.3, 7.0
    t = np.linspace(-3, 0, 301)
    w = fhn_recovery(FHN, A, a, t)
    h = 1e-6
    dw = (fhn_recovery(FHN, A, a, t - h) - fhn_recovery(FHN, A, a, t - 2 * h)) / h  # one-sided, t <= 0
    v = A * np.exp(a * t)
    np.testing.assert_allclose(dw, v - FHN.gamma * w, atol=1e-4)


@pytest.mark.parametrize("fn", [closed_form_J_fhn, lambda p, A, a: closed_form_J_linear_rc(1, 1, A, a)])
@pytest.mark.parametrize("alpha", [0.0, -1.0])
def test_nonpositive_rate_rejected(fn, alpha):
    with pytest.raises(ValueError):
        fn(FHN, 1.0, alpha)


def test_singular_arc_linear():
    def g(v):
        return np.ones_like(v) / 1.0

    assert singular_arc_residual(g, 0.0) == 0.0
    assert singular_arc_residual(g, 1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("v", [0.5, 1.0, 1.7, 3.0, 3.9])
def test_singular_arc_cubic_against_product_difference(v):
    def g(x):
        return cubic_current(BISTABLE, x) / x  # v^2 - 6v + 8

    def dg(x):
        return 2 * x - 6.0

    h = 1e-5
    # d/dv [g(v) v^2] by central difference on the product itself
    fd = (g(v + h) * (v + h) ** 2 - g(v - h) * (v - h) ** 2) / (2 * h)
    assert singular_arc_residual(g, v, dg) == pytest.approx(fd, rel=1e-7)
    assert singular_arc_residual(g, v) == pytest.approx(fd, rel=1e-6)


def test_bistable_classification():
    assert bistable_required_supply(BISTABLE, 1.0) == Passive(0.5)
    at_vb = bistable_required_supply(BISTABLE, 2.0)
    assert at_vb == Passive(2.0, threshold=True)
    assert isinstance(bistable_required_supply(BISTABLE, 3.0), UnboundedBelow)
    assert isinstance(bistable_required_supply(BISTABLE, 4.0), UnboundedBelow)
    with pytest.raises(ValueError):
        bistable_required_supply(BISTABLE, -0.1)


def test_hold_supply_decreases_above_vb():
    values = [hold_supply_cubic_rc(BISTABLE, 3.0, T) for T in (0, 1, 2, 4, 8)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(4.5 - 3.0 * 3.0 * 8)


def test_hold_supply_numerics_match_oracle():
    # fast rise, then hold: the clamp engine sees the same energy drain
    for T in (1.0, 2.0, 4.0):
        num = supplied_energy(BISTABLE, RiseHoldAnsatz(3.0, 1000.0, T)).total
        assert num == pytest.approx(hold_supply_cubic_rc(BISTABLE, 3.0, T), rel=2e-3)


@pytest.mark.parametrize("kind", ["linear_rc", "fhn"])
def test_lattice_equivalence_at_fine_resolution(kind):
    tol = Tolerances(rel_tol=1e-9, steps_per_timescale=600)
    for A, a in itertools.product(np.linspace(0.25, 2.0, 4), np.geomspace(0.5, 100.0, 5)):
        if kind == "fhn":
            num, exact = supplied_energy(FHN, ExponentialAnsatz(A, a), tol).total, closed_form_J_fhn(FHN, A, a)
        else:
            num, exact = supplied_energy(LinearRC(), ExponentialAnsatz(A, a), tol).total, closed_form_J_linear_rc(1, 1, A, a)
        assert abs(num - exact) <= 1e-4 * abs(exact)
