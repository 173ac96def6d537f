import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from staircase.boundary_functions import (BoundaryFunction, ConfigPoint, combine,
                                          constant, cup, in_configuration, k_extend,
                                          k_reduce, memoized, orientation_cocycle,
                                          periodicity_deviation, weight_deviation)
from staircase.errors import ArityError
from staircase.families import invariant_trig_poly, trig_poly, weighted_trig_poly
from staircase.group_core import act_angle, random_element
from staircase.rng import TWO_PI, Xorshift64Star, config_points

angles = st.floats(min_value=0.0, max_value=TWO_PI - 1e-9)


def test_in_configuration_cases():
    assert in_configuration([0.0, math.pi], 0.1)
    assert not in_configuration([0.0, 0.0, math.pi], 0.01)
    assert not in_configuration([0.0, 1e-3, math.pi], 1e-2)
    assert ConfigPoint((0.0, 2.0, 4.0)).separated(0.5)
    with pytest.raises(ValueError):
        in_configuration([0.0, 1.0], -1.0)


# --- orientation cocycle ---------------------------------------------------------


def test_orientation_examples():
    orc = orientation_cocycle()
    assert orc(np.array([0.0, math.pi / 2, math.pi])) == 1.0
    assert orc(np.array([0.0, math.pi, math.pi / 2])) == -1.0
    assert orc(np.array([0.0, 0.0, math.pi])) == 0.0


@given(angles, angles, angles)
@settings(max_examples=80, deadline=None)
def test_orientation_alternating(a, b, c):
    orc = orientation_cocycle()
    v = orc(np.array([a, b, c]))
    assert orc(np.array([b, a, c])) == -v
    assert orc(np.array([a, c, b])) == -v
    assert orc(np.array([c, a, b])) == v  # cyclic


def test_orientation_action_invariance_exact():
    orc = orientation_cocycle()
    rng = Xorshift64Star(42)
    rows = config_points(rng, 1000, 3, 1e-3)
    base = orc.eval_batch(rows)
    for _ in range(5):
        g = random_element(rng)
        moved = orc.eval_batch(act_angle(g, rows))
        assert np.array_equal(moved, base)


# --- cup product ------------------------------------------------------------------


def test_cup_orientation_example():
    orc = orientation_cocycle()
    f = cup(orc, orc)
    pt = np.array([0.0, math.pi / 2, math.pi, 3 * math.pi / 2, math.pi / 4])
    # or(0, pi/2, pi) * or(pi, 3pi/2, pi/4) = (+1)(+1)
    assert f(pt) == 1.0


def test_cup_with_unit_constant():
    f = trig_poly(2, seed=1)
    one = constant(1, 1.0)
    rng = Xorshift64Star(3)
    rows = config_points(rng, 20, 2, 0.0)
    left = cup(f, one)
    right = cup(one, f)
    fv = f.eval_batch(rows)
    assert np.abs(left.eval_batch(rows) - fv).max() < 1e-15
    assert np.abs(right.eval_batch(rows) - fv).max() < 1e-15


def test_cup_associativity():
    f, g, h = (trig_poly(2, seed=i) for i in (4, 5, 6))
    rng = Xorshift64Star(9)
    rows = config_points(rng, 50, 4, 0.0)
    lhs = cup(cup(f, g), h).eval_batch(rows)
    rhs = cup(f, cup(g, h)).eval_batch(rows)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_cup_weight_bookkeeping():
    orc = orientation_cocycle()
    w = weighted_trig_poly(2, mu=1, seed=2)
    assert cup(orc, orc).weight == 0
    assert cup(w, orc).weight == 1
    assert cup(orc, w).weight == 1
    assert cup(w, w).weight == 2
    assert cup(trig_poly(1, seed=1), orc).weight is None
    with pytest.raises(ArityError):
        BoundaryFunction(0, lambda th: th[:, 0])


# --- reduction and extension -------------------------------------------------------


def test_reduce_pins_first_argument():
    orc = orientation_cocycle()
    red = k_reduce(orc)
    rng = Xorshift64Star(8)
    rows = config_points(rng, 30, 2, 1e-6)
    expected = orc.eval_batch(np.hstack([np.zeros((30, 1)), rows]))
    assert np.array_equal(red.eval_batch(rows), expected)


def test_extend_constant_gives_pure_phase():
    g = k_extend(constant(1, 1.0), 1)
    assert abs(g(np.array([0.7, 1.3])) - np.exp(0.7j)) < 1e-15
    assert abs(g(np.array([0.7, 5.1])) - np.exp(0.7j)) < 1e-15


def test_reduce_extend_roundtrip():
    f = trig_poly(2, seed=11)
    rng = Xorshift64Star(12)
    rows = config_points(rng, 40, 2, 0.0)
    back = k_reduce(k_extend(f, 3))
    assert np.abs(back.eval_batch(rows) - f.eval_batch(rows)).max() < 1e-12


def test_extend_reduce_roundtrip_on_equivariant_function():
    w = weighted_trig_poly(3, mu=2, seed=13)
    rng = Xorshift64Star(14)
    rows = config_points(rng, 40, 3, 1e-3)
    back = k_extend(k_reduce(w), 2)
    assert np.abs(back.eval_batch(rows) - w.eval_batch(rows)).max() < 1e-12


def test_extension_weight_equivariance():
    rng = Xorshift64Star(15)
    for mu in (-2, 0, 1, 3):
        w = k_extend(trig_poly(2, seed=mu + 20), mu)
        assert weight_deviation(w, rng, samples=20) < 1e-10


def test_weight_zero_extension_stays_real():
    f = trig_poly(1, seed=3)
    g = k_extend(f, 0)
    assert g.dtype == "real"
    assert g.weight == 0


# --- periodicity, combine, memoization ----------------------------------------------


def test_periodicity_of_families():
    rng = Xorshift64Star(21)
    assert periodicity_deviation(trig_poly(3, seed=1), rng) < 1e-10
    assert periodicity_deviation(orientation_cocycle(), rng) == 0.0


def test_combine_linear():
    f = trig_poly(2, seed=30)
    g = trig_poly(2, seed=31)
    rng = Xorshift64Star(16)
    rows = config_points(rng, 20, 2, 0.0)
    h = combine(f, g, 2.0, -3.0)
    assert np.abs(h.eval_batch(rows) - (2 * f.eval_batch(rows) - 3 * g.eval_batch(rows))).max() < 1e-14
    with pytest.raises(ArityError):
        combine(f, trig_poly(3, seed=1))


def test_memoized_returns_identical_values_and_hits():
    f = trig_poly(2, seed=33)
    mf = memoized(f)
    rows = config_points(Xorshift64Star(17), 10, 2, 0.0)
    a = mf.eval_batch(rows)
    b = mf.eval_batch(rows)
    assert np.array_equal(a, b)
    assert np.array_equal(a, f.eval_batch(rows))
    assert mf._memo_state.hits >= 10


def test_memoized_large_batches_bypass_cache():
    f = trig_poly(1, seed=34)
    mf = memoized(f, batch_limit=8)
    rows = Xorshift64Star(18).angles(50)[:, None]
    assert np.array_equal(mf.eval_batch(rows), f.eval_batch(rows))
    assert len(mf._memo_state.cache) == 0


def test_reduce_of_constant_is_constant():
    red = k_reduce(constant(3, 2.5))
    rows = config_points(Xorshift64Star(19), 10, 2, 0.0)
    assert np.abs(red.eval_batch(rows) - 2.5).max() == 0.0
