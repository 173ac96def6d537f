import math

import numpy as np
import pytest

from staircase.boundary_functions import BoundaryFunction, constant, k_reduce
from staircase.cochain_ops import FdSpec, cauchy_L, frobenius_Q
from staircase.errors import (ArityError, DegenerateLeadingTriple,
                              IntegrabilityViolation, TailBudgetExceeded)
from staircase.families import invariant_trig_poly
from staircase.group_core import act_angle, make_element, random_element
from staircase.pde_solvers import (BasepointScheme, LineIntegralSpec, TailSpec,
                                   _dilation_flow_many, _gl, canonical_basepoint,
                                   solve_cauchy_R, solve_frobenius_S)
from staircase.rng import TWO_PI, Xorshift64Star, config_points

FD = FdSpec(1e-4)
SCHEME = BasepointScheme()
LINE = LineIntegralSpec()


def circ_close(a, b, tol):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b) + np.pi, TWO_PI) - np.pi)
    return np.max(d) < tol


# --- damped-tail solver ----------------------------------------------------------


def test_tail_solver_on_constant():
    s = solve_frobenius_S(constant(2, 1.0), TailSpec())
    for t0 in (0.0, 0.8, 4.1):
        v = s(np.array([t0, 2.0]))
        assert abs(v - 1j * np.exp(1j * t0)) < 1e-10


def test_tail_solver_on_zero():
    s = solve_frobenius_S(constant(2, 0.0), TailSpec())
    assert abs(s(np.array([1.0, 2.0]))) == 0.0


def test_tail_solver_right_inverse():
    psi = invariant_trig_poly(2, seed=60, degree=2)
    s = solve_frobenius_S(psi, TailSpec())
    rows = config_points(Xorshift64Star(61), 50, 2, 0.1)
    res = frobenius_Q(s, FD).eval_batch(rows) - psi.eval_batch(rows)
    assert np.abs(res).max() < 1e-5


def test_tail_solver_right_inverse_higher_arity():
    psi = invariant_trig_poly(3, seed=62, degree=2)
    s = solve_frobenius_S(psi, TailSpec())
    rows = config_points(Xorshift64Star(63), 25, 3, 0.1)
    res = frobenius_Q(s, FD).eval_batch(rows) - psi.eval_batch(rows)
    assert np.abs(res).max() < 1e-5


def test_tail_output_structure():
    psi = invariant_trig_poly(2, seed=64)
    s = solve_frobenius_S(psi, TailSpec())
    assert s.weight == 1 and s.dtype == "complex"
    red = k_reduce(s)
    rows = Xorshift64Star(65).angles(30)[:, None]
    assert np.abs(red.eval_batch(rows).real).max() == 0.0


def test_tail_profile_matches_direct():
    psi = invariant_trig_poly(2, seed=66, degree=2)
    direct = solve_frobenius_S(psi, TailSpec(profile=False))
    cached = solve_frobenius_S(psi, TailSpec(profile=True))
    rows = config_points(Xorshift64Star(67), 60, 2, 1e-4)
    dev = np.abs(direct.eval_batch(rows) - cached.eval_batch(rows)).max()
    assert dev < 1e-8


def test_tail_budget_exceeded():
    big = constant(2, 25.0)
    s = solve_frobenius_S(big, TailSpec(profile=False, max_abs=10.0))
    with pytest.raises(TailBudgetExceeded):
        s(np.array([0.5, 2.0]))


def test_tail_solver_rejects_bad_inputs():
    with pytest.raises(ArityError):
        solve_frobenius_S(constant(1, 1.0), TailSpec())
    untagged = BoundaryFunction(2, lambda th: np.zeros(th.shape[0]), "real", weight=None)
    with pytest.raises(ValueError):
        solve_frobenius_S(untagged, TailSpec())


def test_tameness_bound_witness():
    # |int_0^T Re(S psi)(a_t . z) dt| <= pi * sup|psi_K| + tolerance
    psi = invariant_trig_poly(2, seed=68, degree=2)
    s = solve_frobenius_S(psi, TailSpec())
    red = k_reduce(psi)
    grid = np.linspace(0, TWO_PI, 1024, endpoint=False)[:, None]
    norm = float(np.abs(red.eval_batch(grid)).max())
    rng = Xorshift64Star(69)
    for _ in range(100):
        T = rng.uniform(-20.0, 20.0)
        z = config_points(rng, 1, 2, 0.1)[0]
        x, w = _gl(128)
        ts = 0.5 * T * (x + 1.0)
        ws = 0.5 * T * w
        pts = _dilation_flow_many(ts, z[None, :])[0]
        val = float(s.eval_batch(pts).real @ ws)
        assert abs(val) <= math.pi * norm + 1e-3


# --- canonical basepoints ----------------------------------------------------------


def test_basepoint_already_canonical():
    z = np.array([0.0, math.pi / 2, math.pi, 4.5])
    b, g = canonical_basepoint(z, SCHEME)
    assert circ_close(b, z, 1e-12)
    assert abs(g.a - 1.0) < 1e-12 and abs(g.b) < 1e-12


def test_basepoint_rotation_case():
    t, th = 0.9, 5.2
    z = np.mod(np.array([t, math.pi / 2 + t, math.pi + t, th + t]), TWO_PI)
    b, g = canonical_basepoint(z, SCHEME)
    assert circ_close(b, [0.0, math.pi / 2, math.pi, th], 1e-10)
    assert circ_close(act_angle(g, b), z, 1e-10)


def test_basepoint_orbit_invariance():
    rng = Xorshift64Star(70)
    for _ in range(50):
        z = config_points(rng, 1, 4, 0.05)[0]
        b1, g1 = canonical_basepoint(z, SCHEME)
        g0 = random_element(rng)
        b2, g2 = canonical_basepoint(act_angle(g0, z), SCHEME)
        assert circ_close(b1, b2, 1e-8)
        assert circ_close(act_angle(g1, b1), z, 1e-8)


def test_basepoint_negative_orientation():
    z = np.array([0.3, 4.0, 2.0, 5.5])     # negatively oriented leading triple
    b, g = canonical_basepoint(z, SCHEME)
    assert circ_close(b[:3], SCHEME.reference_triple_neg, 1e-9)
    assert circ_close(act_angle(g, b), z, 1e-8)


def test_basepoint_degenerate_triple_raises():
    with pytest.raises(DegenerateLeadingTriple):
        canonical_basepoint(np.array([1.0, 1.0 + 1e-9, 3.0, 4.0]), SCHEME)
    with pytest.raises(ArityError):
        canonical_basepoint(np.array([1.0, 2.0]), SCHEME)


# --- line-integral solver ------------------------------------------------------------


def test_line_solver_right_inverse():
    f = invariant_trig_poly(3, seed=71, degree=2)
    u = cauchy_L(f, FD)
    r = solve_cauchy_R(u, SCHEME, LINE)
    rows = config_points(Xorshift64Star(72), 50, 3, 0.1)
    res = cauchy_L(r, FD).eval_batch(rows) - u.eval_batch(rows)
    assert np.abs(res).max() < 1e-4


def test_line_solver_reconstructs_up_to_orbit_constant():
    f = invariant_trig_poly(3, seed=73, degree=2)
    u = cauchy_L(f, FD)
    r = solve_cauchy_R(u, SCHEME, LINE)
    rng = Xorshift64Star(74)
    for _ in range(10):
        z = config_points(rng, 1, 3, 0.1)[0]
        b, _ = canonical_basepoint(z, SCHEME)
        assert abs(r(z) - (f(z) - f(b))) < 1e-6


def test_line_solver_zero_input():
    u = BoundaryFunction(3, lambda th: np.zeros(th.shape[0], complex), "complex",
                         singular_margin=0.0)
    r = solve_cauchy_R(u, SCHEME, LINE)
    assert r(np.array([0.5, 2.0, 4.0])) == 0.0


def test_line_solver_vanishes_at_basepoints():
    f = invariant_trig_poly(4, seed=75, degree=2)
    r = solve_cauchy_R(cauchy_L(f, FD), SCHEME, LINE)
    b = np.array([0.0, math.pi / 2, math.pi, 5.0])
    assert r(b) == 0.0


def test_line_solver_degenerate_tuple_convention():
    f = invariant_trig_poly(3, seed=76, degree=2)
    r = solve_cauchy_R(cauchy_L(f, FD), SCHEME, LINE)
    assert r(np.array([1.0, 1.0 + 1e-9, 4.0])) == 0.0


def test_line_solver_rotation_invariance():
    f = invariant_trig_poly(3, seed=77, degree=2)
    r = solve_cauchy_R(cauchy_L(f, FD), SCHEME, LINE)
    rng = Xorshift64Star(78)
    for _ in range(8):
        z = config_points(rng, 1, 3, 0.15)[0]
        v0 = r(z)
        t = rng.uniform(0, TWO_PI)
        assert abs(r(np.mod(z + t, TWO_PI)) - v0) < 1e-6


def test_line_solver_projective_representative_independence():
    # the matrix-sign ambiguity of the decomposition input cannot change values
    from staircase.group_core import cartan
    g = random_element(Xorshift64Star(79))
    flipped = make_element(-g.a * (1 + 0j), -g.b * (1 + 0j))
    c1, c2 = cartan(g), cartan(flipped)
    assert abs(c1.T - c2.T) < 1e-14
    assert abs(math.cos(c1.tK_right) - math.cos(c2.tK_right)) < 1e-12
    assert abs(math.sin(c1.tK_right) - math.sin(c2.tK_right)) < 1e-12


def test_line_solver_strict_integrability_check():
    psi = invariant_trig_poly(3, seed=80, degree=2)
    u = solve_frobenius_S(psi, TailSpec())          # Q u = psi, far from zero
    r = solve_cauchy_R(u, SCHEME, LINE, strict_fd=FD)
    with pytest.raises(IntegrabilityViolation):
        r(np.array([0.5, 2.2, 4.4]))


def test_line_solver_rejects_bad_inputs():
    with pytest.raises(ArityError):
        solve_cauchy_R(BoundaryFunction(2, lambda th: np.zeros(th.shape[0], complex),
                                        "complex"), SCHEME, LINE)
    with pytest.raises(ValueError):
        solve_cauchy_R(BoundaryFunction(3, lambda th: np.zeros(th.shape[0]), "real"),
                       SCHEME, LINE)


def test_spec_validation():
    with pytest.raises(ValueError):
        TailSpec(t_max=-1.0)
    with pytest.raises(ValueError):
        LineIntegralSpec(min_nodes=1)


def test_tail_solver_right_inverse_orientation_derived():
    # piecewise-linear invariant data from the contracted orientation cocycle
    from staircase.cochain_ops import QuadratureSpec, contraction_I
    from staircase.boundary_functions import orientation_cocycle
    psi = contraction_I(orientation_cocycle(), QuadratureSpec(64))
    s = solve_frobenius_S(psi, TailSpec())
    rows = config_points(Xorshift64Star(93), 40, 2, 0.1)
    res = frobenius_Q(s, FD).eval_batch(rows) - psi.eval_batch(rows)
    assert np.abs(res).max() < 1e-3
