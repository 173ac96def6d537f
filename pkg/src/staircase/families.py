"""Seeded smooth test-function families used by the property suites.

All families are trigonometric polynomials of low degree, so the periodic
quadrature rules resolve them exactly and flow derivatives of any order stay
bounded.
"""

from __future__ import annotations

import numpy as np

from .boundary_functions import COMPLEX, REAL, BoundaryFunction, k_extend
from .rng import TWO_PI, Xorshift64Star


def _coeffs(rng: Xorshift64Star, terms: int, arity: int, degree: int):
    amps = np.array([rng.uniform(-1.0, 1.0) for _ in range(terms)])
    freqs = np.array([[int(rng.uniform(0, degree + 1)) for _ in range(arity)]
                      for _ in range(terms)], dtype=float)
    phases = np.array([[rng.uniform(0.0, TWO_PI) for _ in range(arity)]
                       for _ in range(terms)])
    return amps, freqs, phases


def trig_poly(arity: int, seed: int, degree: int = 3, terms: int = 4,
              scale: float = 1.0) -> BoundaryFunction:
    """Random real trig polynomial sum_r a_r prod_j cos(k_rj theta_j + phi_rj)."""
    amps, freqs, phases = _coeffs(Xorshift64Star(seed), terms, arity, degree)
    amps = scale * amps

    def fn(th):
        args = th[:, None, :] * freqs[None, :, :] + phases[None, :, :]
        return np.cos(args).prod(axis=2) @ amps

    return BoundaryFunction(arity, fn, REAL, weight=None, singular_margin=0.0,
                            name=f"trig({arity},seed={seed})")


def invariant_trig_poly(arity: int, seed: int, degree: int = 3,
                        terms: int = 4, scale: float = 1.0) -> BoundaryFunction:
    """Rotation-invariant (weight 0) smooth family built from angle differences."""
    if arity < 2:
        raise ValueError("invariant family needs arity >= 2 (arity 1 invariants are constants)")
    amps, freqs, phases = _coeffs(Xorshift64Star(seed), terms, arity - 1, degree)
    amps = scale * amps

    def fn(th):
        diffs = th[:, 1:] - th[:, :1]
        args = diffs[:, None, :] * freqs[None, :, :] + phases[None, :, :]
        return np.cos(args).prod(axis=2) @ amps

    return BoundaryFunction(arity, fn, REAL, weight=0, singular_margin=0.0,
                            name=f"invtrig({arity},seed={seed})")


def weighted_trig_poly(arity: int, mu: int, seed: int, degree: int = 3,
                       terms: int = 4) -> BoundaryFunction:
    """Smooth complex family with an exact rotation-equivariance weight mu."""
    if arity < 2:
        base = trig_poly(1, seed, degree, terms)
        # one-argument case: exp(i mu theta) times a constant profile is enough
        c = float(base(np.array([0.7])))

        def fn(th):
            return (1.0 + 0.25 * c) * np.exp(1j * mu * th[:, 0])

        return BoundaryFunction(1, fn, COMPLEX, weight=mu, singular_margin=0.0,
                                name=f"wtrig(1,mu={mu})")
    return k_extend(trig_poly(arity - 1, seed, degree, terms), mu)
