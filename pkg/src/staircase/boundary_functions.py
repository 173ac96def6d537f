"""Functions on tuples of circle angles, plus the cochain-level constructions
that need no calculus: cup product, orientation cocycle, reduction to and
extension from a pinned first argument.

A BoundaryFunction wraps a vectorized evaluator over m angular coordinates.
Evaluators are callables, not grids: downstream operators need off-grid
evaluation along group flows, and grids would force interpolation error.
All angles are reduced to [0, 2*pi) at the evaluator boundary.

Discontinuity metadata travels with each function: ``coincidence_breaks``
declares possible jumps where two arguments coincide (everything derived from
the orientation cocycle has these) and ``fixed_breaks`` lists special angles
(the pinned point 0 shows up once reductions are involved).  Quadrature uses
this to split integration panels so that integrals of discontinuous
integrands stay smooth functions of the remaining arguments.

Codomain tags: ``dtype`` is "real" or "complex"; ``weight`` is an optional
integer equivariance tag mu, asserting f(rot_t . z) = exp(i mu t) f(z) under
the simultaneous rotation of all arguments.  Tags are contractual and tested
by sampling; operators use them only in ways the tag licenses.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ArityError
from .rng import TWO_PI, Xorshift64Star

COINCIDE_TOL = 1e-13
DEFAULT_MARGIN = 1e-3

REAL = "real"
COMPLEX = "complex"


@dataclass
class BoundaryFunction:
    arity: int
    fn: Callable[[np.ndarray], np.ndarray]   # (k, arity) normalized angles -> (k,)
    dtype: str = REAL
    weight: Optional[int] = None
    singular_margin: float = DEFAULT_MARGIN
    coincidence_breaks: bool = False
    fixed_breaks: tuple = ()
    locally_constant: bool = False
    name: str = ""

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError(f"arity must be >= 1, got {self.arity}")
        if self.dtype not in (REAL, COMPLEX):
            raise ValueError(f"dtype must be 'real' or 'complex', got {self.dtype!r}")
        if self.dtype == REAL and self.weight not in (None, 0):
            raise ValueError("a real-valued function can only carry weight 0")

    def eval_batch(self, theta: np.ndarray) -> np.ndarray:
        """Checked public entry: normalizes angles and validates the shape.

        Internal operator code calls ``fn`` directly with already-normalized
        batches; the extra mod pass here is for callers, not the hot path.
        """
        th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        if th.ndim != 2 or th.shape[1] != self.arity:
            raise ArityError(f"expected (k, {self.arity}) angles, got shape {th.shape}")
        return self.fn(th)

    def __call__(self, theta):
        th = np.asarray(theta, dtype=float)
        if th.ndim == 1:
            out = self.eval_batch(th[None, :])
            return complex(out[0]) if self.dtype == COMPLEX else float(out[0])
        return self.eval_batch(th)

    def out_dtype(self):
        return np.complex128 if self.dtype == COMPLEX else np.float64

    def breaks_for(self, rest: np.ndarray) -> np.ndarray:
        """Angles where eta -> f(eta, rest...) may jump, for one row of
        remaining arguments."""
        parts = []
        if self.coincidence_breaks:
            parts.append(np.mod(rest, TWO_PI))
        if self.fixed_breaks:
            parts.append(np.mod(np.asarray(self.fixed_breaks, dtype=float), TWO_PI))
        if not parts:
            return np.empty(0)
        return np.concatenate(parts)


@dataclass(frozen=True)
class ConfigPoint:
    """A tuple of angles flagged as pairwise separated."""
    angles: tuple

    def separated(self, margin: float) -> bool:
        return in_configuration(np.asarray(self.angles), margin)


def in_configuration(z, margin: float) -> bool:
    """True iff the minimum pairwise circle distance of the angles is >= margin."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    th = np.mod(np.asarray(z, dtype=float), TWO_PI)
    m = len(th)
    if m < 2:
        return True
    diff = np.abs(th[:, None] - th[None, :])
    d = np.minimum(diff, TWO_PI - diff)
    iu = np.triu_indices(m, k=1)
    return bool(d[iu].min() >= margin)


# --- basic constructors -------------------------------------------------------


def constant(arity: int, value, weight: Optional[int] = 0) -> BoundaryFunction:
    value = complex(value)
    is_real = value.imag == 0.0
    val = value.real if is_real else value

    def fn(th):
        return np.full(th.shape[0], val, dtype=np.float64 if is_real else np.complex128)

    return BoundaryFunction(arity, fn, REAL if is_real else COMPLEX,
                            weight=weight if is_real else None,
                            locally_constant=True, name=f"const({value})")


def orientation_values(th: np.ndarray) -> np.ndarray:
    """Vectorized cyclic orientation of angle triples: +1, -1, or 0.

    Value 0 exactly when two of the three reduced angles agree within
    COINCIDE_TOL; floating coincidence is the faithful stand-in for the
    measure-zero degenerate set.
    """
    d1 = np.mod(th[:, 1] - th[:, 0], TWO_PI)
    d2 = np.mod(th[:, 2] - th[:, 0], TWO_PI)
    out = np.where(d1 < d2, 1.0, -1.0)
    hi = TWO_PI - COINCIDE_TOL
    degen = (d1 < COINCIDE_TOL) | (d1 > hi) | (d2 < COINCIDE_TOL) | (d2 > hi)
    d12 = np.abs(d1 - d2)
    degen |= (d12 < COINCIDE_TOL) | (d12 > hi)
    out[degen] = 0.0
    return out


def orientation_cocycle() -> BoundaryFunction:
    """The +-1/0 valued cyclic-orientation function on angle triples."""
    return BoundaryFunction(3, orientation_values, REAL, weight=0,
                            coincidence_breaks=True, locally_constant=True, name="or")


# --- cochain-level constructions ----------------------------------------------


def _product_tags(f: BoundaryFunction, g: BoundaryFunction):
    dtype = COMPLEX if (f.dtype == COMPLEX or g.dtype == COMPLEX) else REAL
    weight = None if (f.weight is None or g.weight is None) else f.weight + g.weight
    if dtype == REAL and weight not in (None, 0):
        weight = None
    return dtype, weight


def cup(f: BoundaryFunction, g: BoundaryFunction) -> BoundaryFunction:
    """(f cup g)(z_0..z_{p+q-2}) = f(z_0..z_{p-1}) * g(z_{p-1}..z_{p+q-2}).

    The last argument of f is shared with the first argument of g.
    """
    if f.arity < 1 or g.arity < 1:
        raise ArityError("cup factors must have arity >= 1")
    p, q = f.arity, g.arity
    dtype, weight = _product_tags(f, g)

    def fn(th):
        return f.fn(np.ascontiguousarray(th[:, :p])) * g.fn(np.ascontiguousarray(th[:, p - 1:]))

    return BoundaryFunction(
        p + q - 1, fn, dtype, weight=weight,
        singular_margin=max(f.singular_margin, g.singular_margin),
        coincidence_breaks=f.coincidence_breaks or g.coincidence_breaks,
        fixed_breaks=tuple(sorted(set(f.fixed_breaks) | set(g.fixed_breaks))),
        locally_constant=f.locally_constant and g.locally_constant,
        name=f"({f.name} cup {g.name})")


def k_reduce(f: BoundaryFunction) -> BoundaryFunction:
    """Pin the first argument of f at angle 0."""
    if f.arity < 2:
        raise ArityError("k_reduce needs arity >= 2")

    def fn(th):
        zeros = np.zeros((th.shape[0], 1))
        return f.fn(np.hstack([zeros, th]))

    fixed = set(f.fixed_breaks)
    if f.coincidence_breaks:
        fixed.add(0.0)
    return BoundaryFunction(f.arity - 1, fn, f.dtype, weight=None,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=f.coincidence_breaks,
                            fixed_breaks=tuple(sorted(fixed)),
                            locally_constant=f.locally_constant,
                            name=f"reduce({f.name})")


def k_extend(f: BoundaryFunction, mu: int) -> BoundaryFunction:
    """Weighted rotational extension: a new leading argument theta_0 with

        g(theta_0, .., theta_m) = exp(i mu theta_0) f(theta_1 - theta_0, ...).

    The output satisfies the weight-mu equivariance identity by construction.
    """
    mu = int(mu)
    real_out = (mu == 0 and f.dtype == REAL)

    def fn(th):
        rest = np.mod(th[:, 1:] - th[:, :1], TWO_PI)
        vals = f.fn(rest)
        if mu == 0:
            return vals
        return np.exp(1j * mu * th[:, 0]) * vals

    coinc = f.coincidence_breaks or (0.0 in f.fixed_breaks)
    return BoundaryFunction(f.arity + 1, fn, REAL if real_out else COMPLEX,
                            weight=mu,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=coinc,
                            fixed_breaks=f.fixed_breaks,
                            locally_constant=f.locally_constant and mu == 0,
                            name=f"extend({f.name},{mu})")


def combine(f: BoundaryFunction, g: BoundaryFunction, cf=1.0, cg=1.0) -> BoundaryFunction:
    """Pointwise linear combination cf*f + cg*g of equal-arity functions."""
    if f.arity != g.arity:
        raise ArityError(f"cannot combine arities {f.arity} and {g.arity}")
    complex_coeff = isinstance(cf, complex) or isinstance(cg, complex)
    dtype = COMPLEX if (f.dtype == COMPLEX or g.dtype == COMPLEX or complex_coeff) else REAL
    weight = f.weight if f.weight == g.weight else None
    if dtype == REAL and weight not in (None, 0):
        weight = None

    def fn(th):
        return cf * f.fn(th) + cg * g.fn(th)

    return BoundaryFunction(f.arity, fn, dtype, weight=weight,
                            singular_margin=max(f.singular_margin, g.singular_margin),
                            coincidence_breaks=f.coincidence_breaks or g.coincidence_breaks,
                            fixed_breaks=tuple(sorted(set(f.fixed_breaks) | set(g.fixed_breaks))),
                            locally_constant=f.locally_constant and g.locally_constant,
                            name=f"({cf}*{f.name} + {cg}*{g.name})")


def scale(f: BoundaryFunction, c) -> BoundaryFunction:
    dtype = COMPLEX if (f.dtype == COMPLEX or isinstance(c, complex)) else REAL
    return replace(f, fn=lambda th: c * f.fn(th), dtype=dtype, name=f"({c}*{f.name})")


# --- memoization ----------------------------------------------------------------


@dataclass
class _MemoState:
    cache: dict = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    hits: int = 0
    misses: int = 0


def memoized(f: BoundaryFunction, quantum: float = 1e-12,
             capacity: int = 1 << 20, batch_limit: int = 2048) -> BoundaryFunction:
    """Exact-repeat cache keyed by angles quantized at ``quantum``.

    Bounded size; safe for concurrent evaluation (a lock guards the dict, and
    values are deterministic so racing recomputation cannot change results).
    Batches larger than ``batch_limit`` bypass the cache: they come from inner
    quadrature loops whose nodes never repeat, and per-row keying would cost
    more than it saves.
    """
    state = _MemoState()

    def fn(th):
        if th.shape[0] > batch_limit:
            return f.fn(th)
        keys = np.round(th / quantum).astype(np.int64)
        out = np.empty(th.shape[0], dtype=f.out_dtype())
        miss_rows = []
        with state.lock:
            for i in range(th.shape[0]):
                v = state.cache.get(keys[i].tobytes())
                if v is None:
                    miss_rows.append(i)
                else:
                    out[i] = v
            state.hits += th.shape[0] - len(miss_rows)
            state.misses += len(miss_rows)
        if miss_rows:
            idx = np.array(miss_rows)
            vals = f.fn(th[idx])
            out[idx] = vals
            with state.lock:
                if len(state.cache) + len(idx) > capacity:
                    state.cache.clear()
                for i, v in zip(idx, vals):
                    state.cache[keys[i].tobytes()] = v
        return out

    g = replace(f, fn=fn, name=f"memo({f.name})")
    g._memo_state = state
    return g


# --- sampled invariant checks (used by tests and the verify suites) ------------


def periodicity_deviation(f: BoundaryFunction, rng: Xorshift64Star, samples: int = 20) -> float:
    worst = 0.0
    for _ in range(samples):
        th = rng.angles(f.arity)
        base = f(th)
        for j in range(f.arity):
            shifted = th.copy()
            shifted[j] += TWO_PI
            worst = max(worst, abs(f(shifted) - base))
    return worst


def weight_deviation(f: BoundaryFunction, rng: Xorshift64Star, samples: int = 20,
                     margin: float = DEFAULT_MARGIN) -> float:
    """Sampled residual of the declared rotation-equivariance tag."""
    if f.weight is None:
        raise ValueError("function carries no weight tag")
    from .rng import config_point
    worst = 0.0
    for _ in range(samples):
        th = config_point(rng, f.arity, margin)
        t = rng.uniform(0.0, TWO_PI)
        lhs = f(np.mod(th + t, TWO_PI))
        rhs = np.exp(1j * f.weight * t) * f(th)
        worst = max(worst, abs(lhs - rhs))
    return worst
