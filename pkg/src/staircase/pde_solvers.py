"""Integral solution operators for the two first-order problems, and the
canonical basepoint scheme they rely on.

The tail-integral operator solves  Q u = psi  by damping psi along the
dilation flow:

    u(z_0...z_n) = i z_0 * Integral_0^inf psi(1, flow_t(z_1/z_0), ...) e^-t dt,

implemented as the weighted rotational extension of an arity-(m-1) transform.
The line-integral operator solves  L p = u  (for u with Q u = 0) by
integrating Re u along the dilation flow from a canonical orbit
representative:

    p(g.b) = Integral_0^T  Re u(a_t k . b) dt,      g = k' a_T k,  T >= 0,

where b is the basepoint of the orbit of the evaluation point.  Basepoints
are realized by normalizing the leading triple of angles to a fixed reference
triple per orientation class, which is orbit-invariant by construction.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .boundary_functions import COMPLEX, REAL, BoundaryFunction, k_extend, k_reduce, memoized
from .curvecache import cached_curve
from .errors import (ArityError, DegenerateLeadingTriple, IntegrabilityViolation,
                     NonFiniteSample, TailBudgetExceeded)
from .group_core import act_angle, cartan, inverse, map_triple, triple_orientation
from .rng import TWO_PI

_HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class TailSpec:
    """Truncated-damped-integral configuration.

    The truncation bound ||psi||_inf * exp(-t_max) stays below 1e-15 for
    ||psi||_inf <= max_abs = 10 at the default horizon.  ``profile``
    enables the certified interpolation cache for arity-1 reduced
    integrands (results change by at most profile_tol).
    """
    t_max: float = 40.0
    nodes: int = 400
    rule: str = "composite-gauss"
    max_abs: float = 10.0
    profile: bool = True
    profile_tol: float = 1e-11   # seam mismatch divides by the FD step downstream

    def __post_init__(self):
        if self.t_max <= 0 or self.nodes < 8:
            raise ValueError("need t_max > 0 and nodes >= 8")


@dataclass(frozen=True)
class LineIntegralSpec:
    nodes_per_unit: float = 32.0
    min_nodes: int = 64
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.nodes_per_unit <= 0 or self.min_nodes < 2:
            raise ValueError("need nodes_per_unit > 0 and min_nodes >= 2")

    def node_count(self, T: float) -> int:
        return max(self.min_nodes, int(math.ceil(abs(T) * self.nodes_per_unit)))


@dataclass(frozen=True)
class BasepointScheme:
    """Leading-triple normalization realizing one basepoint per group orbit."""
    reference_triple_pos: tuple = (0.0, _HALF_PI, np.pi)
    reference_triple_neg: tuple = (0.0, np.pi, _HALF_PI)
    margin: float = 1e-6

    def reference(self, orientation: int):
        return self.reference_triple_pos if orientation > 0 else self.reference_triple_neg


_leggauss_cache: dict = {}
_leggauss_lock = threading.Lock()


def _gl(n: int):
    with _leggauss_lock:
        if n not in _leggauss_cache:
            _leggauss_cache[n] = leggauss(n)
        return _leggauss_cache[n]


def _tail_nodes(spec: TailSpec):
    """Composite Gauss-Legendre nodes on [0, t_max].

    The integrand keeps unit-scale structure until the flow parks at its
    attracting fixed point (t around 15), after which only the exponential
    damping is left; panels are uniform over the active range and coarse
    beyond it.
    """
    npan = max(4, spec.nodes // 16)
    per = max(4, -(-spec.nodes // npan))
    active = min(spec.t_max, 20.0)
    n_active = max(2, int(round(npan * 0.8)))
    edges = list(np.linspace(0.0, active, n_active + 1))
    if spec.t_max > active:
        n_rest = max(1, npan - n_active)
        edges += list(np.linspace(active, spec.t_max, n_rest + 1)[1:])
    edges = np.asarray(edges)
    x, w = _gl(per)
    ts, ws = [], []
    for i in range(npan):
        half = 0.5 * (edges[i + 1] - edges[i])
        ts.append(edges[i] + half * (x + 1.0))
        ws.append(w * half)
    return np.concatenate(ts), np.concatenate(ws)


def _dilation_flow_many(times: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Angles of the dilation flow at several times: output (k, nt, m).

    Uses the half-angle form tan(theta_t / 2) = exp(t) tan(theta / 2), which
    stays finite at the fixed points 0 and pi where the matrix quotient
    suffers catastrophic cancellation for |t| >> 1.
    """
    half = 0.5 * np.mod(rows, TWO_PI)
    s = np.sin(half)[:, None, :]
    c = np.cos(half)[:, None, :]
    et = np.exp(times)[None, :, None]
    return np.mod(2.0 * np.arctan2(et * s, c), TWO_PI)


def solve_frobenius_S(psi: BoundaryFunction, tail: TailSpec) -> BoundaryFunction:
    """Right inverse of the Frobenius operator: Q(S psi) = psi.

    The output carries weight 1, and the real part of its reduction at
    pinned first argument vanishes identically (the transform is purely
    imaginary there).
    """
    if psi.arity < 2:
        raise ArityError("solve_frobenius_S needs arity >= 2")
    if psi.dtype != REAL:
        raise ValueError("solve_frobenius_S expects a real right-hand side")
    if psi.weight != 0:
        raise ValueError("solve_frobenius_S expects a rotation-invariant (weight 0) "
                         "right-hand side; the right-inverse property fails otherwise")
    red = k_reduce(psi)
    if tail.profile and red.arity == 1:
        red = cached_curve(red, tol=tail.profile_tol)
    times, wts = _tail_nodes(tail)
    damping = wts * np.exp(-times)
    m1 = psi.arity - 1
    nt = len(times)

    def vfn(th):
        k = th.shape[0]
        out = np.empty(k, dtype=np.complex128)
        rows_per_chunk = max(1, 2_000_000 // (nt * m1))
        for lo in range(0, k, rows_per_chunk):
            blk = th[lo:lo + rows_per_chunk]
            kb = blk.shape[0]
            pts = _dilation_flow_many(times, blk).reshape(kb * nt, m1)
            vals = red.fn(pts).reshape(kb, nt)
            if not np.all(np.isfinite(vals)):
                raise NonFiniteSample("non-finite tail integrand")
            if np.abs(vals).max(initial=0.0) > tail.max_abs:
                raise TailBudgetExceeded(
                    f"integrand magnitude exceeds the truncation assumption {tail.max_abs}")
            out[lo:lo + rows_per_chunk] = 1j * (vals @ damping)
        return out

    # the repelling fixed point of the dilation flow leaves a structural kink
    # in the transform at angle 0, whatever the integrand
    v_breaks = tuple(sorted(set(red.fixed_breaks) | {0.0}))
    v = BoundaryFunction(m1, vfn, COMPLEX, weight=None,
                         singular_margin=psi.singular_margin,
                         coincidence_breaks=psi.coincidence_breaks,
                         fixed_breaks=v_breaks,
                         name=f"tail({psi.name})")
    if tail.profile and v.arity == 1:
        v = cached_curve(v, tol=tail.profile_tol)
    out = k_extend(v, 1)
    out.name = f"S({psi.name})"
    return out


# --- canonical basepoints and the line-integral solver -------------------------


def _leading_info(z: np.ndarray):
    t0, t1, t2 = z[0], z[1], z[2]
    gaps = []
    for x, y in ((t0, t1), (t0, t2), (t1, t2)):
        d = abs((x - y) % TWO_PI)
        gaps.append(min(d, TWO_PI - d))
    return min(gaps), triple_orientation(t0, t1, t2)


def canonical_basepoint(z, scheme: BasepointScheme):
    """(b, g) with g.b = z, where b is the orbit representative whose leading
    triple is the reference triple of matching orientation."""
    z = np.mod(np.asarray(z, dtype=float), TWO_PI)
    if len(z) < 3:
        raise ArityError("canonical_basepoint needs at least 3 angles")
    gap, orient = _leading_info(z)
    if gap < scheme.margin or orient == 0:
        raise DegenerateLeadingTriple(
            f"leading triple gap {gap:.3e} below margin {scheme.margin:.3e}")
    h = map_triple(z[:3], np.asarray(scheme.reference(orient)),
                   min_gap=0.5 * scheme.margin)
    b = act_angle(h, z)
    return b, inverse(h)


def solve_cauchy_R(u: BoundaryFunction, scheme: BasepointScheme,
                   line: LineIntegralSpec, strict_fd=None) -> BoundaryFunction:
    """Right inverse of the first-order complex operator on its image:
    L(R u) = u whenever Q u = 0.

    Values at tuples with a degenerate leading triple are 0 (the
    representative convention off the configuration space), and the output
    vanishes at the canonical basepoints themselves (T = 0 there).  With
    ``strict_fd`` set to an FdSpec, each evaluation spot-checks |Q u| at the
    point and raises IntegrabilityViolation above 1e-3.
    """
    if u.arity < 3:
        raise ArityError("solve_cauchy_R needs arity >= 3 (free action)")
    if u.dtype != COMPLEX:
        raise ValueError("solve_cauchy_R expects a complex right-hand side")
    m = u.arity
    qcheck = None
    if strict_fd is not None:
        from .cochain_ops import frobenius_Q
        qcheck = frobenius_Q(u, strict_fd)

    def fn(th):
        k = th.shape[0]
        out = np.zeros(k, dtype=np.float64)
        counts, times_all, wts_all, base_rows, row_ids = [], [], [], [], []
        for i in range(k):
            z = th[i]
            gap, orient = _leading_info(z)
            if gap < scheme.margin or orient == 0:
                continue
            h = map_triple(z[:3], np.asarray(scheme.reference(orient)),
                           min_gap=0.5 * scheme.margin)
            b = act_angle(h, z)
            g = inverse(h)
            cc = cartan(g)
            if cc.T < 1e-13:
                continue
            kb = np.mod(b + cc.tK_right, TWO_PI)       # rotation acts by translation
            n = line.node_count(cc.T)
            x, w = _gl(n)
            times_all.append(0.5 * cc.T * (x + 1.0))
            wts_all.append(0.5 * cc.T * w)
            base_rows.append(kb)
            row_ids.append(i)
            counts.append(n)
        if not row_ids:
            return out
        if qcheck is not None:
            qv = qcheck.eval_batch(th[np.array(row_ids)])
            bad = np.abs(qv) > 1e-3
            if bad.any():
                raise IntegrabilityViolation(
                    f"|Q u| = {np.abs(qv).max():.3e} > 1e-3 at an evaluation point")
        pts = []
        for t, kb in zip(times_all, base_rows):
            pts.append(_dilation_flow_many(t, kb[None, :])[0])
        big = np.concatenate(pts, axis=0)
        vals = np.empty(big.shape[0], dtype=np.complex128)
        chunk = max(1, 2_000_000 // m)
        for lo in range(0, big.shape[0], chunk):
            vals[lo:lo + chunk] = u.fn(big[lo:lo + chunk])
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample("non-finite line integrand")
        offsets = np.concatenate([[0], np.cumsum(counts)])
        wflat = np.concatenate(wts_all)
        sums = np.add.reduceat(vals.real * wflat, offsets[:-1])
        out[np.array(row_ids)] = sums
        return out

    bf = BoundaryFunction(m, fn, REAL, weight=0,
                          singular_margin=max(scheme.margin, u.singular_margin),
                          coincidence_breaks=True,
                          fixed_breaks=u.fixed_breaks,
                          name=f"R({u.name})")
    return memoized(bf)
