"""The calculus layer: homogeneous coboundary, the averaging contraction,
flow derivatives along the three one-parameter subgroups, and the first-order
operators built from them.

Quadrature.  The contraction integrates over a prepended circle argument
against the normalized arc measure.  Integrands inherited from the
orientation cocycle jump where the integration variable meets one of the
remaining arguments, so the default rule splits the circle into panels at the
integrand's declared break angles and applies the composite midpoint rule
inside each panel.  Midpoint nodes never touch the breaks, panel endpoints
move smoothly with the remaining arguments, and piecewise-constant integrands
are integrated exactly; this keeps quadrature outputs differentiable along
group flows, which the finite-difference operators downstream require.  A
literal uniform-trapezoid rule is retained as an option for smooth periodic
integrands (where it is spectrally accurate).

Finite differences.  Flow derivatives use second-order central differences
along the one-parameter actions.  Diagonal flows preserve pairwise
distinctness of the arguments, so stencils never straddle the coincidence
jumps of orientation-derived functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary_functions import COMPLEX, REAL, BoundaryFunction
from .errors import ArityError, NonFiniteSample, QuadratureOverflow
from .group_core import A, K, N, one_param
from .rng import TWO_PI

PANEL_MIDPOINT = "panel-midpoint"
UNIFORM_TRAPEZOID = "uniform-trapezoid"

# above this many rows, panel node allocation switches from per-row
# proportional counts to a vectorized equal-count split (exact anyway for the
# piecewise-constant innermost integrands that produce such large batches)
_ROW_LOOP_LIMIT = 512

_CHUNK_VALUES = 4_000_000


@dataclass(frozen=True)
class QuadratureSpec:
    """Circle quadrature configuration.

    circle_nodes is the total node budget per integral; rule is
    "panel-midpoint" (default) or "uniform-trapezoid".
    """
    circle_nodes: int = 256
    rule: str = PANEL_MIDPOINT

    def __post_init__(self):
        if self.circle_nodes < 8:
            raise ValueError("circle_nodes must be >= 8")
        if self.rule not in (PANEL_MIDPOINT, UNIFORM_TRAPEZOID):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")


@dataclass(frozen=True)
class FdSpec:
    """Central-difference step configuration.  Supported accuracy range is
    0 < h < 0.1; larger steps parse but degrade to first-order garbage."""
    h: float = 1e-4
    scheme: str = "central-2nd-order"

    def __post_init__(self):
        if not 0.0 < self.h < 1.0:
            raise ValueError("finite-difference step must satisfy 0 < h < 1")


# --- quadrature over a prepended argument -------------------------------------


def _uniform_nodes(n: int, midpoint: bool) -> tuple[np.ndarray, np.ndarray]:
    offs = 0.5 if midpoint else 0.0
    nodes = (np.arange(n) + offs) * (TWO_PI / n)
    return nodes, np.full(n, 1.0 / n)


def _row_panel_nodes(breaks: np.ndarray, n_total: int):
    """Proportional midpoint nodes for one row; breaks sorted in [0, 2pi)."""
    gaps = np.diff(breaks, append=breaks[0] + TWO_PI)
    counts = np.maximum(2, np.round(n_total * gaps / TWO_PI).astype(int))
    nodes = np.concatenate([
        breaks[i] + (np.arange(counts[i]) + 0.5) * (gaps[i] / counts[i])
        for i in range(len(breaks))
    ])
    wts = np.concatenate([
        np.full(counts[i], gaps[i] / (counts[i] * TWO_PI)) for i in range(len(breaks))
    ])
    return nodes, wts


def _integrate_prepended(f: BoundaryFunction, rows: np.ndarray, quad: QuadratureSpec,
                         mult=None, mult_anti=None) -> np.ndarray:
    """Integrate eta -> mult(eta) * f(eta, row...) dmu(eta) for each row.

    ``mult``/``mult_anti`` are a pointwise weight and its antiderivative; the
    antiderivative makes the locally-constant fast path exact for weighted
    integrals as well.
    """
    k, m = rows.shape
    nq = quad.circle_nodes
    out = np.empty(k, dtype=f.out_dtype())

    has_breaks = quad.rule == PANEL_MIDPOINT and (f.coincidence_breaks or f.fixed_breaks)

    if has_breaks and f.locally_constant and (mult is None or mult_anti is not None):
        # the integrand is constant between consecutive break angles: one
        # midpoint sample per panel integrates it exactly
        fixed = np.mod(np.asarray(f.fixed_breaks, dtype=float), TWO_PI) if f.fixed_breaks else None
        parts = [rows] if f.coincidence_breaks else []
        if fixed is not None:
            parts.append(np.broadcast_to(fixed, (k, len(fixed))))
        brk = np.sort(np.concatenate(parts, axis=1), axis=1)
        nb = brk.shape[1]
        gaps = np.diff(brk, axis=1, append=brk[:, :1] + TWO_PI)
        mids = np.mod(brk + 0.5 * gaps, TWO_PI)
        if mult is None:
            wts = gaps / TWO_PI
        else:
            hi = brk + gaps
            wts = (mult_anti(hi) - mult_anti(brk)) / TWO_PI
        rows_per_chunk = max(1, _CHUNK_VALUES // (nb * (m + 1)))
        for lo in range(0, k, rows_per_chunk):
            blk = rows[lo:lo + rows_per_chunk]
            kb = blk.shape[0]
            theta = np.empty((kb, nb, m + 1))
            theta[:, :, 0] = mids[lo:lo + rows_per_chunk]
            theta[:, :, 1:] = blk[:, None, :]
            vals = f.fn(theta.reshape(kb * nb, m + 1)).reshape(kb, nb)
            if not np.all(np.isfinite(vals)):
                raise QuadratureOverflow(f"non-finite integrand sample in {f.name}")
            out[lo:lo + rows_per_chunk] = (vals * wts[lo:lo + rows_per_chunk]).sum(axis=1)
        return out

    if not has_breaks:
        nodes, wts = _uniform_nodes(nq, midpoint=quad.rule == PANEL_MIDPOINT)
        mvals = wts if mult is None else wts * mult(nodes)
        rows_per_chunk = max(1, _CHUNK_VALUES // (nq * (m + 1)))
        for lo in range(0, k, rows_per_chunk):
            blk = rows[lo:lo + rows_per_chunk]
            kb = blk.shape[0]
            theta = np.empty((kb, nq, m + 1))
            theta[:, :, 0] = nodes[None, :]
            theta[:, :, 1:] = blk[:, None, :]
            vals = f.fn(theta.reshape(kb * nq, m + 1)).reshape(kb, nq)
            if not np.all(np.isfinite(vals)):
                raise QuadratureOverflow(f"non-finite integrand sample in {f.name}")
            out[lo:lo + rows_per_chunk] = vals @ mvals
        return out

    fixed = np.mod(np.asarray(f.fixed_breaks, dtype=float), TWO_PI) if f.fixed_breaks else None

    def row_breaks(blk):
        parts = [np.mod(blk, TWO_PI)] if f.coincidence_breaks else []
        if fixed is not None:
            parts.append(np.broadcast_to(fixed, (blk.shape[0], len(fixed))))
        return np.sort(np.concatenate(parts, axis=1), axis=1)

    if k <= _ROW_LOOP_LIMIT:
        # per-row proportional allocation: best constants on the outer layers
        brk = row_breaks(rows)
        node_list, wt_list, offsets = [], [], [0]
        for i in range(k):
            nd, wt = _row_panel_nodes(brk[i], nq)
            node_list.append(nd)
            wt_list.append(wt)
            offsets.append(offsets[-1] + len(nd))
        nodes = np.concatenate(node_list)
        wts = np.concatenate(wt_list)
        theta = np.empty((len(nodes), m + 1))
        theta[:, 0] = np.mod(nodes, TWO_PI)
        theta[:, 1:] = np.repeat(rows, np.diff(offsets), axis=0)
        vals = np.empty(len(nodes), dtype=f.out_dtype())
        for lo in range(0, len(nodes), _CHUNK_VALUES // (m + 1)):
            vals[lo:lo + _CHUNK_VALUES // (m + 1)] = f.fn(
                theta[lo:lo + _CHUNK_VALUES // (m + 1)])
        if not np.all(np.isfinite(vals)):
            raise QuadratureOverflow(f"non-finite integrand sample in {f.name}")
        if mult is not None:
            wts = wts * mult(nodes)
        sums = np.add.reduceat(vals * wts, offsets[:-1])
        return sums.astype(f.out_dtype())

    # large batches: equal node count per panel, fully vectorized
    brk = row_breaks(rows)
    nb = brk.shape[1]
    cnt = max(2, -(-nq // nb))
    gaps = np.diff(brk, axis=1, append=brk[:, :1] + TWO_PI)
    offs = (np.arange(cnt) + 0.5) / cnt
    rows_per_chunk = max(1, _CHUNK_VALUES // (nb * cnt * (m + 1)))
    for lo in range(0, k, rows_per_chunk):
        bb = brk[lo:lo + rows_per_chunk]
        gg = gaps[lo:lo + rows_per_chunk]
        kb = bb.shape[0]
        nodes = bb[:, :, None] + gg[:, :, None] * offs[None, None, :]
        wts = np.broadcast_to((gg / (cnt * TWO_PI))[:, :, None], nodes.shape)
        theta = np.empty((kb, nb * cnt, m + 1))
        theta[:, :, 0] = np.mod(nodes.reshape(kb, nb * cnt), TWO_PI)
        theta[:, :, 1:] = rows[lo:lo + rows_per_chunk, None, :]
        vals = f.fn(theta.reshape(kb * nb * cnt, m + 1)).reshape(kb, nb * cnt)
        if not np.all(np.isfinite(vals)):
            raise QuadratureOverflow(f"non-finite integrand sample in {f.name}")
        w = wts.reshape(kb, nb * cnt)
        if mult is not None:
            w = w * mult(nodes.reshape(kb, nb * cnt))
        out[lo:lo + rows_per_chunk] = (vals * w).sum(axis=1)
    return out


# --- homogeneous coboundary ----------------------------------------------------


def coboundary(f: BoundaryFunction) -> BoundaryFunction:
    """Alternating sum over argument omissions, raising arity by one."""
    a = f.arity
    face_idx = np.array([[j for j in range(a + 1) if j != i] for i in range(a + 1)])
    signs = np.array([(-1.0) ** i for i in range(a + 1)])

    def fn(th):
        k = th.shape[0]
        faces = th[:, face_idx]                      # (k, a+1, a)
        vals = f.fn(faces.reshape(k * (a + 1), a)).reshape(k, a + 1)
        return vals @ signs

    return BoundaryFunction(a + 1, fn, f.dtype, weight=f.weight,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=f.coincidence_breaks,
                            fixed_breaks=f.fixed_breaks,
                            locally_constant=f.locally_constant,
                            name=f"d({f.name})")


# --- averaging contraction ------------------------------------------------------


def contraction_I(f: BoundaryFunction, quad: QuadratureSpec) -> BoundaryFunction:
    """Average over a prepended circle argument, lowering arity by one.

    Satisfies the contraction identity  I(d f) + d(I f) = f  pointwise on
    configurations (up to quadrature error).
    """
    if f.arity < 2:
        raise ArityError("contraction needs arity >= 2")

    def fn(th):
        return _integrate_prepended(f, th, quad)

    return BoundaryFunction(f.arity - 1, fn, f.dtype, weight=f.weight,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=f.coincidence_breaks,
                            fixed_breaks=f.fixed_breaks,
                            name=f"I({f.name})")


# --- flow derivatives ------------------------------------------------------------


def flow_rows(field: str, t: float, rows: np.ndarray) -> np.ndarray:
    """Diagonal action of the one-parameter element at time t on angle rows."""
    if field == K:
        return np.mod(rows + t, TWO_PI)
    g = one_param(field, t)
    z = np.exp(1j * rows)
    w = (g.a * z + g.b) / (np.conj(g.b) * z + np.conj(g.a))
    return np.mod(np.angle(w), TWO_PI)


def flow_derivative_fn(f: BoundaryFunction, field: str, fd: FdSpec) -> BoundaryFunction:
    """Central difference of f along the chosen flow, as a function."""
    h = fd.h

    def fn(th):
        vals = (f.fn(flow_rows(field, h, th))
                - f.fn(flow_rows(field, -h, th))) / (2.0 * h)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample(f"non-finite stencil for L_{field} {f.name}")
        return vals

    return BoundaryFunction(f.arity, fn, f.dtype, weight=None,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=f.coincidence_breaks,
                            fixed_breaks=f.fixed_breaks,
                            name=f"L{field}({f.name})")


def flow_derivative(f: BoundaryFunction, field: str, z, fd: FdSpec):
    """Pointwise flow derivative (f(phi_h . z) - f(phi_-h . z)) / 2h."""
    return flow_derivative_fn(f, field, fd)(np.asarray(z, dtype=float))


def second_flow_derivative(f: BoundaryFunction, outer: str, inner: str, z,
                           fd: FdSpec, outer_scale: float = 1.0):
    """Nested central difference L_outer L_inner f at z.

    The inner-difference error is a smooth function for smooth f, so the
    outer step can match the inner one without cancellation trouble.
    """
    g = flow_derivative_fn(f, inner, fd)
    return flow_derivative(g, outer, z, FdSpec(h=fd.h * outer_scale, scheme=fd.scheme))


def commutator_residuals(f: BoundaryFunction, z, fd: FdSpec) -> dict:
    """Residuals of the three bracket relations of the K/A/N generator fields
    and of the complexified relation, evaluated at the point z."""
    z = np.asarray(z, dtype=float)

    def lie2(o, i):
        return second_flow_derivative(f, o, i, z, fd)

    def lie1(field):
        return flow_derivative(f, field, z, fd)

    ka = lie2(K, A) - lie2(A, K) - (lie1(K) - lie1(N))
    kn = lie2(K, N) - lie2(N, K) - lie1(A)
    an = lie2(A, N) - lie2(N, A) - lie1(N)
    # [L, Lbar] + L - Lbar = 0 with L = L_A + i L_N
    l_ab = lie2(A, N) - lie2(N, A)
    comm_c = -2j * l_ab + 2j * lie1(N)
    return {"KA": abs(ka), "KN": abs(kn), "AN": abs(an), "complex": abs(comm_c)}


# --- first-order complex operators -----------------------------------------------


def cauchy_L(f: BoundaryFunction, fd: FdSpec) -> BoundaryFunction:
    """The complex first-order operator (A-flow derivative) + i (N-flow
    derivative), acting on rotation-invariant real functions; output carries
    weight 1."""
    if f.dtype != REAL:
        raise ValueError("cauchy_L expects a real-valued function")
    if f.weight != 0:
        raise ValueError("cauchy_L expects a rotation-invariant (weight 0) function")
    h = fd.h

    def fn(th):
        da = (f.fn(flow_rows(A, h, th)) - f.fn(flow_rows(A, -h, th)))
        dn = (f.fn(flow_rows(N, h, th)) - f.fn(flow_rows(N, -h, th)))
        vals = (da + 1j * dn) / (2.0 * h)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample(f"non-finite stencil in cauchy_L({f.name})")
        return vals

    return BoundaryFunction(f.arity, fn, COMPLEX, weight=1,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=f.coincidence_breaks,
                            fixed_breaks=f.fixed_breaks,
                            name=f"L({f.name})")


def frobenius_Q(u: BoundaryFunction, fd: FdSpec) -> BoundaryFunction:
    """Im(Id - conj-L) in real form: for u = re + i im this is
    im - (A-flow derivative of im) + (N-flow derivative of re);
    output is real and rotation-invariant (weight 0)."""
    if u.dtype != COMPLEX:
        raise ValueError("frobenius_Q expects a complex-valued function")
    h = fd.h

    def fn(th):
        u0 = u.fn(th)
        ua_p = u.fn(flow_rows(A, h, th))
        ua_m = u.fn(flow_rows(A, -h, th))
        un_p = u.fn(flow_rows(N, h, th))
        un_m = u.fn(flow_rows(N, -h, th))
        vals = (u0.imag
                - (ua_p.imag - ua_m.imag) / (2.0 * h)
                + (un_p.real - un_m.real) / (2.0 * h))
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample(f"non-finite stencil in frobenius_Q({u.name})")
        return vals

    return BoundaryFunction(u.arity, fn, REAL, weight=0,
                            singular_margin=u.singular_margin,
                            coincidence_breaks=u.coincidence_breaks,
                            fixed_breaks=u.fixed_breaks,
                            name=f"Q({u.name})")


def derivative_under_I(f: BoundaryFunction, field: str, quad: QuadratureSpec,
                       fd: FdSpec) -> BoundaryFunction:
    """Differentiation under the averaging integral: the flow derivative of
    the contraction equals the contraction of the flow derivative plus a
    boundary correction with weight cos (A-flow) or sin (N-flow)."""
    if field not in (A, N):
        raise ValueError("derivative_under_I supports the A and N flows")
    if f.arity < 2:
        raise ArityError("needs arity >= 2")
    df = flow_derivative_fn(f, field, fd)
    if field == A:
        mult, mult_anti = np.cos, np.sin
    else:
        mult, mult_anti = np.sin, lambda x: -np.cos(x)

    def fn(th):
        return (_integrate_prepended(df, th, quad)
                + _integrate_prepended(f, th, quad, mult=mult, mult_anti=mult_anti))

    return BoundaryFunction(f.arity - 1, fn, f.dtype, weight=None,
                            singular_margin=f.singular_margin,
                            coincidence_breaks=f.coincidence_breaks,
                            fixed_breaks=f.fixed_breaks,
                            name=f"dI({f.name},{field})")
