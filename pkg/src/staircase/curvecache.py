"""Certified panel-Chebyshev cache for one-argument boundary functions.

The tail-integral solver evaluates its reduced integrand millions of times
along flow trajectories.  For arity-1 reductions we interpolate the function
once on panels between its declared break angles, bisecting adaptively until
the Chebyshev coefficient tail certifies the requested tolerance (panels that
never certify fall back to direct evaluation, as do queries inside a narrow
edge zone around each break).  The wrapped object remains an ordinary
callable evaluator; results differ from direct evaluation by at most the
certified tolerance.
"""

from __future__ import annotations

import threading

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .boundary_functions import BoundaryFunction
from .rng import TWO_PI

_EDGE = 1e-7
_DEG = 32
_MIN_PANELS = 4
_MAX_DEPTH = 9
_RELAX = 1e-3   # stalled panels below this relative tail still interpolate


class _Panel:
    __slots__ = ("lo", "hi", "coef", "direct")

    def __init__(self, lo, hi, coef, direct):
        self.lo = lo
        self.hi = hi
        self.coef = coef
        self.direct = direct


def _cheb_nodes(lo: float, hi: float, deg: int) -> np.ndarray:
    x = np.cos(np.pi * np.arange(deg + 1) / deg)      # Chebyshev-Lobatto in [-1, 1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x


def _fit(vals: np.ndarray, deg: int) -> np.ndarray:
    x = np.cos(np.pi * np.arange(deg + 1) / deg)
    return _cheb.chebfit(x, vals, deg)


class CurveCache:
    def __init__(self, f: BoundaryFunction, tol: float = 1e-9,
                 deg: int = _DEG, max_depth: int = _MAX_DEPTH):
        if f.arity != 1:
            raise ValueError("CurveCache requires an arity-1 function")
        self.f = f
        self.tol = tol
        self.deg = deg
        self.max_depth = max_depth
        self.panels = None
        self.edges = None
        self.achieved_tol = 0.0
        self.n_evals = 0
        self._lock = threading.Lock()

    # -- build --------------------------------------------------------------

    def _initial_edges(self):
        # Panels start a hair away from each break so that no interpolation
        # node sits on the break itself (flows park at such points and the
        # direct fallback would dominate the build); the excluded slivers are
        # served by direct evaluation at query time.
        brk = np.unique(np.mod(np.asarray(self.f.fixed_breaks, dtype=float), TWO_PI)) \
            if self.f.fixed_breaks else np.empty(0)
        if len(brk) == 0:
            return np.linspace(0.0, TWO_PI, _MIN_PANELS + 1)
        edges = []
        ext = np.append(brk, brk[0] + TWO_PI)
        for i in range(len(brk)):
            lo, hi = ext[i] + _EDGE, ext[i + 1] - _EDGE
            pieces = max(2, int(np.ceil((hi - lo) / (TWO_PI / _MIN_PANELS))))
            edges.append(lo)
            edges.extend(lo + (hi - lo) * np.arange(1, pieces + 1) / pieces)
        return np.asarray(edges)

    def _build(self):
        # Refinement stops when the coefficient tail certifies the tolerance,
        # stops shrinking (the underlying function has its own numerical
        # noise floor), or the depth cap is hit.  Panels that stall far from
        # the tolerance fall back to direct evaluation at query time.
        # Panels at the same depth are sampled in one batched call: the
        # underlying evaluator trees amortize large batches far better than
        # panel-sized ones.
        edges = self._initial_edges()
        wave = [(edges[i], edges[i + 1], np.inf) for i in range(len(edges) - 1)]
        panels = []
        n_evals = 0
        depth = 0
        while wave:
            xs = np.concatenate([_cheb_nodes(lo, hi, self.deg) for lo, hi, _ in wave])
            vals_all = self.f.eval_batch(np.mod(xs, TWO_PI)[:, None])
            n_evals += len(xs)
            nxt = []
            for j, (lo, hi, parent_tail) in enumerate(wave):
                vals = vals_all[j * (self.deg + 1):(j + 1) * (self.deg + 1)]
                coef = _fit(vals, self.deg)
                scale = max(1.0, np.abs(vals).max())
                tail = np.abs(coef[-(self.deg // 4):]).max()
                stalled = tail > 0.7 * parent_tail
                if tail <= self.tol * scale or depth >= self.max_depth or stalled:
                    direct = tail > max(self.tol, _RELAX) * scale
                    panels.append(_Panel(lo, hi, coef, direct))
                    if not direct:
                        self.achieved_tol = max(self.achieved_tol, tail / scale)
                else:
                    mid = 0.5 * (lo + hi)
                    nxt.append((lo, mid, tail))
                    nxt.append((mid, hi, tail))
            wave = nxt
            depth += 1
        panels.sort(key=lambda p: p.lo)
        self.panels = panels
        self.edges = np.array([p.lo for p in panels] + [panels[-1].hi])
        self.n_evals = n_evals

    def _ensure(self):
        if self.panels is None:
            with self._lock:
                if self.panels is None:
                    self._build()

    # -- query --------------------------------------------------------------

    def eval(self, th: np.ndarray) -> np.ndarray:
        self._ensure()
        x = np.mod(th[:, 0], TWO_PI)
        lo0 = self.edges[0]
        xs = lo0 + np.mod(x - lo0, TWO_PI)          # into [edges0, edges0 + 2pi)
        out = np.empty(len(xs), dtype=self.f.out_dtype())
        idx = np.clip(np.searchsorted(self.edges, xs, side="right") - 1,
                      0, len(self.panels) - 1)
        near_break = np.zeros(len(xs), dtype=bool)
        if self.f.fixed_breaks:
            for b in self.f.fixed_breaks:
                d = np.abs(np.mod(x - b + np.pi, TWO_PI) - np.pi)
                near_break |= d < _EDGE
        direct_mask = near_break.copy()
        for pi in np.unique(idx):
            p = self.panels[pi]
            sel = (idx == pi) & ~near_break
            if p.direct:
                direct_mask |= (idx == pi) & ~near_break
                continue
            if not sel.any():
                continue
            t = 2.0 * (xs[sel] - p.lo) / (p.hi - p.lo) - 1.0
            out[sel] = _cheb.chebval(t, p.coef)
        if direct_mask.any():
            out[direct_mask] = self.f.eval_batch(x[direct_mask][:, None])
        return out


def cached_curve(f: BoundaryFunction, tol: float = 1e-9) -> BoundaryFunction:
    """Wrap an arity-1 function in a lazily built certified interpolation cache."""
    cache = CurveCache(f, tol=tol)
    g = BoundaryFunction(1, cache.eval, f.dtype, weight=f.weight,
                         singular_margin=f.singular_margin,
                         coincidence_breaks=f.coincidence_breaks,
                         fixed_breaks=f.fixed_breaks,
                         name=f"curve({f.name})")
    g._curve_cache = cache
    return g
