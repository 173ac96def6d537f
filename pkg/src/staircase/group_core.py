"""The isometry group of the disk and its action on circle angles.

Elements are stored as normalized pairs (a, b) representing the matrix

    [[a, b],
     [conj(b), conj(a)]],        |a|^2 - |b|^2 = 1,

up to overall sign.  The boundary action on the unit circle is the fractional
linear map z -> (a z + b) / (conj(b) z + conj(a)), expressed here in angular
coordinates z = exp(i theta).

Three one-parameter families are provided:

    rotation  (K):  (exp(i t/2), 0)                    k_t . z = exp(i t) z
    dilation  (A):  (cosh(t/2), -sinh(t/2))            fixes +-1
    shear     (N):  (1 + i t/2, -i t/2)                fixes  +1

The K/A/K and K/A/N factorizations and the three-point transitivity solver
are exact-as-possible closed forms; every decomposition is contractually
validated only through recomposition.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrix, DegenerateTriple, OrientationMismatch
from .rng import TWO_PI, Xorshift64Star

_DET_TOL = 1e-14

K, A, N = "K", "A", "N"


@dataclass(frozen=True)
class GroupElement:
    """Normalized projective representative; build via make_element."""
    a: complex
    b: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b],
                         [np.conj(self.b), np.conj(self.a)]], dtype=complex)


@dataclass(frozen=True)
class IwasawaCoords:
    tK: float
    tA: float
    tN: float


@dataclass(frozen=True)
class CartanCoords:
    tK_left: float
    T: float
    tK_right: float


def make_element(a: complex, b: complex) -> GroupElement:
    """Normalize (a, b) to determinant one and a canonical projective sign.

    Raises DegenerateMatrix when |a|^2 - |b|^2 <= 1e-14 (the matrix does not
    preserve the disk).
    """
    a = complex(a)
    b = complex(b)
    det = abs(a) ** 2 - abs(b) ** 2
    if det <= _DET_TOL:
        raise DegenerateMatrix(f"|a|^2 - |b|^2 = {det:.3e} <= 0")
    s = 1.0 / math.sqrt(det)
    a *= s
    b *= s
    # canonical sign: Re(a) >= 0, ties broken by Im(a) >= 0
    if a.real < 0.0 or (a.real == 0.0 and a.imag < 0.0):
        a, b = -a, -b
    return GroupElement(a, b)


IDENTITY = make_element(1.0, 0.0)


def one_param(kind: str, t: float) -> GroupElement:
    """k_t, a_t or n_t for kind in {"K", "A", "N"}."""
    t = float(t)
    if kind == K:
        return make_element(cmath.exp(0.5j * t), 0.0)
    if kind == A:
        return make_element(math.cosh(0.5 * t), -math.sinh(0.5 * t))
    if kind == N:
        return make_element(1.0 + 0.5j * t, -0.5j * t)
    raise ValueError(f"unknown one-parameter family {kind!r}")


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    return make_element(g.a * h.a + g.b * np.conj(h.b),
                        g.a * h.b + g.b * np.conj(h.a))


def inverse(g: GroupElement) -> GroupElement:
    return make_element(np.conj(g.a), -g.b)


def proj_distance(g: GroupElement, h: GroupElement) -> float:
    """max-norm distance between projective representatives."""
    d1 = max(abs(g.a - h.a), abs(g.b - h.b))
    d2 = max(abs(g.a + h.a), abs(g.b + h.b))
    return min(d1, d2)


def act_angle(g: GroupElement, theta):
    """Boundary action on angles, vectorized; result reduced to [0, 2*pi)."""
    th = np.asarray(theta, dtype=float)
    z = np.exp(1j * th)
    w = (g.a * z + g.b) / (np.conj(g.b) * z + np.conj(g.a))
    out = np.mod(np.angle(w), TWO_PI)
    if np.isscalar(theta) or th.ndim == 0:
        return float(out)
    return out


def flow_angle(kind: str, t: float, theta):
    """Action of the one-parameter element at time t; K is exact translation."""
    if kind == K:
        th = np.asarray(theta, dtype=float)
        out = np.mod(th + t, TWO_PI)
        return float(out) if (np.isscalar(theta) or th.ndim == 0) else out
    return act_angle(one_param(kind, t), theta)


def iwasawa(g: GroupElement) -> IwasawaCoords:
    """Unique (tK, tA, tN) with g = k_{tK} a_{tA} n_{tN}.

    Derivation: for g = k_u a_v n_w one finds a + b = exp(i u/2) exp(-v/2)
    and (a - b)/(a + b) = exp(v) + i w.
    """
    s = g.a + g.b
    # |a+b| > 0: a = -b would force |a|^2 - |b|^2 = 0
    r = (g.a - g.b) / s
    tK = math.fmod(2.0 * cmath.phase(s), TWO_PI)
    if tK < 0.0:
        tK += TWO_PI
    return IwasawaCoords(tK=tK, tA=-2.0 * math.log(abs(s)), tN=r.imag)


def cartan(g: GroupElement) -> CartanCoords:
    """Some (t', T, t) with g = k_{t'} a_T k_t and T >= 0.

    T = 2 asinh(|b|); the two rotation times come from the phases of a and -b.
    The decomposition is not unique (at T = 0 only the product of the two
    rotations is determined); only recomposition is contractual.
    """
    T = 2.0 * math.asinh(abs(g.b))
    alpha = cmath.phase(g.a)
    if abs(g.b) < 1e-15:
        left, right = alpha, alpha
    else:
        beta = cmath.phase(-g.b)
        left, right = alpha + beta, alpha - beta
    return CartanCoords(tK_left=left % TWO_PI, T=T, tK_right=right % TWO_PI)


def recompose_iwasawa(c: IwasawaCoords) -> GroupElement:
    return compose(one_param(K, c.tK), compose(one_param(A, c.tA), one_param(N, c.tN)))


def recompose_cartan(c: CartanCoords) -> GroupElement:
    return compose(one_param(K, c.tK_left), compose(one_param(A, c.T), one_param(K, c.tK_right)))


# --- triple transitivity ----------------------------------------------------

def circle_dist(x, y):
    d = np.abs(np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), TWO_PI))
    return np.minimum(d, TWO_PI - d)


def triple_orientation(t0: float, t1: float, t2: float, coincide_tol: float = 1e-13) -> int:
    """+1 / -1 / 0 cyclic orientation of three angles."""
    d1 = (t1 - t0) % TWO_PI
    d2 = (t2 - t0) % TWO_PI
    if (min(d1, TWO_PI - d1) < coincide_tol or min(d2, TWO_PI - d2) < coincide_tol
            or min(abs(d1 - d2), TWO_PI - abs(d1 - d2)) < coincide_tol):
        return 0
    return 1 if d1 < d2 else -1


def _to_std_matrix(z0: complex, z1: complex, z2: complex) -> np.ndarray:
    # Moebius map sending (z0, z1, z2) -> (0, 1, inf), as a 2x2 matrix.
    return np.array([[z1 - z2, -z0 * (z1 - z2)],
                     [z1 - z0, -z2 * (z1 - z0)]], dtype=complex)


def map_triple(src, dst, min_gap: float = 1e-9) -> GroupElement:
    """The unique disk-preserving element sending src angles to dst angles.

    Both triples must be pairwise distinct (circle gap > min_gap) and have
    the same cyclic orientation; the boundary action is strictly
    3-transitive, so the solution is unique.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    for name, tri in (("src", src), ("dst", dst)):
        gaps = [circle_dist(tri[i], tri[j]) for i in range(3) for j in range(i + 1, 3)]
        if min(gaps) <= min_gap:
            raise DegenerateTriple(f"{name} triple has circle gap {min(gaps):.3e} <= {min_gap:.3e}")
    o_s = triple_orientation(*src)
    o_d = triple_orientation(*dst)
    if o_s == 0 or o_d == 0:
        raise DegenerateTriple("triple orientation is degenerate")
    if o_s != o_d:
        raise OrientationMismatch("src and dst triples have opposite orientation")

    m1 = _to_std_matrix(*np.exp(1j * src))
    m2 = _to_std_matrix(*np.exp(1j * dst))
    adj2 = np.array([[m2[1, 1], -m2[0, 1]], [-m2[1, 0], m2[0, 0]]], dtype=complex)
    m = adj2 @ m1

    # rescale by a phase so the matrix takes the (a, b / conj b, conj a) shape;
    # a circle-preserving matrix has |m00| = |m11| and |m01| = |m10|
    if abs(m[1, 1]) >= abs(m[1, 0]):
        phi = 0.5 * cmath.phase(np.conj(m[0, 0]) / m[1, 1])
    else:
        phi = 0.5 * cmath.phase(np.conj(m[0, 1]) / m[1, 0])
    lam = cmath.exp(1j * phi)
    return make_element(lam * m[0, 0], lam * m[0, 1])


def random_element(rng: Xorshift64Star, flow_range: float = 3.0) -> GroupElement:
    """Seeded random element k_u a_v n_w covering all Iwasawa cells."""
    u = rng.uniform(0.0, TWO_PI)
    v = rng.uniform(-flow_range, flow_range)
    w = rng.uniform(-flow_range, flow_range)
    return compose(one_param(K, u), compose(one_param(A, v), one_param(N, w)))
