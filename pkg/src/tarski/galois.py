"""Galois connections between finite lattices, relations, concept lattices and residuated transforms."""

from __future__ import annotations

from collections import namedtuple
from fractions import Fraction

import numpy as np

from .errors import NotJoinPreserving, NotMeetPreserving, ShapeMismatch, TooLarge
from .lattice import MonotoneMap, from_leq, opposite, powerset_lattice, subset_label
from .maxplus import NEG_INF, POS_INF, MaxPlusMatrix, maxplus_apply, maxplus_dual_apply  # noqa: F401

MAX_CONCEPT_CELLS = 400


class Check(namedtuple("Check", "ok witness")):
    """Boolean result that carries a counterexample when false."""

    def __bool__(self):
        return bool(self.ok)


class GaloisConnection:
    """Adjoint pair: ``lower(x) <= y`` iff ``x <= upper(y)``."""

    __slots__ = ("lower", "upper")

    def __init__(self, lower, upper):
        if lower.dom != upper.cod or lower.cod != upper.dom:
            raise ShapeMismatch("lower and upper maps do not run between the same two lattices")
        self.lower = lower
        self.upper = upper

    @property
    def source(self):
        return self.lower.dom

    @property
    def target(self):
        return self.lower.cod

    @classmethod
    def identity(cls, lat):
        ident = MonotoneMap.identity(lat)
        return cls(ident, ident)

    def __eq__(self, other):
        if not isinstance(other, GaloisConnection):
            return NotImplemented
        return self.lower == other.lower and self.upper == other.upper

    def __hash__(self):
        return hash((self.lower, self.upper))

    def __repr__(self):
        return f"GaloisConnection(lower={self.lower.image.tolist()}, upper={self.upper.image.tolist()})"


def validate(conn):
    """Exhaustive adjunction check; the witness is the first failing ``(x, y)``."""
    K, L = conn.source, conn.target
    lo, up = conn.lower.image, conn.upper.image
    left = L.leq[lo[:, None], np.arange(L.m)[None, :]]
    right = K.leq[np.arange(K.m)[:, None], up[None, :]]
    bad = left != right
    if bad.any():
        x, y = np.argwhere(bad)[0]
        return Check(False, (int(x), int(y)))
    return Check(True, None)


def _masked_join(lat, mask):
    """Row-wise join of the elements selected by a bool (rows, m) mask."""
    out = np.full(mask.shape[0], lat.bot, dtype=np.int64)
    for x in range(mask.shape[1]):
        sel = mask[:, x]
        out[sel] = lat.join[out[sel], x]
    return out


def _masked_meet(lat, mask):
    out = np.full(mask.shape[0], lat.top, dtype=np.int64)
    for x in range(mask.shape[1]):
        sel = mask[:, x]
        out[sel] = lat.meet[out[sel], x]
    return out


def join_preservation_witness(f):
    K, L = f.dom, f.cod
    img = f.image
    if img[K.bot] != L.bot:
        return (K.bot, K.bot)
    bad = L.join[img[:, None], img[None, :]] != img[K.join]
    if bad.any():
        a, b = np.argwhere(bad)[0]
        return (int(a), int(b))
    return None


def meet_preservation_witness(g):
    L, K = g.dom, g.cod
    img = g.image
    if img[L.top] != K.top:
        return (L.top, L.top)
    bad = K.meet[img[:, None], img[None, :]] != img[L.meet]
    if bad.any():
        a, b = np.argwhere(bad)[0]
        return (int(a), int(b))
    return None


def adjoint_of(f):
    """Upper adjoint of a join-preserving map: ``f*(y) = join {x | f(x) <= y}``."""
    w = join_preservation_witness(f)
    if w is not None:
        raise NotJoinPreserving(f"map does not preserve the join of {w}", w)
    K, L = f.dom, f.cod
    below = L.leq[f.image[None, :], np.arange(L.m)[:, None]]      # [y, x]: f(x) <= y
    upper = _masked_join(K, below)
    return GaloisConnection(f, MonotoneMap(L, K, upper, check=False))


def coadjoint_of(g):
    """Lower adjoint of a meet-preserving map: ``g_*(x) = meet {y | g(y) >= x}``."""
    w = meet_preservation_witness(g)
    if w is not None:
        raise NotMeetPreserving(f"map does not preserve the meet of {w}", w)
    L, K = g.dom, g.cod
    above = K.leq[np.arange(K.m)[:, None], g.image[None, :]]      # [x, y]: x <= g(y)
    lower = _masked_meet(L, above)
    return GaloisConnection(MonotoneMap(K, L, lower, check=False), g)


class Relation:
    """Binary relation between two finite label sets, as a bool table ``pairs[x, y]``."""

    def __init__(self, X, Y, pairs):
        self.X = tuple(X)
        self.Y = tuple(Y)
        self.pairs = np.asarray(pairs, dtype=bool)
        if self.pairs.shape != (len(self.X), len(self.Y)):
            raise ShapeMismatch(f"relation table shape {self.pairs.shape} does not match labels")

    @classmethod
    def from_pairs(cls, X, Y, pairs):
        xi = {x: k for k, x in enumerate(X)}
        yi = {y: k for k, y in enumerate(Y)}
        t = np.zeros((len(X), len(Y)), dtype=bool)
        for x, y in pairs:
            t[xi[x], yi[y]] = True
        return cls(X, Y, t)

    def pair_list(self):
        return [(self.X[a], self.Y[b]) for a, b in zip(*np.nonzero(self.pairs))]

    @property
    def dagger(self):
        return Relation(self.Y, self.X, self.pairs.T)

    def successor_masks(self):
        bits = 1 << np.arange(len(self.Y), dtype=np.int64)
        return (self.pairs.astype(np.int64) * bits).sum(axis=1)


def _image_table(succ, nx):
    """``img[U] = OR of succ[x] for x in U`` for every subset U of an nx-element set."""
    U = np.arange(1 << nx, dtype=np.int64)
    img = np.zeros(1 << nx, dtype=np.int64)
    for x in range(nx):
        img |= np.where(U >> x & 1, succ[x], 0)
    return img


def _common_table(succ, nx, full):
    U = np.arange(1 << nx, dtype=np.int64)
    out = np.full(1 << nx, full, dtype=np.int64)
    for x in range(nx):
        out &= np.where(U >> x & 1, succ[x], full)
    return out


def exists_table(R):
    return _image_table(R.successor_masks(), len(R.X))


def forall_table(R):
    succ = R.successor_masks()
    V = np.arange(1 << len(R.Y), dtype=np.int64)
    out = np.zeros(1 << len(R.Y), dtype=np.int64)
    for x in range(len(R.X)):
        out |= np.where(succ[x] & ~V == 0, 1 << x, 0)
    return out


def from_relation_covariant(R, PX=None, PY=None):
    """``(R_exists, R_forall)`` between the powersets of ``X`` and ``Y``."""
    PX = PX or powerset_lattice(R.X)
    PY = PY or powerset_lattice(R.Y)
    lo = MonotoneMap(PX, PY, exists_table(R), check=False)
    up = MonotoneMap(PY, PX, forall_table(R), check=False)
    return GaloisConnection(lo, up)


def up_table(R):
    """``R_up(U) = {y | x R y for all x in U}``."""
    return _common_table(R.successor_masks(), len(R.X), (1 << len(R.Y)) - 1)


def down_table(R):
    """``R_down(V) = {x | x R y for all y in V}``."""
    return up_table(R.dagger)


def from_relation_contravariant(R, PX=None, PY=None):
    """The order-reversing pair ``(R_up, R_down)`` stored as a connection ``P(X) -> P(Y)^op``."""
    PX = PX or powerset_lattice(R.X)
    PYop = opposite(PY or powerset_lattice(R.Y))
    lo = MonotoneMap(PX, PYop, up_table(R), check=False)
    up = MonotoneMap(PYop, PX, down_table(R), check=False)
    return GaloisConnection(lo, up)


def concept_lattice(R):
    """Formal concepts ``(extent, intent)`` ordered by extent inclusion.

    Extents are the intersections of attribute extents, so they are collected by
    closing ``{X}`` under intersection with each attribute's extent.
    """
    nx, ny = len(R.X), len(R.Y)
    if nx * ny > MAX_CONCEPT_CELLS:
        raise TooLarge(f"relation of {nx}x{ny} exceeds the concept guard")
    full_x = (1 << nx) - 1
    col = [sum(1 << x for x in range(nx) if R.pairs[x, y]) for y in range(ny)]
    extents = {full_x}
    for c in col:
        extents |= {e & c for e in extents}
    succ = R.successor_masks()
    full_y = (1 << ny) - 1

    def intent(e):
        out = full_y
        for x in range(nx):
            if e >> x & 1:
                out &= int(succ[x])
        return out

    ext = sorted(extents, key=lambda e: (bin(e).count("1"), e))
    ints = [intent(e) for e in ext]
    arr = np.array(ext, dtype=np.int64)
    leq = (arr[:, None] & ~arr[None, :]) == 0
    labels = [f"({subset_label(e, R.X)},{subset_label(t, R.Y)})" for e, t in zip(ext, ints)]
    return from_leq(leq, labels=labels, kind="concept",
                    params={"extents": tuple(ext), "intents": tuple(ints), "relation": R})


def compose(g, f):
    """``g . f``: lower ``g.lower . f.lower``, upper ``f.upper . g.upper``."""
    if f.target != g.source:
        raise ShapeMismatch("connections do not compose: target and source differ")
    return GaloisConnection(g.lower @ f.lower, f.upper @ g.upper)


def closure_of(conn):
    return conn.upper @ conn.lower


def coclosure_of(conn):
    return conn.lower @ conn.upper


# -- residuated lattices ------------------------------------------------------

class ResiduatedLattice:
    """A complete lattice with a commutative monoid ``star`` and its residual.

    ``residual(y, z)`` is the largest ``x`` with ``star(x, y) <= z``.
    Values are whatever the carrier uses: element indices, Fractions, floats or bools.
    """

    def __init__(self, name, leq, join, meet, bot, top, star, unit, residual, samples=None):
        self.name = name
        self.leq = leq
        self.join = join
        self.meet = meet
        self.bot = bot
        self.top = top
        self.star = star
        self.unit = unit
        self.residual = residual
        self.samples = samples

    def join_all(self, values):
        acc = self.bot
        for v in values:
            acc = self.join(acc, v)
        return acc

    def meet_all(self, values):
        acc = self.top
        for v in values:
            acc = self.meet(acc, v)
        return acc

    def __repr__(self):
        return f"ResiduatedLattice({self.name})"


def _grid(steps):
    return [Fraction(k, steps) for k in range(steps + 1)]


def product_tnorm(steps=20):
    def residual(y, z):
        return Fraction(1) if y <= z else z / y
    return ResiduatedLattice("product", lambda a, b: a <= b, max, min, Fraction(0), Fraction(1),
                             lambda a, b: a * b, Fraction(1), residual, _grid(steps))


def lukasiewicz_tnorm(steps=20):
    def residual(y, z):
        return Fraction(1) if y <= z else 1 - y + z
    return ResiduatedLattice("lukasiewicz", lambda a, b: a <= b, max, min, Fraction(0), Fraction(1),
                             lambda a, b: max(a + b - 1, Fraction(0)), Fraction(1), residual, _grid(steps))


def godel_tnorm(steps=20):
    def residual(y, z):
        return Fraction(1) if y <= z else z
    return ResiduatedLattice("godel", lambda a, b: a <= b, max, min, Fraction(0), Fraction(1),
                             min, Fraction(1), residual, _grid(steps))


def boolean_algebra():
    return ResiduatedLattice("boolean", lambda a, b: (not a) or b, lambda a, b: a or b, lambda a, b: a and b,
                             False, True, lambda a, b: a and b, True, lambda y, z: (not y) or z, [False, True])


def heyting(lat):
    """Residuated structure ``star = meet`` on a finite distributive lattice."""
    res = np.empty((lat.m, lat.m), dtype=np.int64)
    for y in range(lat.m):
        for z in range(lat.m):
            ok = np.nonzero(lat.leq[lat.meet[:, y], z])[0]
            res[y, z] = lat.join_all(ok.tolist())
    return ResiduatedLattice("heyting", lat.le, lat.join_of, lat.meet_of, lat.bot, lat.top,
                             lat.meet_of, lat.top, lambda y, z: int(res[y, z]), list(range(lat.m)))


def _mp_star(a, b):
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    return a + b


def _mp_residual(y, z):
    if y == NEG_INF or z == POS_INF:
        return POS_INF
    if y == POS_INF or z == NEG_INF:
        return NEG_INF
    return z - y


def maxplus_semiring():
    """Extended reals with ``star = +``; ``-inf`` absorbs under ``star``."""
    return ResiduatedLattice("maxplus", lambda a, b: a <= b + 1e-9 or a == b, max, min, NEG_INF, POS_INF,
                             _mp_star, 0.0, _mp_residual,
                             [NEG_INF, -3.0, -1.5, 0.0, 0.5, 2.0, 4.0, POS_INF])


def integral_transform(R, H, f):
    """``fhat(x) = join_y H[x][y] * f[y]``."""
    n = len(f)
    if len(H) != n or any(len(row) != n for row in H):
        raise ShapeMismatch("kernel must be square with the signal's length")
    return [R.join_all(R.star(H[x][y], f[y]) for y in range(n)) for x in range(n)]


def adjoint_transform(R, H, g):
    """Upper adjoint of ``integral_transform``: ``gcheck(y) = meet_x [H[x][y], g[x]]``."""
    n = len(g)
    if len(H) != n or any(len(row) != n for row in H):
        raise ShapeMismatch("kernel must be square with the signal's length")
    return [R.meet_all(R.residual(H[x][y], g[x]) for x in range(n)) for y in range(n)]
