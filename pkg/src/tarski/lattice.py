"""Finite lattices stored as integer-indexed order, meet and join tables."""

from __future__ import annotations

import itertools
import math
from collections import namedtuple
from functools import cached_property, reduce

import numpy as np

from . import kernels
from .errors import (
    NotALattice,
    NotDistributive,
    NotMonotone,
    NotPartialOrder,
    ShapeMismatch,
    TooLarge,
)

MAX_TABLE_ELEMENTS = 4096
MAX_POWERSET_GROUND = 20
MAX_PARTITION_N = 7

Poset = namedtuple("Poset", "elements leq")
FixedPoints = namedtuple("FixedPoints", "prefix suffix fixed least")


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def subset_label(mask, ground):
    return "{" + ",".join(str(g) for k, g in enumerate(ground) if mask >> k & 1) + "}"


class FiniteLattice:
    """A finite complete lattice on elements ``0..m-1``.

    ``leq[a, b]`` is true iff ``a <= b``; ``meet`` and ``join`` are ``m x m``
    element tables. Tables may be built lazily (large powersets), in which case
    the scalar helpers ``meet_of``/``join_of``/``le`` still work without them.
    """

    def __init__(self, m, bot, top, *, leq=None, meet=None, join=None, tables=None,
                 labels=None, kind="explicit", params=None):
        self.m = int(m)
        self.bot = int(bot)
        self.top = int(top)
        self.kind = kind
        self.params = dict(params or {})
        self._labels = tuple(labels) if labels is not None else None
        self._tables = tables
        if leq is not None:
            self.__dict__["leq"] = _freeze(np.asarray(leq, dtype=bool))
            self.__dict__["meet"] = _freeze(np.asarray(meet, dtype=np.int32))
            self.__dict__["join"] = _freeze(np.asarray(join, dtype=np.int32))

    # -- tables -----------------------------------------------------------
    def _materialize(self):
        if self.m > MAX_TABLE_ELEMENTS:
            raise TooLarge(f"lattice with {self.m} elements is too large for explicit tables")
        leq, meet, join = self._tables()
        self.__dict__["leq"] = _freeze(np.asarray(leq, dtype=bool))
        self.__dict__["meet"] = _freeze(np.asarray(meet, dtype=np.int32))
        self.__dict__["join"] = _freeze(np.asarray(join, dtype=np.int32))

    @property
    def leq(self):
        if "leq" not in self.__dict__:
            self._materialize()
        return self.__dict__["leq"]

    @property
    def meet(self):
        if "meet" not in self.__dict__:
            self._materialize()
        return self.__dict__["meet"]

    @property
    def join(self):
        if "join" not in self.__dict__:
            self._materialize()
        return self.__dict__["join"]

    # -- element helpers --------------------------------------------------
    @property
    def labels(self):
        if self._labels is None:
            if self.kind == "powerset":
                ground = self.params["ground"]
                self._labels = tuple(subset_label(a, ground) for a in range(self.m))
            else:
                self._labels = tuple(str(a) for a in range(self.m))
        return self._labels

    @cached_property
    def _label_index(self):
        return {lab: k for k, lab in enumerate(self.labels)}

    def index(self, label):
        """Element index for a display label (or a set of ground labels for powersets)."""
        if self.kind == "powerset" and not isinstance(label, str):
            return self.subset(label)
        try:
            return self._label_index[label]
        except KeyError:
            raise KeyError(f"no element labelled {label!r}") from None

    def subset(self, members):
        """Bitmask element of a powerset lattice from an iterable of ground labels."""
        ground = self.params["ground"]
        pos = {g: k for k, g in enumerate(ground)}
        mask = 0
        for g in members:
            mask |= 1 << pos[g]
        return mask

    def members(self, a):
        ground = self.params["ground"]
        return frozenset(g for k, g in enumerate(ground) if a >> k & 1)

    def le(self, a, b):
        if self.kind == "powerset":
            return a & ~b == 0
        return bool(self.leq[a, b])

    def meet_of(self, a, b):
        if self.kind == "powerset":
            return a & b
        return int(self.meet[a, b])

    def join_of(self, a, b):
        if self.kind == "powerset":
            return a | b
        return int(self.join[a, b])

    def meet_all(self, items):
        return reduce(self.meet_of, items, self.top)

    def join_all(self, items):
        return reduce(self.join_of, items, self.bot)

    # -- derived structure ------------------------------------------------
    @cached_property
    def linear_extension(self):
        """Elements sorted by the size of their down-set, ties by index.

        Any a < b has strictly fewer elements below it, so this is a linear
        extension; it is stable, keeping the given order whenever that is already one.
        """
        below = self.leq.sum(axis=0)
        return np.lexsort((np.arange(self.m), below))

    @cached_property
    def covers(self):
        lt = self.leq & ~np.eye(self.m, dtype=bool)
        lti = lt.astype(np.float32)
        through = (lti @ lti) > 0
        return _freeze(lt & ~through)

    @cached_property
    def ranks(self):
        """Length of the longest chain from bottom to each element."""
        r = np.zeros(self.m, dtype=np.int64)
        cov = self.covers
        for y in self.linear_extension:
            lower = np.nonzero(cov[:, y])[0]
            if lower.size:
                r[y] = r[lower].max() + 1
        return r

    @property
    def height(self):
        if self.kind == "powerset":
            return len(self.params["ground"])
        if self.kind == "chain":
            return self.m - 1
        return int(self.ranks[self.top])

    @cached_property
    def hasse_distance(self):
        from scipy.sparse.csgraph import shortest_path

        adj = (self.covers | self.covers.T).astype(np.float64)
        d = shortest_path(adj, method="D", unweighted=True)
        return _freeze(d.astype(np.int64))

    def opposite(self):
        return opposite(self)

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"FiniteLattice(kind={self.kind!r}, m={self.m})"

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FiniteLattice):
            return NotImplemented
        if (self.m, self.bot, self.top) != (other.m, other.bot, other.top):
            return False
        if self.kind == other.kind == "powerset":
            return len(self.params["ground"]) == len(other.params["ground"])
        return bool(np.array_equal(self.leq, other.leq))

    def __hash__(self):
        return hash((self.m, self.bot, self.top))


class MonotoneMap:
    """Order-preserving map given by its image table."""

    __slots__ = ("dom", "cod", "image")

    def __init__(self, dom, cod, image, check=True):
        img = np.asarray(image, dtype=np.int32)
        if img.shape != (dom.m,):
            raise ShapeMismatch(f"image table has shape {img.shape}, expected ({dom.m},)")
        if img.size and (img.min() < 0 or img.max() >= cod.m):
            raise ShapeMismatch("image table has out-of-range entries")
        self.dom = dom
        self.cod = cod
        self.image = _freeze(img)
        if check:
            w = monotonicity_witness(dom, cod, img)
            if w is not None:
                raise NotMonotone(f"map is not monotone at {w}", w)

    def __call__(self, a):
        return int(self.image[a])

    def __matmul__(self, other):
        """``(g @ f)(x) == g(f(x))``."""
        if other.cod != self.dom:
            raise ShapeMismatch("cannot compose: codomain and domain differ")
        return MonotoneMap(other.dom, self.cod, self.image[other.image], check=False)

    def __eq__(self, other):
        if not isinstance(other, MonotoneMap):
            return NotImplemented
        return self.dom == other.dom and self.cod == other.cod and np.array_equal(self.image, other.image)

    def __hash__(self):
        return hash((self.dom.m, self.cod.m, self.image.tobytes()))

    def __repr__(self):
        return f"MonotoneMap({self.image.tolist()})"

    @classmethod
    def identity(cls, lat):
        return cls(lat, lat, np.arange(lat.m), check=False)

    @classmethod
    def constant(cls, dom, cod, value):
        return cls(dom, cod, np.full(dom.m, value), check=False)


def monotonicity_witness(dom, cod, image):
    a, b = np.nonzero(dom.leq)
    bad = ~cod.leq[image[a], image[b]]
    if bad.any():
        k = int(np.argmax(bad))
        return int(a[k]), int(b[k])
    return None


# -- constructors -------------------------------------------------------------

def from_leq(leq, labels=None, kind="explicit", params=None):
    """Validate a partial order and build its meet/join tables."""
    leq = np.asarray(leq, dtype=bool)
    if leq.ndim != 2 or leq.shape[0] != leq.shape[1] or leq.shape[0] < 1:
        raise ShapeMismatch("order table must be square and non-empty")
    m = leq.shape[0]
    if m > MAX_TABLE_ELEMENTS:
        raise TooLarge(f"{m} elements exceeds the table guard {MAX_TABLE_ELEMENTS}")
    if not leq.diagonal().all():
        k = int(np.argmin(leq.diagonal()))
        raise NotPartialOrder(f"not reflexive at element {k}")
    both = leq & leq.T
    np.fill_diagonal(both, False)
    if both.any():
        a, b = map(int, np.argwhere(both)[0])
        raise NotPartialOrder(f"not antisymmetric: {a} <= {b} <= {a}")
    li = leq.astype(np.float32)
    trans = (li @ li) > 0
    if (trans & ~leq).any():
        a, b = map(int, np.argwhere(trans & ~leq)[0])
        raise NotPartialOrder(f"not transitive: {a} <= ... <= {b} but not {a} <= {b}")

    below = leq.sum(axis=0)
    order = np.lexsort((np.arange(m), below))
    pos = np.empty(m, dtype=np.int64)
    pos[order] = np.arange(m)
    ordered = np.ascontiguousarray(leq[np.ix_(order, order)])
    join_o, bad = kernels.lub_table(ordered)
    if bad[0] >= 0:
        a, b = order[bad[0]], order[bad[1]]
        raise NotALattice(f"elements {a} and {b} have no least upper bound")
    ordered_t = np.ascontiguousarray(ordered.T[::-1, ::-1])
    meet_r, bad = kernels.lub_table(ordered_t)
    if bad[0] >= 0:
        a, b = order[m - 1 - bad[0]], order[m - 1 - bad[1]]
        raise NotALattice(f"elements {a} and {b} have no greatest lower bound")
    join = order[join_o][np.ix_(pos, pos)]
    meet_o = (m - 1 - meet_r)[::-1, ::-1]
    meet = order[meet_o][np.ix_(pos, pos)]
    bot = int(order[0])
    top = int(order[-1])
    if not (leq[bot].all() and leq[:, top].all()):
        raise NotALattice("no bottom or top element")
    return FiniteLattice(m, bot, top, leq=leq, meet=meet, join=join, labels=labels, kind=kind, params=params)


def chain(n):
    if n < 1:
        raise ShapeMismatch("a chain needs at least one element")
    if n > MAX_TABLE_ELEMENTS:
        raise TooLarge(f"chain of length {n} exceeds the table guard")
    idx = np.arange(n)

    def tables():
        return idx[:, None] <= idx[None, :], np.minimum.outer(idx, idx), np.maximum.outer(idx, idx)

    return FiniteLattice(n, 0, n - 1, tables=tables, kind="chain", params={"n": n})


def powerset_lattice(ground):
    ground = tuple(ground)
    if len(set(ground)) != len(ground):
        raise ShapeMismatch("ground labels must be distinct")
    if len(ground) > MAX_POWERSET_GROUND:
        raise TooLarge(f"powerset of {len(ground)} elements exceeds the guard {MAX_POWERSET_GROUND}")
    m = 1 << len(ground)
    a = np.arange(m)

    def tables():
        return (a[:, None] & ~a[None, :]) == 0, a[:, None] & a[None, :], a[:, None] | a[None, :]

    return FiniteLattice(m, 0, m - 1, tables=tables, kind="powerset", params={"ground": ground})


def _set_partitions(n):
    """Restricted growth strings of length n."""
    if n == 0:
        yield ()
        return
    def rec(prefix, mx):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(mx + 2):
            yield from rec(prefix + [b], max(mx, b))
    yield from rec([0], 0)


def partition_label(rgs):
    blocks = {}
    for elem, b in enumerate(rgs, start=1):
        blocks.setdefault(b, []).append(str(elem))
    return "|".join("".join(bl) for bl in blocks.values())


def canonical_partition(text):
    """Canonical label of a partition written like ``"34|12|5"``."""
    blocks = [sorted(bl, key=int) for bl in text.replace(" ", "").split("|") if bl]
    blocks.sort(key=lambda bl: int(bl[0]))
    return "|".join("".join(bl) for bl in blocks)


def partition_lattice(n):
    if n < 1:
        raise ShapeMismatch("partition lattice needs n >= 1")
    if n > MAX_PARTITION_N:
        raise TooLarge(f"partition lattice of {n} points exceeds the guard {MAX_PARTITION_N}")
    parts = list(_set_partitions(n))
    lab = np.array(parts, dtype=np.int64)
    same = lab[:, :, None] == lab[:, None, :]          # (m, n, n) equivalence relations
    rel = same.reshape(len(parts), -1)
    leq = ~(rel[:, None, :] & ~rel[None, :, :]).any(axis=2)
    labels = [partition_label(p) for p in parts]
    return from_leq(leq, labels=labels, kind="partition", params={"n": n})


def product(factors):
    factors = list(factors)
    if not factors:
        raise ShapeMismatch("product of no factors")
    if len(factors) == 1:
        return factors[0]
    sizes = [f.m for f in factors]
    m = math.prod(sizes)
    if m > MAX_TABLE_ELEMENTS:
        raise TooLarge(f"product has {m} elements, exceeding the table guard")
    coords = np.array(list(itertools.product(*[range(s) for s in sizes])), dtype=np.int64)
    strides = np.array([math.prod(sizes[k + 1:]) for k in range(len(sizes))], dtype=np.int64)

    def tables():
        leq = np.ones((m, m), dtype=bool)
        meet = np.zeros((m, m), dtype=np.int64)
        join = np.zeros((m, m), dtype=np.int64)
        for k, f in enumerate(factors):
            c = coords[:, k]
            leq &= f.leq[np.ix_(c, c)]
            meet += f.meet[np.ix_(c, c)] * strides[k]
            join += f.join[np.ix_(c, c)] * strides[k]
        return leq, meet, join

    def encode(cs):
        return int(np.dot(cs, strides))

    labels = ["(" + ",".join(f.labels[c] for f, c in zip(factors, row)) + ")" for row in coords]
    return FiniteLattice(m, encode([f.bot for f in factors]), encode([f.top for f in factors]),
                         tables=tables, labels=labels, kind="product", params={"factors": factors})


def opposite(lat):
    return FiniteLattice(lat.m, lat.top, lat.bot, leq=lat.leq.T, meet=lat.join, join=lat.meet,
                         labels=lat.labels, kind="opposite", params={"base": lat})


# -- structure ----------------------------------------------------------------

def join_irreducibles(lat):
    """Non-bottom elements with exactly one lower cover, with the inherited order."""
    ncov = lat.covers.sum(axis=0)
    elems = np.array([z for z in range(lat.m) if z != lat.bot and ncov[z] == 1], dtype=np.int64)
    return Poset(elems, lat.leq[np.ix_(elems, elems)])


def downset_lattice(poset):
    """All down-closed subsets of a poset, ordered by inclusion (elements are bitmasks)."""
    if isinstance(poset, Poset):
        leq = np.asarray(poset.leq, dtype=bool)
        names = [str(e) for e in poset.elements]
    else:
        leq = np.asarray(poset, dtype=bool)
        names = [str(k) for k in range(leq.shape[0])]
    k = leq.shape[0]
    preds = [sum(1 << p for p in range(k) if leq[p, q] and p != q) for q in range(k)]
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for d in frontier:
            for q in range(k):
                if not d >> q & 1 and preds[q] & ~d == 0:
                    e = d | 1 << q
                    if e not in seen:
                        seen.add(e)
                        nxt.append(e)
                        if len(seen) > MAX_TABLE_ELEMENTS:
                            raise TooLarge("too many down-sets")
        frontier = nxt
    masks = np.array(sorted(seen, key=lambda d: (bin(d).count("1"), d)), dtype=np.int64)
    where = {int(d): i for i, d in enumerate(masks)}
    m = len(masks)
    lookup = np.vectorize(where.__getitem__, otypes=[np.int64])
    leq_t = (masks[:, None] & ~masks[None, :]) == 0
    meet = lookup(masks[:, None] & masks[None, :])
    join = lookup(masks[:, None] | masks[None, :])
    labels = [subset_label(int(d), names) for d in masks]
    return FiniteLattice(m, 0, m - 1, leq=leq_t, meet=meet, join=join, labels=labels, kind="downset",
                         params={"masks": masks, "poset_leq": leq})


def is_distributive(lat):
    m = lat.m
    if m ** 3 > 64_000_000:
        raise TooLarge("distributivity scan too large")
    J, M = lat.join, lat.meet
    a = np.arange(m)[:, None, None]
    b = np.arange(m)[None, :, None]
    c = np.arange(m)[None, None, :]
    lhs = M[a, J[b, c]]
    rhs = J[M[a, b], M[a, c]]
    if not np.array_equal(lhs, rhs):
        return False
    return bool(np.array_equal(J[a, M[b, c]], M[J[a, b], J[a, c]]))


def birkhoff_check(lat):
    """Verify that ``x -> {j join-irreducible | j <= x}`` is an isomorphism onto D(J(L))."""
    if not is_distributive(lat):
        raise NotDistributive("Birkhoff duality needs a distributive lattice")
    J = join_irreducibles(lat)
    D = downset_lattice(J)
    if D.m != lat.m:
        return False
    bits = 1 << np.arange(len(J.elements), dtype=np.int64)
    images = (lat.leq[J.elements, :].T.astype(np.int64) * bits).sum(axis=1)
    masks = D.params["masks"]
    where = {int(d): i for i, d in enumerate(masks)}
    try:
        phi = np.array([where[int(v)] for v in images])
    except KeyError:
        return False
    if len(set(phi.tolist())) != lat.m:
        return False
    return bool(np.array_equal(lat.leq, D.leq[np.ix_(phi, phi)]))


def fixed_point_sets(f):
    if f.dom != f.cod:
        raise ShapeMismatch("fixed points need an endomap")
    lat = f.dom
    x = np.arange(lat.m)
    fx = f.image
    prefix = np.nonzero(lat.leq[fx, x])[0]
    suffix = np.nonzero(lat.leq[x, fx])[0]
    fixed = np.nonzero(fx == x)[0]
    cur = lat.bot
    while True:
        nxt = lat.join_of(int(fx[cur]), cur)
        if nxt == cur:
            break
        cur = nxt
    return FixedPoints(prefix, suffix, fixed, cur)


def rank_grading(lat):
    """Rank table r with r(bot)=0 and r(y)=r(x)+1 on every cover, or None if ungraded."""
    r = lat.ranks
    xs, ys = np.nonzero(lat.covers)
    if np.all(r[ys] == r[xs] + 1):
        return r.copy()
    return None
