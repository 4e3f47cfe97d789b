"""Graphs, Tarski sheaves, cochains, transport and brute-force cohomology."""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import InvalidConnection, NotAPath, ShapeMismatch, TooLarge
from .galois import GaloisConnection, validate
from .lattice import MonotoneMap

MAX_COCHAINS = 1_000_000
MAX_HOLONOMY_LEN = 8
CHUNK = 1 << 16

SectionSet = namedtuple("SectionSet", "sections complete")


class Graph:
    """Simple undirected graph on nodes ``0..n-1``; edges stored as ``(i, j)`` with ``i < j``."""

    def __init__(self, n, edges=()):
        self.n = int(n)
        norm = []
        seen = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ShapeMismatch(f"self-loop at node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ShapeMismatch(f"edge ({a}, {b}) leaves the node range")
            e = (min(a, b), max(a, b))
            if e in seen:
                raise ShapeMismatch(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        self.edges = tuple(norm)
        self._index = {e: k for k, e in enumerate(self.edges)}
        nbrs = [[] for _ in range(self.n)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        self._nbrs = tuple(tuple(sorted(v)) for v in nbrs)

    def neighbors(self, i):
        return self._nbrs[i]

    def edge_index(self, i, j):
        try:
            return self._index[(min(i, j), max(i, j))]
        except KeyError:
            raise NotAPath(f"nodes {i} and {j} are not adjacent") from None

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self._index

    @property
    def max_degree(self):
        return max((len(v) for v in self._nbrs), default=0)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={list(self.edges)})"

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and set(self.edges) == set(other.edges)

    def __hash__(self):
        return hash((self.n, frozenset(self.edges)))

    @classmethod
    def path(cls, n):
        return cls(n, [(k, k + 1) for k in range(n - 1)])

    @classmethod
    def cycle(cls, n):
        return cls(n, [(k, (k + 1) % n) for k in range(n)])

    @classmethod
    def complete(cls, n):
        return cls(n, [(a, b) for a in range(n) for b in range(a + 1, n)])

    @classmethod
    def star(cls, n):
        return cls(n, [(0, k) for k in range(1, n)])


@dataclass(frozen=True)
class Packed:
    """Dense arrays describing a sheaf, consumed by :mod:`tarski.kernels`."""

    node_lat: np.ndarray
    node_meet: np.ndarray
    node_leq: np.ndarray
    node_top: np.ndarray
    node_size: np.ndarray
    edge_lat: np.ndarray
    edge_size: np.ndarray
    ends: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    nbr: np.ndarray
    nbr_edge: np.ndarray
    nbr_side: np.ndarray


def _dedupe(lattices):
    uniq, ids = [], []
    for lat in lattices:
        for k, u in enumerate(uniq):
            if u is lat or u == lat:
                ids.append(k)
                break
        else:
            ids.append(len(uniq))
            uniq.append(lat)
    return uniq, np.array(ids, dtype=np.int32)


class TarskiSheaf:
    """Lattice stalks on nodes and edges with one Galois connection per incidence.

    ``restrictions[(i, e)]`` runs from the stalk of node ``i`` to the stalk of
    edge ``e``; its lower map restricts and its upper map pulls back.
    """

    def __init__(self, graph, node_stalks, edge_stalks, restrictions):
        self.graph = graph
        self.node_stalks = tuple(node_stalks)
        self.edge_stalks = tuple(edge_stalks)
        self.restrictions = dict(restrictions)

    @property
    def n(self):
        return self.graph.n

    def restriction(self, i, e):
        return self.restrictions[(i, e)]

    def lower(self, i, e, x):
        return self.restrictions[(i, e)].lower(x)

    def upper(self, i, e, y):
        return self.restrictions[(i, e)].upper(y)

    @cached_property
    def packed(self):
        g = self.graph
        n, E = g.n, len(g.edges)
        nl, node_lat = _dedupe(self.node_stalks)
        el, edge_lat = _dedupe(self.edge_stalks) if E else ([], np.zeros(0, dtype=np.int32))
        M = max(lat.m for lat in nl) if nl else 1
        Me = max((lat.m for lat in el), default=1)
        node_meet = np.zeros((max(len(nl), 1), M, M), dtype=np.int32)
        node_leq = np.zeros((max(len(nl), 1), M, M), dtype=bool)
        node_top = np.zeros(max(len(nl), 1), dtype=np.int32)
        for k, lat in enumerate(nl):
            node_meet[k, :lat.m, :lat.m] = lat.meet
            node_leq[k, :lat.m, :lat.m] = lat.leq
            node_top[k] = lat.top
        lower = np.zeros((E, 2, M), dtype=np.int32)
        upper = np.zeros((E, 2, Me), dtype=np.int32)
        ends = np.array(g.edges, dtype=np.int32).reshape(E, 2)
        for e, (a, b) in enumerate(g.edges):
            for s, v in enumerate((a, b)):
                c = self.restrictions[(v, e)]
                lower[e, s, :c.lower.dom.m] = c.lower.image
                upper[e, s, :c.upper.dom.m] = c.upper.image
        D = max(g.max_degree, 1)
        nbr = np.full((n, D), -1, dtype=np.int32)
        nbr_edge = np.zeros((n, D), dtype=np.int32)
        nbr_side = np.zeros((n, D), dtype=np.int32)
        for i in range(n):
            for d, j in enumerate(g.neighbors(i)):
                nbr[i, d] = j
                nbr_edge[i, d] = g.edge_index(i, j)
                nbr_side[i, d] = 0 if i < j else 1
        return Packed(
            node_lat=node_lat, node_meet=node_meet, node_leq=node_leq, node_top=node_top,
            node_size=np.array([lat.m for lat in self.node_stalks], dtype=np.int64),
            edge_lat=edge_lat, edge_size=np.array([lat.m for lat in self.edge_stalks], dtype=np.int64),
            ends=ends, lower=lower, upper=upper, nbr=nbr, nbr_edge=nbr_edge, nbr_side=nbr_side,
        )

    @cached_property
    def unique_edge_stalks(self):
        return _dedupe(self.edge_stalks)[0]

    def as_states(self, x):
        """Validate one cochain or a batch of them; returns an int32 ``(B, n)`` array."""
        X = np.asarray(x, dtype=np.int32)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n:
            raise ShapeMismatch(f"cochain has {X.shape[1]} components, sheaf has {self.n} nodes")
        sizes = self.packed.node_size
        if X.size and ((X < 0).any() or (X >= sizes[None, :]).any()):
            raise ShapeMismatch("cochain component outside its stalk")
        return np.ascontiguousarray(X), single

    def __repr__(self):
        return f"TarskiSheaf(n={self.n}, edges={len(self.graph.edges)})"


def build(graph, node_stalks, edge_stalks, restrictions):
    """Assemble and validate a sheaf. ``restrictions`` may be keyed by ``(node, edge_index)`` or ``(node, (i, j))``."""
    node_stalks = list(node_stalks)
    edge_stalks = list(edge_stalks)
    if len(node_stalks) != graph.n or len(edge_stalks) != len(graph.edges):
        raise ShapeMismatch("one stalk per node and per edge is required")
    table = {}
    for (v, e), conn in restrictions.items():
        if not isinstance(e, (int, np.integer)):
            e = graph.edge_index(*e)
        table[(int(v), int(e))] = conn
    for e, (a, b) in enumerate(graph.edges):
        for v in (a, b):
            if (v, e) not in table:
                raise ShapeMismatch(f"missing restriction for node {v} on edge {(a, b)}")
            c = table[(v, e)]
            if not isinstance(c, GaloisConnection):
                raise ShapeMismatch("restrictions must be GaloisConnection objects")
            if c.source != node_stalks[v] or c.target != edge_stalks[e]:
                raise ShapeMismatch(f"restriction at node {v}, edge {(a, b)} has the wrong stalks")
            chk = validate(c)
            if not chk.ok:
                raise InvalidConnection(v, (a, b), chk.witness)
    extra = set(table) - {(v, e) for e, ab in enumerate(graph.edges) for v in ab}
    if extra:
        raise ShapeMismatch(f"restrictions given for non-incidences {sorted(extra)}")
    return TarskiSheaf(graph, node_stalks, edge_stalks, table)


def constant_sheaf(graph, lat):
    ident = GaloisConnection.identity(lat)
    restr = {(v, e): ident for e, ab in enumerate(graph.edges) for v in ab}
    return TarskiSheaf(graph, [lat] * graph.n, [lat] * len(graph.edges), restr)


# -- sections and cohomology --------------------------------------------------

def is_section(sheaf, x):
    X, single = sheaf.as_states(x)
    p = sheaf.packed
    ok = kernels.section_mask(X, p.ends, p.lower)
    return bool(ok[0]) if single else ok


def cochain_count(sheaf):
    return math.prod(int(s) for s in sheaf.packed.node_size)


def iter_cochains(radices, limit=MAX_COCHAINS, chunk=CHUNK):
    """Yield all mixed-radix vectors in lexicographic order, in ``(B, n)`` chunks."""
    radices = np.asarray(radices, dtype=np.int64)
    total = math.prod(int(r) for r in radices)
    if total > limit:
        raise TooLarge(f"{total} cochains exceeds the enumeration guard {limit}")
    for start in range(0, total, chunk):
        yield kernels.decode(start, min(chunk, total - start), radices)


def _least_upper_bounds_exist(S, node_stalks):
    """Every subset of the rows of S has a least upper bound among the rows of S.

    With a least element present it suffices to check pairs. The pointwise join
    is the least bound whenever it lies in S; otherwise the bounds are searched.
    """
    k, n = S.shape
    if k == 0:
        return False
    leq = np.ones((k, k), dtype=bool)
    for i in range(n):
        leq &= node_stalks[i].leq[np.ix_(S[:, i], S[:, i])]
    if not np.any(leq.all(axis=1)):
        return False            # no least element: the empty family has no supremum
    rows = {r.tobytes(): idx for idx, r in enumerate(np.ascontiguousarray(S, dtype=np.int32))}
    joins = np.empty((k, n), dtype=np.int32)
    for a in range(k):
        for i in range(n):
            joins[:, i] = node_stalks[i].join[S[a, i], S[:, i]]
        for b in range(a + 1, k):
            if joins[b].tobytes() in rows:
                continue
            ub = leq[a] & leq[b]
            if not ub.any() or not (leq[ub][:, ub].all(axis=1)).any():
                return False
    return True


def sections_bruteforce(sheaf, check_completeness=True, max_complete=2048):
    """Enumerate all global sections.

    Returns ``SectionSet(sections, complete)`` with sections as a ``(k, n)`` array
    in lexicographic order. ``complete`` reports whether every family of sections
    has a least upper bound within the section set (``None`` when the set is
    larger than ``max_complete`` and the check is skipped).
    """
    p = sheaf.packed
    found = []
    for X in iter_cochains(p.node_size):
        found.append(X[kernels.section_mask(X, p.ends, p.lower)])
    S = np.concatenate(found) if found else np.zeros((0, sheaf.n), dtype=np.int32)
    complete = None
    if check_completeness and len(S) <= max_complete:
        complete = _least_upper_bounds_exist(S, sheaf.node_stalks)
    return SectionSet(S, complete)


def coboundary_adjoints(sheaf, Y):
    """``(d_minus*, d_plus*)`` of a batch of 1-cochains.

    ``(d_minus* y)_i`` meets the pullbacks ``upper(i, e)(y_e)`` over the edges
    whose smaller endpoint is ``i`` (``d_plus*`` uses larger endpoints); empty meets give top.
    """
    p = sheaf.packed
    B = Y.shape[0]
    top = p.node_top[p.node_lat]
    out = [np.broadcast_to(top, (B, sheaf.n)).astype(np.int32).copy() for _ in range(2)]
    for e, (a, b) in enumerate(p.ends):
        for s, v in ((0, a), (1, b)):
            pulled = p.upper[e, s, Y[:, e]]
            out[s][:, v] = p.node_meet[p.node_lat[v], out[s][:, v], pulled]
    return out[0], out[1]


def h1_bruteforce(sheaf):
    """All 1-cochains ``y`` with ``d_minus*(y) == d_plus*(y)`` (edge orientation: smaller id is minus)."""
    found = []
    for Y in iter_cochains(sheaf.packed.edge_size):
        dm, dp = coboundary_adjoints(sheaf, Y)
        found.append(Y[(dm == dp).all(axis=1)])
    E = len(sheaf.graph.edges)
    return np.concatenate(found) if found else np.zeros((0, E), dtype=np.int32)


# -- transport ----------------------------------------------------------------

def transport(sheaf, path, x):
    """Carry a stalk element along a node path via ``upper(j, ij) . lower(i, ij)`` per step."""
    path = list(path)
    if not path:
        raise NotAPath("empty path")
    for i, j in zip(path, path[1:]):
        e = sheaf.graph.edge_index(i, j)
        x = sheaf.upper(j, e, sheaf.lower(i, e, x))
    return int(x)


def step_map(sheaf, i, j):
    """Transport along the single step ``i -> j`` as a monotone map."""
    e = sheaf.graph.edge_index(i, j)
    ci, cj = sheaf.restriction(i, e), sheaf.restriction(j, e)
    return MonotoneMap(sheaf.node_stalks[i], sheaf.node_stalks[j], cj.upper.image[ci.lower.image], check=False)


def holonomy(sheaf, base, max_len):
    """Distinct transport maps of closed walks at ``base`` of length at most ``max_len``."""
    if max_len > MAX_HOLONOMY_LEN:
        raise TooLarge(f"holonomy walks are limited to length {MAX_HOLONOMY_LEN}")
    F = sheaf.node_stalks
    steps = {}
    for i in range(sheaf.n):
        for j in sheaf.graph.neighbors(i):
            steps[(i, j)] = step_map(sheaf, i, j).image
    ident = np.arange(F[base].m, dtype=np.int32)
    frontier = {(base, ident.tobytes()): ident}
    loops = {ident.tobytes(): ident}
    for _ in range(max_len):
        nxt = {}
        for (v, _key), img in frontier.items():
            for w in sheaf.graph.neighbors(v):
                new = steps[(v, w)][img]
                k = (w, new.tobytes())
                if k not in nxt:
                    nxt[k] = new
                if w == base:
                    loops.setdefault(new.tobytes(), new)
        frontier = nxt
    return {MonotoneMap(F[base], F[base], img, check=False) for img in loops.values()}
