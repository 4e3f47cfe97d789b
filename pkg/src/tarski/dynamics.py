"""Tarski Laplacian, closure operator, heat flow, gossip, consensus and energy."""

from __future__ import annotations

import csv
import io
import json
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import MetricUndefined, NotConverged, ShapeMismatch
from .galois import Check
from .sheaf import h1_bruteforce, iter_cochains

HeatResult = namedtuple("HeatResult", "trajectory final")
ConsensusResult = namedtuple("ConsensusResult", "final rounds")


def _apply(sheaf, x, active=None, use_self=False):
    X, single = sheaf.as_states(x)
    p = sheaf.packed
    if active is None:
        active = np.ones(sheaf.n, dtype=bool)
    out = kernels.laplacian(X, p.node_lat, p.node_meet, p.node_top, p.nbr, p.nbr_edge, p.nbr_side,
                            p.lower, p.upper, np.asarray(active, dtype=bool), use_self)
    return out[0] if single else out


def tarski_laplacian(sheaf, x, active=None):
    """``(Lx)_i = meet over neighbours j of upper(i, ij)(lower(j, ij)(x_j))``.

    With ``active`` (a bool mask of broadcasting nodes) only those neighbours
    contribute, giving the time-varying operator. Empty meets are top.
    Accepts one cochain ``(n,)`` or a batch ``(B, n)``.
    """
    return _apply(sheaf, x, active)


def closure_E(sheaf, x):
    """``(Ex)_i = meet over neighbours j of upper(i, ij)(lower(i, ij)(x_i))``."""
    return _apply(sheaf, x, use_self=True)


def _meet(sheaf, X, Y):
    p = sheaf.packed
    return kernels.meet_states(X, Y, p.node_lat, p.node_meet)


def heat_flow(sheaf, x0, max_steps=None):
    """Iterate ``x <- L(x) meet x`` to its fixed point.

    The trajectory lists the distinct states visited, starting with ``x0``.
    """
    X, _ = sheaf.as_states(x0)
    traj = [tuple(int(v) for v in X[0])]
    steps = 0
    while True:
        nxt = _meet(sheaf, _apply(sheaf, X), X)
        if np.array_equal(nxt, X):
            return HeatResult(traj, traj[-1])
        X = nxt
        traj.append(tuple(int(v) for v in X[0]))
        steps += 1
        if max_steps is not None and steps >= max_steps:
            raise NotConverged(f"heat flow still moving after {steps} steps", traj[-1], traj)


# -- metrics and energy -------------------------------------------------------

@dataclass(frozen=True)
class EdgeMetric:
    """Distance on edge stalks: ``hamming`` (powersets only), ``hasse``, or ``None`` for the default."""

    kind: str | None = None

    def table(self, lat):
        kind = self.kind or ("hamming" if lat.kind == "powerset" else "hasse")
        if kind == "hamming":
            if lat.kind != "powerset":
                raise MetricUndefined("hamming distance needs powerset edge stalks")
            a = np.arange(lat.m, dtype=np.uint64)
            x = a[:, None] ^ a[None, :]
            return np.bitwise_count(x).astype(np.float64) if hasattr(np, "bitwise_count") \
                else np.vectorize(lambda v: bin(int(v)).count("1"))(x).astype(np.float64)
        if kind == "hasse":
            return lat.hasse_distance.astype(np.float64)
        raise MetricUndefined(f"unknown metric {kind!r}")


def _dist_stack(sheaf, metric):
    cache = sheaf.__dict__.setdefault("_distance_tables", {})
    if metric not in cache:
        uniq = sheaf.unique_edge_stalks
        Me = max((lat.m for lat in uniq), default=1)
        stack = np.zeros((max(len(uniq), 1), Me, Me), dtype=np.float64)
        for k, lat in enumerate(uniq):
            stack[k, :lat.m, :lat.m] = metric.table(lat)
        cache[metric] = stack
    return cache[metric]


def dirichlet_energy(sheaf, x, metric=EdgeMetric()):
    """Sum over edges of the distance between the two restrictions of ``x``."""
    X, single = sheaf.as_states(x)
    p = sheaf.packed
    if len(p.ends) == 0:
        out = np.zeros(X.shape[0])
    else:
        out = kernels.energy(X, p.ends, p.lower, p.edge_lat, _dist_stack(sheaf, metric))
    return float(out[0]) if single else out


# -- schedules ----------------------------------------------------------------

@dataclass
class BroadcastSequence:
    """Which nodes broadcast at each step.

    ``synchronous``: every node; ``uniform1``: one node drawn uniformly per step
    from a seeded PCG64 generator; ``periodic``: cycle through ``subsets``;
    ``explicit``: play ``subsets`` once, then nobody fires.
    """

    kind: str
    seed: int | None = None
    subsets: list = field(default_factory=list)

    @classmethod
    def synchronous(cls):
        return cls("synchronous")

    @classmethod
    def uniform(cls, seed):
        return cls("uniform1", seed=int(seed))

    @classmethod
    def periodic(cls, subsets):
        return cls("periodic", subsets=[sorted(set(int(v) for v in s)) for s in subsets])

    @classmethod
    def round_robin(cls, n):
        return cls.periodic([[i] for i in range(n)])

    @classmethod
    def explicit(cls, subsets):
        return cls("explicit", subsets=[sorted(set(int(v) for v in s)) for s in subsets])

    @classmethod
    def from_file(cls, path):
        """Periodic schedule: one step per line, node ids separated by spaces or commas."""
        steps = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    steps.append([int(t) for t in line.replace(",", " ").split()])
        return cls.periodic(steps)

    def is_live(self, n):
        """Whether every node fires infinitely often (uniform draws do so with probability one)."""
        if self.kind in {"synchronous", "uniform1"}:
            return Check(True, None)
        seen = set().union(*map(set, self.subsets)) if self.subsets else set()
        missing = sorted(set(range(n)) - seen)
        if self.kind == "explicit":
            return Check(False, missing or "finite sequence")
        return Check(not missing, missing or None)

    def stream(self, n):
        """Yield, per step, a sorted array of firing nodes (an empty array means nobody)."""
        if self.kind == "synchronous":
            everyone = np.arange(n)
            while True:
                yield everyone
        elif self.kind == "uniform1":
            rng = np.random.Generator(np.random.PCG64(self.seed))
            while True:
                yield np.array([int(rng.integers(n))])
        elif self.kind == "periodic":
            if not self.subsets:
                raise ShapeMismatch("periodic schedule with no steps")
            k = 0
            while True:
                yield np.array(self.subsets[k % len(self.subsets)], dtype=np.int64)
                k += 1
        elif self.kind == "explicit":
            for s in self.subsets:
                yield np.array(s, dtype=np.int64)
            while True:
                yield np.zeros(0, dtype=np.int64)
        else:
            raise ShapeMismatch(f"unknown schedule kind {self.kind!r}")


@dataclass
class GossipResult:
    final: tuple
    trace: list            # rows (t, fired ids, energy); row 0 is the initial state
    states: list           # state after every step, starting with x0
    steps: int
    changes: int
    firings: np.ndarray    # how often each node broadcast


def gossip(sheaf, x0, schedule, max_steps=100_000, metric=EdgeMetric()):
    """Asynchronous heat flow ``x <- L_t(x) meet x`` where ``L_t`` only hears this step's broadcasters.

    Stops once every node has broadcast since the last state change, which
    certifies a global section. Raises :class:`NotConverged` after ``max_steps``.
    """
    if max_steps < 1:
        raise ShapeMismatch("max_steps must be at least 1")
    X, _ = sheaf.as_states(x0)
    n = sheaf.n
    sync = schedule.kind == "synchronous"
    trace = [(0, "", dirichlet_energy(sheaf, X[0], metric))]
    states = [tuple(int(v) for v in X[0])]
    heard = np.zeros(n, dtype=bool)
    firings = np.zeros(n, dtype=np.int64)
    changes = 0
    active = np.zeros(n, dtype=bool)
    if n == 0:
        return GossipResult((), trace, states, 0, 0, firings)
    for t, fired in enumerate(schedule.stream(n), start=1):
        active[:] = False
        active[fired] = True
        nxt = _meet(sheaf, _apply(sheaf, X, active), X)
        firings[fired] += 1
        if np.array_equal(nxt, X):
            heard[fired] = True
        else:
            changes += 1
            heard[:] = False
            X = nxt
        states.append(tuple(int(v) for v in X[0]))
        label = "" if sync else ";".join(str(int(v)) for v in fired)
        trace.append((t, label, dirichlet_energy(sheaf, X[0], metric)))
        if heard.all():
            return GossipResult(states[-1], trace, states, t, changes, firings)
        if t >= max_steps:
            raise NotConverged(f"gossip did not settle within {max_steps} steps", states[-1], trace)
    raise AssertionError("schedule stream ended")  # pragma: no cover


def trace_csv(trace):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "fired", "energy"])
    for t, fired, energy in trace:
        w.writerow([t, fired, repr(float(energy))])
    return buf.getvalue()


# -- consensus ----------------------------------------------------------------

def _consensus(graph, lat, x0, table):
    x = [int(v) for v in x0]
    if len(x) != graph.n:
        raise ShapeMismatch("state length differs from node count")
    rounds = 0
    while True:
        nxt = list(x)
        for i in range(graph.n):
            for j in graph.neighbors(i):
                nxt[i] = int(table[nxt[i], x[j]])
        if nxt == x:
            return ConsensusResult(tuple(x), rounds)
        x = nxt
        rounds += 1


def meet_consensus(graph, lat, x0):
    """Synchronous ``x_i <- x_i meet (meet of neighbours)``; ``rounds`` counts state-changing rounds."""
    return _consensus(graph, lat, x0, lat.meet)


def join_consensus(graph, lat, x0):
    return _consensus(graph, lat, x0, lat.join)


# -- Helmholtzian -------------------------------------------------------------

def helmholtzian(sheaf, y):
    """Edge operator joining what each endpoint hears from its other edges.

    ``(Hy)_ij = join_{j' != j} lower(i, ij) upper(i, ij') y_ij'
              v join_{i' != i} lower(j, ij) upper(j, i'j) y_i'j``.
    """
    g = sheaf.graph
    y = [int(v) for v in y]
    if len(y) != len(g.edges):
        raise ShapeMismatch("1-cochain length differs from edge count")
    out = []
    for e, (a, b) in enumerate(g.edges):
        lat = sheaf.edge_stalks[e]
        acc = lat.bot
        for v in (a, b):
            for w in g.neighbors(v):
                f = g.edge_index(v, w)
                if f == e:
                    continue
                acc = lat.join_of(acc, sheaf.lower(v, e, sheaf.upper(v, f, y[f])))
        out.append(acc)
    return tuple(out)


def conjecture_report(sheaf):
    """Compare the prefix points of the Helmholtzian with the brute-force H^1 set. Asserts nothing."""
    h1 = {tuple(int(v) for v in row) for row in h1_bruteforce(sheaf)}
    prefix = set()
    for Y in iter_cochains(sheaf.packed.edge_size):
        for row in Y:
            yt = tuple(int(v) for v in row)
            hy = helmholtzian(sheaf, yt)
            if all(sheaf.edge_stalks[e].le(hy[e], yt[e]) for e in range(len(yt))):
                prefix.add(yt)
    return {
        "edges": len(sheaf.graph.edges),
        "h1_count": len(h1),
        "prefix_count": len(prefix),
        "equal": h1 == prefix,
        "only_in_h1": sorted(h1 - prefix)[:10],
        "only_in_prefix": sorted(prefix - h1)[:10],
    }


def write_conjecture_reports(reports, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(reports, fh, indent=2, default=list)


# -- Hodge-Tarski -------------------------------------------------------------

def check_hodge_tarski(sheaf):
    """Exhaustively compare ``{x | L(x) >= x}``, the sections, and the fixed points of ``L meet id``.

    Returns ``Check(ok, witness)``; the witness is the first cochain where they disagree.
    """
    p = sheaf.packed
    alln = np.ones(sheaf.n, dtype=bool)
    for X in iter_cochains(p.node_size):
        LX = kernels.laplacian(X, p.node_lat, p.node_meet, p.node_top, p.nbr, p.nbr_edge, p.nbr_side,
                               p.lower, p.upper, alln, False)
        suffix = kernels.leq_states(X, LX, p.node_lat, p.node_leq)
        section = kernels.section_mask(X, p.ends, p.lower)
        fixed = (kernels.meet_states(LX, X, p.node_lat, p.node_meet) == X).all(axis=1)
        bad = (suffix != section) | (fixed != section)
        if bad.any():
            return Check(False, tuple(int(v) for v in X[int(np.argmax(bad))]))
    return Check(True, None)
