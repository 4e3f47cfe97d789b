"""JSON sheaf-spec files.

A spec is one JSON object::

    {
      "lattices": {"P": {"kind": "powerset", "ground": ["a", "b"]},
                   "C": {"kind": "chain", "n": 3},
                   "Q": {"kind": "partition", "n": 3},
                   "X": {"kind": "product", "factors": ["C", "C"]},
                   "E": {"kind": "explicit", "elements": ["0", "a", "1"],
                         "leq": [["0", "a"], ["a", "1"]]}},
      "graph": {"nodes": 3, "edges": [[0, 1], [1, 2]]},
      "node_stalks": "P",                  # one name, or a list with one per node
      "edge_stalks": "P",                  # likewise per edge, in edge-list order
      "restrictions": [
        {"node": 0, "edge": [0, 1], "kind": "identity"},
        {"node": 1, "edge": [0, 1], "kind": "relation", "pairs": [["a", "b"]]},
        {"node": 1, "edge": [1, 2], "kind": "table", "lower": ["0", "a", "1", "1"]}
      ],
      "kripke": {"states": [...], "relations": [[[s, t], ...], ...],
                 "atoms": [...], "valuation": {"s": ["p"]}},
      "schedule": {"kind": "periodic", "steps": [[0], [1]]},
      "initial": ["{a}", "{}", "{a,b}"]
    }

``explicit`` orders list generating pairs; their reflexive-transitive closure is
used. ``relation`` restrictions need powerset stalks and give the pair
``(exists, forall)``; ``table`` lists the lower map's image labels in element
order and derives the upper map. A ``kripke`` section with no ``restrictions``
builds the Kripke sheaf (powerset stalks on the model's states, one agent per
node). Any missing field other than ``graph`` may be omitted when not needed.
"""

from __future__ import annotations

import json

import numpy as np

from .dynamics import BroadcastSequence
from .errors import SpecError, TarskiError
from .galois import GaloisConnection, Relation, adjoint_of, from_relation_covariant
from .lattice import (
    MonotoneMap,
    canonical_partition,
    chain,
    from_leq,
    partition_lattice,
    powerset_lattice,
    product,
)
from .semantics import KripkeModel, kripke_sheaf
from .sheaf import Graph, build


class SheafSpec:
    """A parsed spec: the sheaf plus optional model, schedule and initial state."""

    def __init__(self, sheaf, model=None, schedule=None, initial=None, raw=None):
        self.sheaf = sheaf
        self.model = model
        self.schedule = schedule
        self.initial = initial
        self.raw = raw


def _need(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise SpecError(f"{where}: missing field {key!r}")
    v = obj[key]
    if kind is not None and not isinstance(v, kind):
        raise SpecError(f"{where}.{key}: expected {kind.__name__ if isinstance(kind, type) else kind}")
    return v


def _lattice(name, defs, built, stack=()):
    if name in built:
        return built[name]
    if name in stack:
        raise SpecError(f"lattices: cyclic definition through {name!r}")
    if name not in defs:
        raise SpecError(f"unknown lattice {name!r}")
    d = defs[name]
    where = f"lattices.{name}"
    kind = _need(d, "kind", where, str)
    if kind == "powerset":
        lat = powerset_lattice([str(g) for g in _need(d, "ground", where, list)])
    elif kind == "chain":
        lat = chain(int(_need(d, "n", where)))
    elif kind == "partition":
        lat = partition_lattice(int(_need(d, "n", where)))
    elif kind == "product":
        lat = product([_lattice(f, defs, built, stack + (name,)) for f in _need(d, "factors", where, list)])
    elif kind == "explicit":
        elements = [str(e) for e in _need(d, "elements", where, list)]
        if len(set(elements)) != len(elements):
            raise SpecError(f"{where}: duplicate element labels")
        pos = {e: k for k, e in enumerate(elements)}
        leq = np.eye(len(elements), dtype=bool)
        for pair in _need(d, "leq", where, list):
            try:
                a, b = (pos[str(v)] for v in pair)
            except (KeyError, ValueError):
                raise SpecError(f"{where}: bad order pair {pair!r}") from None
            leq[a, b] = True
        for k in range(len(elements)):        # Warshall closure
            leq |= leq[:, k:k + 1] & leq[k:k + 1, :]
        lat = from_leq(leq, labels=elements)
    else:
        raise SpecError(f"{where}: unknown lattice kind {kind!r}")
    built[name] = lat
    return lat


def _stalks(spec, key, count, defs, built):
    v = spec.get(key)
    if v is None:
        raise SpecError(f"missing field {key!r}")
    names = [v] * count if isinstance(v, str) else v
    if not isinstance(names, list) or len(names) != count:
        raise SpecError(f"{key}: need one lattice name or a list of {count}")
    return [_lattice(str(nm), defs, built) for nm in names]


def _element(lat, label, where):
    try:
        return lat.index(str(label))
    except KeyError:
        if lat.kind == "partition":
            try:
                return lat.index(canonical_partition(str(label)))
            except KeyError:
                pass
        raise SpecError(f"{where}: {label!r} is not an element") from None


def _model(d):
    where = "kripke"
    states = [str(s) for s in _need(d, "states", where, list)]
    rels = _need(d, "relations", where, list)
    atoms = [str(a) for a in d.get("atoms", [])]
    val = d.get("valuation", {})
    try:
        pairs = [[(str(a), str(b)) for a, b in r] for r in rels]
        return KripkeModel.from_pairs(states, pairs, atoms, {str(k): [str(a) for a in v] for k, v in val.items()})
    except (KeyError, ValueError, TypeError) as exc:
        raise SpecError(f"kripke: malformed model ({exc})") from None


def _schedule(d):
    kind = _need(d, "kind", "schedule", str)
    if kind == "synchronous":
        return BroadcastSequence.synchronous()
    if kind == "uniform1":
        return BroadcastSequence.uniform(int(d.get("seed", 0)))
    if kind in ("periodic", "explicit"):
        steps = _need(d, "steps", "schedule", list)
        return getattr(BroadcastSequence, kind)(steps)
    raise SpecError(f"schedule: unknown kind {kind!r}")


def from_dict(spec):
    if not isinstance(spec, dict):
        raise SpecError("spec must be a JSON object")
    g = _need(spec, "graph", "spec", dict)
    try:
        graph = Graph(int(_need(g, "nodes", "graph")), [tuple(e) for e in g.get("edges", [])])
    except (TarskiError, TypeError, ValueError) as exc:
        raise SpecError(f"graph: {exc}") from None
    model = _model(spec["kripke"]) if "kripke" in spec else None
    defs = spec.get("lattices", {})
    built = {}
    try:
        if model is not None and "restrictions" not in spec:
            sheaf = kripke_sheaf(model, graph)
        else:
            nodes = _stalks(spec, "node_stalks", graph.n, defs, built)
            edges = _stalks(spec, "edge_stalks", len(graph.edges), defs, built)
            restr = {}
            for k, r in enumerate(_need(spec, "restrictions", "spec", list)):
                where = f"restrictions[{k}]"
                v = int(_need(r, "node", where))
                e = graph.edge_index(*_need(r, "edge", where, list))
                restr[(v, e)] = _connection(r, nodes[v], edges[e], where)
            sheaf = build(graph, nodes, edges, restr)
    except SpecError:
        raise
    except TarskiError as exc:
        raise SpecError(f"invalid sheaf: {exc}") from exc
    schedule = _schedule(spec["schedule"]) if "schedule" in spec else None
    initial = None
    if "initial" in spec:
        init = spec["initial"]
        if not isinstance(init, list) or len(init) != graph.n:
            raise SpecError("initial: need one element label per node")
        initial = tuple(_element(sheaf.node_stalks[i], lab, f"initial[{i}]") for i, lab in enumerate(init))
    return SheafSpec(sheaf, model, schedule, initial, spec)


def _connection(r, src, dst, where):
    kind = _need(r, "kind", where, str)
    if kind == "identity":
        if src != dst:
            raise SpecError(f"{where}: identity restriction between different lattices")
        return GaloisConnection.identity(src)
    if kind == "relation":
        if src.kind != "powerset" or dst.kind != "powerset":
            raise SpecError(f"{where}: relation restrictions need powerset stalks")
        X, Y = src.params["ground"], dst.params["ground"]
        try:
            rel = Relation.from_pairs(X, Y, [(str(a), str(b)) for a, b in _need(r, "pairs", where, list)])
        except (KeyError, ValueError, TypeError):
            raise SpecError(f"{where}: pair outside the ground sets") from None
        return from_relation_covariant(rel, src, dst)
    if kind == "table":
        lower = _need(r, "lower", where, list)
        if len(lower) != src.m:
            raise SpecError(f"{where}: lower table needs {src.m} entries")
        img = [_element(dst, lab, where) for lab in lower]
        try:
            return adjoint_of(MonotoneMap(src, dst, img))
        except TarskiError as exc:
            raise SpecError(f"{where}: {exc}") from None
    raise SpecError(f"{where}: unknown restriction kind {kind!r}")


def loads(text):
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    return from_dict(spec)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


# -- serialization ------------------------------------------------------------

def _lattice_def(lat, name_of):
    if lat.kind == "powerset":
        return {"kind": "powerset", "ground": list(lat.params["ground"])}
    if lat.kind == "chain":
        return {"kind": "chain", "n": lat.m}
    if lat.kind == "partition":
        return {"kind": "partition", "n": lat.params["n"]}
    if lat.kind == "product":
        return {"kind": "product", "factors": [name_of(f) for f in lat.params["factors"]]}
    xs, ys = np.nonzero(lat.covers)
    return {"kind": "explicit", "elements": list(lat.labels),
            "leq": [[lat.labels[a], lat.labels[b]] for a, b in zip(xs, ys)]}


def to_dict(sheaf, model=None, schedule=None, initial=None):
    """Canonical spec for a sheaf; restrictions are written as lower-map tables."""
    names = []
    defs = {}

    def name_of(lat):
        for nm, other in names:
            if other is lat or (other == lat and other.kind == lat.kind and other.labels == lat.labels):
                return nm
        if lat.kind == "product":
            for f in lat.params["factors"]:
                name_of(f)
        nm = f"L{len(names)}"
        names.append((nm, lat))
        defs[nm] = _lattice_def(lat, name_of)
        return nm

    g = sheaf.graph
    out = {}
    node_names = [name_of(lat) for lat in sheaf.node_stalks]
    edge_names = [name_of(lat) for lat in sheaf.edge_stalks]
    out["lattices"] = defs
    out["graph"] = {"nodes": g.n, "edges": [list(e) for e in g.edges]}
    out["node_stalks"] = node_names
    out["edge_stalks"] = edge_names
    restr = []
    for e, (a, b) in enumerate(g.edges):
        for v in (a, b):
            c = sheaf.restriction(v, e)
            labels = sheaf.edge_stalks[e].labels
            restr.append({"node": v, "edge": [a, b], "kind": "table",
                          "lower": [labels[k] for k in c.lower.image]})
    out["restrictions"] = restr
    if model is not None:
        out["kripke"] = {
            "states": list(model.states),
            "relations": [[[model.states[s], model.states[t]] for s, t in zip(*np.nonzero(r))]
                          for r in model.relations],
            "atoms": list(model.atoms),
            "valuation": {s: sorted(v) for s, v in zip(model.states, model.valuation) if v},
        }
    if schedule is not None:
        d = {"kind": schedule.kind}
        if schedule.kind == "uniform1":
            d["seed"] = schedule.seed
        if schedule.kind in ("periodic", "explicit"):
            d["steps"] = [list(s) for s in schedule.subsets]
        out["schedule"] = d
    if initial is not None:
        out["initial"] = [sheaf.node_stalks[i].labels[x] for i, x in enumerate(initial)]
    return out


def dumps(spec_or_sheaf):
    if isinstance(spec_or_sheaf, SheafSpec):
        s = spec_or_sheaf
        d = to_dict(s.sheaf, s.model, s.schedule, s.initial)
    else:
        d = to_dict(spec_or_sheaf)
    return json.dumps(d, indent=2, ensure_ascii=False) + "\n"


def sheaves_equal(a, b):
    """Same graph, equal stalks, and tablewise-equal restrictions."""
    if a.graph != b.graph or a.graph.edges != b.graph.edges:
        return False
    if any(x != y for x, y in zip(a.node_stalks, b.node_stalks)):
        return False
    if any(x != y for x, y in zip(a.edge_stalks, b.edge_stalks)):
        return False
    return all(a.restrictions[k] == b.restrictions[k] for k in a.restrictions) and \
        set(a.restrictions) == set(b.restrictions)
