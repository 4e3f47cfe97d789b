"""Multi-agent epistemic logic over Kripke models, and the sheaves it induces.

Events (sets of states) are bitmasks over the model's state list, matching the
element encoding of :func:`tarski.lattice.powerset_lattice`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from .errors import BadAgent, ShapeMismatch, SpecError, UnknownAtom
from .galois import Relation, exists_table, forall_table, from_relation_covariant
from .lattice import powerset_lattice
from .sheaf import TarskiSheaf

# -- models -------------------------------------------------------------------


class KripkeModel:
    """States, one accessibility relation per agent, and a valuation of atoms."""

    def __init__(self, states, relations, atoms=(), valuation=None):
        self.states = tuple(states)
        self.atoms = tuple(atoms)
        k = len(self.states)
        rels = []
        for r in relations:
            r = np.asarray(r, dtype=bool)
            if r.shape != (k, k):
                raise ShapeMismatch(f"relation of shape {r.shape} on {k} states")
            r.setflags(write=False)
            rels.append(r)
        self.relations = tuple(rels)
        valuation = valuation if valuation is not None else [() for _ in range(k)]
        if len(valuation) != k:
            raise ShapeMismatch("valuation needs one atom set per state")
        self.valuation = tuple(frozenset(v) for v in valuation)
        for v in self.valuation:
            if not v <= set(self.atoms):
                raise UnknownAtom(f"valuation uses atoms {sorted(v - set(self.atoms))} outside the atom list")

    @classmethod
    def from_pairs(cls, states, agent_pairs, atoms=(), valuation=None):
        states = tuple(states)
        rels = [Relation.from_pairs(states, states, pairs).pairs for pairs in agent_pairs]
        if isinstance(valuation, dict):
            valuation = [valuation.get(s, ()) for s in states]
        return cls(states, rels, atoms, valuation)

    @property
    def n_agents(self):
        return len(self.relations)

    @property
    def full(self):
        return (1 << len(self.states)) - 1

    @cached_property
    def powerset(self):
        return powerset_lattice(self.states)

    def relation(self, agent):
        if not 0 <= agent < self.n_agents:
            raise BadAgent(f"agent {agent} outside 0..{self.n_agents - 1}")
        return Relation(self.states, self.states, self.relations[agent])

    @cached_property
    def _tables(self):
        return [(exists_table(self.relation(a)), forall_table(self.relation(a))) for a in range(self.n_agents)]

    def knows_exists(self, agent, event):
        """Image of ``event`` under the relation: states some member of ``event`` can reach."""
        self.relation(agent)
        return int(self._tables[agent][0][event])

    def knows_forall(self, agent, event):
        """States all of whose ``agent``-successors lie in ``event``."""
        self.relation(agent)
        return int(self._tables[agent][1][event])

    def possible(self, agent, event):
        """States with at least one ``agent``-successor in ``event``: the intension of ``not K not``."""
        return self.full & ~self.knows_forall(agent, self.full & ~event)

    def event(self, members):
        return self.powerset.subset(members)

    def members(self, event):
        return self.powerset.members(event)

    def label(self, event):
        return self.powerset.labels[event]


def relation_properties(R):
    """Flags for the usual endorelation properties of a square bool table."""
    R = np.asarray(R, dtype=bool)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ShapeMismatch("relation must be square")
    Ri = R.astype(np.int64)
    comp = (Ri @ Ri) > 0
    eye = np.eye(R.shape[0], dtype=bool)
    return {
        "reflexive": bool(R.diagonal().all()),
        "transitive": bool(not (comp & ~R).any()),
        "symmetric": bool(np.array_equal(R, R.T)),
        "antisymmetric": bool(not (R & R.T & ~eye).any()),
        "serial": bool(R.any(axis=1).all()),
        # s R t and s R u imply t R u
        "euclidean": bool(not ((Ri.T @ Ri > 0) & ~R).any()),
        "connex": bool((R | R.T).all()),
    }


def random_model(n_agents, n_states, rng, p_diag=0.9, p_off=0.1, atoms=()):
    """I.i.d. relations: a pair is kept with ``p_diag`` on the diagonal and ``p_off`` elsewhere."""
    rels = []
    eye = np.eye(n_states, dtype=bool)
    for _ in range(n_agents):
        u = rng.random((n_states, n_states))
        rels.append(np.where(eye, u < p_diag, u < p_off))
    val = [frozenset(a for a in atoms if rng.random() < 0.5) for _ in range(n_states)]
    return KripkeModel([f"s{k}" for k in range(n_states)], rels, atoms, val)


# -- formulas -----------------------------------------------------------------

class Formula:
    def __and__(self, other):
        return And(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class Top(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"(and {self.left} {self.right})"


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def __str__(self):
        return f"(not {self.body})"


@dataclass(frozen=True)
class Know(Formula):
    agent: int
    body: Formula

    def __str__(self):
        return f"(K {self.agent} {self.body})"


@dataclass(frozen=True)
class Common(Formula):
    """Common knowledge in a group, evaluated on intensions."""

    group: tuple
    body: Formula

    def __str__(self):
        return f"(C ({' '.join(map(str, self.group))}) {self.body})"


@dataclass(frozen=True)
class Distributed(Formula):
    """Distributed knowledge: necessity over the intersection of the group's relations."""

    group: tuple
    body: Formula

    def __str__(self):
        return f"(D ({' '.join(map(str, self.group))}) {self.body})"


TRUE = Top()
FALSE = Not(TRUE)


def Or(a, b):
    return Not(And(Not(a), Not(b)))


def Implies(a, b):
    return Not(And(a, Not(b)))


def Possible(agent, phi):
    """``not K_i not phi``: ``phi`` holds at some accessible state."""
    return Not(Know(agent, Not(phi)))


def conj(formulas):
    formulas = list(formulas)
    if not formulas:
        return TRUE
    return reduce(And, formulas)


def EveryoneKnows(group, phi):
    return conj(Know(i, phi) for i in group)


def satisfies(model, state, phi):
    """Truth of ``phi`` at one state, by direct recursion on the formula."""
    if isinstance(state, str):
        state = model.states.index(state)
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Atom):
        if phi.name not in model.atoms:
            raise UnknownAtom(phi.name)
        return phi.name in model.valuation[state]
    if isinstance(phi, And):
        return satisfies(model, state, phi.left) and satisfies(model, state, phi.right)
    if isinstance(phi, Not):
        return not satisfies(model, state, phi.body)
    if isinstance(phi, Know):
        R = model.relation(phi.agent).pairs
        return all(satisfies(model, t, phi.body) for t in np.nonzero(R[state])[0])
    if isinstance(phi, (Common, Distributed)):
        return bool(intension(model, phi) >> state & 1)
    raise TypeError(f"not a formula: {phi!r}")


def _check_group(model, group):
    for a in group:
        model.relation(a)


def intension(model, phi):
    """The event ``{s | s satisfies phi}`` as a bitmask, computed with set operations."""
    if isinstance(phi, Top):
        return model.full
    if isinstance(phi, Atom):
        if phi.name not in model.atoms:
            raise UnknownAtom(phi.name)
        return sum(1 << k for k, v in enumerate(model.valuation) if phi.name in v)
    if isinstance(phi, And):
        return intension(model, phi.left) & intension(model, phi.right)
    if isinstance(phi, Not):
        return model.full & ~intension(model, phi.body)
    if isinstance(phi, Know):
        return model.knows_forall(phi.agent, intension(model, phi.body))
    if isinstance(phi, Common):
        _check_group(model, phi.group)
        base = intension(model, phi.body)
        step = lambda e: reduce(int.__and__, (model.knows_forall(a, e) for a in phi.group), model.full)
        return limit_meet(step, base)[0]
    if isinstance(phi, Distributed):
        _check_group(model, phi.group)
        rel = reduce(np.logical_and, (model.relations[a] for a in phi.group),
                     np.ones((len(model.states),) * 2, dtype=bool))
        return int(forall_table(Relation(model.states, model.states, rel))[intension(model, phi.body)])
    raise TypeError(f"not a formula: {phi!r}")


def limit_meet(step, start):
    """``meet_{k>=1} step^k(start)`` for a map on a finite set of bitmasks.

    Iterates until the orbit revisits a value, at which point every later
    iterate has been seen. Returns ``(value, iterations, decreases)`` where
    ``decreases`` counts strict drops of the running meet.
    """
    seen = set()
    e = start
    acc = None
    iterations = decreases = 0
    while True:
        e = step(e)
        iterations += 1
        if e in seen:
            return acc, iterations, decreases
        seen.add(e)
        new = e if acc is None else acc & e
        if acc is not None and new != acc:
            decreases += 1
        acc = new


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


def _tokenize(text):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        chunk = text[pos:m.start(m.lastindex)]
        for ch in chunk:
            line, col = (line + 1, 1) if ch == "\n" else (line, col + 1)
        tok = m.group(m.lastindex)
        out.append((tok, line, col))
        col += len(tok)
        pos = m.end()
    return out


def parse_formula(text):
    """Parse prefix syntax.

    Grammar::

        phi   := 'true' | 'false' | ATOM
               | '(' 'not' phi ')' | '(' 'and' phi phi+ ')' | '(' 'or' phi phi+ ')'
               | '(' 'implies' phi phi ')' | '(' 'K' AGENT phi ')' | '(' 'M' AGENT phi ')'
               | '(' 'E' group phi ')' | '(' 'C' group phi ')' | '(' 'D' group phi ')'
        group := '(' AGENT* ')'

    Agents are 0-based integers; ``M`` is the dual possibility operator.
    """
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None, None)

    def take(expected=None):
        nonlocal pos
        tok, line, col = peek()
        if tok is None:
            raise SpecError("unexpected end of formula")
        if expected is not None and tok != expected:
            raise SpecError(f"expected {expected!r}, found {tok!r}", line, col)
        pos += 1
        return tok, line, col

    def agent():
        tok, line, col = take()
        if not tok.isdigit():
            raise SpecError(f"expected an agent number, found {tok!r}", line, col)
        return int(tok)

    def group():
        take("(")
        ids = []
        while peek()[0] != ")":
            ids.append(agent())
        take(")")
        return tuple(ids)

    def phi():
        tok, line, col = take()
        if tok == ")":
            raise SpecError("unexpected ')'", line, col)
        if tok != "(":
            if tok == "true":
                return TRUE
            if tok == "false":
                return FALSE
            return Atom(tok)
        op, line, col = take()
        if op == "not":
            body = Not(phi())
        elif op in ("and", "or"):
            parts = [phi(), phi()]
            while peek()[0] not in (")", None):
                parts.append(phi())
            body = reduce(And if op == "and" else Or, parts)
        elif op == "implies":
            body = Implies(phi(), phi())
        elif op in ("K", "M"):
            a = agent()
            body = Know(a, phi()) if op == "K" else Possible(a, phi())
        elif op in ("E", "C", "D"):
            g = group()
            inner = phi()
            body = {"E": lambda: EveryoneKnows(g, inner), "C": lambda: Common(g, inner),
                    "D": lambda: Distributed(g, inner)}[op]()
        else:
            raise SpecError(f"unknown operator {op!r}", line, col)
        take(")")
        return body

    result = phi()
    if pos != len(toks):
        tok, line, col = toks[pos]
        raise SpecError(f"trailing input {tok!r}", line, col)
    return result


# -- sheaves ------------------------------------------------------------------

def kripke_connection(model, agent):
    rel = model.relation(agent)
    P = model.powerset
    return from_relation_covariant(rel, P, P)


def kripke_sheaf(model, graph):
    """Powerset stalks everywhere; node ``i`` restricts to its edges through ``(K_i exists, K_i forall)``."""
    if model.n_agents != graph.n:
        raise ShapeMismatch(f"{model.n_agents} agents for {graph.n} nodes")
    P = model.powerset
    conns = [kripke_connection(model, a) for a in range(graph.n)]
    restr = {(v, e): conns[v] for e, ab in enumerate(graph.edges) for v in ab}
    return TarskiSheaf(graph, [P] * graph.n, [P] * len(graph.edges), restr)


def kripke_laplacian(model, graph, events):
    """``(Le)_i = intersection over neighbours j of K_i forall(K_j exists(e_j))``, by set operations.

    ``K_j exists`` is the relational image (the lower adjoint of ``K_j forall``).
    """
    if len(events) != graph.n or model.n_agents != graph.n:
        raise ShapeMismatch("one event and one agent per node required")
    out = []
    for i in range(graph.n):
        acc = model.full
        for j in graph.neighbors(i):
            acc &= model.knows_forall(i, model.knows_exists(j, events[j]))
        out.append(acc)
    return tuple(out)


def is_event_section(model, graph, events):
    return all(model.knows_exists(i, events[i]) == model.knows_exists(j, events[j]) for i, j in graph.edges)


def epistemic_section_check(model, graph, formulas):
    """Whether the intensions of ``formulas`` form a section of the Kripke sheaf."""
    return is_event_section(model, graph, [intension(model, f) for f in formulas])


def negative_knowledge_agrees(model, graph, formulas):
    """``K_i not phi_i == K_j not phi_j`` on every edge.

    ``K_i not phi`` is the complement of the *preimage* of ``[[phi]]`` while the
    sheaf restricts along the *image*, so this matches
    :func:`epistemic_section_check` whenever the relations are symmetric.
    """
    return all(
        intension(model, Know(i, Not(formulas[i]))) == intension(model, Know(j, Not(formulas[j])))
        for i, j in graph.edges
    )


def positive_knowledge_agrees(model, graph, formulas):
    """``K_i phi_i == K_j phi_j`` on every edge (matches sectionhood when each relation is a function)."""
    return all(
        intension(model, Know(i, formulas[i])) == intension(model, Know(j, formulas[j]))
        for i, j in graph.edges
    )


def syntactic_laplacian(graph, i, formulas):
    """``conj over neighbours j of K_i not K_j not phi_j``."""
    return conj(Know(i, Not(Know(j, Not(formulas[j])))) for j in graph.neighbors(i))


def diffusive(graph, group, phi, k=1):
    """``L_A^k phi`` where ``L_A phi`` conjoins each group member's Laplacian of the constant tuple."""
    if k < 1:
        raise ShapeMismatch("k must be at least 1")
    for _ in range(k):
        tup = [phi] * graph.n
        phi = conj(syntactic_laplacian(graph, i, tup) for i in group)
    return phi


def syntactic_laplacian_event(model, graph, i, events):
    """Intension of the syntactic Laplacian at ``i`` given the intensions of the formula tuple."""
    acc = model.full
    for j in graph.neighbors(i):
        acc &= model.knows_forall(i, model.possible(j, events[j]))
    return acc


def diffusive_step(model, graph, group):
    """The map ``[[phi]] -> [[L_A phi]]`` on events."""
    def step(e):
        events = [e] * graph.n
        acc = model.full
        for i in group:
            acc &= syntactic_laplacian_event(model, graph, i, events)
        return acc
    return step


def diffusive_limit(model, graph, group, phi):
    """Intension of ``meet_{k>=1} L_A^k phi`` with iteration statistics ``(event, iterations, decreases)``."""
    return limit_meet(diffusive_step(model, graph, group), intension(model, phi))
