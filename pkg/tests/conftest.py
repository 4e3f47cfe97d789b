import itertools

import numpy as np
import pytest

from tarski.galois import GaloisConnection, Relation, adjoint_of, concept_lattice
from tarski.lattice import (
    MonotoneMap,
    chain,
    downset_lattice,
    from_leq,
    partition_lattice,
    powerset_lattice,
    product,
)
from tarski.semantics import kripke_sheaf, random_model
from tarski.sheaf import Graph, build
from tarski.worked import five_element_lattice


def diamond():
    return from_leq(np.array([[1, 1, 1, 1], [0, 1, 0, 1], [0, 0, 1, 1], [0, 0, 0, 1]], bool))


def m3():
    leq = np.eye(5, dtype=bool)
    leq[0, :] = True
    leq[:, 4] = True
    return from_leq(leq)


def n5():
    # 0 < a < b < 1, 0 < c < 1
    return from_leq(np.array([
        [1, 1, 1, 1, 1],
        [0, 1, 1, 0, 1],
        [0, 0, 1, 0, 1],
        [0, 0, 0, 1, 1],
        [0, 0, 0, 0, 1],
    ], bool))


def random_poset(k, rng, p=0.4):
    """Random partial order on k points: transitive closure of a random DAG."""
    leq = np.eye(k, dtype=bool)
    for a in range(k):
        for b in range(a + 1, k):
            if rng.random() < p:
                leq[a, b] = True
    for m in range(k):
        leq |= leq[:, m:m + 1] & leq[m:m + 1, :]
    return leq


def random_relation(nx, ny, rng, p=0.5):
    return Relation([f"x{a}" for a in range(nx)], [f"y{b}" for b in range(ny)], rng.random((nx, ny)) < p)


def lattice_corpus(max_size=8, seed=7):
    """Named lattices of at most ``max_size`` elements, fixed plus seeded random ones."""
    rng = np.random.default_rng(seed)
    out = [("chain1", chain(1)), ("chain2", chain(2)), ("chain3", chain(3)), ("chain5", chain(5)),
           ("bool0", powerset_lattice([])), ("bool1", powerset_lattice("a")),
           ("bool2", powerset_lattice("ab")), ("bool3", powerset_lattice("abc")),
           ("diamond", diamond()), ("M3", m3()), ("N5", n5()), ("five", five_element_lattice()),
           ("part3", partition_lattice(3)), ("2x3", product([chain(2), chain(3)]))]
    k = 0
    while k < 8:
        L = downset_lattice(random_poset(int(rng.integers(2, 5)), rng))
        if L.m <= max_size:
            out.append((f"downset{k}", L))
            k += 1
    k = 0
    while k < 8:
        L = concept_lattice(random_relation(3, 3, rng))
        if L.m <= max_size:
            out.append((f"concept{k}", L))
            k += 1
    return [(n, L) for n, L in out if L.m <= max_size]


CORPUS = lattice_corpus()


@pytest.fixture(params=CORPUS, ids=[n for n, _ in CORPUS])
def corpus_lattice(request):
    return request.param[1]


def random_join_map(K, L, rng, terms=3):
    """Pointwise join of maps ``x -> a if x is not below c else bot``; each is join-preserving."""
    img = np.full(K.m, L.bot, dtype=np.int64)
    for _ in range(terms):
        c = int(rng.integers(K.m))
        a = int(rng.integers(L.m))
        on = ~K.leq[:, c]
        img[on] = L.join[img[on], a]
    return MonotoneMap(K, L, img)


def random_connection(K, L, rng):
    return adjoint_of(random_join_map(K, L, rng, terms=int(rng.integers(0, 4))))


def random_graph(n, rng, p=0.5, connected=False):
    while True:
        edges = [(a, b) for a, b in itertools.combinations(range(n), 2) if rng.random() < p]
        g = Graph(n, edges)
        if not connected or is_connected(g):
            return g


def is_connected(g):
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in g.neighbors(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def random_sheaf(rng, n_max=4, lattices=None):
    """Sheaf with arbitrary small stalks and random Galois connections."""
    pool = lattices or [L for _, L in CORPUS if 2 <= L.m <= 5]
    n = int(rng.integers(1, n_max + 1))
    g = random_graph(n, rng)
    nodes = [pool[int(rng.integers(len(pool)))] for _ in range(n)]
    edges = [pool[int(rng.integers(len(pool)))] for _ in g.edges]
    restr = {(v, e): random_connection(nodes[v], edges[e], rng)
             for e, ab in enumerate(g.edges) for v in ab}
    return build(g, nodes, edges, restr)


def random_kripke_sheaf(rng, n_max=4, s_max=3, connected=False):
    n = int(rng.integers(1, n_max + 1))
    s = int(rng.integers(1, s_max + 1))
    model = random_model(n, s, rng, p_diag=float(rng.random()), p_off=float(rng.random()))
    return model, kripke_sheaf(model, random_graph(n, rng, connected=connected))


def identity_connection(L):
    return GaloisConnection.identity(L)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
