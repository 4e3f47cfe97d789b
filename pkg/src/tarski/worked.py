"""Small fixed instances used by the demo command and the tests.

``GALOIS_REFERENCE`` and ``LAPLACIAN_REFERENCE`` are values as printed in the
source material for the three-agent example; several rows disagree with the
relations and are reported by ``kripke-demo`` rather than trusted.
"""

import numpy as np

from .lattice import from_leq
from .semantics import KripkeModel
from .sheaf import Graph

STATES = ("r", "s", "t")
AGENTS = ("i", "j", "k")


def three_agent_model():
    """Agents i, j, k on a path i - j - k with states r, s, t."""
    loops = [(x, x) for x in STATES]
    return KripkeModel.from_pairs(STATES, [
        loops + [("r", "s"), ("s", "r"), ("s", "t"), ("t", "s")],
        loops + [("r", "t"), ("t", "r")],
        loops + [("r", "t"), ("t", "s"), ("s", "r")],
    ])


def three_agent_graph():
    return Graph.path(3)


EVENTS = ("", "r", "s", "t", "rs", "rt", "st", "rst")

# event -> {agent: (exists, forall)}
GALOIS_REFERENCE = {
    "":    {"i": ("", ""),       "j": ("", ""),       "k": ("", "")},
    "r":   {"i": ("rs", ""),     "j": ("rt", ""),     "k": ("rt", "")},
    "s":   {"i": ("rst", ""),    "j": ("s", "s"),     "k": ("rs", "")},
    "t":   {"i": ("st", ""),     "j": ("rt", ""),     "k": ("st", "")},
    "rs":  {"i": ("rst", "r"),   "j": ("rst", "s"),   "k": ("rst", "s")},
    "rt":  {"i": ("rst", "rst"), "j": ("rt", "rt"),   "k": ("rst", "r")},
    "st":  {"i": ("rst", "rst"), "j": ("rst", "rst"), "k": ("rst", "t")},
    "rst": {"i": ("rst", "rst"), "j": ("rst", "rst"), "k": ("rst", "rst")},
}

# (e_i, e_j, e_k) -> (Le)_i, (Le)_j, (Le)_k
LAPLACIAN_REFERENCE = [
    (("", "", ""), ("", "", "")),
    (("r", "s", "t"), ("", "s", "")),
    (("s", "r", "t"), ("rst", "rst", "r")),
    (("t", "t", "t"), ("rst", "rst", "r")),
    (("s", "s", "s"), ("", "s", "")),
    (("rst", "rst", "rst"), ("rst", "rst", "rst")),
]
TRUSTED_LAPLACIAN_ROWS = (0, 1, 4, 5)


def five_element_lattice():
    """``0 < z < x, y < 1`` with x and y incomparable, listed in that order."""
    leq = np.array([
        [1, 1, 1, 1, 1],
        [0, 1, 1, 1, 1],
        [0, 0, 1, 0, 1],
        [0, 0, 0, 1, 1],
        [0, 0, 0, 0, 1],
    ], dtype=bool)
    return from_leq(leq, labels=["0", "z", "x", "y", "1"])


FIVE_ELEMENT_B_MEET = np.array([
    [1, 1, 1, 1, 1],
    [0, 1, 1, 1, 1],
    [0, 0, 1, 0, 1],
    [0, 0, 0, 1, 1],
    [0, 0, 0, 0, 1],
])


def hypergraph_incidence():
    """Six vertices, three hyperedges meeting pairwise in single vertices."""
    from .galois import Relation

    V = [f"v{k}" for k in range(6)]
    members = {"e0": ["v0", "v1", "v5"], "e1": ["v3", "v4", "v5"], "e2": ["v0", "v2", "v4"]}
    return Relation.from_pairs(V, list(members), [(v, e) for e, vs in members.items() for v in vs])
