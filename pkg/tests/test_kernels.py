import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import CORPUS, random_kripke_sheaf, random_sheaf

from tarski import kernels
from tarski.dynamics import EdgeMetric, _dist_stack

NP, NB = kernels.NUMPY, kernels.NUMBA


def _sheaves():
    rng = np.random.default_rng(80)
    out = [random_sheaf(rng) for _ in range(15)]
    out += [random_kripke_sheaf(rng)[1] for _ in range(15)]
    return out


@pytest.mark.parametrize("sh", _sheaves())
def test_sheaf_kernels_agree(sh):
    rng = np.random.default_rng(sh.n)
    p = sh.packed
    X = np.stack([rng.integers(0, p.node_size) for _ in range(64)]).astype(np.int32)
    Y = np.stack([rng.integers(0, p.node_size) for _ in range(64)]).astype(np.int32)
    for use_self in (False, True):
        active = rng.random(sh.n) < 0.6
        a = NP["laplacian"](X, p.node_lat, p.node_meet, p.node_top, p.nbr, p.nbr_edge, p.nbr_side,
                            p.lower, p.upper, active, use_self)
        b = NB["laplacian"](X, p.node_lat, p.node_meet, p.node_top, p.nbr, p.nbr_edge, p.nbr_side,
                            p.lower, p.upper, active, use_self)
        assert np.array_equal(a, b)
    assert np.array_equal(NP["meet_states"](X, Y, p.node_lat, p.node_meet),
                          NB["meet_states"](X, Y, p.node_lat, p.node_meet))
    assert np.array_equal(NP["leq_states"](X, Y, p.node_lat, p.node_leq),
                          NB["leq_states"](X, Y, p.node_lat, p.node_leq))
    assert np.array_equal(NP["section_mask"](X, p.ends, p.lower), NB["section_mask"](X, p.ends, p.lower))
    if len(p.ends):
        dist = _dist_stack(sh, EdgeMetric("hasse"))
        assert np.allclose(NP["energy"](X, p.ends, p.lower, p.edge_lat, dist),
                           NB["energy"](X, p.ends, p.lower, p.edge_lat, dist))


@pytest.mark.parametrize("radices", [[1], [2, 3], [4, 1, 5], [3, 3, 3, 3]])
def test_decode_agrees(radices):
    r = np.array(radices, dtype=np.int64)
    total = int(np.prod(r))
    a = NP["decode"](0, total, r)
    b = NB["decode"](0, total, r)
    assert np.array_equal(a, b)
    assert np.array_equal(NP["decode"](1, total - 1, r), a[1:])


@pytest.mark.parametrize("name,L", CORPUS, ids=[n for n, _ in CORPUS])
def test_lub_table_agrees(name, L):
    order = np.asarray(L.linear_extension)
    leq = np.ascontiguousarray(L.leq[np.ix_(order, order)])
    ta, ba = NP["lub_table"](leq)
    tb, bb = NB["lub_table"](leq)
    assert np.array_equal(ta, tb)
    assert tuple(np.atleast_1d(ba)) == tuple(np.atleast_1d(bb))


def test_env_flag_selects_numpy():
    code = "from tarski import kernels; print(kernels.BACKEND, kernels.laplacian is kernels._np_laplacian)"
    env = dict(os.environ, TARSKI_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "True"]
