"""Time the numba kernels against their numpy counterparts.

Run with ``python benchmarks/bench_kernels.py``. Requires numba; both paths
are called directly so the ``TARSKI_NO_NUMBA`` flag does not matter here.
"""

import argparse
import time

import numpy as np

from tarski import kernels
from tarski.cli import geometric_graph
from tarski.dynamics import EdgeMetric, _dist_stack
from tarski.lattice import partition_lattice
from tarski.semantics import kripke_sheaf, random_model


def best_of(fn, repeat):
    fn()  # warm-up / JIT compile
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba unavailable: nothing to compare")

    rng = np.random.default_rng(0)
    graph = geometric_graph(40, 0.25, rng)
    sheaf = kripke_sheaf(random_model(40, 10, rng), graph)
    p = sheaf.packed
    X = rng.integers(0, 1 << 10, size=(args.batch, 40)).astype(np.int32)
    active = np.ones(40, dtype=bool)
    dist = _dist_stack(sheaf, EdgeMetric())
    leq = partition_lattice(5).leq
    order = np.lexsort((np.arange(leq.shape[0]), leq.sum(axis=0)))
    ordered = np.ascontiguousarray(leq[np.ix_(order, order)])

    cases = {
        "laplacian": lambda k: k["laplacian"](X, p.node_lat, p.node_meet, p.node_top, p.nbr, p.nbr_edge,
                                             p.nbr_side, p.lower, p.upper, active, False),
        "section_mask": lambda k: k["section_mask"](X, p.ends, p.lower),
        "energy": lambda k: k["energy"](X, p.ends, p.lower, p.edge_lat, dist),
        "decode": lambda k: k["decode"](0, args.batch * 16, np.full(6, 8, dtype=np.int64)),
        "lub_table(partitions of 5)": lambda k: k["lub_table"](ordered),
    }
    print(f"graph: 40 nodes, {len(graph.edges)} edges, batch {args.batch}")
    print(f"{'kernel':28} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, call in cases.items():
        a = call(kernels.NUMPY)
        b = call(kernels.NUMBA)
        for u, v in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.array_equal(u, v), name
        t_np = best_of(lambda: call(kernels.NUMPY), args.repeat)
        t_nb = best_of(lambda: call(kernels.NUMBA), args.repeat)
        print(f"{name:28} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
