"""Hot loops over packed sheaves and order tables.

Each kernel has a numba version (``_nb_*``) and a numpy version (``_np_*``).
The public names point at the numba versions unless numba is missing or
``TARSKI_NO_NUMBA=1`` is set. Both versions are always importable so tests and
benchmarks can compare them.

Packed sheaf layout used below (all int32 unless noted):

* ``node_lat[i]``: stalk id of node ``i``; ``node_meet[k]`` its meet table,
  ``node_leq[k]`` (bool) its order, ``node_top[k]`` its top.
* ``nbr[i, d]``: d-th neighbour of ``i`` (``-1`` pads), ``nbr_edge`` the edge id,
  ``nbr_side`` the side (0 = smaller endpoint) of ``i`` on that edge.
* ``lower[e, s, x]``: restriction from endpoint ``s`` of edge ``e`` into the edge
  stalk; ``upper[e, s, y]`` the matching upper adjoint back to the node.
* ``ends[e]``: the two endpoints of edge ``e``.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# -- order tables -------------------------------------------------------------

def _np_lub_table(leq):
    """Least upper bounds for an order whose index order is a linear extension.

    Returns ``(table, bad)``; ``bad`` holds a failing pair or ``(-1, -1)``.
    """
    m = leq.shape[0]
    table = np.zeros((m, m), dtype=np.int64)
    for a in range(m):
        ub = leq[a][None, :] & leq            # ub[b, u]: u above a and b
        has = ub.any(axis=1)
        cand = ub.argmax(axis=1)
        ok = has & ~(ub & ~leq[cand]).any(axis=1)
        if not ok.all():
            b = int(np.argmin(ok))
            return table, np.array([a, b], dtype=np.int64)
        table[a] = cand
    return table, np.array([-1, -1], dtype=np.int64)


@njit(cache=True)
def _nb_lub_table(leq):
    m = leq.shape[0]
    table = np.zeros((m, m), dtype=np.int64)
    bad = np.full(2, -1, dtype=np.int64)
    for a in range(m):
        for b in range(a, m):
            c = -1
            for u in range(m):
                if leq[a, u] and leq[b, u]:
                    c = u
                    break
            if c < 0:
                bad[0] = a
                bad[1] = b
                return table, bad
            for u in range(c + 1, m):
                if leq[a, u] and leq[b, u] and not leq[c, u]:
                    bad[0] = a
                    bad[1] = b
                    return table, bad
            table[a, b] = c
            table[b, a] = c
    return table, bad


# -- mixed-radix enumeration --------------------------------------------------

def _np_decode(start, count, radices):
    n = radices.shape[0]
    idx = np.arange(start, start + count, dtype=np.int64)
    out = np.empty((count, n), dtype=np.int32)
    for k in range(n - 1, -1, -1):
        r = radices[k]
        out[:, k] = idx % r
        idx //= r
    return out


@njit(cache=True)
def _nb_decode(start, count, radices):
    n = radices.shape[0]
    out = np.empty((count, n), dtype=np.int32)
    for t in range(count):
        v = start + t
        for k in range(n - 1, -1, -1):
            r = radices[k]
            out[t, k] = v % r
            v //= r
    return out


# -- Laplacian-type operators ------------------------------------------------

def _np_laplacian(X, node_lat, node_meet, node_top, nbr, nbr_edge, nbr_side, lower, upper, active, use_self):
    B, n = X.shape
    out = np.broadcast_to(node_top[node_lat], (B, n)).astype(np.int32)
    for d in range(nbr.shape[1]):
        nodes = np.nonzero(nbr[:, d] >= 0)[0]
        if nodes.size == 0:
            break
        j = nbr[nodes, d]
        if not use_self:
            keep = active[j]
            nodes, j = nodes[keep], j[keep]
            if nodes.size == 0:
                continue
        e = nbr_edge[nodes, d]
        s = nbr_side[nodes, d]
        if use_self:
            y = lower[e, s, X[:, nodes]]
        else:
            y = lower[e, 1 - s, X[:, j]]
        v = upper[e, s, y]
        out[:, nodes] = node_meet[node_lat[nodes], out[:, nodes], v]
    return out


@njit(cache=True)
def _nb_laplacian(X, node_lat, node_meet, node_top, nbr, nbr_edge, nbr_side, lower, upper, active, use_self):
    B, n = X.shape
    out = np.empty((B, n), dtype=np.int32)
    D = nbr.shape[1]
    for b in range(B):
        for i in range(n):
            k = node_lat[i]
            acc = node_top[k]
            for d in range(D):
                j = nbr[i, d]
                if j < 0:
                    break
                e = nbr_edge[i, d]
                s = nbr_side[i, d]
                if use_self:
                    y = lower[e, s, X[b, i]]
                else:
                    if not active[j]:
                        continue
                    y = lower[e, 1 - s, X[b, j]]
                acc = node_meet[k, acc, upper[e, s, y]]
            out[b, i] = acc
    return out


def _np_meet_states(X, Y, node_lat, node_meet):
    return node_meet[node_lat[None, :], X, Y].astype(np.int32)


@njit(cache=True)
def _nb_meet_states(X, Y, node_lat, node_meet):
    B, n = X.shape
    out = np.empty((B, n), dtype=np.int32)
    for b in range(B):
        for i in range(n):
            out[b, i] = node_meet[node_lat[i], X[b, i], Y[b, i]]
    return out


def _np_leq_states(X, Y, node_lat, node_leq):
    return node_leq[node_lat[None, :], X, Y].all(axis=1)


@njit(cache=True)
def _nb_leq_states(X, Y, node_lat, node_leq):
    B, n = X.shape
    out = np.ones(B, dtype=np.bool_)
    for b in range(B):
        for i in range(n):
            if not node_leq[node_lat[i], X[b, i], Y[b, i]]:
                out[b] = False
                break
    return out


def _np_section_mask(X, ends, lower):
    ok = np.ones(X.shape[0], dtype=bool)
    for e in range(ends.shape[0]):
        a, b = ends[e]
        ok &= lower[e, 0, X[:, a]] == lower[e, 1, X[:, b]]
    return ok


@njit(cache=True)
def _nb_section_mask(X, ends, lower):
    B = X.shape[0]
    out = np.ones(B, dtype=np.bool_)
    for b in range(B):
        for e in range(ends.shape[0]):
            if lower[e, 0, X[b, ends[e, 0]]] != lower[e, 1, X[b, ends[e, 1]]]:
                out[b] = False
                break
    return out


def _np_energy(X, ends, lower, edge_lat, dist):
    total = np.zeros(X.shape[0], dtype=np.float64)
    for e in range(ends.shape[0]):
        a, b = ends[e]
        total += dist[edge_lat[e], lower[e, 0, X[:, a]], lower[e, 1, X[:, b]]]
    return total


@njit(cache=True)
def _nb_energy(X, ends, lower, edge_lat, dist):
    B = X.shape[0]
    out = np.zeros(B, dtype=np.float64)
    for b in range(B):
        acc = 0.0
        for e in range(ends.shape[0]):
            acc += dist[edge_lat[e], lower[e, 0, X[b, ends[e, 0]]], lower[e, 1, X[b, ends[e, 1]]]]
        out[b] = acc
    return out


if HAVE_NUMBA:
    lub_table = _nb_lub_table
    decode = _nb_decode
    laplacian = _nb_laplacian
    meet_states = _nb_meet_states
    leq_states = _nb_leq_states
    section_mask = _nb_section_mask
    energy = _nb_energy
else:
    lub_table = _np_lub_table
    decode = _np_decode
    laplacian = _np_laplacian
    meet_states = _np_meet_states
    leq_states = _np_leq_states
    section_mask = _np_section_mask
    energy = _np_energy

NUMPY = {
    "lub_table": _np_lub_table,
    "decode": _np_decode,
    "laplacian": _np_laplacian,
    "meet_states": _np_meet_states,
    "leq_states": _np_leq_states,
    "section_mask": _np_section_mask,
    "energy": _np_energy,
}
NUMBA = {
    "lub_table": _nb_lub_table,
    "decode": _nb_decode,
    "laplacian": _nb_laplacian,
    "meet_states": _nb_meet_states,
    "leq_states": _nb_leq_states,
    "section_mask": _nb_section_mask,
    "energy": _nb_energy,
}
