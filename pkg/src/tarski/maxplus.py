"""Max-plus matrices over the extended reals.

Values are floats with ``-inf``/``inf``. In ``A (+) x`` (a max of sums) a
``-inf`` term absorbs, so ``-inf + inf = -inf``; in the dual ``A^T (-) y``
(a min of differences) the mixed sum is ``+inf``. Each choice is the identity
of the surrounding aggregation, which makes the pair an exact adjunction.
"""

import math

import numpy as np

from .errors import ShapeMismatch

NEG_INF = -math.inf
POS_INF = math.inf
ATOL = 1e-9


def ext_eq(a, b, atol=ATOL):
    """Equality on extended reals: infinities exactly, finite values within ``atol``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    inf = np.isinf(a) | np.isinf(b)
    with np.errstate(invalid="ignore"):
        diff = np.abs(np.where(inf, 0.0, a - b))
    return np.where(inf, a == b, diff <= atol)


def ext_le(a, b, atol=ATOL):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a <= b) | ext_eq(a, b, atol)


def parse_ext(v):
    if isinstance(v, str):
        s = v.strip().lower()
        if s in {"-inf", "-infinity"}:
            return NEG_INF
        if s in {"inf", "+inf", "infinity"}:
            return POS_INF
        return float(s)
    return float(v)


def format_ext(v):
    if v == NEG_INF:
        return "-inf"
    if v == POS_INF:
        return "inf"
    return float(v)


class MaxPlusMatrix:
    def __init__(self, entries):
        a = np.array([[parse_ext(v) for v in row] for row in entries], dtype=float) \
            if not isinstance(entries, np.ndarray) else entries.astype(float)
        if a.ndim != 2:
            raise ShapeMismatch("max-plus matrix must be two-dimensional")
        self.entries = a

    @property
    def shape(self):
        return self.entries.shape

    @classmethod
    def identity(cls, n):
        a = np.full((n, n), NEG_INF)
        np.fill_diagonal(a, 0.0)
        return cls(a)

    def to_json(self):
        return [[format_ext(v) for v in row] for row in self.entries]

    @classmethod
    def from_json(cls, rows):
        return cls([[parse_ext(v) for v in row] for row in rows])


def _sum_absorbing(a, b, absorb):
    with np.errstate(invalid="ignore"):
        s = a + b
    return np.where(np.isnan(s), absorb, s)


def maxplus_apply(A, x):
    """``(A (+) x)_i = max_j a_ij + x_j``."""
    a = A.entries if isinstance(A, MaxPlusMatrix) else np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    if a.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"matrix {a.shape} cannot act on a vector of length {x.shape[0]}")
    if a.shape[1] == 0:
        return np.full(a.shape[0], NEG_INF)
    return _sum_absorbing(a, x[None, :], NEG_INF).max(axis=1)


def maxplus_dual_apply(A, y):
    """``(A^dagger (-) y)_j = min_i (-a_ij + y_i)``, the upper adjoint of ``maxplus_apply``."""
    a = A.entries if isinstance(A, MaxPlusMatrix) else np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"matrix {a.shape} cannot co-act on a vector of length {y.shape[0]}")
    if a.shape[0] == 0:
        return np.full(a.shape[1], POS_INF)
    return _sum_absorbing(-a, y[:, None], POS_INF).min(axis=0)


def alternating_method(A, B, x0, y0, max_steps=10_000):
    """Iterate ``(x, y) <- L(x, y) meet (x, y)`` for the two-node max-plus sheaf.

    ``L(x, y) = (A^dagger (-) (B (+) y), B^dagger (-) (A (+) x))``. Returns
    ``(x, y, steps, synchronized)``; ``synchronized`` means ``A (+) x == B (+) y``.
    """
    x = np.asarray(x0, dtype=float)
    y = np.asarray(y0, dtype=float)
    steps = 0
    for steps in range(1, max_steps + 1):
        nx = np.minimum(x, maxplus_dual_apply(A, maxplus_apply(B, y)))
        ny = np.minimum(y, maxplus_dual_apply(B, maxplus_apply(A, x)))
        if ext_eq(nx, x).all() and ext_eq(ny, y).all():
            break
        x, y = nx, ny
    synced = bool(ext_eq(maxplus_apply(A, x), maxplus_apply(B, y)).all())
    return x, y, steps, synced
