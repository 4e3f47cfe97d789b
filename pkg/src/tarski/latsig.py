"""Signals on finite lattices: shifts, convolution, eigenbases and residuated convolution."""

from __future__ import annotations

import csv
from collections import namedtuple
from fractions import Fraction

import numpy as np

from .errors import ShapeMismatch, TooLarge
from .galois import adjoint_transform, integral_transform

MAX_BASIS = 512

BasisPair = namedtuple("BasisPair", "order B_meet B_join theta")


def _signal(lat, f):
    f = np.asarray(f)
    if f.shape != (lat.m,):
        raise ShapeMismatch(f"signal of shape {f.shape} on a lattice with {lat.m} elements")
    return f


def _table(lat, flavor):
    if flavor == "meet":
        return lat.meet
    if flavor == "join":
        return lat.join
    raise ValueError(f"flavor must be 'meet' or 'join', not {flavor!r}")


def shift(lat, x, f, flavor="meet"):
    """``(T_x f)_y = f[x meet y]`` (or ``f[x join y]``)."""
    f = _signal(lat, f)
    return f[_table(lat, flavor)[x]]


def shift_matrix(lat, x, flavor="meet"):
    """0/1 matrix of ``T_x`` in element index order."""
    T = np.zeros((lat.m, lat.m), dtype=np.int64)
    T[np.arange(lat.m), _table(lat, flavor)[x]] = 1
    return T


def convolve(lat, h, f, flavor="meet"):
    """``(h * f)_y = sum_x h_x f[x meet y]``."""
    h = _signal(lat, h)
    f = _signal(lat, f)
    return (h[:, None] * f[_table(lat, flavor)]).sum(axis=0)


def one_hot(lat, x):
    v = np.zeros(lat.m, dtype=np.int64)
    v[x] = 1
    return v


def _unitriangular_inverse(U):
    """Exact inverse of an upper unitriangular matrix of Fractions."""
    m = U.shape[0]
    inv = np.array([[Fraction(int(i == j)) for j in range(m)] for i in range(m)], dtype=object)
    for i in range(m - 1, -1, -1):
        for j in range(i + 1, m):
            if U[i, j]:
                inv[i] -= U[i, j] * inv[j]
    return inv


def eigenbasis(lat):
    """Indicator bases and the change of basis between them, in a linear-extension order.

    ``B_meet[i, j] = 1`` iff ``order[i] <= order[j]`` and ``B_join`` is its
    transpose; ``theta`` solves ``theta . B_meet = B_join`` exactly over the
    rationals. Matrices are indexed by position in ``order``.
    """
    if lat.m > MAX_BASIS:
        raise TooLarge(f"eigenbasis limited to {MAX_BASIS} elements")
    order = np.asarray(lat.linear_extension)
    leq = lat.leq[np.ix_(order, order)]
    B_meet = leq.astype(np.int64)
    B_join = B_meet.T.copy()
    inv = _unitriangular_inverse(np.vectorize(Fraction, otypes=[object])(B_meet))
    theta = B_join.astype(object).dot(inv)
    theta = np.vectorize(Fraction, otypes=[object])(theta)
    return BasisPair(order, B_meet, B_join, theta)


def theta_apply(basis, f):
    """``theta . f`` for a signal listed in the basis order (exact when ``f`` holds Fractions or ints)."""
    return basis.theta.dot(np.asarray(f, dtype=object))


def theta_intertwines(lat):
    """Whether ``theta T_x^meet == T_x^join theta`` for every element ``x``."""
    basis = eigenbasis(lat)
    order = basis.order
    for x in range(lat.m):
        Tm = shift_matrix(lat, x, "meet")[np.ix_(order, order)].astype(object)
        Tj = shift_matrix(lat, x, "join")[np.ix_(order, order)].astype(object)
        if not np.array_equal(basis.theta.dot(Tm), Tj.dot(basis.theta)):
            return False
    return True


def residuated_convolve(lat, R, h, f):
    """``(h * f)(x) = join_y h(y) star f(x meet y)`` with values in a residuated lattice."""
    if len(h) != lat.m or len(f) != lat.m:
        raise ShapeMismatch("filter and signal must live on the lattice")
    H = [[f[int(lat.meet[x, y])] for y in range(lat.m)] for x in range(lat.m)]
    return integral_transform(R, H, h)


def residuated_convolve_adjoint(lat, R, g, f):
    """Right adjoint of ``h -> h * f``: ``y -> meet_x [f(x meet y), g(x)]``."""
    if len(g) != lat.m or len(f) != lat.m:
        raise ShapeMismatch("signals must live on the lattice")
    H = [[f[int(lat.meet[x, y])] for y in range(lat.m)] for x in range(lat.m)]
    return adjoint_transform(R, H, g)


def write_signal_csv(path, lat, values):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element_label", "value"])
        for lab, v in zip(lat.labels, values):
            w.writerow([lab, v])


def read_signal_csv(path, lat, parse=Fraction):
    values = [None] * lat.m
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != ["element_label", "value"]:
            raise ShapeMismatch(f"unexpected signal header {header}")
        for row in rows:
            values[lat.index(row[0])] = parse(row[1])
    if any(v is None for v in values):
        raise ShapeMismatch("signal file does not cover every element")
    return values
