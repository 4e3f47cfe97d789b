import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tarski.errors import ShapeMismatch
from tarski.maxplus import (
    NEG_INF,
    POS_INF,
    MaxPlusMatrix,
    alternating_method,
    ext_eq,
    ext_le,
    format_ext,
    maxplus_apply,
    maxplus_dual_apply,
    parse_ext,
)


def apply_oracle(A, x):
    out = []
    for row in A:
        best = NEG_INF
        for a, v in zip(row, x):
            if a != NEG_INF and v != NEG_INF:
                best = max(best, a + v)
        out.append(best)
    return out


def dual_oracle(A, y):
    out = []
    for j in range(len(A[0])):
        best = POS_INF
        for i in range(len(A)):
            a, v = A[i][j], y[i]
            if a == NEG_INF or v == POS_INF:
                continue
            best = min(best, v - a)
        out.append(best)
    return out


def sample_ext(rng, shape, p_inf=0.15):
    v = rng.normal(scale=3.0, size=shape).round(2)
    u = rng.random(shape)
    v[u < p_inf] = NEG_INF
    v[(u >= p_inf) & (u < 1.5 * p_inf)] = POS_INF
    return v


def test_apply_against_loops():
    rng = np.random.default_rng(70)
    for _ in range(300):
        m, n = rng.integers(1, 5, size=2)
        A = sample_ext(rng, (m, n))
        A[A == POS_INF] = 0.0
        x = sample_ext(rng, n)
        y = sample_ext(rng, m)
        assert ext_eq(maxplus_apply(A, x), apply_oracle(A.tolist(), x.tolist())).all()
        assert ext_eq(maxplus_dual_apply(A, y), dual_oracle(A.tolist(), y.tolist())).all()


def test_adjunction_sampled():
    rng = np.random.default_rng(71)
    for _ in range(1000):
        m, n = rng.integers(1, 5, size=2)
        A = sample_ext(rng, (m, n))
        A[A == POS_INF] = 1.0
        x, y = sample_ext(rng, n), sample_ext(rng, m)
        left = ext_le(maxplus_apply(A, x), y).all()
        right = ext_le(x, maxplus_dual_apply(A, y)).all()
        assert left == right


def test_identity_and_empty():
    I = MaxPlusMatrix.identity(3)
    x = np.array([1.0, NEG_INF, 2.5])
    assert ext_eq(maxplus_apply(I, x), x).all()
    assert ext_eq(maxplus_dual_apply(I, x), x).all()
    assert maxplus_apply(np.zeros((2, 0)), np.zeros(0)).tolist() == [NEG_INF, NEG_INF]
    assert maxplus_dual_apply(np.zeros((0, 2)), np.zeros(0)).tolist() == [POS_INF, POS_INF]
    with pytest.raises(ShapeMismatch):
        maxplus_apply(I, [1.0])
    with pytest.raises(ShapeMismatch):
        maxplus_dual_apply(I, [1.0])


def test_absorption_conventions():
    A = [[NEG_INF]]
    assert maxplus_apply(A, [POS_INF])[0] == NEG_INF
    assert maxplus_dual_apply(A, [NEG_INF])[0] == POS_INF
    assert maxplus_dual_apply([[0.0]], [NEG_INF])[0] == NEG_INF


def test_json_round_trip():
    M = MaxPlusMatrix([[0, "-inf"], ["inf", 2.5]])
    assert M.to_json() == [[0.0, "-inf"], ["inf", 2.5]]
    assert np.array_equal(MaxPlusMatrix.from_json(M.to_json()).entries, M.entries)
    assert parse_ext(" -Infinity ") == NEG_INF and format_ext(3) == 3.0
    with pytest.raises(ShapeMismatch):
        MaxPlusMatrix(np.zeros(3))


def test_ext_eq_tolerance():
    assert ext_eq(1.0, 1.0 + 5e-10) and not ext_eq(1.0, 1.0 + 1e-6)
    assert ext_eq(NEG_INF, NEG_INF) and not ext_eq(NEG_INF, POS_INF)


def _synced_instances():
    A = np.array([[0.0, 3.0], [2.0, 1.0]])
    yield A, A + 1.0                      # y = x + 1 synchronizes
    yield A, A[:, ::-1].copy()            # swapped columns: y = reversed x
    B = np.array([[1.0, NEG_INF], [NEG_INF, 4.0]])
    yield B, B.copy()
    C = np.array([[0.0, 1.0, 2.0], [5.0, NEG_INF, 0.0]])
    yield C, C - 2.5


@pytest.mark.parametrize("k", range(4))
def test_alternating_method_synchronizes(k):
    A, B = list(_synced_instances())[k]
    x0 = np.full(A.shape[1], 50.0)
    y0 = np.array([20.0 + 3 * j for j in range(B.shape[1])])
    x, y, _, synced = alternating_method(A, B, x0, y0)
    assert synced
    assert ext_eq(maxplus_apply(A, x), maxplus_apply(B, y)).all()
    assert (x <= x0 + 1e-9).all() and (y <= y0 + 1e-9).all()
    # the result is a fixed point of the iteration
    x2 = np.minimum(x, maxplus_dual_apply(A, maxplus_apply(B, y)))
    assert ext_eq(x2, x).all()


EXT = st.one_of(st.just(NEG_INF), st.just(POS_INF),
                st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 4).flatmap(lambda m: st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.lists(EXT.filter(lambda v: v != POS_INF), min_size=n, max_size=n), min_size=m, max_size=m),
    st.lists(EXT, min_size=n, max_size=n),
    st.lists(EXT, min_size=m, max_size=m)))))
def test_adjunction_property(case):
    A, x, y = case
    A = np.array(A, dtype=float)
    left = ext_le(maxplus_apply(A, x), y).all()
    right = ext_le(x, maxplus_dual_apply(A, y)).all()
    assert left == right
