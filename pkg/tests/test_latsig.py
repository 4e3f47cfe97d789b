import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from conftest import CORPUS

from tarski.errors import ShapeMismatch, TooLarge
from tarski.galois import (
    boolean_algebra,
    godel_tnorm,
    lukasiewicz_tnorm,
    maxplus_semiring,
    product_tnorm,
)
from tarski.latsig import (
    convolve,
    eigenbasis,
    one_hot,
    read_signal_csv,
    residuated_convolve,
    residuated_convolve_adjoint,
    shift,
    shift_matrix,
    theta_apply,
    theta_intertwines,
    write_signal_csv,
)
from tarski.lattice import chain, powerset_lattice
from tarski.worked import FIVE_ELEMENT_B_MEET, five_element_lattice

IDS = [n for n, _ in CORPUS]


def test_five_element_basis_matrix():
    b = eigenbasis(five_element_lattice())
    assert b.order.tolist() == [0, 1, 2, 3, 4]
    assert np.array_equal(b.B_meet, FIVE_ELEMENT_B_MEET)
    assert np.array_equal(b.B_join, FIVE_ELEMENT_B_MEET.T)


def test_five_element_theta_symbolic():
    f0, fz, fx, fy, f1 = sp.symbols("f0 fz fx fy f1")
    b = eigenbasis(five_element_lattice())
    out = [sp.expand(v) for v in theta_apply(b, [f0, fz, fx, fy, f1])]
    assert out == [f0 - fz, f0 - fx - fy + f1, f0 - fy, f0 - fx, f0]
    # theta is exact over the rationals
    assert all(isinstance(v, Fraction) for v in b.theta.ravel())


def test_chain_basis_is_upper_triangular():
    b = eigenbasis(chain(4))
    assert np.array_equal(b.B_meet, np.triu(np.ones((4, 4), dtype=np.int64)))


@pytest.mark.parametrize("name,L", CORPUS, ids=IDS)
def test_basis_relations(name, L):
    b = eigenbasis(L)
    assert np.array_equal(b.theta.dot(b.B_meet.astype(object)), b.B_join.astype(object))
    order = b.order
    for x in range(L.m):
        Tm = shift_matrix(L, x, "meet")[np.ix_(order, order)]
        Tj = shift_matrix(L, x, "join")[np.ix_(order, order)]
        for k, y in enumerate(order):
            # upset indicators diagonalize the meet shifts, downset indicators the join shifts
            up, down = b.B_join[:, k], b.B_meet[:, k]
            assert np.array_equal(Tm @ up, int(L.leq[y, x]) * up)
            assert np.array_equal(Tj @ down, int(L.leq[x, y]) * down)


@pytest.mark.parametrize("name,L", CORPUS, ids=IDS)
def test_shift_algebra(name, L):
    rng = np.random.default_rng(L.m)
    f = rng.integers(-5, 6, size=L.m)
    assert np.array_equal(shift(L, L.top, f), f)
    assert np.array_equal(shift(L, L.bot, f, "join"), f)
    for x, y in itertools.product(range(L.m), repeat=2):
        Tx, Ty = shift_matrix(L, x), shift_matrix(L, y)
        assert np.array_equal(shift_matrix(L, int(L.meet[x, y])), Tx @ Ty)
        Jx, Jy = shift_matrix(L, x, "join"), shift_matrix(L, y, "join")
        assert np.array_equal(shift_matrix(L, int(L.join[x, y]), "join"), Jx @ Jy)
    for x in range(L.m):
        Tx = shift_matrix(L, x)
        assert np.array_equal(Tx @ Tx, Tx)
        assert np.array_equal(shift(L, x, shift(L, x, f), "join"), np.full(L.m, f[x]))


@pytest.mark.parametrize("name,L", CORPUS, ids=IDS)
def test_convolution(name, L):
    rng = np.random.default_rng(100 + L.m)
    h, h2, f = (rng.integers(-4, 5, size=L.m) for _ in range(3))
    assert np.array_equal(convolve(L, one_hot(L, L.top), f), f)
    for x in range(L.m):
        assert np.array_equal(convolve(L, one_hot(L, x), f), shift(L, x, f))
    total = sum(h[x] * shift(L, x, f) for x in range(L.m))
    assert np.array_equal(convolve(L, h, f), total)
    assert np.array_equal(convolve(L, h, convolve(L, h2, f)), convolve(L, h2, convolve(L, h, f)))
    assert np.array_equal(convolve(L, h, convolve(L, h2, f, "join"), "join"),
                          convolve(L, h2, convolve(L, h, f, "join"), "join"))


def test_convolution_with_floats_is_close():
    L = powerset_lattice("abc")
    rng = np.random.default_rng(5)
    h, h2, f = rng.normal(size=(3, L.m))
    a = convolve(L, h, convolve(L, h2, f))
    b = convolve(L, h2, convolve(L, h, f))
    assert np.allclose(a, b, atol=1e-9)


def test_shape_errors():
    L = chain(3)
    with pytest.raises(ShapeMismatch):
        shift(L, 0, [1, 2])
    with pytest.raises(ShapeMismatch):
        convolve(L, [1, 2, 3], [1])
    with pytest.raises(ValueError):
        shift(L, 0, [1, 2, 3], "sideways")
    with pytest.raises(ShapeMismatch):
        residuated_convolve(L, boolean_algebra(), [True], [True] * 3)


def test_theta_intertwines_only_for_trivial_lattice():
    assert theta_intertwines(chain(1))
    assert not theta_intertwines(chain(2))
    for _, L in CORPUS:
        assert theta_intertwines(L) == (L.m == 1)


def test_eigenbasis_guard():
    with pytest.raises(TooLarge):
        eigenbasis(powerset_lattice(range(10)))


RESIDUATED = [boolean_algebra(), product_tnorm(4), lukasiewicz_tnorm(4), godel_tnorm(4), maxplus_semiring()]


@pytest.mark.parametrize("R", RESIDUATED, ids=lambda R: R.name)
def test_residuated_convolution_adjunction(R):
    rng = np.random.default_rng(60)
    S = R.samples
    lats = [L for _, L in CORPUS if L.m <= 5]
    for _ in range(60):
        L = lats[int(rng.integers(len(lats)))]
        h, f, g = ([S[int(rng.integers(len(S)))] for _ in range(L.m)] for _ in range(3))
        left = all(R.leq(a, b) for a, b in zip(residuated_convolve(L, R, h, f), g))
        right = all(R.leq(a, b) for a, b in zip(h, residuated_convolve_adjoint(L, R, g, f)))
        assert left == right


def test_boolean_convolution_is_set_valued():
    L = powerset_lattice("ab")
    B = boolean_algebra()
    f = [False, True, False, True]          # true on sets containing a
    assert residuated_convolve(L, B, [b == L.top for b in range(L.m)], f) == f
    h = [False, False, True, False]         # only {b}
    # x meet {b} never contains a
    assert residuated_convolve(L, B, h, f) == [False] * 4


def test_signal_csv_round_trip(tmp_path):
    L = five_element_lattice()
    vals = [Fraction(k, 3) for k in range(L.m)]
    p = tmp_path / "sig.csv"
    write_signal_csv(p, L, vals)
    assert p.read_text().splitlines()[0] == "element_label,value"
    assert read_signal_csv(p, L) == vals
    p.write_text("label,value\n")
    with pytest.raises(ShapeMismatch):
        read_signal_csv(p, L)
