from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherec.poly import Polynomial, squared_norm


def x(i=0, e=1, c=1):
    return Polynomial.coord("X", i, e, c)


def test_zero_coefficients_dropped():
    p = x() - x()
    assert p.is_zero()
    assert p.terms == {}


def test_constant_and_coord():
    p = Polynomial.const(Fraction(2, 4))
    assert p.constant_value() == Fraction(1, 2)
    q = x(1, 2, Fraction(3))
    assert q.total_degree() == 2
    assert q.coords() == {("X", 1)}


def test_arithmetic():
    p = (x() + 1) * (x() - 1)
    assert p == x(0, 2) - 1
    assert (x() + 2) ** 2 == x(0, 2) + 4 * x() + 4


def test_evaluate_exact():
    p = x(0, 2) + Polynomial.coord("Y", 0)
    val = p.evaluate({("X", 0): Fraction(1, 2), ("Y", 0): Fraction(1, 4)})
    assert val == Fraction(1, 2)


def test_substitute_partial():
    p = x() * Polynomial.coord("Y", 0) + x()
    q = p.substitute({("X", 0): Fraction(2)})
    assert q == 2 * Polynomial.coord("Y", 0) + 2


def test_rename_merges():
    p = x() + Polynomial.coord("Y", 0)
    q = p.rename({"Y": "X"})
    assert q == 2 * x()


def test_split_by_degree():
    p = x(0, 2) + x() * Polynomial.coord("Y", 0) + Polynomial.coord("Y", 0, 2)
    buckets = p.split_by_degree_in({"X"})
    assert set(buckets) == {0, 1, 2}
    assert buckets[1] == x() * Polynomial.coord("Y", 0)


def test_squared_norm():
    n = squared_norm("X", 3)
    assert n.evaluate({("X", 0): 1, ("X", 1): 2, ("X", 2): 3}) == 14


@st.composite
def small_polys(draw):
    terms = {}
    for _ in range(draw(st.integers(0, 4))):
        key = []
        for i in range(draw(st.integers(0, 2))):
            key.append((("X", draw(st.integers(0, 2))), draw(st.integers(1, 3))))
        coeff = Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 4)))
        if coeff:
            canon = {}
            for c, e in key:
                canon[c] = canon.get(c, 0) + e
            terms[tuple(sorted(canon.items()))] = coeff
    return Polynomial(terms)


@given(small_polys(), small_polys(), small_polys())
@settings(max_examples=40, deadline=None)
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        Polynomial.from_monomials([(Fraction(1), [(("X", 0), -1)])])
