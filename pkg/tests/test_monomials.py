import itertools

import pytest
from hypothesis import given, strategies as st

from hamcoh.monomials import (
    AlgebraElement,
    Monomial,
    derivative,
    exponent_bits,
    format_monomial,
    multiply,
    pack,
    parse_monomial,
    standard_grade,
    symmetric_grade,
    unpack,
)

from oracles import divided_product


def M(*e):
    return Monomial(tuple(e))


def all_monomials(n, p):
    return [Monomial(e) for e in itertools.product(range(p), repeat=n)]


def test_multiply_examples():
    assert multiply(M(1, 0), M(1, 0), 3) == (2, M(2, 0))
    assert multiply(M(2, 0), M(1, 0), 3) is None
    assert multiply(M(1, 1), M(1, 2), 5) == (1, M(2, 3))


def test_multiply_rejects_exponent_p():
    with pytest.raises(ValueError):
        multiply(M(3, 0), M(0, 1), 3)


@pytest.mark.parametrize("p", [3, 5])
def test_multiply_matches_factorial_oracle(p):
    for a, b in itertools.product(all_monomials(2, p), repeat=2):
        got = multiply(a, b, p)
        want = divided_product(a.exponents, b.exponents, p)
        assert (got is None) == (want is None)
        if got:
            assert got == (want[0], Monomial(want[1]))
            assert all(r < p for r in got[1].exponents)


def test_commutative_and_associative_exhaustive():
    p = 3
    mons = all_monomials(2, p)
    for a, b in itertools.product(mons, repeat=2):
        assert multiply(a, b, p) == multiply(b, a, p)
    for a, b, c in itertools.product(mons, repeat=3):
        ea, eb, ec = (AlgebraElement.monomial(x, p) for x in (a, b, c))
        assert (ea * eb) * ec == ea * (eb * ec)


def test_leibniz_exhaustive():
    p = 3
    for a, b in itertools.product(all_monomials(2, p), repeat=2):
        ea, eb = AlgebraElement.monomial(a, p), AlgebraElement.monomial(b, p)
        for i in range(2):
            assert (ea * eb).derivative(i) == ea.derivative(i) * eb + ea * eb.derivative(i)


def test_derivative_examples():
    assert derivative(M(3, 0), 0) == M(2, 0)
    assert derivative(M(2, 0), 1) is None
    assert derivative(M(1, 4), 0) == M(0, 4)
    with pytest.raises(IndexError):
        derivative(M(1, 0), 2)


def test_grade_examples():
    assert standard_grade(M(1, 0)) == -1
    assert standard_grade(M(0, 0)) == -2
    assert standard_grade(M(2, 2)) == 2
    assert symmetric_grade(M(3, 0)) == -3
    assert symmetric_grade(M(2, 2)) == 0
    assert symmetric_grade(M(0, 4)) == 4
    assert symmetric_grade(M(1, 0, 0, 2)) == 1


@pytest.mark.parametrize("n,p", [(2, 3), (2, 5), (4, 3)])
def test_grade_additivity(n, p):
    for a, b in itertools.product(all_monomials(n, p), repeat=2):
        prod = multiply(a, b, p)
        if prod is None:
            continue
        c = prod[1]
        assert standard_grade(c) == standard_grade(a) + standard_grade(b) + 2
        assert symmetric_grade(c) == symmetric_grade(a) + symmetric_grade(b)


@given(st.sampled_from([3, 5, 7, 11, 13]), st.data())
def test_pack_roundtrip_and_order(p, data):
    n = data.draw(st.sampled_from([2, 4]))
    vec = st.lists(st.integers(0, p), min_size=n, max_size=n).map(tuple)
    a, b = data.draw(vec), data.draw(vec)
    assert unpack(pack(a, p), n, p) == a
    assert (pack(a, p) < pack(b, p)) == (a < b)
    assert exponent_bits(p) >= p.bit_length()


@given(st.lists(st.integers(0, 7), min_size=2, max_size=4).filter(lambda v: len(v) % 2 == 0))
def test_format_parse_roundtrip(exps):
    m = Monomial(tuple(exps))
    assert parse_monomial(format_monomial(m), len(exps)) == m


def test_text_syntax():
    assert format_monomial(M(2, 1)) == "x1^(2)*x2^(1)"
    assert format_monomial(M(0, 0)) == "1"
    assert parse_monomial("x2", 2) == M(0, 1)
    assert parse_monomial("x1^(2)*x2", 2) == M(2, 1)
    assert parse_monomial("x1^3", 2) == M(3, 0)
    with pytest.raises(ValueError):
        parse_monomial("y1", 2)
    with pytest.raises(ValueError):
        parse_monomial("x3", 2)


def test_element_canonical():
    p = 5
    f = AlgebraElement({M(0, 1): 3, M(1, 0): 2, M(2, 0): 5}, p=p, n=2)
    g = AlgebraElement({M(1, 0): 7, M(0, 1): -2}, p=p, n=2)
    assert f == g
    assert hash(f) == hash(g)
    assert [m for m, _ in f.items()] == [M(0, 1), M(1, 0)]
    assert str(f) == "3*x2^(1) + 2*x1^(1)"
    assert not (f - g)
    assert (2 * f).terms == {M(0, 1): 1, M(1, 0): 4}
