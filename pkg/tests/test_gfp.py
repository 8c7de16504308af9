import itertools
import math

import pytest
from hypothesis import given, strategies as st

from hamcoh import gfp
from hamcoh.gfp import FieldError, PrimeField, binomial_mod_p, lucas_binomial

from oracles import binom_exact


def test_examples():
    assert gfp.inv(2, 5) == 3
    assert gfp.add(4, 4, 5) == 3
    assert gfp.neg(0, 7) == 0
    assert binomial_mod_p(4, 2, 3) == 0
    assert binomial_mod_p(2, 1, 5) == 2


@pytest.mark.parametrize("p", [3, 5, 7])
def test_field_axioms_exhaustive(p):
    F = PrimeField(p)
    elems = range(p)
    for a, b in itertools.product(elems, repeat=2):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
        assert F.add(a, F.neg(a)) == 0
        assert F.sub(a, b) == F.add(a, F.neg(b))
        assert 0 <= F.mul(a, b) < p
    for a, b, c in itertools.product(elems, repeat=3):
        assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    for a in range(1, p):
        assert F.mul(a, F.inv(a)) == 1


def test_inverse_of_zero_raises():
    with pytest.raises(FieldError):
        gfp.inv(0, 5)
    with pytest.raises(FieldError):
        PrimeField(7).inv(0)


@pytest.mark.parametrize("bad", [2, 4, 9, 1, 0, -3])
def test_rejects_bad_modulus(bad):
    with pytest.raises(FieldError):
        PrimeField(bad)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_binomial_matches_factorials(p):
    for a in range(2 * p + 1):
        for b in range(a + 1):
            assert binomial_mod_p(a, b, p) == binom_exact(a, b, p)
            assert lucas_binomial(a, b, p) == binom_exact(a, b, p)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_closure_vanishing(p):
    for s in range(1, p):
        assert binomial_mod_p(p - 1 + s, s, p) == 0
    for i, j in itertools.product(range(p), repeat=2):
        if i + j >= p:
            assert binomial_mod_p(i + j, i, p) == 0
        else:
            assert binomial_mod_p(i + j, i, p) != 0


def test_binomial_bad_arguments():
    with pytest.raises(ValueError):
        binomial_mod_p(2, 3, 5)


@given(st.sampled_from([3, 5, 7, 11, 13]), st.integers(0, 400), st.integers(0, 400))
def test_lucas_beyond_table(p, a, b):
    a, b = max(a, b), min(a, b)
    assert binomial_mod_p(a, b, p) == math.comb(a, b) % p


def test_prime_field_binomial_table():
    F = PrimeField(5)
    assert F.binomial(4, 2) == 1
    assert F(12) == 2
