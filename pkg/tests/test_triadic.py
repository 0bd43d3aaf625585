from fractions import Fraction
import pickle

import pytest
from hypothesis import given, strategies as st

from laakso.triadic import Triadic, third_power

triadics = st.builds(Triadic, st.integers(-500, 500), st.integers(0, 8))


def test_canonical_form():
    t = Triadic(9, 3)
    assert (t.num, t.depth) == (1, 1)
    assert Triadic(0, 5).depth == 0
    assert str(Triadic(4, 2)) == "4/3^2"


def test_parse_round_trip():
    assert Triadic.parse("4/3^2") == Triadic(4, 2)
    assert Triadic.parse("4/9") == Triadic(4, 2)
    assert Triadic.parse("1") == Triadic(1)
    with pytest.raises(ValueError):
        Triadic.parse("1/2")


def test_non_triadic_rejected():
    with pytest.raises(ValueError):
        Triadic.from_fraction(Fraction(1, 8))
    assert not Triadic.is_triadic(Fraction(1, 2))
    assert Triadic.is_triadic(Fraction(5, 27))


def test_third_power():
    assert third_power(3) == Fraction(1, 27)


def test_scaled():
    assert Triadic(1, 1).scaled(3) == 9
    with pytest.raises(ValueError):
        Triadic(1, 3).scaled(2)


def test_pickle():
    t = Triadic(7, 4)
    assert pickle.loads(pickle.dumps(t)) == t


@given(triadics, triadics)
def test_arithmetic_matches_fraction(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)
    assert (a == b) == (fa == fb)
    assert hash(a) == hash(fa) or a != fa
    assert abs(a).to_fraction() == abs(fa)
