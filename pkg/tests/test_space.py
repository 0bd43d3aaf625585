from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from laakso.cantor import CantorAddress
from laakso.errors import LaaksoError
from laakso.space import LaaksoPoint, canonicalize, representatives, wormhole_levels, wormhole_order
from laakso.triadic import Triadic


def test_levels_small():
    assert [l.height for l in wormhole_levels(1)] == [Triadic(1, 1), Triadic(2, 1)]
    assert {l.height.to_fraction() for l in wormhole_levels(2)} == {
        Fraction(k, 9) for k in (1, 2, 4, 5, 7, 8)
    }


@pytest.mark.parametrize("n", range(1, 9))
def test_level_count_and_gaps(n):
    hs = [l.height for l in wormhole_levels(n)]
    assert len(hs) == 2 * 3 ** (n - 1)
    assert all(b - a <= Triadic(2, n) for a, b in zip(hs, hs[1:]))
    assert all(wormhole_order(h) == n for h in hs)


def test_wormhole_order():
    assert wormhole_order(Triadic(4, 2)) == 2
    assert wormhole_order(Triadic(1, 1)) == 1
    assert wormhole_order(Triadic(0)) is None
    assert wormhole_order(Triadic(1)) is None


def test_canonicalize_examples():
    p = canonicalize(Triadic(1, 1), "1101", N=4)
    assert p == LaaksoPoint(Triadic(1, 1), CantorAddress("0101"))
    q = canonicalize(Triadic(4, 2), "0010", N=4)
    assert q.address.bits == "0010"
    with pytest.raises(LaaksoError):
        canonicalize(Triadic(4, 2), "001", N=4)


def test_non_triadic_height_rejected():
    with pytest.raises(ValueError):
        LaaksoPoint(Fraction(1, 2), CantorAddress("01"))


def test_non_canonical_point_rejected():
    with pytest.raises(LaaksoError):
        LaaksoPoint(Triadic(1, 1), CantorAddress("10"))


def test_height_range():
    with pytest.raises(LaaksoError):
        LaaksoPoint(Triadic(4, 1), CantorAddress("0"))


def test_representatives():
    reps = representatives(LaaksoPoint(Triadic(1, 1), CantorAddress("0101")))
    assert {a.bits for _, a in reps} == {"0101", "1101"}
    reps = representatives(LaaksoPoint(Triadic(5, 2), CantorAddress("00")))
    assert {a.bits for _, a in reps} == {"00", "01"}
    # order deeper than N: not identified in F_N
    assert len(representatives(LaaksoPoint(Triadic(1, 3), CantorAddress("11")))) == 1


def test_parse():
    p = LaaksoPoint.parse("1/3^1 @ 1101")
    assert p.address.bits == "0101" and str(p) == "1/3^1 @ 0101"


@given(st.integers(0, 81), st.text(alphabet="01", min_size=4, max_size=4))
def test_canonicalize_idempotent(k, bits):
    p = canonicalize(Triadic(k, 4), bits)
    assert canonicalize(p.height, p.address) == p
    for h, a in representatives(p):
        assert canonicalize(h, a) == p
