from fractions import Fraction

import numpy as np
import pytest

from laakso.calculus import (
    PiecewiseLinear,
    abs_centered,
    builtin_functions,
    constant_function,
    distance_function,
    height_function,
    zigzag,
)
from laakso.cantor import Bernoulli, CantorAddress, Split
from laakso.errors import CaseError, DegenerateInputError, DomainError, LaaksoError
from laakso.measure import Rectangle
from laakso.metric import distance, grid_points
from laakso.poincare import (
    C_D,
    C_J,
    CasePair,
    aligned_interval,
    ball_pi_report,
    build_chain,
    case_gap_bound,
    gamma_curve,
    level_in,
    oned_average_gap,
    pointwise_pi_report,
    rectangle_average,
    rectangle_diameter_bound,
    replay_gamma,
    scale_index,
    suite_max,
    telescoping_check,
    validate_case_pair,
)
from laakso.rng import stream
from laakso.space import WormholeLevel, canonicalize
from laakso.triadic import Triadic

from conftest import random_point

HALF = Bernoulli(Fraction(1, 2))
F = Fraction


def test_oned_examples():
    slope = PiecewiseLinear((0, 1), (0, 1))
    res = oned_average_gap(slope, (0, 1), (0, F(1, 3)), (F(2, 3), 1))
    assert res.gap == F(2, 3) and res.bound == 1 and res.holds
    const = PiecewiseLinear((0, 1), (F(1, 2), F(1, 2)))
    assert oned_average_gap(const, (0, 1), (0, F(1, 3)), (F(2, 3), 1)).gap == 0
    hat = PiecewiseLinear((0, F(1, 2), 1), (0, 1, 0))
    res = oned_average_gap(hat, (0, 1), (0, F(1, 2)), (F(1, 4), F(3, 4)))
    assert res.bound == 2 and res.gap == F(1, 4) and res.holds


def test_oned_validation():
    g = abs_centered()
    with pytest.raises(DegenerateInputError):
        oned_average_gap(g, (0, 1), (F(1, 3), F(1, 3)), (0, 1))
    with pytest.raises(DomainError):
        oned_average_gap(g, (0, F(1, 2)), (0, 1), (0, F(1, 4)))


def _corpus():
    yield abs_centered()
    yield zigzag()
    yield PiecewiseLinear((0, F(1, 5), F(1, 2), F(4, 5), 1), (0, 1, -1, 2, 0))
    yield PiecewiseLinear((0, 1), (3, -2))


def test_oned_inequality_on_corpus():
    rng = np.random.default_rng(3)
    for g in _corpus():
        for _ in range(200):
            pts = sorted(F(int(v), 1000) for v in rng.integers(0, 1001, size=6))
            jl, al, ah, bl, bh, jh = pts
            if ah <= al or bh <= bl:
                continue
            assert oned_average_gap(g, (jl, jh), (al, ah), (bl, bh)).holds


def test_gamma_curve_replay():
    lvl = WormholeLevel(2, Triadic(4, 2))
    curve = gamma_curve(CantorAddress("0011"), CantorAddress("0111"), (Triadic(1, 3), Triadic(2, 2) * 3), lvl)
    assert replay_gamma(curve) == []
    assert curve.length == (curve.hi - curve.lo) * 3
    assert curve.at(0) == canonicalize(curve.hi, curve.s)
    assert curve.at(curve.length) == canonicalize(curve.lo, curve.s_prime)
    t = curve.jump_time
    assert t == (curve.hi - curve.lo) + lvl.height - curve.lo
    assert curve.at(t) == canonicalize(lvl.height, curve.s_prime)
    eps = Triadic(1, 6)
    assert curve.at(t - eps).address == CantorAddress("0011")
    assert curve.at(t + eps).address == CantorAddress("0111")


def test_gamma_curve_validation():
    lvl = WormholeLevel(1, Triadic(1, 1))
    with pytest.raises(DomainError):
        gamma_curve(CantorAddress("00"), CantorAddress("10"), (Triadic(1, 2) * 4, Triadic(1)), lvl)
    with pytest.raises(CaseError):
        gamma_curve(CantorAddress("00"), CantorAddress("11"), (0, 1), lvl)


def test_interval_helpers():
    assert aligned_interval(Triadic(4, 3), 2) == (Triadic(1, 2), Triadic(2, 2))
    assert aligned_interval(Triadic(1), 2) == (Triadic(8, 2), Triadic(1))
    assert level_in(Triadic(0), Triadic(1, 2), 1) is None
    assert level_in(Triadic(0), Triadic(1), 1).height == Triadic(1, 1)
    assert scale_index(Triadic(2, 1)) == 1 and scale_index(Triadic(1, 1)) == 1


@pytest.mark.parametrize("k", [0, 1, 2])
def test_diameter_bound_against_brute_force(k):
    N = 3
    pts = grid_points(N)
    for bits in ("", "0", "01", "011")[: k + 2]:
        if len(bits) != k:
            continue
        for lo, hi in ((0, 1), (F(1, 3), F(2, 3)), (F(2, 9), F(5, 9))):
            rect = Rectangle(lo, hi, bits)
            inside = [
                p for p in pts
                if rect.contains_height(p.height) and any(
                    canonicalize(p.height, a).address == p.address and a.bits.startswith(bits)
                    for a in (p.address, p.address.flip(p.order) if p.order else p.address)
                )
            ]
            diam = max(distance(a, b) for a in inside for b in inside)
            assert diam <= rectangle_diameter_bound(rect, N)


def test_case_pair_validation():
    J = (Triadic(0), Triadic(2, 1))
    a = Rectangle(*J, "00")
    b = Rectangle(*J, "10")
    assert validate_case_pair(CasePair("A", a, b, WormholeLevel(1, Triadic(1, 1)))) == []
    assert validate_case_pair(CasePair("A", a, Rectangle(*J, "11"), WormholeLevel(1, Triadic(1, 1))))
    assert validate_case_pair(CasePair("A", a, Rectangle(0, Triadic(1, 2), "10"), WormholeLevel(1, Triadic(1, 1))))
    assert validate_case_pair(CasePair("B", a, Rectangle(0, Triadic(1, 1), "00"))) == []
    assert validate_case_pair(CasePair("B", a, Rectangle(0, Triadic(1, 1), "01")))
    assert validate_case_pair(CasePair("C", Rectangle(*J, "0"), Rectangle(0, Triadic(1, 1), "01"))) == []
    assert validate_case_pair(CasePair("C", Rectangle(0, Triadic(2, 3), "0"), Rectangle(0, Triadic(2, 3), "01")))
    assert validate_case_pair(CasePair("D", a, b))


def test_rectangle_average_exact_for_height():
    rect = Rectangle(0, Triadic(2, 2), "01")
    avg = rectangle_average(height_function(), rect, HALF, 4, stream(1), samples=8)
    assert avg.value == F(1, 9)


def test_case_b_height_gap():
    outer = Rectangle(0, Triadic(2, 2), "01")
    inner = Rectangle(0, Triadic(1, 2), "01")
    res = case_gap_bound(height_function(), CasePair("B", outer, inner), HALF, 4, stream(2))
    assert res.gap == outer.length.to_fraction() / 4
    assert res.bound == outer.length.to_fraction() and res.passed


def test_case_gaps_constant_and_distance():
    J = (Triadic(0), Triadic(2, 1))
    pair = CasePair("A", Rectangle(*J, "00"), Rectangle(*J, "10"), WormholeLevel(1, Triadic(1, 1)))
    assert case_gap_bound(constant_function(), pair, HALF, 4, stream(3)).gap == 0
    f = distance_function(canonicalize(Triadic(4, 3), "0000"))
    assert case_gap_bound(f, pair, HALF, 4, stream(4), samples=256).passed
    with pytest.raises(CaseError):
        case_gap_bound(f, CasePair("B", Rectangle(*J, "00"), Rectangle(*J, "10")), HALF, 4, stream(4))


def test_chain_examples():
    chain = build_chain(canonicalize(0, "000"), canonicalize(0, "100"))
    i = -chain.start
    assert chain.pairs[i].label == "A" and chain.pairs[i].level.order == 1
    assert chain.validate() == []
    same = build_chain(canonicalize(Triadic(4, 3), "0110"), canonicalize(Triadic(5, 3), "0110"))
    assert "A" not in same.labels() and same.validate() == []
    with pytest.raises(DegenerateInputError):
        build_chain(canonicalize(0, "0"), canonicalize(0, "0"))
    with pytest.raises(LaaksoError):
        build_chain(canonicalize(0, "0"), canonicalize(0, "00"))


def test_chains_validate_randomly(rng):
    for N in range(1, 7):
        for _ in range(60):
            p, q = random_point(rng, N), random_point(rng, N, N + 1)
            if p == q:
                continue
            chain = build_chain(p, q)
            assert chain.validate(C_D, C_J) == [], (p, q)


def test_telescoping(rng):
    spec = Split(F(3, 10), F(3, 5))
    for f in builtin_functions(4):
        for _ in range(3):
            p, q = random_point(rng, 4), random_point(rng, 4)
            if p == q:
                continue
            t = telescoping_check(f, build_chain(p, q), spec, stream(5), samples=8)
            assert t.holds, f.name


def test_pointwise_pi_constant_and_height():
    rng = stream(6)
    pairs = [(canonicalize(Triadic(4, 3), "0110"), canonicalize(Triadic(13, 3), "0010"))]
    assert pointwise_pi_report(constant_function(), pairs, 2, HALF, rng, samples=4, depth=2)[0].constant == 0
    row = pointwise_pi_report(height_function(), pairs, 2, HALF, rng, samples=4, depth=2)[0]
    assert row.constant <= 1
    with pytest.raises(LaaksoError):
        pointwise_pi_report(height_function(), pairs, F(1, 3), HALF, rng)


def test_ball_pi():
    rng = stream(7)
    balls = [(canonicalize(Triadic(4, 3), "0110"), Triadic(1, 2))]
    assert ball_pi_report(constant_function(), balls, 2, HALF, rng, samples=16)[0].oscillation == 0
    row = ball_pi_report(height_function(), balls, 2, HALF, rng, samples=64)[0]
    assert row.ratio <= 1


def test_suite_max():
    assert suite_max([F(1), F(3), F(2)]) == 3
    assert suite_max([F(1), None]) is None
