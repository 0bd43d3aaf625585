"""Acceptance criteria 1-10.

Each criterion prints one PASS/FAIL line (at the end of a pytest session, or
directly with ``python3 tests/test_acceptance.py``).
"""

from __future__ import annotations

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_point  # noqa: E402

from laakso.calculus import (  # noqa: E402
    PiecewiseLinear,
    abs_centered,
    builtin_functions,
    composed_function,
    differentiability_residual,
    directional_derivative,
    height_function,
    triadic_scales,
    zigzag,
)
from laakso.cantor import Bernoulli, CantorAddress, nu_doubling_report, sample_address, singularity_test  # noqa: E402
from laakso.measure import (  # noqa: E402
    ahlfors_band,
    ahlfors_report,
    doubling_report,
    nondoubling_analytic,
    nondoubling_ratio,
    sample_point,
)
from laakso.metric import distance, distance_oracle_many, grid_points, segment_decomposition  # noqa: E402
from laakso.poincare import (  # noqa: E402
    C_D,
    C_J,
    ball_pi_report,
    build_chain,
    gamma_curve,
    oned_average_gap,
    pointwise_pi_report,
    replay_gamma,
    suite_max,
)
from laakso.rng import stream  # noqa: E402
from laakso.space import WormholeLevel, canonicalize, wormhole_levels  # noqa: E402
from laakso.triadic import Triadic  # noqa: E402

F = Fraction
RESULTS: dict[int, tuple[bool, str]] = {}


def report_lines() -> list[str]:
    return [f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}" for k, (ok, detail) in sorted(RESULTS.items())]


def _record(k: int, ok: bool, detail: str) -> None:
    RESULTS[k] = (ok, detail)
    assert ok, detail


# -- 1 ----------------------------------------------------------------------


def criterion_1() -> tuple[bool, str]:
    t0 = time.perf_counter()
    pts = grid_points(3)
    pairs = [(x, y) for x in pts for y in pts]
    mismatches = sum(a != b for a, b in zip((distance(x, y) for x, y in pairs), distance_oracle_many(pairs)))
    checked = len(pairs)
    for N in range(4, 9):
        rng = stream(1, N)
        pairs = [(random_point(rng, N), random_point(rng, N)) for _ in range(1000)]
        mismatches += sum(a != b for a, b in zip((distance(x, y) for x, y in pairs), distance_oracle_many(pairs)))
        checked += len(pairs)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed <= 120
    return ok, f"{checked} pairs, {mismatches} mismatches, {elapsed:.1f}s (limit 120s)"


# -- 2 ----------------------------------------------------------------------


def criterion_2() -> tuple[bool, str]:
    bad = []
    for n in range(1, 9):
        hs = [lvl.height for lvl in wormhole_levels(n)]
        if len(hs) != 2 * 3 ** (n - 1):
            bad.append(f"n={n}: {len(hs)} levels")
        gap = max((b - a for a, b in zip(hs, hs[1:])), default=Triadic(0))
        if gap > Triadic(2, n):
            bad.append(f"n={n}: gap {gap}")
    return not bad, "counts 2*3^(n-1) and gaps <= 2/3^n for n <= 8" if not bad else "; ".join(bad)


# -- 3 ----------------------------------------------------------------------

WS = (F(1, 5), F(1, 2), F(7, 10))


def criterion_3() -> tuple[bool, str]:
    t0 = time.perf_counter()
    worst = []
    failed = 0
    for j, w in enumerate(WS):
        spec = Bernoulli(w)
        rng = stream(3, j)
        pairs = []
        for _ in range(100):
            k = int(rng.integers(2, 7))
            r = Triadic(1 if k == 2 else int(rng.integers(1, 3)), k)  # r <= 1/9
            pairs.append((sample_address(spec, 12, rng), r))
        rows = nu_doubling_report(spec, pairs)
        failed += sum(not r.passed for r in rows)
        worst.append(f"w={w}: max {float(max(r.ratio for r in rows)):.1f} <= {float(rows[0].bound):.1f}")
    elapsed = time.perf_counter() - t0
    return failed == 0 and elapsed <= 60, f"{'; '.join(worst)}; {elapsed:.1f}s (limit 60s)"


# -- 4 ----------------------------------------------------------------------


def criterion_4() -> tuple[bool, str]:
    t0 = time.perf_counter()
    worst = []
    failed = 0
    for j, w in enumerate(WS):
        spec = Bernoulli(w)
        rng = stream(4, j)
        pairs = [(sample_point(spec, 12, rng), Triadic(1, int(rng.integers(2, 7)))) for _ in range(100)]
        rows = doubling_report(spec, pairs)
        failed += sum(not r.passed for r in rows)
        worst.append(f"w={w}: max {float(max(r.ratio_upper for r in rows)):.1f} <= {float(rows[0].bound):.0f}")
    elapsed = time.perf_counter() - t0
    return failed == 0 and elapsed <= 600, f"{'; '.join(worst)}; {elapsed:.1f}s (limit 600s)"


# -- 5 ----------------------------------------------------------------------


def criterion_5() -> tuple[bool, str]:
    spec = Bernoulli(F(1, 2))
    rng = stream(5)
    pts = [sample_point(spec, 12, rng) for _ in range(50)]
    rows = ahlfors_report(pts, range(2, 7))
    band = ahlfors_band(rows)
    lo = min(r.lower_ratio for r in rows)
    hi = max(r.upper_ratio for r in rows)
    return band <= 1000, f"mu(B)/r^Q in [{float(lo):.3f}, {float(hi):.3f}], width {float(band):.1f} (limit 1000)"


# -- 6 ----------------------------------------------------------------------


def criterion_6() -> tuple[bool, str]:
    t0 = time.perf_counter()
    res = singularity_test(F(3, 10), F(7, 10), 500, 10_000, stream(6))
    elapsed = time.perf_counter() - t0
    target = 10_000 * 2 * math.exp(-80)
    exact = float(res.exact_failure_probability)
    hoeffding = res.failure_probability_bound
    ok = res.misclassified == 0 and exact <= target and elapsed <= 60
    return ok, (
        f"{res.misclassified} misclassified in {elapsed:.1f}s; failure probability at depth 500: "
        f"exact {exact:.2e}, Hoeffding {hoeffding:.2e}, required <= {target:.2e}"
    )


# -- 7 ----------------------------------------------------------------------


def criterion_7() -> tuple[bool, str]:
    lam, lam_hat = F(3, 10), F(3, 5)
    analytic = nondoubling_analytic(lam, lam_hat, 10)
    res = {m: nondoubling_ratio(lam, lam_hat, m) for m in (6, 8, 10)}
    ratios = [res[m].ratio for m in (6, 8, 10)]
    ok = (
        analytic == 257
        and res[8].ratio >= res[8].analytic / 2
        and all(a < b for a, b in zip(ratios, ratios[1:]))
    )
    shown = ", ".join(f"m={m}: {float(res[m].ratio):.1f}/{res[m].analytic}" for m in res)
    return ok, f"analytic(m=10) = {analytic}; certified/analytic {shown}"


# -- 8 ----------------------------------------------------------------------


def criterion_8() -> tuple[bool, str]:
    rng = stream(8)
    bad = 0
    done = 0
    while done < 500:
        N = int(rng.integers(3, 10))
        x, y = random_point(rng, N, N + 1), random_point(rng, N, N + 1)
        if x == y:
            continue
        done += 1
        bad += not all(segment_decomposition(x, y).checks().values())
    return bad == 0, f"{done} pairs, {bad} violating sum mu <= 11 d, lambda bounds or the one-low-wormhole rule"


# -- 9 ----------------------------------------------------------------------


def criterion_9() -> tuple[bool, str]:
    rng = stream(9)
    h = height_function()
    bad = []
    for _ in range(40):
        x = random_point(rng, 5)
        dd = directional_derivative(h, x, triadic_scales(1, 12))
        qs = [v for row in dd.rows + (dd.flipped_rows or ()) for v in (row.forward, row.backward) if v is not None]
        if any(v != 1 for v in qs):
            bad.append(f"height quotient at {x}")
        if differentiability_residual(h, x, 1, Triadic(1, 2), 20, rng).value != 0:
            bad.append(f"height residual at {x}")
    for g in (abs_centered(), zigzag(), PiecewiseLinear((0, F(1, 5), F(1, 2), F(4, 5), 1), (0, 1, -1, 2, 0))):
        f = composed_function(g)
        for k in range(1, 81):
            t = Triadic(k, 4)
            if t.to_fraction() in g.knots:
                continue
            x = canonicalize(t, random_point(rng, 4).address)
            room = min(abs(t.to_fraction() - kn) for kn in g.knots)
            dd = directional_derivative(f, x, [s for s in triadic_scales(1, 10) if s.to_fraction() <= room])
            qs = [v for row in dd.rows + (dd.flipped_rows or ()) for v in (row.forward, row.backward) if v is not None]
            if any(v != g.derivative(t.to_fraction()) for v in qs):
                bad.append(f"g o h quotient at {t}")
    return not bad, "height quotients all 1, residuals 0, g o h quotients equal g' off kinks" if not bad else "; ".join(bad[:3])


# -- 10 ---------------------------------------------------------------------

PI_WS = (F(3, 10), F(1, 2), F(7, 10))
PI_N = 5


def pi_suite(seed: int) -> tuple[Fraction, Fraction]:
    """Suite maxima of the pointwise and ball Poincare constants over the builtins."""
    fs = builtin_functions(PI_N)
    pointwise, ball = [], []
    for j, w in enumerate(PI_WS):
        spec = Bernoulli(w)
        rng = stream(seed, j)
        pairs = []
        while len(pairs) < 20:
            p, q = sample_point(spec, PI_N, rng, PI_N + 1), sample_point(spec, PI_N, rng, PI_N + 1)
            if p != q:
                pairs.append((p, q))
        balls = [(sample_point(spec, PI_N, rng, PI_N + 1), Triadic(1, 1 + i % 3)) for i in range(50)]
        for f in fs:
            pointwise += [r.constant for r in pointwise_pi_report(f, pairs, 2, spec, rng, samples=16, depth=3)]
            ball += [r.ratio for r in ball_pi_report(f, balls, 2, spec, rng, samples=64)]
    return suite_max(pointwise), suite_max(ball)


def _close(a, b, rel=F(1, 10)) -> bool:
    return a is not None and b is not None and abs(a - b) <= rel * max(a, b)


def criterion_10() -> tuple[bool, str]:
    rng = stream(10)
    chain_bad = chains = 0
    while chains < 300:
        N = int(rng.integers(1, 9))
        p, q = random_point(rng, N, N + 1), random_point(rng, N, N + 1)
        if p == q:
            continue
        chains += 1
        chain_bad += bool(build_chain(p, q).validate(C_D, C_J))
    curves_bad = 0
    for n, (lo, hi) in ((1, (0, 1)), (2, (F(1, 3), F(2, 3))), (3, (F(1, 9), F(2, 9))), (2, (F(4, 9), F(5, 9)))):
        for lvl in wormhole_levels(n):
            if not lo <= lvl.height.to_fraction() <= hi:
                continue
            s = CantorAddress("0110")
            curve = gamma_curve(s, s.flip(n), (lo, hi), lvl)
            curves_bad += bool(replay_gamma(curve, steps=9))
    corpus = (abs_centered(), zigzag(), PiecewiseLinear((0, F(1, 5), F(1, 2), F(4, 5), 1), (0, 1, -1, 2, 0)))
    oned_bad = 0
    for g in corpus:
        for _ in range(300):
            jl, al, ah, bl, bh, jh = sorted(F(int(v), 729) for v in rng.integers(0, 730, size=6))
            if ah > al and bh > bl:
                oned_bad += not oned_average_gap(g, (jl, jh), (al, ah), (bl, bh)).holds
    (pw1, b1), (pw2, b2) = pi_suite(101), pi_suite(202)
    stable = _close(pw1, pw2) and _close(b1, b2)
    ok = chain_bad == 0 and curves_bad == 0 and oned_bad == 0 and stable
    fmt = lambda v: "inf" if v is None else f"{float(v):.3f}"  # noqa: E731
    return ok, (
        f"{chains} chains ({chain_bad} invalid), gamma replays {curves_bad} bad, oned {oned_bad} bad; "
        f"pointwise PI max {fmt(pw1)} vs {fmt(pw2)}, ball PI max {fmt(b1)} vs {fmt(b2)} (within 10%: {stable})"
    )


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 11)}


@pytest.mark.parametrize("k", list(CRITERIA))
def test_criterion(k):
    ok, detail = CRITERIA[k]()
    _record(k, ok, detail)


if __name__ == "__main__":
    picked = [int(a) for a in sys.argv[1:]] or list(CRITERIA)
    for k in picked:
        ok, detail = CRITERIA[k]()
        RESULTS[k] = (ok, detail)
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
