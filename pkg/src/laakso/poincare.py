"""Rectangle chains and empirical Poincare constants.

A rectangle ``q(J x K_a)`` is compared with its neighbour in one of three
ways: across a wormhole (same J, addresses differing in one bit whose level
lies in J), by shrinking the interval (same address), or by shrinking the
interval and refining the address by one bit while J holds a level of the new
order. Chains of such rectangles link any two points; rectangle averages along
a chain telescope to ``f(p) - f(q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from .calculus import PiecewiseLinear, TestFunction
from .cantor import CantorAddress, MeasureSpec, cylinder_mass
from .errors import CaseError, DegenerateInputError, DomainError, LaaksoError, RadiusError
from .measure import Rectangle, _conditional_address, sample_in_ball
from .metric import _extensions, _plan, distance, distance_level
from .space import LaaksoPoint, WormholeLevel, canonicalize, level_above, level_below
from .triadic import Triadic

CaseLabel = Literal["A", "B", "C"]
ProxyMode = Literal["declared", "pointwise"]

C_J = 6
C_D = 9


# -- one-dimensional inequality ------------------------------------------


@dataclass(frozen=True)
class AverageGap:
    gap: Fraction
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.gap <= self.bound


def oned_average_gap(g: PiecewiseLinear, J, A, B) -> AverageGap:
    """``|avg_A g - avg_B g|`` against ``int_J |g'|``, all exact."""
    (jl, jh), (al, ah), (bl, bh) = ((Fraction(u), Fraction(v)) for u, v in (J, A, B))
    for name, (lo, hi) in (("A", (al, ah)), ("B", (bl, bh))):
        if hi <= lo:
            raise DegenerateInputError(f"{name} has zero length")
        if lo < jl or hi > jh:
            raise DomainError(f"{name} = [{lo}, {hi}] is not inside J = [{jl}, {jh}]")
    gap = abs(g.integral(al, ah) / (ah - al) - g.integral(bl, bh) / (bh - bl))
    return AverageGap(gap, g.integral_abs_slope(jl, jh))


# -- the wormhole-crossing curve -------------------------------------------


@dataclass(frozen=True)
class GammaCurve:
    """Unit-speed path down J on ``s``, up to the level, through it onto ``s'``
    up to ``max J`` and back down J: parameter range ``[0, 3|J|]``, ending at
    ``(min J, s')``."""

    lo: Triadic
    hi: Triadic
    s: CantorAddress
    s_prime: CantorAddress
    level: WormholeLevel

    @property
    def length(self) -> Triadic:
        return (self.hi - self.lo) * 3

    @property
    def jump_time(self) -> Triadic:
        return (self.hi - self.lo) + self.level.height - self.lo

    def at(self, t) -> LaaksoPoint:
        t = t if isinstance(t, Triadic) else Triadic.from_fraction(t)
        span = self.hi - self.lo
        if t < 0 or t > self.length:
            raise DomainError(f"parameter {t} outside [0, {self.length}]")
        if t <= span:
            return canonicalize(self.hi - t, self.s)
        if t <= self.jump_time:
            return canonicalize(self.lo + (t - span), self.s)
        if t <= span * 2:
            return canonicalize(self.lo + (t - span), self.s_prime)
        return canonicalize(self.hi - (t - span * 2), self.s_prime)


def gamma_curve(s: CantorAddress, s_prime: CantorAddress, J, level: WormholeLevel) -> GammaCurve:
    lo, hi = (v if isinstance(v, Triadic) else Triadic.from_fraction(v) for v in J)
    if not lo <= level.height <= hi:
        raise DomainError(f"level {level.height} is not in [{lo}, {hi}]")
    if s.differing_bits(s_prime) != [level.order]:
        raise CaseError(f"addresses must differ exactly in bit {level.order}")
    return GammaCurve(lo, hi, s, s_prime, level)


def replay_gamma(curve: GammaCurve, steps: int = 27) -> list[str]:
    """Check endpoints, the glued jump and the unit-speed bound on a grid of parameters."""
    problems = []
    if curve.at(0) != canonicalize(curve.hi, curve.s):
        problems.append("gamma(0) is not (max J, s)")
    if curve.at(curve.length) != canonicalize(curve.lo, curve.s_prime):
        problems.append("gamma(3|J|) is not (min J, s')")
    h = curve.level.height
    if canonicalize(h, curve.s) != canonicalize(h, curve.s_prime):
        problems.append("the two sides of the jump are different points")
    span = curve.hi - curve.lo
    if curve.at(span) != canonicalize(curve.lo, curve.s):
        problems.append("gamma(|J|) is not (min J, s)")
    if curve.at(span * 2) != canonicalize(curve.hi, curve.s_prime):
        problems.append("gamma(2|J|) is not (max J, s')")
    if not span:
        return problems
    # steps divides a power of 3 so every parameter stays triadic
    k = 0
    while 3**k < steps:
        k += 1
    ts = [curve.length * Triadic(i, k) for i in range(3**k + 1)]
    pts = [curve.at(t) for t in ts]
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            if distance(pts[i], pts[j]) > ts[j] - ts[i]:
                problems.append(f"d(gamma({ts[i]}), gamma({ts[j]})) exceeds {ts[j] - ts[i]}")
    return problems


# -- rectangles and case pairs ---------------------------------------------


def aligned_interval(h: Triadic, m: int) -> tuple[Triadic, Triadic]:
    """The triadic interval ``[j/3^m, (j+1)/3^m]`` containing ``h`` (left-closed; 1 goes to the last one)."""
    scale = max(m, h.depth)
    j = min(h.scaled(scale) // 3 ** (scale - m), 3**m - 1)
    return Triadic(j, m), Triadic(j + 1, m)


def level_in(lo: Triadic, hi: Triadic, n: int) -> Optional[WormholeLevel]:
    """The lowest order-n level in ``[lo, hi]``, if any."""
    scale = max(n, lo.depth, hi.depth)
    lvl = level_above(lo.scaled(scale), scale, n)
    if lvl is None or lvl > hi.scaled(scale):
        return None
    return WormholeLevel(n, Triadic(lvl, scale))


def rectangle_diameter_bound(rect: Rectangle, N: int) -> Triadic:
    """A rigorous upper bound on ``diam q(J x K_a)`` in F_N.

    Points of the rectangle differ at most in bits ``|a|+1..N``; the exact
    path cost with all of them differing is maximised over a height grid,
    plus one grid step for the 1-Lipschitz dependence on each endpoint.
    """
    k = len(rect.address)
    bits = list(range(k + 1, N + 1))
    span = rect.length
    if not span:
        if not bits:
            return Triadic(0)
        step = Triadic(0)
        heights = [rect.lo]
    else:
        step = span * Triadic(1, 3)
        heights = [rect.lo + step * i for i in range(28)]
    if not bits:
        return span
    scale = max([N] + [h.depth for h in heights])
    hs = [h.scaled(scale) for h in heights]
    best = 0
    for i, s in enumerate(hs):
        for t in hs[i:]:
            a, b = _extensions(s, t, bits, scale)
            best = max(best, t - s + 2 * (a + b))
    return Triadic(best, scale) + step


@dataclass(frozen=True)
class CasePair:
    label: CaseLabel
    first: Rectangle
    second: Rectangle
    level: Optional[WormholeLevel] = None


def _nested(outer: Rectangle, inner: Rectangle) -> bool:
    return outer.lo <= inner.lo and inner.hi <= outer.hi


def validate_case_pair(pair: CasePair) -> list[str]:
    """Independent structural check of a labelled pair (either orientation)."""
    a, b = pair.first, pair.second
    out = []
    if pair.label == "A":
        if (a.lo, a.hi) != (b.lo, b.hi):
            out.append("case A needs the same interval")
        if len(a.address) != len(b.address):
            out.append("case A needs addresses of equal length")
            return out
        diff = a.address.differing_bits(b.address)
        if len(diff) != 1:
            out.append(f"case A needs exactly one differing bit, got {diff}")
            return out
        n = diff[0]
        lvl = pair.level
        if lvl is None or lvl.order != n or not a.lo <= lvl.height <= a.hi:
            out.append(f"case A needs an order-{n} level inside J")
    elif pair.label == "B":
        if a.address != b.address:
            out.append("case B needs the same address")
        if not (_nested(a, b) or _nested(b, a)):
            out.append("case B needs nested intervals")
    elif pair.label == "C":
        outer, inner = (a, b) if len(a.address) < len(b.address) else (b, a)
        if len(inner.address) != len(outer.address) + 1 or inner.address.prefix(len(outer.address)) != outer.address:
            out.append("case C needs a one-bit refinement of the address")
        if not _nested(outer, inner):
            out.append("case C needs the refined rectangle's interval inside the other")
        n = len(outer.address) + 1
        if level_in(outer.lo, outer.hi, n) is None:
            out.append(f"case C needs an order-{n} level inside the outer interval")
    else:
        out.append(f"unknown case label {pair.label!r}")
    return out


# -- rectangle averages ----------------------------------------------------


@dataclass(frozen=True)
class RectangleAverage:
    value: Fraction
    halfwidth: float  # Hoeffding half-width at the requested confidence
    samples: int


HEIGHT_STEPS = 9


def _height_nodes(rect: Rectangle) -> list[tuple[Triadic, Fraction]]:
    """Trapezoid nodes and weights on ``J`` (exact for f linear in height)."""
    if not rect.length:
        return [(rect.lo, Fraction(1))]
    step = rect.length * Triadic(1, 2)  # 9 sub-intervals
    w = Fraction(1, HEIGHT_STEPS)
    return [(rect.lo + step * i, w / 2 if i in (0, HEIGHT_STEPS) else w) for i in range(HEIGHT_STEPS + 1)]


def rectangle_average(
    f: Callable[[LaaksoPoint], Fraction],
    rect: Rectangle,
    spec: MeasureSpec,
    N: int,
    rng: np.random.Generator,
    samples: int = 64,
    spread: Optional[Fraction] = None,
    alpha: float = 1e-6,
) -> RectangleAverage:
    """Average of f over ``q(J x K_a)``: trapezoid rule in height, address
    extensions to depth N drawn from nu conditioned on ``a``.

    The estimate is a convex combination of values of f on the rectangle.
    ``spread`` bounds the range of those values and sets the Hoeffding width.
    """
    k = len(rect.address)
    if k > N:
        raise LaaksoError("rectangle address is deeper than the resolution")
    nodes = _height_nodes(rect)
    free = list(range(k + 1, N + 1))
    base = CantorAddress(rect.address.bits + "0" * (N - k))
    draws = samples if free else 1
    total = Fraction(0)
    for _ in range(draws):
        addr = _conditional_address(spec, base, free, rng)
        total += sum(w * f(canonicalize(h, addr)) for h, w in nodes)
    value = total / draws
    width = 0.0
    if free and spread is not None:
        width = float(spread) * math.sqrt(math.log(2 / alpha) / (2 * draws))
    return RectangleAverage(value, width, draws)


@dataclass(frozen=True)
class CaseGap:
    pair: CasePair
    gap: Fraction
    bound: Fraction
    slack: float

    @property
    def passed(self) -> bool:
        return float(self.gap) <= float(self.bound) + self.slack


def _lip_average(f: TestFunction, rect: Rectangle, spec, N, rng, samples, proxy: ProxyMode) -> Fraction:
    if proxy == "declared" or f.lip is None:
        return f.lipschitz
    return rectangle_average(f.lip, rect, spec, N, rng, samples).value


def case_gap_bound(
    f: TestFunction,
    pair: CasePair,
    spec: MeasureSpec,
    N: int,
    rng: np.random.Generator,
    samples: int = 64,
    proxy: ProxyMode = "declared",
) -> CaseGap:
    """Estimated gap between the two rectangle averages and its bound.

    A: ``2|J| (P(Q) + P(Q'))``; B: ``|J| P(outer)``; C: with ``Q2 = J x K_x0``
    (the refined child), ``Q3 = J x K_x1`` and ``1 - w`` the other child's share,
    ``(1 - w) 2|J| (P(Q2) + P(Q3)) + |J| P(Q2)``. P is the Lipschitz proxy.
    """
    problems = validate_case_pair(pair)
    if problems:
        raise CaseError("; ".join(problems))
    a, b = pair.first, pair.second
    L = f.lipschitz
    diam = lambda r: rectangle_diameter_bound(r, N).to_fraction()  # noqa: E731
    ea = rectangle_average(f, a, spec, N, rng, samples, spread=2 * L * diam(a))
    eb = rectangle_average(f, b, spec, N, rng, samples, spread=2 * L * diam(b))
    gap = abs(ea.value - eb.value)
    lip = lambda r: _lip_average(f, r, spec, N, rng, samples, proxy)  # noqa: E731
    if pair.label == "A":
        bound = 2 * a.length.to_fraction() * (lip(a) + lip(b))
    elif pair.label == "B":
        outer = a if _nested(a, b) else b
        bound = outer.length.to_fraction() * lip(outer)
    else:
        outer, inner = (a, b) if len(a.address) < len(b.address) else (b, a)
        bit = inner.address.bit(len(inner.address))
        sibling = outer.address.child(1 - bit)
        q2 = Rectangle(outer.lo, outer.hi, inner.address)
        q3 = Rectangle(outer.lo, outer.hi, sibling)
        share = cylinder_mass(spec, sibling) / cylinder_mass(spec, outer.address)
        J = outer.length.to_fraction()
        p2 = lip(q2)
        bound = share * 2 * J * (p2 + lip(q3)) + J * p2
    return CaseGap(pair, gap, bound, ea.halfwidth + eb.halfwidth)


# -- chains ----------------------------------------------------------------


def scale_index(d: Triadic) -> int:
    """The n with ``2 * 3^(-n-1) < d <= 2 * 3^(-n)``."""
    n = 0
    while Triadic(2, n + 1) >= d:
        n += 1
    return n


@dataclass
class Chain:
    """Rectangles ``Q_i`` for ``i`` in ``[-m1, m2]`` with labels on consecutive pairs.

    ``anchor`` is the address depth of ``Q_0`` and ``Q_1``; the two sides then
    refine one bit per step down to depth N.
    """

    p: LaaksoPoint
    q: LaaksoPoint
    distance: Triadic
    n: int
    anchor: int
    start: int  # index of the first rectangle (-m1)
    rects: list[Rectangle]
    pairs: list[CasePair]
    p_address: CantorAddress = field(default=None)
    q_address: CantorAddress = field(default=None)

    @property
    def indices(self) -> range:
        return range(self.start, self.start + len(self.rects))

    def rect(self, i: int) -> Rectangle:
        return self.rects[i - self.start]

    @property
    def J0(self) -> Rectangle:
        return self.rect(0)

    def labels(self) -> list[CaseLabel]:
        return [pr.label for pr in self.pairs]

    def diameter_bounds(self) -> list[Triadic]:
        N = self.p.resolution
        return [rectangle_diameter_bound(r, N) for r in self.rects]

    def validate(self, c_d=C_D, c_j=C_J) -> list[str]:
        problems = []
        d = self.distance
        if not (Triadic(2, self.n + 1) < d <= Triadic(2, self.n)):
            problems.append(f"scale n = {self.n} does not bracket d = {d}")
        for i, pr in zip(self.indices, self.pairs):
            if (pr.first, pr.second) != (self.rect(i), self.rect(i + 1)):
                problems.append(f"pair {i} does not match the rectangles")
            problems.extend(f"pair ({i}, {i + 1}): {msg}" for msg in validate_case_pair(pr))
        if self.J0.length > d * c_j:
            problems.append(f"|J_0| = {self.J0.length} exceeds {c_j} d")
        for i, diam in zip(self.indices, self.diameter_bounds()):
            if diam > d * Triadic(c_d, abs(i)):
                problems.append(f"diam(Q_{i}) <= {diam} exceeds {c_d} 3^-{abs(i)} d")
        for i, r in zip(self.indices, self.rects):
            if r.length <= 0:
                problems.append(f"Q_{i} has zero mu-measure")
        first, last = self.rects[0], self.rects[-1]
        if not first.contains_height(self.p.height) or self.p_address.prefix(len(first.address)) != first.address:
            problems.append("p is not in the first rectangle")
        if not last.contains_height(self.q.height) or self.q_address.prefix(len(last.address)) != last.address:
            problems.append("q is not in the last rectangle")
        return problems


def build_chain(p: LaaksoPoint, q: LaaksoPoint) -> Chain:
    """Link p to q by rectangles.

    With ``D`` the distance level of ``d = d(p, q)`` (``3^-D <= d < 3^-(D-1)``),
    ``Q_0`` and ``Q_1`` carry the depth-``(D-1)`` prefixes of the geodesic's
    representatives of p and q over a common interval ``J_0``; the geodesic
    uses at most one wormhole of order below D, so they differ in at most one
    bit. ``J_0`` is the geodesic's height range joined with the aligned
    intervals of length ``3^-(D+1)`` around both heights, extended if needed to
    reach an order-D level. Going outwards, ``Q_{-j}`` is the aligned interval
    of length ``3^-(D+j)`` around p's height times the depth-``(D-1+j)``
    cylinder of p; on q's side the interval ``3^-(D+j-1)`` pairs with depth
    ``D+j-2``.
    """
    if p.resolution != q.resolution:
        raise LaaksoError("points live at different resolutions")
    if p == q:
        raise DegenerateInputError("a chain needs two distinct points")
    N = p.resolution
    plan = _plan(p, q)
    d = distance(p, q)
    n = scale_index(d)
    D = distance_level(d)
    pa, qa = plan.start, plan.end
    # anchor as deep as the representatives allow: depth D when they differ in
    # at most one of its bits, otherwise D - 1 (where that always holds)
    k0 = min(D, N)
    if len(pa.prefix(k0).differing_bits(qa.prefix(k0))) > 1:
        k0 = min(max(D - 1, 0), N)

    s = plan.scale
    x1, y1 = p.height.scaled(s), q.height.scaled(s)
    lo = Triadic(min(x1, y1) - plan.alpha, s)
    hi = Triadic(max(x1, y1) + plan.beta, s)
    for h in (p.height, q.height):
        a, b = aligned_interval(h, k0 + 2)
        lo, hi = min(lo, a), max(hi, b)
    if k0 < N and level_in(lo, hi, k0 + 1) is None:
        above = level_in(hi, Triadic(1), k0 + 1)
        below = None
        scale = max(k0 + 1, lo.depth)
        b_int = level_below(lo.scaled(scale), scale, k0 + 1)
        if b_int is not None:
            below = Triadic(b_int, scale)
        if above is not None and (below is None or above.height - hi <= lo - below):
            hi = above.height
        else:
            lo = below
    J0 = (lo, hi)

    left: list[Rectangle] = []  # Q_{-1}, Q_{-2}, ...
    for depth in range(k0 + 1, N + 1):
        a, b = aligned_interval(p.height, depth + 1)
        left.append(Rectangle(a, b, pa.prefix(depth)))
    right: list[Rectangle] = []  # Q_2, Q_3, ...
    for depth in range(k0 + 1, N + 1):
        a, b = aligned_interval(q.height, depth + 1)
        right.append(Rectangle(a, b, qa.prefix(depth)))
    q0 = Rectangle(*J0, pa.prefix(k0))
    q1 = Rectangle(*J0, qa.prefix(k0))
    rects = left[::-1] + [q0, q1] + right
    start = -len(left)

    pairs = []
    for i in range(len(rects) - 1):
        idx = start + i
        r1, r2 = rects[i], rects[i + 1]
        if idx == 0:
            diff = r1.address.differing_bits(r2.address)
            if not diff:
                pairs.append(CasePair("B", r1, r2))
            elif len(diff) == 1:
                pairs.append(CasePair("A", r1, r2, level_in(lo, hi, diff[0])))
            else:
                raise CaseError(f"Q_0 and Q_1 differ in bits {diff}")
        else:
            outer = r2 if idx < 0 else r1
            pairs.append(CasePair("C", r1, r2, level_in(outer.lo, outer.hi, len(outer.address) + 1)))
    chain = Chain(p, q, d, n, k0, start, rects, pairs, pa, qa)
    bad = [m for pr in pairs for m in validate_case_pair(pr)]
    if bad:
        raise CaseError("; ".join(bad))
    return chain


@dataclass(frozen=True)
class Telescoping:
    lhs: Fraction
    gaps: tuple[Fraction, ...]
    slack: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs <= sum(self.gaps) + self.slack


def telescoping_check(
    f: TestFunction, chain: Chain, spec: MeasureSpec, rng: np.random.Generator, samples: int = 32
) -> Telescoping:
    """``|f(p) - f(q)|`` against the summed consecutive gaps plus ``L`` times the
    diameters of the two end rectangles (which contain p and q)."""
    N = chain.p.resolution
    avgs = [rectangle_average(f, r, spec, N, rng, samples).value for r in chain.rects]
    gaps = tuple(abs(u - v) for u, v in zip(avgs, avgs[1:]))
    diams = chain.diameter_bounds()
    slack = f.lipschitz * (diams[0] + diams[-1]).to_fraction()
    return Telescoping(abs(f(chain.p) - f(chain.q)), gaps, slack)


# -- empirical Poincare constants ------------------------------------------


def _proxy_value(f: TestFunction, y: LaaksoPoint, proxy: ProxyMode) -> Fraction:
    if proxy == "declared" or f.lip is None:
        return f.lipschitz
    return f.lip(y)


def ball_proxy_average(
    f: TestFunction, x: LaaksoPoint, r, spec: MeasureSpec, rng, samples: int, proxy: ProxyMode
) -> Fraction:
    """Monte Carlo mean of the Lip proxy over ``B(x, r)``."""
    if proxy == "declared" or f.lip is None:
        return f.lipschitz
    vals = [f.lip(sample_in_ball(spec, x, r, rng, exclude_center=False)) for _ in range(samples)]
    return sum(vals, Fraction(0)) / samples


def _triadic(v) -> Triadic:
    return v if isinstance(v, Triadic) else Triadic.from_fraction(v)


@dataclass(frozen=True)
class PointwiseRow:
    p: LaaksoPoint
    q: LaaksoPoint
    d: Triadic
    diff: Fraction
    maximal_p: Fraction
    maximal_q: Fraction

    @property
    def constant(self) -> Optional[Fraction]:
        """``|f(p) - f(q)| / (d (M(p) + M(q)))``; None when the denominator vanishes but not the numerator."""
        den = self.d.to_fraction() * (self.maximal_p + self.maximal_q)
        if not self.diff:
            return Fraction(0)
        return self.diff / den if den else None


def restricted_maximal(
    f: TestFunction, x: LaaksoPoint, radius, spec, rng, samples: int, proxy: ProxyMode, depth: int = 6
) -> Fraction:
    """Max of ball averages of the proxy over radii ``radius * 3^-j``, ``j = 0..depth``."""
    r = _triadic(radius)
    return max(ball_proxy_average(f, x, r * Triadic(1, j), spec, rng, samples, proxy) for j in range(depth + 1))


def pointwise_pi_report(
    f: TestFunction,
    pairs: Sequence[tuple[LaaksoPoint, LaaksoPoint]],
    lam,
    spec: MeasureSpec,
    rng: np.random.Generator,
    samples: int = 32,
    proxy: ProxyMode = "pointwise",
    depth: int = 6,
) -> list[PointwiseRow]:
    lam = _triadic(lam)
    if lam < 1:
        raise LaaksoError("dilation must be at least 1")
    rows = []
    for p, q in pairs:
        d = distance(p, q)
        if not d:
            raise DegenerateInputError("pointwise Poincare pairs must be distinct")
        mp = restricted_maximal(f, p, lam * d, spec, rng, samples, proxy, depth)
        mq = restricted_maximal(f, q, lam * d, spec, rng, samples, proxy, depth)
        rows.append(PointwiseRow(p, q, d, abs(f(p) - f(q)), mp, mq))
    return rows


@dataclass(frozen=True)
class BallRow:
    center: LaaksoPoint
    r: Triadic
    oscillation: Fraction  # (1/mu B) int_B |f - f_B|
    gradient: Fraction  # r (1/mu(lam B)) int_{lam B} Lip proxy

    @property
    def ratio(self) -> Optional[Fraction]:
        if not self.oscillation:
            return Fraction(0)
        return self.oscillation / self.gradient if self.gradient else None


def ball_pi_report(
    f: TestFunction,
    balls: Sequence[tuple[LaaksoPoint, Triadic]],
    lam,
    spec: MeasureSpec,
    rng: np.random.Generator,
    samples: int = 64,
    proxy: ProxyMode = "declared",
) -> list[BallRow]:
    lam = _triadic(lam)
    if lam < 1:
        raise LaaksoError("dilation must be at least 1")
    rows = []
    for x, r in balls:
        r = _triadic(r)
        if r <= 0:
            raise RadiusError("radius must be positive")
        vals = [f(sample_in_ball(spec, x, r, rng, exclude_center=False)) for _ in range(samples)]
        mean = sum(vals, Fraction(0)) / samples
        osc = sum((abs(v - mean) for v in vals), Fraction(0)) / samples
        grad = r.to_fraction() * ball_proxy_average(f, x, lam * r, spec, rng, samples, proxy)
        rows.append(BallRow(x, r, osc, grad))
    return rows


def suite_max(values: Sequence[Optional[Fraction]]) -> Optional[Fraction]:
    """Largest finite value; None if any value is unbounded."""
    if any(v is None for v in values):
        return None
    return max(values, default=Fraction(0))
