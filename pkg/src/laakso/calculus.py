"""Lipschitz test functions, difference quotients and differentiability residuals.

Functions are differentiated with respect to the height chart ``h``. At a
wormhole of order ``n`` the point has two representatives; quotients are
taken along both fibers (the canonical one with bit ``n`` = 0 gives the left
derivative, the flipped one the right derivative) and reported side by side.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .cantor import CantorAddress, MeasureSpec
from .errors import DomainError, LaaksoError, RadiusError
from .measure import sample_in_ball
from .metric import distance
from .space import LaaksoPoint, canonicalize, wormhole_levels
from .triadic import Triadic

Evaluator = Callable[[LaaksoPoint], Fraction]


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear ``g`` on [0, 1] given by knots and values."""

    knots: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        knots = tuple(Fraction(k) for k in self.knots)
        values = tuple(Fraction(v) for v in self.values)
        if len(knots) != len(values) or len(knots) < 2:
            raise LaaksoError("need matching knots and values, at least two of each")
        if knots[0] != 0 or knots[-1] != 1 or any(a >= b for a, b in zip(knots, knots[1:])):
            raise LaaksoError("knots must increase strictly from 0 to 1")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @property
    def slopes(self) -> tuple[Fraction, ...]:
        k, v = self.knots, self.values
        return tuple((v[i + 1] - v[i]) / (k[i + 1] - k[i]) for i in range(len(k) - 1))

    @property
    def lipschitz(self) -> Fraction:
        return max(abs(s) for s in self.slopes)

    def __call__(self, t) -> Fraction:
        t = Fraction(t)
        i = min(max(bisect_right(self.knots, t) - 1, 0), len(self.knots) - 2)
        k, v = self.knots, self.values
        return v[i] + (t - k[i]) * (v[i + 1] - v[i]) / (k[i + 1] - k[i])

    def one_sided_slopes(self, t) -> tuple[Optional[Fraction], Optional[Fraction]]:
        """``(left, right)`` slopes at ``t``; None past the ends of [0, 1]."""
        t = Fraction(t)
        s = self.slopes
        i = bisect_left(self.knots, t)
        if i < len(self.knots) and self.knots[i] == t:
            left = s[i - 1] if i > 0 else None
            right = s[i] if i < len(s) else None
            return left, right
        return s[i - 1], s[i - 1]

    def derivative(self, t) -> Optional[Fraction]:
        left, right = self.one_sided_slopes(t)
        return left if left == right else None

    def integral_abs_slope(self, lo, hi) -> Fraction:
        """``int_lo^hi |g'|`` exactly."""
        lo, hi = Fraction(lo), Fraction(hi)
        total = Fraction(0)
        for (a, b), s in zip(zip(self.knots, self.knots[1:]), self.slopes):
            a, b = max(a, lo), min(b, hi)
            if b > a:
                total += (b - a) * abs(s)
        return total

    def integral(self, lo, hi) -> Fraction:
        """``int_lo^hi g`` exactly (trapezoids are exact for linear pieces)."""
        lo, hi = Fraction(lo), Fraction(hi)
        total = Fraction(0)
        for a, b in zip(self.knots, self.knots[1:]):
            a, b = max(a, lo), min(b, hi)
            if b > a:
                total += (b - a) * (self(a) + self(b)) / 2
        return total


@dataclass(frozen=True)
class TestFunction:
    """A Lipschitz function on F_N with its declared constant.

    ``derivative`` gives Df where known (None where it does not exist);
    ``lip`` gives an exact pointwise upper Lipschitz constant where known.
    """

    __test__ = False  # not a pytest class

    name: str
    evaluator: Evaluator = field(repr=False)
    lipschitz: Fraction
    derivative: Optional[Callable[[LaaksoPoint], Optional[Fraction]]] = field(default=None, repr=False)
    lip: Optional[Callable[[LaaksoPoint], Fraction]] = field(default=None, repr=False)

    def __call__(self, x: LaaksoPoint) -> Fraction:
        return self.evaluator(x)


def height_function() -> TestFunction:
    return TestFunction("height", lambda x: x.height.to_fraction(), Fraction(1), lambda x: Fraction(1), lambda x: Fraction(1))


def constant_function(c=Fraction(1, 2)) -> TestFunction:
    c = Fraction(c)
    return TestFunction(f"constant({c})", lambda x: c, Fraction(0), lambda x: Fraction(0), lambda x: Fraction(0))


def composed_function(g: PiecewiseLinear, name: str = "g_of_height") -> TestFunction:
    def lip(x):
        left, right = g.one_sided_slopes(x.height.to_fraction())
        return max(abs(s) for s in (left, right) if s is not None)

    return TestFunction(
        name,
        lambda x: g(x.height.to_fraction()),
        g.lipschitz,
        lambda x: g.derivative(x.height.to_fraction()),
        lip,
    )


def distance_function(anchor: LaaksoPoint) -> TestFunction:
    return TestFunction(
        f"distance_to({anchor})",
        lambda x: distance(x, anchor).to_fraction(),
        Fraction(1),
        None,
        lambda x: Fraction(1),
    )


def cone_function(anchor: LaaksoPoint, radius) -> TestFunction:
    r0 = Fraction(radius)

    def value(x):
        return max(Fraction(0), r0 - distance(x, anchor).to_fraction())

    return TestFunction(
        f"cone({anchor},{r0})",
        value,
        Fraction(1),
        None,
        lambda x: Fraction(1) if distance(x, anchor).to_fraction() <= r0 else Fraction(0),
    )


def abs_centered() -> PiecewiseLinear:
    """``|t - 1/2|``."""
    return PiecewiseLinear((0, Fraction(1, 2), 1), (Fraction(1, 2), 0, Fraction(1, 2)))


def zigzag() -> PiecewiseLinear:
    return PiecewiseLinear(
        (0, Fraction(1, 3), Fraction(2, 3), 1),
        (0, Fraction(2, 3), Fraction(1, 3), Fraction(1, 2)),
    )


def builtin_functions(N: int = 4) -> list[TestFunction]:
    """The standard corpus at resolution ``N`` (anchors live in F_N)."""
    anchor = canonicalize(Triadic(4, 3), "0" * N)
    far = canonicalize(Triadic(20, 3), "1" * N)
    return [
        height_function(),
        constant_function(),
        composed_function(abs_centered(), "abs_centered"),
        composed_function(zigzag(), "zigzag"),
        distance_function(anchor),
        distance_function(far),
        cone_function(anchor, Fraction(1, 3)),
    ]


# -- structural checks -----------------------------------------------------


def quotient_violations(f: TestFunction, N: int, probe_depth: Optional[int] = None) -> list[str]:
    """Check that f is continuous across every identification of order ``<= N``.

    For each wormhole point, f is evaluated one probe step above and below on
    both glued fibers; all four values must lie within ``L * step`` of the
    value at the point, which is what a function on the quotient requires.
    """
    step_depth = N + 2 if probe_depth is None else probe_depth
    step = Triadic(1, step_depth)
    out = []
    for n in range(1, N + 1):
        for lvl in wormhole_levels(n):
            for a in CantorAddress.all_of_length(N):
                if a.bit(n):
                    continue
                base = f(LaaksoPoint(lvl.height, a))
                for addr in (a, a.flip(n)):
                    for h in (lvl.height - step, lvl.height + step):
                        v = f(canonicalize(h, addr))
                        if abs(v - base) > f.lipschitz * step.to_fraction():
                            out.append(f"{f.name}: jump at {lvl.height} on {addr} ({v} vs {base})")
    return out


def lipschitz_violations(f: TestFunction, pairs: Sequence[tuple[LaaksoPoint, LaaksoPoint]]) -> list[str]:
    out = []
    for x, y in pairs:
        if abs(f(x) - f(y)) > f.lipschitz * distance(x, y).to_fraction():
            out.append(f"{f.name}: |f({x}) - f({y})| exceeds L d")
    return out


# -- directional derivatives ----------------------------------------------


@dataclass(frozen=True)
class QuotientRow:
    t: Triadic
    forward: Optional[Fraction]
    backward: Optional[Fraction]


def _settled(rows: Sequence[QuotientRow], tol: Fraction, finest: int = 3) -> Optional[Fraction]:
    vals = [q for row in rows[-finest:] for q in (row.forward, row.backward) if q is not None]
    if len(rows) < finest or not vals:
        return None
    if max(vals) - min(vals) > tol:
        return None
    return vals[-1]


@dataclass(frozen=True)
class DirectionalDerivative:
    point: LaaksoPoint
    order: Optional[int]
    rows: tuple[QuotientRow, ...]
    flipped_rows: Optional[tuple[QuotientRow, ...]] = None

    def left(self, tol=Fraction(0)) -> Optional[Fraction]:
        """Limit estimate along the canonical fiber (``f_L`` at a wormhole)."""
        return _settled(self.rows, Fraction(tol))

    def right(self, tol=Fraction(0)) -> Optional[Fraction]:
        """Limit estimate along the flipped fiber (``f_R``); the canonical one off wormholes."""
        return _settled(self.flipped_rows if self.flipped_rows is not None else self.rows, Fraction(tol))

    def value(self, tol=Fraction(0)) -> Optional[Fraction]:
        """``f_I`` if the finest quotients settle on both sides and agree."""
        left, right = self.left(tol), self.right(tol)
        if left is None or right is None or abs(left - right) > Fraction(tol):
            return None
        return left

    def exists(self, tol=Fraction(0)) -> bool:
        return self.value(tol) is not None

    def sides_agree(self, tol=Fraction(0)) -> Optional[bool]:
        if self.flipped_rows is None:
            return None
        left, right = self.left(tol), self.right(tol)
        return left is not None and right is not None and abs(left - right) <= Fraction(tol)


def _quotients(f: TestFunction, x: LaaksoPoint, address: CantorAddress, base: Fraction, scales) -> tuple[QuotientRow, ...]:
    rows = []
    for t in scales:
        fwd = bwd = None
        if x.height + t <= 1:
            fwd = (f(canonicalize(x.height + t, address)) - base) / t.to_fraction()
        if x.height - t >= 0:
            bwd = (base - f(canonicalize(x.height - t, address))) / t.to_fraction()
        if fwd is None and bwd is None:
            raise DomainError(f"step {t} leaves [0, 1] in both directions from {x.height}")
        rows.append(QuotientRow(t, fwd, bwd))
    return tuple(rows)


def directional_derivative(f: TestFunction, x: LaaksoPoint, scales: Sequence) -> DirectionalDerivative:
    """Difference quotients in the height direction at decreasing ``scales``.

    Each row carries the forward quotient ``(f[x1+t] - f[x])/t`` and the backward
    one ``(f[x] - f[x1-t])/t``; only one of them exists at heights 0 and 1.
    """
    ts = [s if isinstance(s, Triadic) else Triadic.from_fraction(s) for s in scales]
    if not ts:
        raise LaaksoError("no scales given")
    if any(t <= 0 for t in ts) or any(a <= b for a, b in zip(ts, ts[1:])):
        raise LaaksoError("scales must be positive and strictly decreasing")
    base = f(x)
    rows = _quotients(f, x, x.address, base, ts)
    flipped = None
    if x.order is not None:
        flipped = _quotients(f, x, x.address.flip(x.order), base, ts)
    return DirectionalDerivative(x, x.order, rows, flipped)


def triadic_scales(first: int, last: int) -> list[Triadic]:
    """``3^-first, ..., 3^-last``."""
    return [Triadic(1, k) for k in range(first, last + 1)]


# -- sampled quantities ----------------------------------------------------


@dataclass(frozen=True)
class SampledMax:
    value: Fraction
    samples: int
    argmax: Optional[LaaksoPoint]


def differentiability_residual(
    f: TestFunction,
    x: LaaksoPoint,
    df,
    r,
    count: int,
    rng: np.random.Generator,
    spec: Optional[MeasureSpec] = None,
) -> SampledMax:
    """Max of ``|f(y) - f(x) - Df (h(y) - h(x))| / d(y, x)`` over draws in ``B(x, r)``."""
    from .cantor import Bernoulli

    r = r if isinstance(r, Triadic) else Triadic.from_fraction(r)
    if r <= 0:
        raise RadiusError("radius must be positive")
    spec = Bernoulli(Fraction(1, 2)) if spec is None else spec
    df = Fraction(df)
    fx = f(x)
    best, arg = Fraction(0), None
    for _ in range(count):
        y = sample_in_ball(spec, x, r, rng)
        q = abs(f(y) - fx - df * (y.height - x.height).to_fraction()) / distance(x, y).to_fraction()
        if arg is None or q > best:
            best, arg = q, y
    return SampledMax(best, count, arg)


def lip_upper(
    f: TestFunction,
    x: LaaksoPoint,
    rho,
    count: int,
    rng: np.random.Generator,
    spec: Optional[MeasureSpec] = None,
) -> SampledMax:
    """Max of ``|f(y) - f(x)| / d(x, y)`` over draws in ``B(x, rho)``.

    A sampled lower estimate of the local Lipschitz constant; never above L.
    """
    return differentiability_residual(f, x, 0, rho, count, rng, spec)


def lip_sweep(f: TestFunction, x: LaaksoPoint, radii: Sequence, count: int, rng, spec=None) -> list[SampledMax]:
    return [lip_upper(f, x, rho, count, rng, spec) for rho in radii]
