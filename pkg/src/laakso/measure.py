"""The measures mu = q_*(H^1 x nu) on the Laakso space.

Ball masses are bracketed rigorously. Fix a working resolution M. For an
address ``a`` of depth M, ``t -> d_M(x, (t, a))`` is 1-Lipschitz, and for every
point of F over the cylinder K_a the true distance lies in
``[d_M, d_M + 4/3^(M+1)]``: truncating addresses projects F-paths onto F_M
paths, and one extra sweep of length ``2/3^(M+1)`` meets a level of every
order beyond M. Height cells of width ``delta`` are then classified with the
tent bound from the two cell endpoints; undecided cells count toward the
upper bound only.

Only addresses that differ from the center in bits whose levels lie within
the ball's height window can be reached, so just those are enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .cantor import Bernoulli, CantorAddress, MeasureSpec, Split, cylinder_mass
from .errors import EmptySampleError, GridError, LaaksoError, ParameterOrderError, RadiusError, ResolutionError
from .metric import _extensions, distance
from .rng import bernoulli_exact
from .space import LaaksoPoint, canonicalize, level_above
from .triadic import Triadic


@dataclass(frozen=True, slots=True)
class Rectangle:
    """``q(J x K_a)`` with ``J = [lo, hi]``."""

    lo: Triadic
    hi: Triadic
    address: CantorAddress

    def __post_init__(self):
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if not isinstance(v, Triadic):
                object.__setattr__(self, name, Triadic.from_fraction(v))
        if isinstance(self.address, str):
            object.__setattr__(self, "address", CantorAddress(self.address))
        if not 0 <= self.lo <= self.hi <= 1:
            raise LaaksoError(f"bad interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Triadic:
        return self.hi - self.lo

    def contains_height(self, h) -> bool:
        return self.lo <= h <= self.hi

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}] x K_{self.address.bits or '-'}"


def rectangle_mass(spec: MeasureSpec, rect: Rectangle) -> Fraction:
    return rect.length.to_fraction() * cylinder_mass(spec, rect.address)


@dataclass(frozen=True, slots=True)
class BallMeasureBounds:
    lower: Fraction
    upper: Fraction
    resolution: int
    grid: Triadic

    def __post_init__(self):
        assert 0 <= self.lower <= self.upper <= 1, (self.lower, self.upper)


def _as_triadic(v) -> Triadic:
    return v if isinstance(v, Triadic) else Triadic.from_fraction(v)


def min_resolution(r: Triadic) -> int:
    """Smallest M with ``2/3^M < r/9``."""
    M = 0
    while Triadic(2, M) * 9 >= r:
        M += 1
    return M


def default_grid(r: Triadic) -> Triadic:
    """Largest power of 1/3 not exceeding ``r/27``."""
    k = 0
    while Triadic(27, k) > r:
        k += 1
    return Triadic(1, k)


def candidate_bits(x1: Triadic, r: Triadic, M: int) -> list[int]:
    """Orders ``n <= M`` with a level in ``[x1 - r, x1 + r]``."""
    scale = max(M, x1.depth, r.depth)
    lo = max(0, (x1 - r).scaled(scale))
    hi = min(3**scale, (x1 + r).scaled(scale))
    out = []
    for n in range(1, M + 1):
        lvl = level_above(lo, scale, n)
        if lvl is not None and lvl <= hi:
            out.append(n)
    return out


def reachable_addresses(x: LaaksoPoint, r: Triadic, M: Optional[int] = None) -> list[CantorAddress]:
    """Depth-M addresses that points of ``B(x, r)`` can carry."""
    M = x.resolution if M is None else M
    base = x.address.prefix(M)
    bits = candidate_bits(x.height, r, M)
    out = []
    for flips in product((0, 1), repeat=len(bits)):
        a = base
        for n, f in zip(bits, flips):
            if f:
                a = a.flip(n)
        out.append(a)
    return out


def ball_measure(
    spec: MeasureSpec,
    x: LaaksoPoint,
    r,
    grid=None,
    resolution: Optional[int] = None,
) -> BallMeasureBounds:
    """Certified bounds on ``mu(B(x, r))`` for the open ball.

    ``resolution`` picks the working depth M (default: the smallest M with
    ``2/3^M < r/9``); the point's address is truncated to it.
    """
    r = _as_triadic(r)
    if not 0 < r < 1:
        raise RadiusError(f"radius must lie in (0, 1), got {r}")
    delta = default_grid(r) if grid is None else _as_triadic(grid)
    if delta <= 0 or delta * 27 > r:
        raise GridError(f"grid step {delta} must satisfy 0 < delta <= r/27")
    M = min(x.resolution, min_resolution(r)) if resolution is None else resolution
    if M > x.resolution or Triadic(2, M) * 9 >= r:
        raise ResolutionError(f"resolution {M} does not satisfy 2/3^M < r/9 (point has N = {x.resolution})")

    xM = x.truncate(M)
    scale = max(M + 1, x.height.depth, r.depth, delta.depth)
    x1 = x.height.scaled(scale)
    rad = r.scaled(scale)
    step = delta.scaled(scale)
    tail = Triadic(4, M + 1).scaled(scale)  # extra cost of bits beyond M
    top = 3**scale
    k_lo = max(0, (x1 - rad) // step)
    k_hi = min(top // step, -(-(x1 + rad) // step))
    heights = [k * step for k in range(k_lo, k_hi + 1)]

    lower = Fraction(0)
    upper = Fraction(0)
    for a in reachable_addresses(xM, r, M):
        bits = xM.address.differing_bits(a)
        dists = []
        for t in heights:
            alpha, beta = _extensions(min(x1, t), max(x1, t), bits, scale)
            dists.append(abs(t - x1) + 2 * (alpha + beta))
        inside = undecided = 0
        for dl, dr in zip(dists, dists[1:]):
            # 1-Lipschitz tent bounds on the cell: [(dl+dr-step)/2, (dl+dr+step)/2]
            if dl + dr - step >= 2 * rad:
                continue
            if dl + dr + step + 2 * tail <= 2 * rad:
                inside += 1
            else:
                undecided += 1
        if inside or undecided:
            mass = cylinder_mass(spec, a) * delta.to_fraction()
            lower += inside * mass
            upper += (inside + undecided) * mass
    return BallMeasureBounds(lower, min(upper, Fraction(1)), M, delta)


def wormhole_fiber_upper(N: int, grid) -> Fraction:
    """Upper bound on the mass of all wormhole fibers of order ``<= N`` in the
    cell accounting: each fiber sits in the cell starting at or below it, so
    the bound is at most (number of levels) * delta."""
    delta = _as_triadic(grid)
    scale = max(N, delta.depth)
    step = delta.scaled(scale)
    cells = {Triadic(i, N).scaled(scale) // step for i in range(1, 3**N) if i % 3}
    return len(cells) * delta.to_fraction()


# -- reports ---------------------------------------------------------------


def doubling_bound(w: Fraction) -> Fraction:
    """``16 * max(w^-4, (1-w)^-4)``: the factor 8 from comparing the two
    rectangles, times two candidate cylinders, times the cylinder ratio bound."""
    w = Fraction(w)
    return 16 * max(w**-4, (1 - w) ** -4)


@dataclass(frozen=True)
class DoublingRow:
    center: LaaksoPoint
    r: Triadic
    lower_r: Fraction
    upper_2r: Fraction
    ratio_upper: Fraction
    bound: Fraction

    @property
    def passed(self) -> bool:
        return self.ratio_upper <= self.bound


def doubling_report(
    spec: Bernoulli,
    pairs: Sequence[tuple[LaaksoPoint, Triadic]],
    grid=None,
    resolution: Optional[int] = None,
) -> list[DoublingRow]:
    if not isinstance(spec, Bernoulli):
        raise LaaksoError("doubling report needs a Bernoulli measure")
    bound = doubling_bound(spec.w)
    rows = []
    for x, r in pairs:
        r = _as_triadic(r)
        if not 0 < r < Triadic(1, 1):
            raise RadiusError(f"doubling sweep needs 0 < r < 1/3, got {r}")
        g = default_grid(r) if grid is None else grid
        small = ball_measure(spec, x, r, grid=g, resolution=resolution)
        big = ball_measure(spec, x, r * 2, grid=g, resolution=resolution)
        ratio = big.upper / small.lower
        rows.append(DoublingRow(x, r, small.lower, big.upper, ratio, bound))
    return rows


@dataclass(frozen=True)
class AhlforsRow:
    center: LaaksoPoint
    k: int
    lower_ratio: Fraction
    upper_ratio: Fraction


def r_power_q(k: int) -> Fraction:
    """``(3^-k)^Q`` with ``Q = 1 + log 2 / log 3``: exactly ``6^-k``."""
    return Fraction(1, 6**k)


def ahlfors_report(points: Sequence[LaaksoPoint], ks: Sequence[int], resolution: Optional[int] = None) -> list[AhlforsRow]:
    spec = Bernoulli(Fraction(1, 2))
    rows = []
    for x in points:
        for k in ks:
            if k < 1:
                raise RadiusError("Ahlfors radii are 3^-k with k >= 1")
            b = ball_measure(spec, x, Triadic(1, k), resolution=resolution)
            rq = r_power_q(k)
            rows.append(AhlforsRow(x, k, b.lower / rq, b.upper / rq))
    return rows


def ahlfors_band(rows: Sequence[AhlforsRow]) -> Fraction:
    """Multiplicative width ``max upper / min lower`` of the brackets."""
    return max(r.upper_ratio for r in rows) / min(r.lower_ratio for r in rows)


@dataclass(frozen=True)
class NondoublingResult:
    m: int
    lower_double: Fraction
    upper_single: Fraction
    ratio: Fraction
    analytic: Fraction


def nondoubling_analytic(lam, lam_hat, m: int) -> Fraction:
    return 1 + (Fraction(lam_hat) / Fraction(lam)) ** (m - 2)


def nondoubling_ratio(lam, lam_hat, m: int, extra_resolution: int = 2, grid=None) -> NondoublingResult:
    """``lower(mu(2B_m)) / upper(mu(B_m))`` for ``B_m = B([1/3 + 3^-m, 0], 3^-m)``."""
    lam, lam_hat = Fraction(lam), Fraction(lam_hat)
    if lam >= lam_hat:
        raise ParameterOrderError("needs lambda < lambda_hat; otherwise mirror the center to address 1...1")
    if m < 3:
        raise LaaksoError("m must be at least 3")
    spec = Split(lam, lam_hat)
    r = Triadic(1, m)
    M = min_resolution(r) + extra_resolution
    x = canonicalize(Triadic(1, 1) + r, "0" * M)
    g = default_grid(r) if grid is None else grid
    single = ball_measure(spec, x, r, grid=g, resolution=M)
    double = ball_measure(spec, x, r * 2, grid=g, resolution=M)
    return NondoublingResult(m, double.lower, single.upper, double.lower / single.upper, nondoubling_analytic(lam, lam_hat, m))


# -- sampling --------------------------------------------------------------


def sample_point(spec: MeasureSpec, N: int, rng: np.random.Generator, height_depth: Optional[int] = None) -> LaaksoPoint:
    """Height uniform over the left ends of the ``3^-height_depth`` cells, address from nu."""
    from .cantor import sample_address

    hd = max(N, 12) if height_depth is None else height_depth
    h = Triadic(int(rng.integers(0, 3**hd)), hd)
    return canonicalize(h, sample_address(spec, N, rng) if N else CantorAddress(""))


def _conditional_address(spec: MeasureSpec, base: CantorAddress, free: Sequence[int], rng: np.random.Generator) -> CantorAddress:
    """Draw the ``free`` bits of ``base`` from nu conditioned on all other bits."""
    if not free:
        return base
    bits = list(base.bits)
    free_set = set(free)
    if isinstance(spec, Split) and 1 in free_set:
        # Posterior of the first bit given the fixed later bits.
        w0 = w1 = Fraction(1, 2)
        for i, ch in enumerate(bits[1:], start=2):
            if i in free_set:
                continue
            w0 *= spec.lam if ch == "0" else 1 - spec.lam
            w1 *= spec.lam_hat if ch == "0" else 1 - spec.lam_hat
        bits[0] = "0" if bernoulli_exact(rng, w0 / (w0 + w1)) else "1"
        free_set.discard(1)
    for n in sorted(free_set):
        p0 = spec.zero_probability("".join(bits[: n - 1]))
        bits[n - 1] = "0" if bernoulli_exact(rng, p0) else "1"
    return CantorAddress("".join(bits))


def sample_in_ball(
    spec: MeasureSpec,
    x: LaaksoPoint,
    r,
    rng: np.random.Generator,
    height_depth: Optional[int] = None,
    max_attempts: int = 10_000,
    exclude_center: bool = True,
) -> LaaksoPoint:
    """A draw from mu restricted to ``B(x, r)`` by rejection.

    Proposals come from mu restricted to the height window ``[x1 - r, x1 + r]``
    times the reachable cylinders, a superset of the ball, so accepted draws
    follow mu conditioned on the ball (heights on a triadic grid).
    """
    r = _as_triadic(r)
    if r <= 0:
        raise RadiusError("radius must be positive")
    hd = height_depth
    if hd is None:
        hd = max(x.resolution, default_grid(r).depth)
    free = candidate_bits(x.height, r, x.resolution)
    step = 3 ** (max(hd, x.height.depth) - hd)
    scale = max(hd, x.height.depth)
    x1 = x.height.scaled(scale)
    rad = r.scaled(scale) if r.depth <= scale else None
    lo = max(0, x1 - (rad if rad is not None else 3**scale)) // step
    hi = min(3**hd, -(-(x1 + (rad if rad is not None else 3**scale)) // step))
    for _ in range(max_attempts):
        h = Triadic(int(rng.integers(lo, hi + 1)) * step, scale)
        y = canonicalize(h, _conditional_address(spec, x.address, free, rng))
        if exclude_center and y == x:
            continue
        if distance(x, y) < r:
            return y
    raise EmptySampleError(f"no sample landed in B({x}, {r}) after {max_attempts} attempts")
