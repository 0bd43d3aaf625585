"""Exact geodesic distance in F_N.

A path in F_N moves vertically inside fibers and may switch fiber at a
wormhole. If it sweeps the height interval ``[lo, hi]`` it can flip exactly
the bits whose order has a level in ``[lo, hi]``, and the cheapest way to sweep
``[lo, hi]`` from the lower endpoint to the upper one is down-up-down. So

    d(x, y) = (y1 - x1) + 2 * (alpha + beta)

where ``alpha = x1 - lo`` and ``beta = hi - y1`` are the smallest extensions
covering one level of every differing bit. Each unresolved bit is sent either
down (cost ``x1 - level_below``) or up (``level_above - y1``); the optimum over
assignments is a threshold on the down-costs, found by sort-and-sweep.

Flipping a bit that already agrees (using its level twice) only adds covering
constraints, so it never shortens a path and is not searched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .cantor import CantorAddress
from .errors import DegenerateInputError, GridError, ResolutionError, ResolutionMismatchError
from .space import (
    LaaksoPoint,
    WormholeLevel,
    canonicalize,
    level_above,
    level_below,
    representatives,
    wormhole_order,
)
from .triadic import Triadic

ORACLE_MAX_N = 9


def _check_pair(x: LaaksoPoint, y: LaaksoPoint) -> int:
    if x.resolution != y.resolution:
        raise ResolutionMismatchError(f"resolutions differ: {x.resolution} vs {y.resolution}")
    return x.resolution


def _has_level_between(lo: int, hi: int, scale: int, n: int) -> bool:
    lvl = level_above(lo, scale, n)
    return lvl is not None and lvl <= hi


def _extensions(lo_h: int, hi_h: int, bits: Iterable[int], scale: int) -> tuple[int, int]:
    """Optimal ``(alpha, beta)`` for heights ``lo_h <= hi_h`` and differing ``bits``.

    Ties go to the smaller alpha.
    """
    pending = []
    for n in bits:
        if _has_level_between(lo_h, hi_h, scale, n):
            continue
        below = level_below(lo_h, scale, n)
        above = level_above(hi_h, scale, n)
        pending.append((None if below is None else lo_h - below, None if above is None else above - hi_h))
    if not pending:
        return 0, 0

    inf = None
    pending.sort(key=lambda du: (du[0] is None, du[0] or 0))
    m = len(pending)
    # suffix_up[i] = max up-cost of items i.. (None means some item cannot go up)
    suffix_up: list[Optional[int]] = [0] * (m + 1)
    for i in range(m - 1, -1, -1):
        u = pending[i][1]
        rest = suffix_up[i + 1]
        suffix_up[i] = inf if u is None or rest is None else max(u, rest)

    best: Optional[tuple[int, int]] = None
    # Threshold i: items [0, i) go down, items [i, m) go up.
    for i in range(m + 1):
        if i < m and i > 0 and pending[i][0] == pending[i - 1][0]:
            continue
        if i > 0 and pending[i - 1][0] is None:
            break
        alpha = pending[i - 1][0] if i > 0 else 0
        beta = suffix_up[i]
        if beta is None:
            continue
        if best is None or alpha + beta < sum(best):
            best = (alpha, beta)
    assert best is not None, "every bit has a level on one side"
    return best


@dataclass(frozen=True)
class _Plan:
    """Optimal covering interval for one representative pair."""

    length: int
    scale: int
    alpha: int
    beta: int
    start: CantorAddress
    end: CantorAddress
    bits: tuple[int, ...]


def _plan(x: LaaksoPoint, y: LaaksoPoint) -> _Plan:
    n = _check_pair(x, y)
    scale = max(n, x.height.depth, y.height.depth)
    x1, y1 = x.height.scaled(scale), y.height.scaled(scale)
    lo_h, hi_h = min(x1, y1), max(x1, y1)
    best = None
    for _, xa in representatives(x):
        for _, ya in representatives(y):
            bits = tuple(xa.differing_bits(ya))
            alpha, beta = _extensions(lo_h, hi_h, bits, scale)
            length = hi_h - lo_h + 2 * (alpha + beta)
            if best is None or length < best.length:
                best = _Plan(length, scale, alpha, beta, xa, ya, bits)
    return best


def distance(x: LaaksoPoint, y: LaaksoPoint) -> Triadic:
    p = _plan(x, y)
    return Triadic(p.length, p.scale)


@dataclass(frozen=True, slots=True)
class Segment:
    from_height: Triadic
    to_height: Triadic
    address: CantorAddress
    start_time: Triadic

    @property
    def length(self) -> Triadic:
        return abs(self.to_height - self.from_height)


@dataclass(frozen=True, slots=True)
class Jump:
    level: WormholeLevel
    bit: int
    time: Triadic


@dataclass
class GeodesicPath:
    start: LaaksoPoint
    end: LaaksoPoint
    segments: list[Segment]
    jumps: list[Jump]
    total_length: Triadic
    low: Triadic
    high: Triadic
    start_address: CantorAddress = field(default=None)

    @property
    def interval(self) -> tuple[Triadic, Triadic]:
        return self.low, self.high

    def direction_changes(self) -> int:
        signs = [1 if s.to_height > s.from_height else -1 for s in self.segments if s.length]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    def point_at(self, t) -> LaaksoPoint:
        t = Triadic.from_fraction(t) if not isinstance(t, Triadic) else t
        if not self.segments:
            return self.start
        for seg in self.segments:
            if t <= seg.start_time + seg.length:
                offset = t - seg.start_time
                h = seg.from_height + offset if seg.to_height >= seg.from_height else seg.from_height - offset
                return canonicalize(h, seg.address)
        return self.end

    def used_orders(self) -> list[int]:
        return [j.level.order for j in self.jumps]


def _first_hit(u: int, v: int, scale: int, n: int) -> Optional[int]:
    """First order-n level met when moving from height u to v (inclusive)."""
    if v < u:
        lvl = level_below(u, scale, n)
        return lvl if lvl is not None and lvl >= v else None
    lvl = level_above(u, scale, n)
    return lvl if lvl is not None and lvl <= v else None


def geodesic(x: LaaksoPoint, y: LaaksoPoint) -> GeodesicPath:
    """A shortest path of shape down-up-down (from the lower endpoint).

    Every differing bit flips at the first order-n level the path meets.
    """
    p = _plan(x, y)
    s = p.scale
    x1, y1 = x.height.scaled(s), y.height.scaled(s)
    lo, hi = min(x1, y1) - p.alpha, max(x1, y1) + p.beta
    turns = [x1, lo, hi, y1] if x1 <= y1 else [x1, hi, lo, y1]

    flips = []  # (time, height, bit)
    for n in p.bits:
        elapsed = 0
        for u, v in zip(turns, turns[1:]):
            hit = _first_hit(u, v, s, n)
            if hit is not None:
                flips.append((elapsed + abs(hit - u), hit, n))
                break
            elapsed += abs(v - u)
        else:  # pragma: no cover - guarded by optimality of the plan
            raise AssertionError(f"bit {n} has no level on the geodesic")
    flips.sort()

    # Break points: turning heights and jumps, in time order.
    events = []
    elapsed = 0
    for u, v in zip(turns, turns[1:]):
        events.append((elapsed, u))
        elapsed += abs(v - u)
    events.append((elapsed, y1))
    times = sorted({t for t, _ in events} | {t for t, _, _ in flips})

    def height_at(t: int) -> int:
        e = 0
        for u, v in zip(turns, turns[1:]):
            if t <= e + abs(v - u):
                return u + (t - e) * (1 if v >= u else -1)
            e += abs(v - u)
        return y1

    address = p.start
    segments: list[Segment] = []
    jumps: list[Jump] = []
    fi = 0
    for t0, t1 in zip(times, times[1:] + [None]):
        while fi < len(flips) and flips[fi][0] == t0:
            _, h, n = flips[fi]
            jumps.append(Jump(WormholeLevel(n, Triadic(h, s)), n, Triadic(t0, s)))
            address = address.flip(n)
            fi += 1
        if t1 is None:
            break
        h0, h1 = height_at(t0), height_at(t1)
        if h0 != h1:
            segments.append(Segment(Triadic(h0, s), Triadic(h1, s), address, Triadic(t0, s)))

    return GeodesicPath(
        start=x,
        end=y,
        segments=segments,
        jumps=jumps,
        total_length=Triadic(p.length, s),
        low=Triadic(lo, s),
        high=Triadic(hi, s),
        start_address=p.start,
    )


def validate_path(path: GeodesicPath) -> list[str]:
    """Replay a path and list every broken invariant (empty list = valid)."""
    problems = []
    x, y = path.start, path.end
    address = path.start_address
    if canonicalize(x.height, address) != x:
        problems.append("start address is not a representative of the start point")
    pending = sorted(path.jumps, key=lambda j: j.time.to_fraction())
    h = x.height
    t = Triadic(0)
    total = Triadic(0)
    ji = 0

    def apply_jumps(upto: Triadic, height: Triadic):
        nonlocal address, ji
        while ji < len(pending) and pending[ji].time == upto:
            j = pending[ji]
            if j.level.height != height:
                problems.append(f"jump at {j.level.height} taken at height {height}")
            if j.bit != j.level.order:
                problems.append(f"jump at order {j.level.order} flips bit {j.bit}")
            address = address.flip(j.bit)
            ji += 1

    for seg in path.segments:
        apply_jumps(t, h)
        if seg.from_height != h:
            problems.append(f"discontinuity at height {h} -> {seg.from_height}")
        if seg.address != address:
            problems.append(f"segment address {seg.address} != replayed {address}")
        if seg.start_time != t:
            problems.append(f"segment starts at time {seg.start_time}, expected {t}")
        t = t + seg.length
        total = total + seg.length
        h = seg.to_height
    apply_jumps(t, h)
    if ji != len(pending):
        problems.append("jumps left over after replay")
    if canonicalize(h, address) != y:
        problems.append(f"path ends at {canonicalize(h, address)}, not {y}")
    if total != path.total_length:
        problems.append(f"segment lengths sum to {total}, declared {path.total_length}")
    if path.direction_changes() > 2:
        problems.append(f"{path.direction_changes()} direction changes")
    return problems


def distance_level(d: Triadic) -> int:
    """The integer N with ``3**-N <= d < 3**-(N-1)``."""
    if d <= 0:
        raise DegenerateInputError("distance level of zero is undefined")
    k = 0
    while Triadic(1, k) > d:
        k += 1
    while Triadic(1, k - 1) <= d:
        k -= 1
    return k


@dataclass
class SegmentDecomposition:
    total: Triadic
    distance_level: int
    orders: list[int]
    lambdas: list[Triadic]
    mu: list[Triadic]
    points: list[LaaksoPoint]
    path: GeodesicPath

    def sum_mu(self) -> Triadic:
        return sum(self.mu, Triadic(0))

    def low_order_jumps(self) -> int:
        return sum(1 for n in self.orders if n <= self.distance_level - 1)

    def checks(self) -> dict[str, bool]:
        d = self.total
        return {
            "sum_mu_le_11d": self.sum_mu() <= d * 11,
            "lambda0_le_d": not self.lambdas or self.lambdas[0] <= d,
            "lambda_i_bound": all(
                lam <= Triadic(2, n - 1) for n, lam in zip(self.orders[1:], self.lambdas[1:])
            ),
            "at_most_one_low_order": self.low_order_jumps() <= 1,
        }


def segment_decomposition(x: LaaksoPoint, y: LaaksoPoint) -> SegmentDecomposition:
    """Break times of the geodesic: jump times ordered by wormhole order, and
    their decreasing merge with the total length T."""
    if x == y:
        raise DegenerateInputError("segment decomposition needs x != y")
    path = geodesic(x, y)
    T = path.total_length
    by_order = sorted(path.jumps, key=lambda j: j.level.order)
    orders = [j.level.order for j in by_order]
    lambdas = [j.time for j in by_order]
    mu = sorted({T, *(lam for lam in lambdas if lam > 0)}, key=lambda v: v.to_fraction(), reverse=True)
    return SegmentDecomposition(
        total=T,
        distance_level=distance_level(T),
        orders=orders,
        lambdas=lambdas,
        mu=mu,
        points=[path.point_at(m) for m in mu],
        path=path,
    )


# --------------------------------------------------------------------------
# Brute-force oracle: shortest paths on the level-N grid graph.
#
# Vertices are (i, a): height i/3^N and address a (bit n of the address is
# bit n-1 of the integer a). Vertical edges join (i, a)-(i+1, a) with length
# one grid step; at an interior row i of order n, (i, a) and (i, a ^ 2^(n-1))
# are the same vertex. Distances are relaxed by alternating downward and
# upward Gauss-Seidel sweeps until nothing changes (Bellman-Ford to a fixed
# point). XOR by a constant address is a graph automorphism, so every source
# is translated to address 0.
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _row_masks(N: int) -> tuple[int, ...]:
    masks = [0]
    for i in range(1, 3**N):
        n = wormhole_order(Triadic(i, N))
        masks.append(1 << (n - 1))
    masks.append(0)
    return tuple(masks)


@lru_cache(maxsize=None)
def _row_perms(N: int) -> tuple[Optional[np.ndarray], ...]:
    idx = np.arange(2**N)
    return tuple(None if m == 0 else idx ^ m for m in _row_masks(N))


def _grid_index(h: Triadic, N: int) -> int:
    if h.depth > N:
        raise GridError(f"height {h} is not on the 3^-{N} grid")
    return h.scaled(N)


def _sweep_distances(N: int, sources: Sequence[int]) -> np.ndarray:
    """Grid distances from ``(i, 0)`` for each source row ``i``: shape (rows, 2^N, S)."""
    H, A, S = 3**N + 1, 2**N, len(sources)
    big = np.iinfo(np.int32).max // 4
    dist = np.full((H, A, S), big, dtype=np.int32)
    perms = _row_perms(N)
    for k, i in enumerate(sources):
        dist[i, 0, k] = 0
        if perms[i] is not None:
            dist[i, perms[i][0], k] = 0
    while True:
        before = int(dist.sum(dtype=np.int64))
        for rows in (range(H - 2, -1, -1), range(1, H)):
            step = 1 if rows.step < 0 else -1
            for i in rows:
                row = dist[i]
                np.minimum(row, dist[i + step] + 1, out=row)
                perm = perms[i]
                if perm is not None:
                    np.minimum(row, row[perm], out=row)
        if int(dist.sum(dtype=np.int64)) == before:
            return dist


def distance_oracle_many(pairs: Sequence[tuple[LaaksoPoint, LaaksoPoint]], batch: int = 16) -> list[Triadic]:
    """Oracle distances for many pairs, batching pairs that share a source height."""
    if not pairs:
        return []
    N = pairs[0][0].resolution
    if N > ORACLE_MAX_N:
        raise ResolutionError(f"oracle is limited to N <= {ORACLE_MAX_N}, got {N}")
    jobs = []
    for x, y in pairs:
        if _check_pair(x, y) != N:
            raise ResolutionMismatchError("all oracle pairs must share one resolution")
        jobs.append((_grid_index(x.height, N), _grid_index(y.height, N), x.address.as_int() ^ y.address.as_int()))
    sources = sorted({j[0] for j in jobs})
    out: dict[tuple[int, int, int], int] = {}
    for b in range(0, len(sources), batch):
        chunk = sources[b : b + batch]
        col = {s: k for k, s in enumerate(chunk)}
        dist = _sweep_distances(N, chunk)
        for j in jobs:
            if j[0] in col:
                out[j] = int(dist[j[1], j[2], col[j[0]]])
    return [Triadic(out[j], N) for j in jobs]


def distance_oracle(x: LaaksoPoint, y: LaaksoPoint) -> Triadic:
    """Shortest-path distance on the level-N grid graph; heights must lie on the grid."""
    return distance_oracle_many([(x, y)])[0]


def grid_points(N: int) -> list[LaaksoPoint]:
    """Every canonical grid point of F_N (heights ``i/3^N``)."""
    pts = []
    for i in range(3**N + 1):
        h = Triadic(i, N)
        n = wormhole_order(h)
        for a in CantorAddress.all_of_length(N):
            if n is not None and n <= N and a.bit(n):
                continue
            pts.append(LaaksoPoint(h, a))
    return pts
