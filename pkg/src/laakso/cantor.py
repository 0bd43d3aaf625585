"""Cylinders of the middle-thirds Cantor set and the measures living on them.

A :class:`CantorAddress` ``b_1...b_N`` names the cylinder ``K_b``: bit 0 picks
the left third, bit 1 the right third. Only cylinders are ever queried, never
individual points; a caller that needs a point uses the left endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Union

import numpy as np

from .errors import LaaksoError, RadiusError, ResolutionError
from .rng import bernoulli_exact
from .triadic import Triadic


@dataclass(frozen=True, slots=True)
class CantorAddress:
    bits: str = ""

    def __post_init__(self):
        if self.bits.strip("01"):
            raise ValueError(f"address must be a 0/1 string, got {self.bits!r}")

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return self.bits

    def bit(self, n: int) -> int:
        """Bit ``n`` (1-based, matching wormhole orders)."""
        return 1 if self.bits[n - 1] == "1" else 0

    def flip(self, n: int) -> "CantorAddress":
        b = self.bits
        return CantorAddress(b[: n - 1] + ("0" if b[n - 1] == "1" else "1") + b[n:])

    def with_bit(self, n: int, value: int) -> "CantorAddress":
        b = self.bits
        return CantorAddress(b[: n - 1] + str(value) + b[n:])

    def prefix(self, k: int) -> "CantorAddress":
        return CantorAddress(self.bits[:k])

    def child(self, bit: int) -> "CantorAddress":
        return CantorAddress(self.bits + str(bit))

    @property
    def zeros(self) -> int:
        return self.bits.count("0")

    def left_endpoint(self) -> Triadic:
        k = 0
        for ch in self.bits:
            k = 3 * k + (2 if ch == "1" else 0)
        return Triadic(k, len(self.bits))

    def differing_bits(self, other: "CantorAddress") -> list[int]:
        if len(self) != len(other):
            raise ValueError("addresses have different lengths")
        return [i + 1 for i, (a, b) in enumerate(zip(self.bits, other.bits)) if a != b]

    def as_int(self) -> int:
        """Bits packed little-endian: bit n of the address is bit n-1 of the integer."""
        v = 0
        for i, ch in enumerate(self.bits):
            if ch == "1":
                v |= 1 << i
        return v

    @classmethod
    def from_int(cls, value: int, length: int) -> "CantorAddress":
        return cls("".join("1" if value >> i & 1 else "0" for i in range(length)))

    @classmethod
    def all_of_length(cls, n: int) -> Iterator["CantorAddress"]:
        for v in range(2**n):
            yield cls(format(v, f"0{n}b") if n else "")


def _unit_rational(value, name: str) -> Fraction:
    value = Fraction(value)
    if not 0 < value < 1:
        raise LaaksoError(f"{name} must lie strictly inside (0, 1), got {value}")
    return value


@dataclass(frozen=True, slots=True)
class Bernoulli:
    """The measure giving proportion ``w`` to every left child."""

    w: Fraction

    def __post_init__(self):
        object.__setattr__(self, "w", _unit_rational(self.w, "w"))

    def zero_probability(self, prefix: str) -> Fraction:
        return self.w

    def __str__(self) -> str:
        return f"bernoulli({self.w})"


@dataclass(frozen=True, slots=True)
class Split:
    """Mass 1/2 on each first-level copy, then proportion ``lam`` (under K_0)
    or ``lam_hat`` (under K_1) to every left child."""

    lam: Fraction
    lam_hat: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", _unit_rational(self.lam, "lambda"))
        object.__setattr__(self, "lam_hat", _unit_rational(self.lam_hat, "lambda_hat"))

    def zero_probability(self, prefix: str) -> Fraction:
        if not prefix:
            return Fraction(1, 2)
        return self.lam if prefix[0] == "0" else self.lam_hat

    def __str__(self) -> str:
        return f"split({self.lam},{self.lam_hat})"


MeasureSpec = Union[Bernoulli, Split]


def parse_spec(text: str) -> MeasureSpec:
    """``"1/3"`` or ``"bernoulli(1/3)"`` -> Bernoulli; ``"split(3/10,3/5)"`` -> Split."""
    t = text.strip().lower().replace(" ", "")
    if t.startswith("split(") and t.endswith(")"):
        lam, lam_hat = t[6:-1].split(",")
        return Split(Fraction(lam), Fraction(lam_hat))
    if t.startswith("bernoulli(") and t.endswith(")"):
        t = t[10:-1]
    return Bernoulli(Fraction(t))


def cylinder_mass(spec: MeasureSpec, a: CantorAddress) -> Fraction:
    bits = a.bits if isinstance(a, CantorAddress) else a
    if isinstance(spec, Bernoulli):
        s = bits.count("0")
        return spec.w**s * (1 - spec.w) ** (len(bits) - s)
    mass = Fraction(1)
    for i, ch in enumerate(bits):
        p0 = spec.zero_probability(bits[:i])
        mass *= p0 if ch == "0" else 1 - p0
    return mass


def nu_ball_mass(
    spec: MeasureSpec, center: CantorAddress, r, depth: int | None = None
) -> tuple[Fraction, Fraction]:
    """Two-sided bounds on the measure of the Euclidean ball ``B(c, r)`` in K.

    ``c`` is the left endpoint of the center cylinder. Cylinders are refined
    down to ``depth`` (default ``len(center)``); those straddling the ball's
    boundary count toward the upper bound only. Single points carry no mass,
    so open and closed balls get the same bounds.
    """
    r = Triadic.from_fraction(r) if not isinstance(r, Triadic) else r
    n = len(center) if depth is None else depth
    if n < len(center):
        raise ResolutionError("refinement depth is shallower than the center address")
    if r <= 0:
        raise RadiusError(f"radius must be positive, got {r}")
    if Triadic(1, n) >= r:
        raise ResolutionError(f"resolution 3^-{n} is not finer than r = {r}")

    scale = max(n, r.depth)
    c = center.left_endpoint().scaled(scale)
    rad = r.scaled(scale)
    lo_ball, hi_ball = c - rad, c + rad

    lower = Fraction(0)
    boundary = Fraction(0)
    # (left endpoint scaled, depth, prefix bits, mass)
    stack = [(0, 0, "", Fraction(1))]
    while stack:
        left, k, bits, mass = stack.pop()
        width = 3 ** (scale - k)
        right = left + width
        if right <= lo_ball or left >= hi_ball:
            continue
        if left >= lo_ball and right <= hi_ball:
            lower += mass
            continue
        if k == n:
            boundary += mass
            continue
        p0 = spec.zero_probability(bits)
        step = 3 ** (scale - k - 1)
        stack.append((left, k + 1, bits + "0", mass * p0))
        stack.append((left + 2 * step, k + 1, bits + "1", mass * (1 - p0)))
    return lower, lower + boundary


def _bernoulli_bits(w: Fraction, depth: int, rng: np.random.Generator) -> str:
    """Sampler kernel: each bit is 0 with probability ``w`` (any w in [0, 1])."""
    zero = bernoulli_exact(rng, Fraction(w), size=depth)
    return "".join("0" if z else "1" for z in zero)


def sample_address(spec: MeasureSpec, depth: int, rng: np.random.Generator) -> CantorAddress:
    if depth < 1:
        raise LaaksoError("depth must be at least 1")
    if isinstance(spec, Bernoulli):
        return CantorAddress(_bernoulli_bits(spec.w, depth, rng))
    first = "0" if bernoulli_exact(rng, Fraction(1, 2)) else "1"
    rest = _bernoulli_bits(spec.lam if first == "0" else spec.lam_hat, depth - 1, rng)
    return CantorAddress(first + rest)


def sample_address_matrix(spec: MeasureSpec, depth: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` addresses as a ``(count, depth)`` uint8 array of bits, drawn in one batch."""
    if isinstance(spec, Bernoulli):
        zero = bernoulli_exact(rng, spec.w, size=(count, depth))
        return (~zero).astype(np.uint8)
    first_zero = bernoulli_exact(rng, Fraction(1, 2), size=count)
    u0 = bernoulli_exact(rng, spec.lam, size=(count, depth - 1))
    u1 = bernoulli_exact(rng, spec.lam_hat, size=(count, depth - 1))
    rest_zero = np.where(first_zero[:, None], u0, u1)
    return np.concatenate([~first_zero[:, None], ~rest_zero], axis=1).astype(np.uint8)


@dataclass(frozen=True, slots=True)
class DigitStats:
    n: int
    partial_means: tuple[Fraction, ...]

    @property
    def final_mean(self) -> Fraction:
        return self.partial_means[-1] if self.partial_means else Fraction(0)


def digit_statistics(a: CantorAddress) -> DigitStats:
    """Running zero-digit frequencies ``S_k / k`` for ``k = 1..N``."""
    means = []
    s = 0
    for k, ch in enumerate(a.bits, start=1):
        s += ch == "0"
        means.append(Fraction(s, k))
    return DigitStats(len(a), tuple(means))


def nu_doubling_bound(w) -> Fraction:
    """``w^-2 (1-w)^-2``."""
    w = Fraction(w)
    return 1 / (w * w * (1 - w) * (1 - w))


@dataclass(frozen=True, slots=True)
class NuDoublingRow:
    center: CantorAddress
    r: Triadic
    lower_r: Fraction
    upper_2r: Fraction
    depth: int
    bound: Fraction

    @property
    def ratio(self) -> Fraction:
        return self.upper_2r / self.lower_r

    @property
    def passed(self) -> bool:
        return self.ratio <= self.bound


def refined_ball_mass(spec: MeasureSpec, center: CantorAddress, r, rel_slack=Fraction(1, 100), max_depth: int = 40):
    """``nu_ball_mass`` refined until ``upper - lower <= rel_slack * lower``.

    Returns ``(lower, upper, depth)``; stops at ``max_depth`` regardless.
    """
    r = Triadic.from_fraction(r) if not isinstance(r, Triadic) else r
    depth = len(center)
    while Triadic(1, depth) >= r:
        depth += 1
    while True:
        lo, hi = nu_ball_mass(spec, center, r, depth)
        if hi - lo <= rel_slack * lo or depth >= max_depth:
            return lo, hi, depth
        depth += 1


def nu_doubling_report(spec: Bernoulli, pairs, rel_slack=Fraction(1, 100)) -> list[NuDoublingRow]:
    """Certified ``upper nu(B(c, 2r)) / lower nu(B(c, r))`` for each ``(center, r)``."""
    if not isinstance(spec, Bernoulli):
        raise LaaksoError("the doubling constant is stated for Bernoulli measures")
    bound = nu_doubling_bound(spec.w)
    rows = []
    for center, r in pairs:
        r = Triadic.from_fraction(r) if not isinstance(r, Triadic) else r
        if not 0 < r <= Triadic(1, 2):
            raise RadiusError(f"doubling sweep needs 0 < r <= 1/9, got {r}")
        lo, _, d1 = refined_ball_mass(spec, center, r, rel_slack)
        _, hi, d2 = refined_ball_mass(spec, center, r * 2, rel_slack)
        rows.append(NuDoublingRow(center, r, lo, hi, max(d1, d2), bound))
    return rows


@dataclass(frozen=True, slots=True)
class SingularityResult:
    w_left: Fraction
    w_right: Fraction
    depth: int
    samples: int
    misclassified: int
    threshold: Fraction

    @property
    def failure_probability_bound(self) -> float:
        """Hoeffding: ``2 samples exp(-2 depth gap^2)`` over both populations."""
        gap = float(min(abs(self.threshold - self.w_left), abs(self.w_right - self.threshold)))
        return 2 * self.samples * 2 * float(np.exp(-2 * self.depth * gap * gap))

    @property
    def exact_failure_probability(self) -> Fraction:
        """Union bound with exact binomial tails: ``samples * (P_left + P_right)``."""
        n, t = self.depth, self.threshold
        # left draws fail when S_n >= t n, right draws when S_n < t n
        cut = next(k for k in range(n + 1) if k * t.denominator >= t.numerator * n)
        left = sum(comb(n, k) * self.w_left**k * (1 - self.w_left) ** (n - k) for k in range(cut, n + 1))
        right = sum(comb(n, k) * self.w_right**k * (1 - self.w_right) ** (n - k) for k in range(cut))
        return self.samples * (left + right)


def singularity_test(
    w_left, w_right, depth: int, samples: int, rng: np.random.Generator, threshold=Fraction(1, 2)
) -> SingularityResult:
    """Classify draws of nu_{w_left} and nu_{w_right} by the zero-digit frequency
    ``S_n / n`` against ``threshold``; count misclassifications."""
    w_left, w_right, threshold = Fraction(w_left), Fraction(w_right), Fraction(threshold)
    if not w_left < threshold < w_right:
        raise LaaksoError("need w_left < threshold < w_right")
    bad = 0
    for w, below in ((w_left, True), (w_right, False)):
        bits = sample_address_matrix(Bernoulli(w), depth, samples, rng)
        zeros = depth - bits.sum(axis=1, dtype=np.int64)
        # S_n / n < threshold  <=>  S_n * den < num * n, kept in integers
        is_below = zeros * threshold.denominator < threshold.numerator * depth
        bad += int(np.count_nonzero(is_below != below))
    return SingularityResult(w_left, w_right, depth, samples, bad, threshold)
