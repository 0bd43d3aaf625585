"""Exact triadic rationals ``k / 3**d``.

Heights, wormhole levels, radii and distances in the level-N Laakso space are
all of this form, so arithmetic stays in Python integers.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import total_ordering
from typing import Union

_TEXT = re.compile(r"^\s*(-?\d+)\s*(?:/\s*3\s*\^\s*(\d+))?\s*$")


def _canonical(num: int, depth: int) -> tuple[int, int]:
    if num == 0:
        return 0, 0
    while depth > 0 and num % 3 == 0:
        num //= 3
        depth -= 1
    return num, depth


@total_ordering
class Triadic:
    """The number ``num * 3**(-depth)`` in canonical form.

    Canonical means ``depth == 0`` or ``num`` is not divisible by 3. Mixed
    arithmetic with ``int`` stays triadic; with ``Fraction`` it falls back to
    ``Fraction``.
    """

    __slots__ = ("num", "depth")

    def __init__(self, num: int, depth: int = 0):
        if depth < 0:
            num, depth = num * 3 ** (-depth), 0
        self.num, self.depth = _canonical(int(num), int(depth))

    @classmethod
    def from_fraction(cls, value: Union[Fraction, int, "Triadic"]) -> "Triadic":
        if isinstance(value, Triadic):
            return value
        value = Fraction(value)
        den = value.denominator
        depth = 0
        while den % 3 == 0:
            den //= 3
            depth += 1
        if den != 1:
            raise ValueError(f"{value} is not a triadic rational")
        return cls(value.numerator, depth)

    @classmethod
    def parse(cls, text: str) -> "Triadic":
        """Parse ``"k/3^d"``, a plain integer, or any ``p/q`` with ``q`` a power of 3."""
        m = _TEXT.match(text)
        if m:
            return cls(int(m.group(1)), int(m.group(2) or 0))
        try:
            return cls.from_fraction(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse triadic rational from {text!r}") from exc

    @staticmethod
    def is_triadic(value: Union[Fraction, int, "Triadic"]) -> bool:
        if isinstance(value, (Triadic, int)):
            return True
        den = Fraction(value).denominator
        while den % 3 == 0:
            den //= 3
        return den == 1

    def scaled(self, depth: int) -> int:
        """Integer ``k`` with ``self == k / 3**depth``; ``depth`` must be >= self.depth."""
        if depth < self.depth:
            raise ValueError(f"depth {depth} is coarser than {self}")
        return self.num * 3 ** (depth - self.depth)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 3**self.depth)

    def __float__(self) -> float:
        return self.num / 3**self.depth

    def __str__(self) -> str:
        if self.depth == 0:
            return str(self.num)
        return f"{self.num}/3^{self.depth}"

    def __repr__(self) -> str:
        return f"Triadic({self.num}, {self.depth})"

    def __hash__(self) -> int:
        return hash(self.to_fraction())

    def _align(self, other: "Triadic") -> tuple[int, int, int]:
        d = max(self.depth, other.depth)
        return self.scaled(d), other.scaled(d), d

    def __eq__(self, other) -> bool:
        if isinstance(other, Triadic):
            return self.num == other.num and self.depth == other.depth
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        if isinstance(other, Triadic):
            a, b, _ = self._align(other)
            return a < b
        if isinstance(other, (int, Fraction)):
            return self.to_fraction() < other
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, int):
            other = Triadic(other)
        if isinstance(other, Triadic):
            a, b, d = self._align(other)
            return Triadic(a + b, d)
        if isinstance(other, Fraction):
            return self.to_fraction() + other
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "Triadic":
        return Triadic(-self.num, self.depth)

    def __sub__(self, other):
        if isinstance(other, (int, Triadic)):
            return self + (-other)
        if isinstance(other, Fraction):
            return self.to_fraction() - other
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return Triadic(self.num * other, self.depth)
        if isinstance(other, Triadic):
            return Triadic(self.num * other.num, self.depth + other.depth)
        if isinstance(other, Fraction):
            return self.to_fraction() * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Triadic):
            return self.to_fraction() / other.to_fraction()
        return self.to_fraction() / other

    def __rtruediv__(self, other):
        return other / self.to_fraction()

    def __abs__(self) -> "Triadic":
        return Triadic(abs(self.num), self.depth)

    def __bool__(self) -> bool:
        return self.num != 0

    def __reduce__(self):
        return (Triadic, (self.num, self.depth))


def third_power(k: int) -> Triadic:
    """``3**(-k)`` as a Triadic."""
    return Triadic(1, k)


ZERO = Triadic(0)
ONE = Triadic(1)
