"""Wormhole levels and points of the level-N space F_N.

A height ``k/3^n`` with ``3 ∤ k`` and ``0 < k < 3^n`` is a wormhole level of
order ``n``; there the fibers over addresses differing only in bit ``n`` are
glued. F_N keeps depth-N addresses and the identifications of orders ``<= N``.
Heights 0 and 1 are never wormhole levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .cantor import CantorAddress
from .errors import LaaksoError
from .triadic import Triadic


@dataclass(frozen=True, slots=True)
class WormholeLevel:
    order: int
    height: Triadic

    def __post_init__(self):
        if wormhole_order(self.height) != self.order:
            raise LaaksoError(f"{self.height} is not a wormhole level of order {self.order}")


def wormhole_levels(n: int) -> list[WormholeLevel]:
    if n < 1:
        raise LaaksoError("wormhole order must be >= 1")
    return [WormholeLevel(n, Triadic(k, n)) for k in range(1, 3**n) if k % 3]


def wormhole_order(h: Triadic) -> Optional[int]:
    """Order of ``h`` as a wormhole level, or ``None`` for 0, 1 and non-levels."""
    if not isinstance(h, Triadic):
        h = Triadic.from_fraction(h)
    if h.depth == 0:
        return None
    return h.depth if 0 < h.num < 3**h.depth else None


def level_below(x: int, scale: int, n: int) -> Optional[int]:
    """Largest order-n level ``<= x`` (heights as integers over ``3**scale``)."""
    g = 3 ** (scale - n)
    k = x // g
    if k % 3 == 0:
        k -= 1
    return k * g if k >= 1 else None


def level_above(y: int, scale: int, n: int) -> Optional[int]:
    """Smallest order-n level ``>= y`` (heights as integers over ``3**scale``)."""
    g = 3 ** (scale - n)
    k = -(-y // g)
    if k % 3 == 0:
        k += 1
    return k * g if k < 3**n else None


@dataclass(frozen=True, slots=True)
class LaaksoPoint:
    """A point of F_N in canonical form: at a wormhole of order ``n <= N``
    the address carries bit ``n`` = 0 (the representative with smaller x2)."""

    height: Triadic
    address: CantorAddress

    def __post_init__(self):
        if not isinstance(self.height, Triadic):
            object.__setattr__(self, "height", Triadic.from_fraction(self.height))
        if isinstance(self.address, str):
            object.__setattr__(self, "address", CantorAddress(self.address))
        if not 0 <= self.height <= 1:
            raise LaaksoError(f"height {self.height} outside [0, 1]")
        n = wormhole_order(self.height)
        if n is not None and n <= len(self.address) and self.address.bit(n):
            raise LaaksoError(f"({self}) is not canonical; use canonicalize()")

    @property
    def resolution(self) -> int:
        return len(self.address)

    @property
    def order(self) -> Optional[int]:
        """Wormhole order if it is identified in F_N, else None."""
        n = wormhole_order(self.height)
        return n if n is not None and n <= self.resolution else None

    def __str__(self) -> str:
        return f"{self.height} @ {self.address.bits}"

    @classmethod
    def parse(cls, text: str) -> "LaaksoPoint":
        """Parse ``"k/3^d @ bits"`` and canonicalize."""
        try:
            h, bits = text.split("@")
        except ValueError:
            raise LaaksoError(f"point must look like 'k/3^d @ bits', got {text!r}") from None
        return canonicalize(Triadic.parse(h), CantorAddress(bits.strip()))

    def truncate(self, n: int) -> "LaaksoPoint":
        return LaaksoPoint(self.height, self.address.prefix(n))


def canonicalize(
    height: Union[Triadic, int], address: Union[CantorAddress, str], N: Optional[int] = None
) -> LaaksoPoint:
    if isinstance(address, str):
        address = CantorAddress(address)
    if not isinstance(height, Triadic):
        height = Triadic.from_fraction(height)
    if N is not None and len(address) != N:
        raise LaaksoError(f"address length {len(address)} != resolution {N}")
    n = wormhole_order(height)
    if n is not None and n <= len(address) and address.bit(n):
        address = address.flip(n)
    return LaaksoPoint(height, address)


def representatives(p: LaaksoPoint) -> list[tuple[Triadic, CantorAddress]]:
    reps = [(p.height, p.address)]
    if p.order is not None:
        reps.append((p.height, p.address.flip(p.order)))
    return reps
