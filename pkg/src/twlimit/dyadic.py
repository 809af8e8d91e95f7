"""Exact coordinates: dyadic fractions, q + c*sqrt(2) torus points, and the zeta bit de-interleave."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Dyadic:
    """``num / 2**bits`` in [0, 1); ``bits`` is the explicit stored length."""

    num: int
    bits: int

    def __post_init__(self):
        if self.bits < 0 or not 0 <= self.num < (1 << self.bits) or (self.bits == 0 and self.num):
            raise ValueError(f"invalid dyadic {self.num}/2^{self.bits}")

    @classmethod
    def from_fraction(cls, x: Fraction) -> "Dyadic":
        x = Fraction(x)
        den = x.denominator
        if den & (den - 1) or not 0 <= x < 1:
            raise ValueError(f"{x} is not a dyadic in [0, 1)")
        return cls(x.numerator, den.bit_length() - 1)

    @classmethod
    def from_bitstring(cls, s: str) -> "Dyadic":
        return cls(int(s, 2) if s else 0, len(s))

    def bitstring(self) -> str:
        return format(self.num, f"0{self.bits}b") if self.bits else ""

    @cached_property
    def _key(self) -> tuple[int, int]:
        if self.num == 0:
            return 0, 0
        tz = (self.num & -self.num).bit_length() - 1
        return self.num >> tz, self.bits - tz

    def _reduced(self) -> tuple[int, int]:
        return self._key

    def __eq__(self, other):
        return isinstance(other, Dyadic) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __float__(self):
        return self.num / (1 << self.bits) if self.bits else 0.0

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.bits)

    def mul_mod1(self, m: int) -> "Dyadic":
        return Dyadic((self.num * m) % (1 << self.bits), self.bits) if self.bits else self

    def hex(self) -> str:
        return f"{self.num:x}/{self.bits}"

    @classmethod
    def from_hex(cls, s: str) -> "Dyadic":
        num, bits = s.split("/")
        return cls(int(num, 16), int(bits))

    def __repr__(self):
        return f"Dyadic({self.bitstring() or '0'}b)"


ZERO = Dyadic(0, 0)


@dataclass(frozen=True)
class TorusCoord:
    """The point (q + c*sqrt(2)) mod 1; pairs are canonical since sqrt(2) is irrational."""

    q: Dyadic
    c: int = 0

    def shift(self) -> "TorusCoord":
        return TorusCoord(self.q, self.c + 1)

    def __float__(self):
        return (float(self.q) + self.c * SQRT2) % 1.0

    def hex(self) -> str:
        return f"{self.q.hex()}+{self.c}r2"

    @classmethod
    def from_hex(cls, s: str) -> "TorusCoord":
        q, c = s.rsplit("+", 1)
        return cls(Dyadic.from_hex(q), int(c[:-2]))


def zeta(d: int, x: Dyadic) -> tuple[Dyadic, ...]:
    """Round-robin de-interleave: coordinate r (1-based) takes bits r, r+d, r+2d, ... of x."""
    if d < 1:
        raise ValueError("d must be >= 1")
    width = -(-x.bits // d) * d
    s = x.bitstring().ljust(width, "0")
    return tuple(Dyadic.from_bitstring(s[r::d]) for r in range(d))


def zeta_inv(d: int, coords) -> Dyadic:
    if len(coords) != d:
        raise ValueError(f"expected {d} coordinates")
    width = max(c.bits for c in coords)
    cols = [c.bitstring().ljust(width, "0") for c in coords]
    return Dyadic.from_bitstring("".join("".join(col[t] for col in cols) for t in range(width)))
