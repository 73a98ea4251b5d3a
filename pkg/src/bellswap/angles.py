"""Exact analysis angles on the uniform grid {k*pi/n}.

All angles in the experiment live on a finite grid so that every derived
quantity stays exact: an angle is an integer number of grid steps together
with the grid resolution, and arithmetic never touches floating point.
The grid with resolution n contains the 2n angles 0, pi/n, ..., (2n-1)pi/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "GridError",
    "CorrelationClass",
    "RationalAngle",
    "classify",
    "classify_index",
    "correlation_angle",
    "correlation_index",
    "midpoint",
    "required_product",
    "sign_table",
]


class GridError(ValueError):
    """An operation would leave the angle grid, or mixes incompatible grids."""


class CorrelationClass(Enum):
    """Where a correlation angle sits relative to the perfect-correlation law.

    PLUS: the angle is 0 mod pi, outcomes must multiply to +1.
    MINUS: the angle is pi/2 mod pi, outcomes must multiply to -1.
    NEITHER: no constraint.
    """

    PLUS = "plus"
    MINUS = "minus"
    NEITHER = "neither"


@dataclass(frozen=True, eq=False)
class RationalAngle:
    """The angle steps*pi/denominator, canonical with steps in [0, 2*denominator)."""

    steps: int
    denominator: int

    def __post_init__(self) -> None:
        if self.denominator <= 0:
            raise GridError(f"grid resolution must be positive, got {self.denominator}")
        object.__setattr__(self, "steps", self.steps % (2 * self.denominator))

    @property
    def turns(self) -> Fraction:
        """Exact value in units of pi."""
        return Fraction(self.steps, self.denominator)

    @property
    def radians(self) -> float:
        return math.pi * self.steps / self.denominator

    # value semantics: 1 step on the pi/2 grid equals 2 steps on the pi/4 grid
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalAngle):
            return NotImplemented
        return self.turns == other.turns

    def __hash__(self) -> int:
        return hash(self.turns)

    def _match(self, other: RationalAngle) -> RationalAngle:
        if other.denominator != self.denominator:
            raise GridError(
                f"mixed grids pi/{self.denominator} and pi/{other.denominator};"
                " rescale explicitly first"
            )
        return other

    def __add__(self, other: RationalAngle) -> RationalAngle:
        return RationalAngle(self.steps + self._match(other).steps, self.denominator)

    def __sub__(self, other: RationalAngle) -> RationalAngle:
        return RationalAngle(self.steps - self._match(other).steps, self.denominator)

    def __neg__(self) -> RationalAngle:
        return RationalAngle(-self.steps, self.denominator)

    def rescaled(self, denominator: int) -> RationalAngle:
        """The same angle expressed on the pi/denominator grid."""
        scaled = self.steps * denominator
        if scaled % self.denominator:
            raise GridError(
                f"{self.steps}*pi/{self.denominator} does not exist"
                f" on the pi/{denominator} grid"
            )
        return RationalAngle(scaled // self.denominator, denominator)

    def __repr__(self) -> str:
        return f"RationalAngle({self.steps}, {self.denominator})"


def midpoint(first: RationalAngle, second: RationalAngle) -> RationalAngle | None:
    """Half-way angle on the same grid, or None when it falls between grid points.

    A circle has two midpoints; the one returned is (first+second)/2. Callers
    that only ever square the sign at the midpoint never see the difference.
    """
    first._match(second)
    total = first.steps + second.steps
    if total % 2:
        return None
    return RationalAngle(total // 2, first.denominator)


def classify(angle: RationalAngle) -> CorrelationClass:
    return classify_index(angle.steps, angle.denominator)


def classify_index(k: int, n: int) -> CorrelationClass:
    """Classify the grid angle k*pi/n. The class only depends on the angle mod pi."""
    k = k % n
    if k == 0:
        return CorrelationClass.PLUS
    if 2 * k == n:
        return CorrelationClass.MINUS
    return CorrelationClass.NEITHER


def required_product(cls: CorrelationClass) -> int:
    """Outcome product a perfectly correlated model must yield, 0 when unconstrained."""
    if cls is CorrelationClass.PLUS:
        return 1
    if cls is CorrelationClass.MINUS:
        return -1
    return 0


def correlation_angle(phis: Sequence[RationalAngle], sector: int) -> RationalAngle:
    """Signed combination of the four analysis angles for one swap sector.

    Sector +1 pairs the first and third stations with the same sign:
    phi1 - phi2 + phi3 - phi4. Sector -1 flips the second difference.
    """
    if sector not in (1, -1):
        raise ValueError(f"sector must be +1 or -1, got {sector}")
    p1, p2, p3, p4 = phis
    tail = (p3 - p4) if sector == 1 else (p4 - p3)
    return (p1 - p2) + tail


def correlation_index(k1: int, k2: int, k3: int, k4: int, sector: int, n: int) -> int:
    """Step index of the sector's correlation angle, reduced into [0, 2n)."""
    return (k1 - k2 + sector * (k3 - k4)) % (2 * n)


@lru_cache(maxsize=None)
def sign_table(n: int, sector: int) -> np.ndarray:
    """Required outcome product over all angle tuples: int8 array of shape (2n,)*4.

    Entry [k1, k2, k3, k4] is +1 where the sector's correlation angle is 0 mod pi,
    -1 where it is pi/2 mod pi, and 0 where the correlation law is silent.
    The array is cached and read-only.
    """
    if sector not in (1, -1):
        raise ValueError(f"sector must be +1 or -1, got {sector}")
    m = 2 * n
    k = np.arange(m)
    zeta = (
        k[:, None, None, None]
        - k[None, :, None, None]
        + sector * (k[None, None, :, None] - k[None, None, None, :])
    ) % m
    reduced = zeta % n
    table = np.zeros(zeta.shape, dtype=np.int8)
    table[reduced == 0] = 1
    if n % 2 == 0:
        table[2 * reduced == n] = -1
    table.flags.writeable = False
    return table
