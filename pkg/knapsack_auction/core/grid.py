"""Finite grids of candidate total bids."""

from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterator, Tuple

from .auction import Rational, to_rational
from .exceptions import AuctionInputError


@dataclass(frozen=True)
class BidGrid:
    """
    Evenly spaced total bids minimum, minimum + step, ..., up to maximum.

    Attributes:
        minimum: Lowest bid on the grid
        maximum: Highest bid; included when it lies on a step boundary
        step: Spacing, strictly positive
    """

    minimum: Fraction = Fraction(0)
    maximum: Fraction = Fraction(20)
    step: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("minimum", "maximum", "step"):
            object.__setattr__(self, name, to_rational(getattr(self, name)))
        if self.step <= 0:
            raise AuctionInputError(f"Grid step must be positive, got {self.step}")
        if self.minimum < 0 or self.maximum < self.minimum:
            raise AuctionInputError(f"Invalid grid range [{self.minimum}, {self.maximum}]")

    @classmethod
    def integers(cls, high: int = 20) -> "BidGrid":
        return cls(Fraction(0), Fraction(high), Fraction(1))

    @cached_property
    def points(self) -> Tuple[Fraction, ...]:
        count = int((self.maximum - self.minimum) // self.step) + 1
        return tuple(self.minimum + j * self.step for j in range(count))

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, index: int) -> Fraction:
        return self.points[index]

    def __contains__(self, bid: Rational) -> bool:
        bid = to_rational(bid)
        offset = (bid - self.minimum) / self.step
        return self.minimum <= bid <= self.maximum and offset.denominator == 1

    def index_of(self, bid: Rational) -> int:
        if bid not in self:
            raise AuctionInputError(f"Bid {bid} is not on the grid")
        return int((to_rational(bid) - self.minimum) / self.step)

    def with_point(self, bid: Rational) -> Tuple[Fraction, ...]:
        """Grid points plus one extra bid, sorted, without duplicates."""
        return tuple(sorted(set(self.points) | {to_rational(bid)}))
