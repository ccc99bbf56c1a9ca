"""
Knapsack auction primitives: instances, bid profiles, ranking and the Greedy
allocation rule.

All quantities are exact rationals. Per-unit bids are compared by
cross-multiplication so ties are detected exactly and resolved by the
configured TieMode.
"""

import functools
import logging
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import AuctionDomainError, AuctionInputError

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction, Decimal, str, float]
RngLike = Union[np.random.Generator, int, None]


def to_rational(value: Rational) -> Fraction:
    """
    Convert a number to an exact Fraction.

    Floats go through their shortest decimal repr, so 9.9 becomes 99/10
    rather than the binary approximation.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise AuctionInputError(f"Booleans are not valid quantities: {value!r}")
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (TypeError, ValueError) as e:
        raise AuctionInputError(f"Not a rational quantity: {value!r}") from e


class TieMode(str, Enum):
    """How equal per-unit bids are ordered."""

    DETERMINISTIC = "deterministic"  # smaller size first, then lower bidder_id
    SEEDED_RANDOM = "seeded_random"


@dataclass(frozen=True)
class Bidder:
    bidder_id: int
    size: Fraction
    value: Fraction


@dataclass(frozen=True)
class AuctionInstance:
    """
    Capacity K plus every bidder's public size k_i and private value v_i.

    Attributes:
        capacity: Knapsack capacity K
        bidders: Bidders with dense ids 0..n-1
        allow_trivial: Skip the sum(k_i) > K check (oracle unit tests only)
    """

    capacity: Fraction
    bidders: Tuple[Bidder, ...]
    allow_trivial: bool = False

    def __post_init__(self):
        object.__setattr__(self, "capacity", to_rational(self.capacity))
        object.__setattr__(self, "bidders", tuple(self.bidders))
        self._validate()

    @classmethod
    def build(cls, capacity: Rational, sizes: Sequence[Rational], values: Sequence[Rational],
              allow_trivial: bool = False) -> "AuctionInstance":
        """Build an instance from parallel size and value sequences."""
        if len(sizes) != len(values):
            raise AuctionInputError(
                f"Got {len(sizes)} sizes but {len(values)} values"
            )
        bidders = tuple(
            Bidder(i, to_rational(k), to_rational(v))
            for i, (k, v) in enumerate(zip(sizes, values))
        )
        return cls(to_rational(capacity), bidders, allow_trivial)

    def _validate(self):
        if self.capacity < 0:
            raise AuctionInputError(f"Capacity must be nonnegative, got {self.capacity}")
        if not self.bidders:
            raise AuctionInputError("An auction needs at least one bidder")
        ids = [b.bidder_id for b in self.bidders]
        if ids != list(range(len(ids))):
            raise AuctionInputError(f"Bidder ids must be dense 0..n-1 in order, got {ids}")
        for b in self.bidders:
            if b.size <= 0:
                raise AuctionInputError(f"Bidder {b.bidder_id} has non-positive size {b.size}")
            if b.value < 0:
                raise AuctionInputError(f"Bidder {b.bidder_id} has negative value {b.value}")
            if b.size >= self.capacity:
                raise AuctionInputError(
                    f"Bidder {b.bidder_id} size {b.size} is not below capacity {self.capacity}"
                )
        if not self.allow_trivial and self.total_size <= self.capacity:
            raise AuctionInputError(
                f"Total size {self.total_size} does not exceed capacity {self.capacity}; "
                "pass allow_trivial=True for degenerate oracle cases"
            )

    @property
    def n(self) -> int:
        return len(self.bidders)

    @property
    def sizes(self) -> Tuple[Fraction, ...]:
        return tuple(b.size for b in self.bidders)

    @property
    def values(self) -> Tuple[Fraction, ...]:
        return tuple(b.value for b in self.bidders)

    @property
    def total_size(self) -> Fraction:
        return sum((b.size for b in self.bidders), Fraction(0))

    def size(self, bidder_id: int) -> Fraction:
        return self.bidders[bidder_id].size

    def value(self, bidder_id: int) -> Fraction:
        return self.bidders[bidder_id].value


@dataclass(frozen=True)
class BidProfile:
    """One total bid B_i per bidder, indexed by bidder_id."""

    bids: Tuple[Fraction, ...]

    def __post_init__(self):
        bids = tuple(to_rational(b) for b in self.bids)
        for i, b in enumerate(bids):
            if b < 0:
                raise AuctionInputError(f"Bid of bidder {i} is negative: {b}")
        object.__setattr__(self, "bids", bids)

    @classmethod
    def of(cls, bids: Iterable[Rational]) -> "BidProfile":
        return cls(tuple(bids))

    @classmethod
    def from_mapping(cls, bids: Mapping[int, Rational], instance: AuctionInstance) -> "BidProfile":
        """
        Build a profile from a bidder_id -> bid mapping.

        Raises:
            AuctionInputError: when a bidder of the instance has no bid or a bid
                belongs to an unknown bidder
        """
        expected = set(range(instance.n))
        missing = sorted(expected - set(bids))
        extra = sorted(set(bids) - expected)
        if missing or extra:
            raise AuctionInputError(f"Bid profile mismatch: missing {missing}, extra {extra}")
        return cls(tuple(bids[i] for i in range(instance.n)))

    def bid(self, bidder_id: int) -> Fraction:
        return self.bids[bidder_id]

    def per_unit(self, bidder_id: int, instance: AuctionInstance) -> Fraction:
        """b_i = B_i / k_i"""
        return self.bids[bidder_id] / instance.size(bidder_id)

    def with_bid(self, bidder_id: int, bid: Rational) -> "BidProfile":
        """Copy of the profile with one bidder's total bid replaced."""
        bids = list(self.bids)
        bids[bidder_id] = to_rational(bid)
        return BidProfile(tuple(bids))

    def __len__(self) -> int:
        return len(self.bids)


@dataclass(frozen=True)
class AllocationResult:
    """
    Output of the Greedy rule.

    Attributes:
        ranked: All bidder ids by descending per-unit bid, ties resolved
        winners: Packed bidders, always a prefix of ranked
        first_rejected: Bidder at rank m+1 whose object did not fit, if any
        used_capacity: Sum of winners' sizes
        remaining_capacity: Unused space k-hat
    """

    ranked: Tuple[int, ...]
    winners: Tuple[int, ...]
    first_rejected: Optional[int]
    used_capacity: Fraction
    remaining_capacity: Fraction

    @property
    def losers(self) -> Tuple[int, ...]:
        return self.ranked[len(self.winners):]

    def is_winner(self, bidder_id: int) -> bool:
        return bidder_id in self.winners

    def rank_of(self, bidder_id: int) -> int:
        return self.ranked.index(bidder_id)


def check_profile(profile: BidProfile, instance: AuctionInstance) -> None:
    """
    Make sure a profile holds exactly one bid per bidder of the instance.

    Raises:
        AuctionInputError: on missing or extra bids
    """
    if len(profile) != instance.n:
        raise AuctionInputError(
            f"Bid profile has {len(profile)} bids for {instance.n} bidders"
        )


def make_rng(rng: RngLike) -> Optional[np.random.Generator]:
    if rng is None or isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def outranks(profile: BidProfile, instance: AuctionInstance, i: int, j: int) -> bool:
    """Whether bidder i is ranked ahead of bidder j under deterministic ties."""
    # b_i > b_j  <=>  B_i * k_j > B_j * k_i  (sizes are positive)
    lhs = profile.bids[i] * instance.sizes[j]
    rhs = profile.bids[j] * instance.sizes[i]
    if lhs != rhs:
        return lhs > rhs
    if instance.sizes[i] != instance.sizes[j]:
        return instance.sizes[i] < instance.sizes[j]
    return i < j


def rank_bids(profile: BidProfile, instance: AuctionInstance,
              tie_mode: TieMode = TieMode.DETERMINISTIC,
              rng_seed: RngLike = None) -> Tuple[int, ...]:
    """
    Order bidders by descending per-unit bid.

    Args:
        profile: One total bid per bidder
        instance: The auction instance supplying sizes
        tie_mode: How equal per-unit bids are ordered
        rng_seed: Seed or Generator, required for TieMode.SEEDED_RANDOM

    Returns:
        Bidder ids, best per-unit bid first
    """
    check_profile(profile, instance)
    bids = profile.bids
    sizes = instance.sizes

    if tie_mode == TieMode.SEEDED_RANDOM:
        rng = make_rng(rng_seed)
        if rng is None:
            raise AuctionInputError("TieMode.SEEDED_RANDOM needs an rng_seed")
        priority = [int(p) for p in rng.permutation(instance.n)]
    else:
        priority = None

    def compare(i: int, j: int) -> int:
        if i == j:
            return 0
        if priority is not None and bids[i] * sizes[j] == bids[j] * sizes[i]:
            return -1 if priority[i] < priority[j] else 1
        return -1 if outranks(profile, instance, i, j) else 1

    return tuple(sorted(range(instance.n), key=functools.cmp_to_key(compare)))


def greedy_allocate(instance: AuctionInstance, profile: BidProfile,
                    tie_mode: TieMode = TieMode.DETERMINISTIC,
                    rng: RngLike = None) -> AllocationResult:
    """
    Pack objects in ranked order and stop at the first one that does not fit.

    Objects ranked after the first misfit are never considered, even when they
    would fit in the remaining space.
    """
    return pack(instance, rank_bids(profile, instance, tie_mode, rng))


def pack(instance: AuctionInstance, ranked: Sequence[int]) -> AllocationResult:
    """Fill the knapsack along a given ranking, stopping at the first misfit."""
    ranked = tuple(ranked)
    used = Fraction(0)
    winners = []
    first_rejected = None
    for bidder_id in ranked:
        size = instance.size(bidder_id)
        if used + size > instance.capacity:
            first_rejected = bidder_id
            break
        winners.append(bidder_id)
        used += size

    return AllocationResult(
        ranked=ranked,
        winners=tuple(winners),
        first_rejected=first_rejected,
        used_capacity=used,
        remaining_capacity=instance.capacity - used,
    )


def stop_price(alloc: AllocationResult, profile: BidProfile, instance: AuctionInstance) -> Fraction:
    """Per-unit bid of the first rejected bidder, 0 when nobody was rejected."""
    if alloc.first_rejected is None:
        return Fraction(0)
    return profile.per_unit(alloc.first_rejected, instance)


def critical_price(instance: AuctionInstance, profile: BidProfile, winner_id: int,
                   tie_mode: TieMode = TieMode.DETERMINISTIC,
                   rng: RngLike = None) -> Fraction:
    """
    Per-unit threshold z-hat below which a winner would lose.

    Under the stop rule this is always b_{m+1}, whichever way the winner's
    removal would reshuffle the losers.

    Raises:
        AuctionDomainError: if winner_id did not win
    """
    alloc = greedy_allocate(instance, profile, tie_mode, rng)
    if not alloc.is_winner(winner_id):
        raise AuctionDomainError(f"Bidder {winner_id} is not a winner")
    return stop_price(alloc, profile, instance)


def truthful_profile(instance: AuctionInstance) -> BidProfile:
    """Every bidder bids its value, B_i = v_i."""
    return BidProfile(instance.values)


def greedy_or_highest_bid(instance: AuctionInstance, profile: BidProfile,
                          tie_mode: TieMode = TieMode.DETERMINISTIC,
                          rng: RngLike = None) -> Tuple[int, ...]:
    """
    Greedy winners, or the single highest total bidder when that bid alone
    beats the packed bids. Analysis only; auctions never apply it.
    """
    alloc = greedy_allocate(instance, profile, tie_mode, rng)
    packed = sum((profile.bid(i) for i in alloc.winners), Fraction(0))
    best = max(range(instance.n), key=lambda i: (profile.bid(i), -i))
    if profile.bid(best) > packed:
        return (best,)
    return alloc.winners
