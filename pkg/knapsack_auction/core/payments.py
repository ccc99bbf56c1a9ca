"""
Payment rules for the knapsack auction.

Every rule takes the Greedy allocation as given and only decides what the
winners pay. Losers always pay nothing.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Tuple

from .auction import (
    AllocationResult,
    AuctionInstance,
    BidProfile,
    RngLike,
    TieMode,
    greedy_allocate,
    stop_price,
)

logger = logging.getLogger(__name__)


class PaymentRule(str, Enum):
    UP = "UP"
    DP = "DP"
    GSP = "GSP"
    VCG = "VCG"


@dataclass(frozen=True)
class BidderOutcome:
    bidder_id: int
    is_winner: bool
    payment: Fraction
    payoff: Fraction


@dataclass(frozen=True)
class AuctionOutcome:
    """
    Per-bidder payments and payoffs under one payment rule.

    Attributes:
        rule: Payment rule that produced the outcome
        bidders: One entry per bidder, indexed by bidder_id
        revenue: Sum of all payments
        no_rejected_bidder: Set when nobody was rejected and stop prices were
            taken as 0
    """

    rule: PaymentRule
    bidders: Tuple[BidderOutcome, ...]
    revenue: Fraction
    no_rejected_bidder: bool = False

    @property
    def winners(self) -> Tuple[int, ...]:
        return tuple(b.bidder_id for b in self.bidders if b.is_winner)

    @property
    def payments(self) -> Tuple[Fraction, ...]:
        return tuple(b.payment for b in self.bidders)

    @property
    def payoffs(self) -> Tuple[Fraction, ...]:
        return tuple(b.payoff for b in self.bidders)

    def payoff(self, bidder_id: int) -> Fraction:
        return self.bidders[bidder_id].payoff

    def payment(self, bidder_id: int) -> Fraction:
        return self.bidders[bidder_id].payment


SettleFn = Callable[[AllocationResult, BidProfile, AuctionInstance], AuctionOutcome]


def _build_outcome(rule: PaymentRule, alloc: AllocationResult, instance: AuctionInstance,
                   charges: Dict[int, Fraction], no_rejected: bool = False) -> AuctionOutcome:
    bidders = []
    for bidder in instance.bidders:
        if bidder.bidder_id in charges:
            payment = charges[bidder.bidder_id]
            bidders.append(BidderOutcome(bidder.bidder_id, True, payment, bidder.value - payment))
        else:
            bidders.append(BidderOutcome(bidder.bidder_id, False, Fraction(0), Fraction(0)))
    revenue = sum(charges.values(), Fraction(0))
    return AuctionOutcome(rule, tuple(bidders), revenue, no_rejected)


def _flag_no_rejected(rule: PaymentRule, alloc: AllocationResult) -> bool:
    if alloc.first_rejected is None and alloc.winners:
        logger.debug(f"{rule.value}: no bidder rejected, stop price taken as 0")
        return True
    return False


def up_payments(alloc: AllocationResult, profile: BidProfile,
                instance: AuctionInstance) -> AuctionOutcome:
    """Uniform price: every winner pays k_i * b_{m+1}."""
    price = stop_price(alloc, profile, instance)
    charges = {i: instance.size(i) * price for i in alloc.winners}
    return _build_outcome(PaymentRule.UP, alloc, instance, charges,
                          _flag_no_rejected(PaymentRule.UP, alloc))


def dp_payments(alloc: AllocationResult, profile: BidProfile,
                instance: AuctionInstance) -> AuctionOutcome:
    """Discriminatory price: every winner pays its own total bid."""
    charges = {i: profile.bid(i) for i in alloc.winners}
    return _build_outcome(PaymentRule.DP, alloc, instance, charges)


def gsp_payments(alloc: AllocationResult, profile: BidProfile,
                 instance: AuctionInstance) -> AuctionOutcome:
    """
    Generalized second price: the winner at rank r pays k_r times the
    per-unit bid of whoever is ranked r+1 in the full ranking.
    """
    charges = {}
    for rank, bidder_id in enumerate(alloc.winners):
        if rank + 1 < len(alloc.ranked):
            next_unit = profile.per_unit(alloc.ranked[rank + 1], instance)
        else:
            next_unit = Fraction(0)
        charges[bidder_id] = instance.size(bidder_id) * next_unit
    return _build_outcome(PaymentRule.GSP, alloc, instance, charges,
                          _flag_no_rejected(PaymentRule.GSP, alloc))


def vcg_payments(alloc: AllocationResult, profile: BidProfile,
                 instance: AuctionInstance) -> AuctionOutcome:
    """
    Tiered VCG charge: each winner's units are priced by walking the losers
    in ranked order, taking min(remaining, k_loser) units at that loser's
    per-unit bid. Units still unpriced once the losers run out cost nothing.
    """
    losers = alloc.losers
    charges = {}
    for bidder_id in alloc.winners:
        remaining = instance.size(bidder_id)
        payment = Fraction(0)
        for loser in losers:
            if remaining <= 0:
                break
            units = min(remaining, instance.size(loser))
            payment += units * profile.per_unit(loser, instance)
            remaining -= units
        charges[bidder_id] = payment
    return _build_outcome(PaymentRule.VCG, alloc, instance, charges)


PAYMENT_FUNCTIONS: Dict[PaymentRule, SettleFn] = {
    PaymentRule.UP: up_payments,
    PaymentRule.DP: dp_payments,
    PaymentRule.GSP: gsp_payments,
    PaymentRule.VCG: vcg_payments,
}


def settle(rule: PaymentRule, alloc: AllocationResult, profile: BidProfile,
           instance: AuctionInstance) -> AuctionOutcome:
    """Apply the payment rule to an allocation."""
    return PAYMENT_FUNCTIONS[PaymentRule(rule)](alloc, profile, instance)


def run_auction(instance: AuctionInstance, profile: BidProfile, rule: PaymentRule,
                tie_mode: TieMode = TieMode.DETERMINISTIC,
                rng: RngLike = None) -> Tuple[AllocationResult, AuctionOutcome]:
    """Allocate with Greedy, then charge the winners under the given rule."""
    alloc = greedy_allocate(instance, profile, tie_mode, rng)
    return alloc, settle(rule, alloc, profile, instance)


def payoffs(outcome: AuctionOutcome, instance: AuctionInstance) -> Tuple[Fraction, ...]:
    """
    pi_i = v_i - payment for winners, 0 for losers. Negative values are kept;
    overbidding can make a win unprofitable.
    """
    return tuple(
        instance.value(b.bidder_id) - b.payment if b.is_winner else Fraction(0)
        for b in outcome.bidders
    )
