"""Exact-arithmetic knapsack auction: ranking, Greedy allocation and payment rules."""

from .auction import (
    AllocationResult,
    AuctionInstance,
    Bidder,
    BidProfile,
    TieMode,
    critical_price,
    greedy_allocate,
    greedy_or_highest_bid,
    outranks,
    pack,
    rank_bids,
    stop_price,
    to_rational,
    truthful_profile,
)
from .exceptions import (
    AuctionDomainError,
    AuctionInputError,
    KnapsackAuctionError,
    SimulationIOError,
)
from .payments import (
    AuctionOutcome,
    BidderOutcome,
    PaymentRule,
    dp_payments,
    gsp_payments,
    payoffs,
    run_auction,
    settle,
    up_payments,
    vcg_payments,
)
from .grid import BidGrid
