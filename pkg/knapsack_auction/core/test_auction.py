from fractions import Fraction

import numpy as np
import pytest

from knapsack_auction.core.auction import (
    AuctionInstance,
    BidProfile,
    TieMode,
    critical_price,
    greedy_allocate,
    greedy_or_highest_bid,
    outranks,
    pack,
    rank_bids,
    to_rational,
    truthful_profile,
)
from knapsack_auction.core.exceptions import AuctionDomainError, AuctionInputError


@pytest.fixture
def three_bidders():
    instance = AuctionInstance.build(10, sizes=[4, 5, 6], values=[9, 8, 7])
    profile = BidProfile.of([8, Fraction(15, 2), 6])
    return instance, profile


def test_to_rational_reads_floats_as_decimals():
    assert to_rational(9.9) == Fraction(99, 10)
    assert to_rational("3/2") == Fraction(3, 2)
    with pytest.raises(AuctionInputError):
        to_rational("not a number")


def test_instance_rejects_oversized_objects():
    with pytest.raises(AuctionInputError):
        AuctionInstance.build(10, sizes=[10, 3], values=[1, 1])


def test_instance_requires_total_size_above_capacity_unless_relaxed():
    with pytest.raises(AuctionInputError):
        AuctionInstance.build(10, sizes=[3, 4], values=[1, 1])
    instance = AuctionInstance.build(10, sizes=[3, 4], values=[1, 1], allow_trivial=True)
    assert instance.total_size == 7


def test_rank_by_per_unit_bid(three_bidders):
    instance, profile = three_bidders
    assert rank_bids(profile, instance) == (0, 1, 2)


def test_rank_ties_put_smaller_size_first():
    instance = AuctionInstance.build(8, sizes=[5, 4], values=[5, 4])
    profile = BidProfile.of([5, 4])
    assert rank_bids(profile, instance, TieMode.DETERMINISTIC) == (1, 0)


def test_rank_ties_equal_size_fall_back_to_bidder_id():
    instance = AuctionInstance.build(7, sizes=[4, 4], values=[1, 1])
    assert rank_bids(BidProfile.of([2, 2]), instance) == (0, 1)


def test_rank_matches_pairwise_comparison(three_bidders):
    instance, profile = three_bidders
    ranked = rank_bids(profile, instance)
    for a, b in zip(ranked, ranked[1:]):
        assert profile.bid(a) * instance.size(b) >= profile.bid(b) * instance.size(a)


def test_outranks_agrees_with_ranking():
    instance = AuctionInstance.build(12, sizes=[4, 2, 4, 6], values=[8, 4, 8, 9])
    profile = BidProfile.of([8, 4, 8, 9])
    ranked = rank_bids(profile, instance)
    assert ranked == (1, 0, 2, 3)
    for pos, i in enumerate(ranked):
        for j in ranked[pos + 1:]:
            assert outranks(profile, instance, i, j)
            assert not outranks(profile, instance, j, i)


def test_pack_follows_the_given_order(three_bidders):
    instance, profile = three_bidders
    alloc = pack(instance, (2, 0, 1))
    assert alloc.winners == (2, 0)
    assert alloc.first_rejected == 1
    assert alloc.remaining_capacity == 0
    assert pack(instance, rank_bids(profile, instance)) == greedy_allocate(instance, profile)


def test_seeded_random_ties_are_reproducible():
    instance = AuctionInstance.build(20, sizes=[4] * 6, values=[4] * 6)
    profile = BidProfile.of([4] * 6)
    first = rank_bids(profile, instance, TieMode.SEEDED_RANDOM, 11)
    again = rank_bids(profile, instance, TieMode.SEEDED_RANDOM, 11)
    assert first == again
    orders = {rank_bids(profile, instance, TieMode.SEEDED_RANDOM, seed) for seed in range(20)}
    assert len(orders) > 1, "Seeded ties never changed the order"


def test_seeded_random_needs_a_seed(three_bidders):
    instance, profile = three_bidders
    with pytest.raises(AuctionInputError):
        rank_bids(profile, instance, TieMode.SEEDED_RANDOM)


def test_missing_bid_is_an_input_error(three_bidders):
    instance, _ = three_bidders
    with pytest.raises(AuctionInputError):
        rank_bids(BidProfile.of([1, 2]), instance)
    with pytest.raises(AuctionInputError):
        BidProfile.from_mapping({0: 1, 1: 2, 3: 4}, instance)


def test_negative_bid_rejected():
    with pytest.raises(AuctionInputError):
        BidProfile.of([1, -1])


def test_greedy_stops_at_first_misfit(three_bidders):
    instance, profile = three_bidders
    alloc = greedy_allocate(instance, profile)
    assert alloc.winners == (0, 1)
    assert alloc.used_capacity == 9
    assert alloc.remaining_capacity == 1
    assert alloc.first_rejected == 2


def test_greedy_leaves_knapsack_nearly_empty():
    instance = AuctionInstance.build(10, sizes=[1, 9.9], values=[1, 9])
    alloc = greedy_allocate(instance, truthful_profile(instance))
    assert alloc.winners == (0,)
    assert alloc.first_rejected == 1
    assert alloc.remaining_capacity == 9


def test_greedy_does_not_skip_to_smaller_objects():
    # bidder 2 would fit after the misfit of bidder 1, but the walk has stopped
    instance = AuctionInstance.build(10, sizes=[6, 5, 2], values=[12, 5, 1])
    alloc = greedy_allocate(instance, truthful_profile(instance))
    assert alloc.winners == (0,)
    assert alloc.first_rejected == 1
    assert 2 in alloc.losers


def test_single_bidder_wins_without_rejection():
    instance = AuctionInstance.build(10, sizes=[4], values=[3], allow_trivial=True)
    alloc = greedy_allocate(instance, BidProfile.of([3]))
    assert alloc.winners == (0,)
    assert alloc.first_rejected is None


def test_allocation_conditions_hold_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n = int(rng.integers(2, 7))
        capacity = int(rng.integers(5, 21))
        sizes = [int(s) for s in rng.integers(1, capacity, size=n)]
        if sum(sizes) <= capacity:
            continue
        instance = AuctionInstance.build(capacity, sizes, [1] * n)
        profile = BidProfile.of(int(b) for b in rng.integers(0, 21, size=n))
        alloc = greedy_allocate(instance, profile)
        used = sum(instance.size(i) for i in alloc.winners)
        assert used <= capacity
        assert alloc.first_rejected is not None
        assert used + instance.size(alloc.first_rejected) > capacity
        assert alloc.ranked[:len(alloc.winners)] == alloc.winners


def test_critical_price_is_first_rejected_per_unit_bid(three_bidders):
    instance, profile = three_bidders
    assert critical_price(instance, profile, 0) == 1
    assert critical_price(instance, profile, 1) == 1


def test_critical_price_threshold_by_deviation(three_bidders):
    instance, profile = three_bidders
    z_hat = critical_price(instance, profile, 0)
    below = profile.with_bid(0, (z_hat - Fraction(1, 100)) * instance.size(0))
    above = profile.with_bid(0, (z_hat + Fraction(1, 100)) * instance.size(0))
    assert not greedy_allocate(instance, below).is_winner(0)
    assert greedy_allocate(instance, above).is_winner(0)


def test_critical_price_zero_stop_bid():
    instance = AuctionInstance.build(10, sizes=[4, 5, 6], values=[9, 8, 7])
    assert critical_price(instance, BidProfile.of([8, 7, 0]), 0) == 0


def test_critical_price_of_loser_is_a_domain_error(three_bidders):
    instance, profile = three_bidders
    with pytest.raises(AuctionDomainError):
        critical_price(instance, profile, 2)


def test_highest_bid_safeguard_is_analysis_only():
    instance = AuctionInstance.build(10, sizes=[1, 9.9], values=[1, 9])
    profile = truthful_profile(instance)
    assert greedy_or_highest_bid(instance, profile) == (1,)
    assert greedy_allocate(instance, profile).winners == (0,)
