"""
Brute-force checks of incentive properties and allocation correctness.

Everything here evaluates payoffs by running the real auction code on
explicit bid profiles. Violations and counterexamples are returned as data;
an exhausted search budget is a not-found result, never an exception.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.auction import (
    AllocationResult,
    AuctionInstance,
    BidProfile,
    TieMode,
    critical_price,
    greedy_allocate,
    outranks,
    pack,
    rank_bids,
    truthful_profile,
)
from ..core.exceptions import AuctionInputError
from ..core.grid import BidGrid
from ..core.payments import PAYMENT_FUNCTIONS, AuctionOutcome, PaymentRule, SettleFn, run_auction
from ..core.schemas import encode_rational, instance_to_json, profile_to_json
from ..metrics.metrics import achieved_surplus, best_feasible_surplus, skip_and_continue_surplus

logger = logging.getLogger(__name__)

InstanceSampler = Callable[[np.random.Generator], AuctionInstance]
RuleLike = Union[PaymentRule, str, SettleFn]


def resolve_settle(rule: RuleLike) -> Tuple[str, SettleFn]:
    """Name and settle function of a payment rule or a custom settle function."""
    if callable(rule) and not isinstance(rule, (PaymentRule, str)):
        return getattr(rule, "__name__", "custom"), rule
    rule = PaymentRule(rule)
    return rule.value, PAYMENT_FUNCTIONS[rule]


def payoff_of(settle_fn: SettleFn, instance: AuctionInstance, profile: BidProfile, bidder_id: int,
              tie_mode: TieMode = TieMode.DETERMINISTIC) -> Tuple[bool, Fraction, AuctionOutcome]:
    alloc = greedy_allocate(instance, profile, tie_mode)
    outcome = settle_fn(alloc, profile, instance)
    return alloc.is_winner(bidder_id), outcome.payoff(bidder_id), outcome


def deviation_payoffs(settle_fn: SettleFn, instance: AuctionInstance, profile: BidProfile, bidder_id: int,
                      bids: Sequence[Fraction], tie_mode: TieMode = TieMode.DETERMINISTIC) -> List[Fraction]:
    """
    The bidder's payoff for each of its own bids, everyone else fixed.

    Under deterministic ties the opponents keep their relative order whatever
    the bidder bids, so they are ranked once and the bidder is inserted.
    """
    if tie_mode != TieMode.DETERMINISTIC:
        return [payoff_of(settle_fn, instance, profile.with_bid(bidder_id, bid), bidder_id, tie_mode)[1]
                for bid in bids]
    others = [j for j in rank_bids(profile, instance) if j != bidder_id]
    allocations: Dict[int, AllocationResult] = {}
    payoffs = []
    for bid in bids:
        trial = profile.with_bid(bidder_id, bid)
        position = next((p for p, j in enumerate(others) if outranks(trial, instance, bidder_id, j)), len(others))
        if position not in allocations:
            allocations[position] = pack(instance, others[:position] + [bidder_id] + others[position:])
        payoffs.append(settle_fn(allocations[position], trial, instance).payoff(bidder_id))
    return payoffs


def random_instance_sampler(max_bidders: int = 5, max_capacity: int = 20, max_size: int = 10,
                            max_value: int = 10, min_bidders: int = 2) -> InstanceSampler:
    """
    Integer instances with min_bidders..max_bidders bidders, capacity up to
    max_capacity, sizes up to max_size and values 0..max_value. Draws whose
    sizes do not exceed the capacity in total are redrawn.
    """
    def sample(rng: np.random.Generator) -> AuctionInstance:
        while True:
            n = int(rng.integers(min_bidders, max_bidders + 1))
            capacity = int(rng.integers(2, max_capacity + 1))
            high = min(max_size, capacity - 1)
            sizes = [int(s) for s in rng.integers(1, high + 1, size=n)]
            if sum(sizes) <= capacity:
                continue
            values = [int(v) for v in rng.integers(0, max_value + 1, size=n)]
            return AuctionInstance.build(capacity, sizes, values)
    return sample


def random_opponent_profile(instance: AuctionInstance, bidder_id: int, grid: BidGrid,
                            rng: np.random.Generator) -> BidProfile:
    """Grid bids for everyone, the bidder itself bidding its value."""
    points = grid.points
    bids = [points[int(j)] for j in rng.integers(0, len(points), size=instance.n)]
    bids[bidder_id] = instance.value(bidder_id)
    return BidProfile(tuple(bids))


@dataclass(frozen=True)
class DeviationReport:
    """
    A bidder whose deviation from its truthful bid pays at least as well.

    Attributes:
        rule: Name of the payment rule
        instance: The instance
        profile: Everyone's bids with the deviator bidding truthfully
        bidder_id: The deviator
        truthful_payoff: Payoff at B_i = v_i
        deviation_bid: Best deviating total bid found
        deviation_payoff: Payoff at the deviating bid
    """

    rule: str
    instance: AuctionInstance
    profile: BidProfile
    bidder_id: int
    truthful_payoff: Fraction
    deviation_bid: Fraction
    deviation_payoff: Fraction
    tie_mode: TieMode = TieMode.DETERMINISTIC

    @property
    def truthful_bid(self) -> Fraction:
        return self.instance.value(self.bidder_id)

    @property
    def gain(self) -> Fraction:
        return self.deviation_payoff - self.truthful_payoff

    @property
    def is_strict(self) -> bool:
        return self.gain > 0

    @property
    def deviation_profile(self) -> BidProfile:
        return self.profile.with_bid(self.bidder_id, self.deviation_bid)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rule": self.rule,
            "instance": instance_to_json(self.instance),
            "bids": profile_to_json(self.profile),
            "bidder_id": self.bidder_id,
            "truthful_bid": encode_rational(self.truthful_bid),
            "truthful_payoff": encode_rational(self.truthful_payoff),
            "deviation_bid": encode_rational(self.deviation_bid),
            "deviation_payoff": encode_rational(self.deviation_payoff),
        }


@dataclass
class CheckReport:
    """
    Result of one verification check.

    Attributes:
        check: Check name
        trials: Sampled cases
        evaluations: Individual comparisons made
        violations: Comparisons that failed
        first_counterexample: JSON-ready description of the first failure
    """

    check: str
    trials: int = 0
    evaluations: int = 0
    violations: int = 0
    first_counterexample: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, counterexample: Dict[str, Any]) -> None:
        self.violations += 1
        if self.first_counterexample is None:
            self.first_counterexample = counterexample

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "check": self.check,
            "trials": self.trials,
            "evaluations": self.evaluations,
            "violations": self.violations,
            "passed": self.passed,
        }
        if self.first_counterexample is not None:
            data["first_counterexample"] = self.first_counterexample
        data.update(self.details)
        return data


def best_response(instance: AuctionInstance, opponent_bids: BidProfile, bidder_id: int,
                  grid: Union[BidGrid, Sequence[Fraction]], rule: RuleLike,
                  tie_mode: TieMode = TieMode.DETERMINISTIC) -> Tuple[Tuple[Fraction, ...], Fraction]:
    """
    Every grid bid that maximizes the bidder's payoff, and that payoff.

    Args:
        instance: Instance supplying the bidder's value
        opponent_bids: Full profile; the bidder's own entry is replaced
        bidder_id: The responding bidder
        grid: Candidate total bids
        rule: Payment rule or settle function

    Raises:
        AuctionInputError: if bidder_id is out of range or the grid is empty
    """
    if not 0 <= bidder_id < instance.n:
        raise AuctionInputError(f"Bidder {bidder_id} is not in an auction of {instance.n}")
    candidates = tuple(grid)
    if not candidates:
        raise AuctionInputError("Best response needs a non-empty grid")
    _, settle_fn = resolve_settle(rule)
    best_payoff = None
    best_bids: List[Fraction] = []
    payoffs = deviation_payoffs(settle_fn, instance, opponent_bids, bidder_id, candidates, tie_mode)
    for bid, payoff in zip(candidates, payoffs):
        if best_payoff is None or payoff > best_payoff:
            best_payoff, best_bids = payoff, [Fraction(bid)]
        elif payoff == best_payoff:
            best_bids.append(Fraction(bid))
    return tuple(best_bids), best_payoff


def verify_dsic(rule: RuleLike, sampler: Optional[InstanceSampler] = None, grid: Optional[BidGrid] = None,
                trials: int = 1000, opponent_profiles: int = 20, seed: int = 0,
                tie_mode: TieMode = TieMode.DETERMINISTIC) -> CheckReport:
    """
    Compare the truthful payoff with every grid deviation, for every bidder of
    sampled instances against sampled opponent bids.
    """
    name, settle_fn = resolve_settle(rule)
    sampler = sampler or random_instance_sampler()
    grid = grid or BidGrid.integers(20)
    rng = np.random.default_rng(seed)
    report = CheckReport(check=f"dsic-{name}")
    for _ in range(trials):
        instance = sampler(rng)
        report.trials += 1
        for bidder_id in range(instance.n):
            for _ in range(opponent_profiles):
                profile = random_opponent_profile(instance, bidder_id, grid, rng)
                truthful, *payoffs = deviation_payoffs(settle_fn, instance, profile, bidder_id,
                                                       [instance.value(bidder_id), *grid], tie_mode)
                for bid, payoff in zip(grid, payoffs):
                    report.evaluations += 1
                    if payoff > truthful:
                        report.record(DeviationReport(name, instance, profile, bidder_id, truthful,
                                                      bid, payoff, tie_mode).to_dict())
    logger.info(f"{report.check}: {report.violations} violations over {report.evaluations} deviations")
    return report


def verify_up_dsic(sampler: Optional[InstanceSampler] = None, grid: Optional[BidGrid] = None,
                   trials: int = 1000, opponent_profiles: int = 20, seed: int = 0) -> CheckReport:
    """Truthful bidding is dominant under the uniform price rule."""
    return verify_dsic(PaymentRule.UP, sampler, grid, trials, opponent_profiles, seed)


def verify_monotonicity(sampler: Optional[InstanceSampler] = None, grid: Optional[BidGrid] = None,
                        trials: int = 1000, seed: int = 0) -> CheckReport:
    """Winning never turns into losing as a bidder raises its own bid."""
    sampler = sampler or random_instance_sampler()
    grid = grid or BidGrid.integers(20)
    rng = np.random.default_rng(seed)
    report = CheckReport(check="monotonicity")
    for _ in range(trials):
        instance = sampler(rng)
        bidder_id = int(rng.integers(instance.n))
        profile = random_opponent_profile(instance, bidder_id, grid, rng)
        report.trials += 1
        won = False
        for bid in grid:
            report.evaluations += 1
            wins = greedy_allocate(instance, profile.with_bid(bidder_id, bid)).is_winner(bidder_id)
            if won and not wins:
                report.record({
                    "instance": instance_to_json(instance),
                    "bids": profile_to_json(profile),
                    "bidder_id": bidder_id,
                    "losing_bid": encode_rational(bid),
                })
                break
            won = won or wins
    logger.info(f"monotonicity: {report.violations} violations over {report.trials} triples")
    return report


def verify_critical_prices(sampler: Optional[InstanceSampler] = None, trials: int = 1000,
                           step: Fraction = Fraction(1, 100), seed: int = 0,
                           grid: Optional[BidGrid] = None) -> CheckReport:
    """
    For every winner: bidding one step below the critical per-unit price
    loses, one step above wins.
    """
    sampler = sampler or random_instance_sampler()
    grid = grid or BidGrid.integers(20)
    rng = np.random.default_rng(seed)
    report = CheckReport(check="critical-price")
    for _ in range(trials):
        instance = sampler(rng)
        profile = BidProfile(tuple(grid[int(j)] for j in rng.integers(0, len(grid), size=instance.n)))
        report.trials += 1
        for winner in greedy_allocate(instance, profile).winners:
            z = critical_price(instance, profile, winner)
            size = instance.size(winner)
            checks = [((z + step) * size, True)]
            if z - step >= 0:
                checks.append(((z - step) * size, False))
            for bid, should_win in checks:
                report.evaluations += 1
                wins = greedy_allocate(instance, profile.with_bid(winner, bid)).is_winner(winner)
                if wins != should_win:
                    report.record({
                        "instance": instance_to_json(instance),
                        "bids": profile_to_json(profile),
                        "bidder_id": winner,
                        "critical_price": encode_rational(z),
                        "bid": encode_rational(bid),
                    })
    logger.info(f"critical-price: {report.violations} violations over {report.evaluations} threshold bids")
    return report


def critical_bid_by_search(instance: AuctionInstance, profile: BidProfile, bidder_id: int,
                           grid: BidGrid) -> Optional[Fraction]:
    """
    Smallest total bid on the grid from which the bidder wins at every
    higher grid bid, or None if it loses at the top of the grid.
    """
    threshold = None
    for bid in reversed(grid.points):
        if not greedy_allocate(instance, profile.with_bid(bidder_id, bid)).is_winner(bidder_id):
            break
        threshold = bid
    return threshold


def reference_greedy(instance: AuctionInstance, profile: BidProfile) -> Tuple[int, ...]:
    """
    Straight-line stop-rule Greedy over a list sorted by exact per-unit bid,
    smaller size then lower id first among equals.
    """
    order = sorted(
        range(instance.n),
        key=lambda i: (-profile.bid(i) / instance.size(i), instance.size(i), i),
    )
    winners = []
    used = Fraction(0)
    for i in order:
        if used + instance.size(i) > instance.capacity:
            break
        winners.append(i)
        used += instance.size(i)
    return tuple(winners)


def verify_greedy_oracle(sampler: Optional[InstanceSampler] = None, trials: int = 10_000,
                         seed: int = 0, grid: Optional[BidGrid] = None) -> CheckReport:
    """greedy_allocate agrees with reference_greedy on random bid profiles."""
    sampler = sampler or random_instance_sampler()
    grid = grid or BidGrid.integers(20)
    rng = np.random.default_rng(seed)
    report = CheckReport(check="greedy-oracle")
    for _ in range(trials):
        instance = sampler(rng)
        profile = BidProfile(tuple(grid[int(j)] for j in rng.integers(0, len(grid), size=instance.n)))
        report.trials += 1
        report.evaluations += 1
        expected = reference_greedy(instance, profile)
        actual = greedy_allocate(instance, profile).winners
        if expected != actual:
            report.record({
                "instance": instance_to_json(instance),
                "bids": profile_to_json(profile),
                "expected": list(expected),
                "actual": list(actual),
            })
    logger.info(f"greedy-oracle: {report.violations} mismatches over {report.trials} instances")
    return report


class Direction(str, Enum):
    UNDER = "under"
    OVER = "over"
    ANY = "any"


@dataclass(frozen=True)
class SearchResult:
    found: bool
    instances_tried: int
    report: Optional[DeviationReport] = None
    constructed: bool = False

    def to_dict(self) -> Dict[str, Any]:
        data = {"found": self.found, "instances_tried": self.instances_tried, "constructed": self.constructed}
        if self.report is not None:
            data["report"] = self.report.to_dict()
        return data


DeviationFilter = Callable[[DeviationReport], bool]


def _deviations(instance: AuctionInstance, rule: RuleLike, grid: BidGrid, direction: Direction,
                accept: Optional[DeviationFilter] = None) -> Optional[DeviationReport]:
    """First strictly profitable deviation from all-truthful bids, if any."""
    name, settle_fn = resolve_settle(rule)
    profile = truthful_profile(instance)
    for bidder_id in range(instance.n):
        value = instance.value(bidder_id)
        _, truthful, _ = payoff_of(settle_fn, instance, profile, bidder_id)
        for bid in grid:
            if (direction == Direction.UNDER and bid >= value) or (direction == Direction.OVER and bid <= value):
                continue
            _, payoff, _ = payoff_of(settle_fn, instance, profile.with_bid(bidder_id, bid), bidder_id)
            if payoff > truthful:
                report = DeviationReport(name, instance, profile, bidder_id, truthful, bid, payoff)
                if accept is None or accept(report):
                    return report
    return None


def find_profitable_deviation(rule: RuleLike, direction: Direction = Direction.ANY,
                              search_budget: int = 10_000, seed: int = 0,
                              sampler: Optional[InstanceSampler] = None, grid: Optional[BidGrid] = None,
                              accept: Optional[DeviationFilter] = None) -> SearchResult:
    """
    Random search for an instance where one bidder strictly gains by leaving
    the truthful bid while everyone else bids truthfully.
    """
    sampler = sampler or random_instance_sampler()
    grid = grid or BidGrid.integers(20)
    rng = np.random.default_rng(seed)
    for tried in range(1, search_budget + 1):
        report = _deviations(sampler(rng), rule, grid, direction, accept)
        if report is not None:
            logger.info(f"Profitable {direction.value}-bid found for {report.rule} after {tried} instances")
            return SearchResult(True, tried, report)
    logger.info(f"No profitable {direction.value}-bid for {resolve_settle(rule)[0]} in {search_budget} instances")
    return SearchResult(False, search_budget)


def gsp_underbid_instance() -> AuctionInstance:
    """Bidder 0 pays 6 truthfully; shading below bidder 1 drops its price to 4."""
    return AuctionInstance.build(10, sizes=[4, 5, 6], values=[8, Fraction(15, 2), 6])


def vcg_overbid_instance() -> AuctionInstance:
    """
    Bidder 2 is the highest loser. Overbidding past bidder 1 wins it 5 units
    priced at the two lower tiers (2 @ 3/2, 3 @ 1/2), below its value.
    """
    return AuctionInstance.build(11, sizes=[6, 2, 5, 4], values=[12, 3, 7, 2])


def _is_gsp_underbid(report: DeviationReport) -> bool:
    truthful_out = run_auction(report.instance, report.profile, PaymentRule.GSP)[1]
    deviation_out = run_auction(report.instance, report.deviation_profile, PaymentRule.GSP)[1]
    i = report.bidder_id
    return (report.deviation_bid < report.truthful_bid
            and truthful_out.bidders[i].is_winner and deviation_out.bidders[i].is_winner
            and deviation_out.payment(i) < truthful_out.payment(i))


def _is_vcg_overbid(report: DeviationReport) -> bool:
    i = report.bidder_id
    truthful_alloc = greedy_allocate(report.instance, report.profile)
    _, up = replay(report, PaymentRule.UP)
    return (truthful_alloc.first_rejected == i and report.deviation_bid > report.truthful_bid
            and report.deviation_payoff > 0 and up < 0)


def find_gsp_counterexample(search_budget: int = 10_000, seed: int = 0,
                            grid: Optional[BidGrid] = None) -> SearchResult:
    """
    A GSP winner whose underbid still wins and pays strictly less. Falls back
    to a known instance when the random search comes up empty.
    """
    result = find_profitable_deviation(PaymentRule.GSP, Direction.UNDER, search_budget, seed,
                                       grid=grid, accept=_is_gsp_underbid)
    if result.found:
        return result
    report = _deviations(gsp_underbid_instance(), PaymentRule.GSP, grid or BidGrid.integers(20),
                         Direction.UNDER, _is_gsp_underbid)
    return SearchResult(report is not None, result.instances_tried, report, constructed=True)


def find_vcg_counterexample(search_budget: int = 10_000, seed: int = 0,
                            grid: Optional[BidGrid] = None) -> SearchResult:
    """
    The highest loser overbids, wins, and keeps a positive payoff under VCG
    pricing while the same bid would lose money under UP.
    """
    result = find_profitable_deviation(PaymentRule.VCG, Direction.OVER, search_budget, seed,
                                       grid=grid, accept=_is_vcg_overbid)
    if result.found:
        return result
    report = _deviations(vcg_overbid_instance(), PaymentRule.VCG, grid or BidGrid.integers(20),
                         Direction.OVER, _is_vcg_overbid)
    return SearchResult(report is not None, result.instances_tried, report, constructed=True)


def replay(report: DeviationReport, rule: Optional[RuleLike] = None) -> Tuple[Fraction, Fraction]:
    """Truthful and deviation payoffs recomputed from scratch, under the report's rule or another."""
    _, settle_fn = resolve_settle(rule if rule is not None else report.rule)
    _, truthful, _ = payoff_of(settle_fn, report.instance, report.profile, report.bidder_id, report.tie_mode)
    _, deviation, _ = payoff_of(settle_fn, report.instance, report.deviation_profile, report.bidder_id,
                                report.tie_mode)
    return truthful, deviation


@dataclass(frozen=True)
class InefficiencyWitness:
    """
    Truthful UP outcome that packs less value than the best feasible packing.

    swap_condition: remaining space plus the last winner's size covers the
    first rejected object, which is worth more than that last winner.
    """

    instance: AuctionInstance
    winners: Tuple[int, ...]
    packed_value: Fraction
    best_feasible: Fraction
    skip_filler: Fraction
    last_winner: Optional[int]
    first_rejected: Optional[int]
    remaining_capacity: Fraction
    swap_condition: bool

    @property
    def gap(self) -> Fraction:
        return self.best_feasible - self.packed_value

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instance": instance_to_json(self.instance),
            "winners": list(self.winners),
            "packed_value": encode_rational(self.packed_value),
            "best_feasible": encode_rational(self.best_feasible),
            "skip_filler": encode_rational(self.skip_filler),
            "gap": encode_rational(self.gap),
            "last_winner": self.last_winner,
            "first_rejected": self.first_rejected,
            "remaining_capacity": encode_rational(self.remaining_capacity),
            "swap_condition": self.swap_condition,
        }


def nearly_empty_instance() -> AuctionInstance:
    """A unit object at ratio 1 blocks an object of 9.9 units worth 9."""
    return AuctionInstance.build(10, sizes=[1, Fraction(99, 10)], values=[1, 9])


def up_inefficiency(instance: AuctionInstance) -> InefficiencyWitness:
    """Evaluate truthful UP on an instance against the best feasible packing."""
    alloc, outcome = run_auction(instance, truthful_profile(instance), PaymentRule.UP)
    last = alloc.winners[-1] if alloc.winners else None
    rejected = alloc.first_rejected
    swap = (
        last is not None and rejected is not None
        and alloc.remaining_capacity + instance.size(last) >= instance.size(rejected)
        and instance.value(last) < instance.value(rejected)
    )
    return InefficiencyWitness(
        instance=instance,
        winners=alloc.winners,
        packed_value=achieved_surplus(outcome, instance),
        best_feasible=best_feasible_surplus(instance),
        skip_filler=skip_and_continue_surplus(instance),
        last_winner=last,
        first_rejected=rejected,
        remaining_capacity=alloc.remaining_capacity,
        swap_condition=swap,
    )


def find_up_inefficiency_witness(search_budget: int = 10_000, seed: int = 0,
                                 sampler: Optional[InstanceSampler] = None) -> Tuple[bool, int, InefficiencyWitness]:
    """
    Random instance where truthful UP packs strictly less value than the best
    feasible packing and swapping the last winner for the first rejected
    object would pay. Falls back to the nearly-empty-knapsack instance.

    Returns:
        Whether a witness exists, the number of instances sampled and the witness
    """
    sampler = sampler or random_instance_sampler()
    rng = np.random.default_rng(seed)
    for tried in range(1, search_budget + 1):
        witness = up_inefficiency(sampler(rng))
        if witness.gap > 0 and witness.swap_condition:
            logger.info(f"UP inefficiency witness found after {tried} instances, gap {witness.gap}")
            return True, tried, witness
    witness = up_inefficiency(nearly_empty_instance())
    return witness.gap > 0, search_budget, witness
