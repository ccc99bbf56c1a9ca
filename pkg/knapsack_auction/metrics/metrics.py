"""
Evaluation measures for knapsack auctions: learning ratio, revenue and
efficiency, plus the summary statistics reported per run.
"""

import itertools
import logging
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.auction import (
    AuctionInstance,
    BidProfile,
    RngLike,
    TieMode,
    greedy_allocate,
    rank_bids,
    truthful_profile,
)
from ..core.exceptions import AuctionDomainError
from ..core.payments import AuctionOutcome

logger = logging.getLogger(__name__)

Number = Union[Fraction, float, int]

# Brute-force packing enumerates 2^n subsets
MAX_BRUTE_FORCE_BIDDERS = 16


def learning_ratio(value: Number, size: Number, bid: Number) -> Fraction:
    """
    R = v/k - B/k. Zero for a truthful bid, positive when shading,
    negative when overbidding.

    Raises:
        AuctionDomainError: if size is zero
    """
    size = Fraction(size)
    if size == 0:
        raise AuctionDomainError("Learning ratio is undefined for a zero size")
    return (Fraction(value) - Fraction(bid)) / size


def revenue(outcome: AuctionOutcome) -> Fraction:
    """Sum of winners' payments."""
    return sum((b.payment for b in outcome.bidders if b.is_winner), Fraction(0))


def full_info_surplus(instance: AuctionInstance, tie_mode: TieMode = TieMode.DETERMINISTIC,
                      rng: RngLike = None) -> Fraction:
    """
    S: packed value when the stop-rule Greedy runs on true value-to-size ratios.
    """
    alloc = greedy_allocate(instance, truthful_profile(instance), tie_mode, rng)
    return sum((instance.value(i) for i in alloc.winners), Fraction(0))


def skip_and_continue_surplus(instance: AuctionInstance,
                              tie_mode: TieMode = TieMode.DETERMINISTIC,
                              rng: RngLike = None) -> Fraction:
    """
    Packed value of the filler variant that skips misfits and keeps going.
    Comparison benchmark only; auctions always stop at the first misfit.
    """
    ranked = rank_bids(truthful_profile(instance), instance, tie_mode, rng)
    used = Fraction(0)
    packed = Fraction(0)
    for bidder_id in ranked:
        if used + instance.size(bidder_id) <= instance.capacity:
            used += instance.size(bidder_id)
            packed += instance.value(bidder_id)
    return packed


def best_feasible_surplus(instance: AuctionInstance) -> Fraction:
    """
    Largest total value of any subset that fits, by enumeration.

    Raises:
        AuctionDomainError: for more than MAX_BRUTE_FORCE_BIDDERS bidders
    """
    if instance.n > MAX_BRUTE_FORCE_BIDDERS:
        raise AuctionDomainError(
            f"Brute-force packing is limited to {MAX_BRUTE_FORCE_BIDDERS} bidders, got {instance.n}"
        )
    best = Fraction(0)
    bidders = instance.bidders
    for r in range(1, instance.n + 1):
        for subset in itertools.combinations(bidders, r):
            if sum(b.size for b in subset) <= instance.capacity:
                best = max(best, sum((b.value for b in subset), Fraction(0)))
    return best


def achieved_surplus(outcome: AuctionOutcome, instance: AuctionInstance) -> Fraction:
    """C: total value of the bidders the auction actually packed."""
    return sum((instance.value(i) for i in outcome.winners), Fraction(0))


def efficiency_ratio(full_info: Fraction, achieved: Fraction) -> Fraction:
    """100 * C / S, taken as 100 when S is 0."""
    if full_info == 0:
        return Fraction(100)
    return 100 * Fraction(achieved) / Fraction(full_info)


@dataclass(frozen=True)
class RoundMetrics:
    """
    Measures of a single auction.

    gap_negative is set when the auction packed more value than the
    full-information Greedy benchmark (E < 0). The values are kept as they are.
    """

    learning_ratios: Tuple[Fraction, ...]
    payoffs: Tuple[Fraction, ...]
    revenue: Fraction
    full_info_surplus: Fraction
    achieved_surplus: Fraction
    efficiency_gap: Fraction
    efficiency_ratio: Fraction
    gap_negative: bool = False


def round_metrics(instance: AuctionInstance, profile: BidProfile, outcome: AuctionOutcome,
                  tie_mode: TieMode = TieMode.DETERMINISTIC, rng: RngLike = None) -> RoundMetrics:
    """Compute every per-auction measure in one pass."""
    ratios = tuple(
        learning_ratio(instance.value(i), instance.size(i), profile.bid(i))
        for i in range(instance.n)
    )
    s = full_info_surplus(instance, tie_mode, rng)
    c = achieved_surplus(outcome, instance)
    gap = s - c
    if gap < 0:
        logger.debug(f"Auction packed {c} above full-information surplus {s}")
    return RoundMetrics(
        learning_ratios=ratios,
        payoffs=outcome.payoffs,
        revenue=revenue(outcome),
        full_info_surplus=s,
        achieved_surplus=c,
        efficiency_gap=gap,
        efficiency_ratio=efficiency_ratio(s, c),
        gap_negative=gap < 0,
    )


@dataclass(frozen=True)
class SummaryStats:
    """
    Median, mean and population standard deviation of a sample.

    Median and mean are exact when the sample holds Fractions. The standard
    deviation is sqrt(sum((x - mean)^2) / N) in floating point.
    """

    count: int
    median: Number
    mean: Number
    sd: float
    minimum: Number
    maximum: Number

    def as_dict(self) -> Dict[str, float]:
        return {
            "median": float(self.median),
            "mean": float(self.mean),
            "sd": float(self.sd),
            "min": float(self.minimum),
            "max": float(self.maximum),
            "count": self.count,
        }


def summarize(values: Iterable[Number]) -> SummaryStats:
    """
    Summary statistics of a non-empty sample.

    Raises:
        AuctionDomainError: on an empty sample
    """
    sample = list(values)
    if not sample:
        raise AuctionDomainError("Cannot summarize an empty stream")
    mean = statistics.mean(sample)
    return SummaryStats(
        count=len(sample),
        median=statistics.median(sample),
        mean=mean,
        sd=math.sqrt(float(statistics.pvariance(sample, mu=mean))),
        minimum=min(sample),
        maximum=max(sample),
    )


def rolling_mean(values: Sequence[Number], window: int) -> np.ndarray:
    """
    Trailing mean over the last `window` observations. The first window-1
    points average whatever is available so far.
    """
    if window < 1:
        raise AuctionDomainError(f"Rolling window must be positive, got {window}")
    data = np.asarray([float(v) for v in values], dtype=float)
    if data.size == 0:
        return data
    cumulative = np.cumsum(np.insert(data, 0, 0.0))
    ends = np.arange(1, data.size + 1)
    starts = np.maximum(ends - window, 0)
    return (cumulative[ends] - cumulative[starts]) / (ends - starts)


@dataclass(frozen=True)
class RoundSummary:
    """
    Summary of a stream of rounds.

    Attributes:
        revenue, efficiency_ratio, efficiency_gap: Auction-level statistics
        learning_ratio: Pooled over every agent and round
        payoff: Pooled payoffs
        agent_learning_ratio, agent_payoff: Per agent id
        worst_agent, best_agent: Agents with the lowest / highest mean payoff
        rolling: Rolling means of revenue, efficiency ratio and mean learning ratio
    """

    rounds: int
    revenue: SummaryStats
    efficiency_ratio: SummaryStats
    efficiency_gap: SummaryStats
    learning_ratio: SummaryStats
    payoff: SummaryStats
    agent_learning_ratio: Tuple[SummaryStats, ...]
    agent_payoff: Tuple[SummaryStats, ...]
    worst_agent: int
    best_agent: int
    negative_gap_rounds: int
    rolling: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class MetricAccumulator:
    """
    Fold over RoundMetrics. Accumulators built on separate shards of a stream
    can be merged; the summary does not depend on the order of rounds except
    for the rolling means.
    """

    revenue: List[Number] = field(default_factory=list)
    efficiency_ratio: List[Number] = field(default_factory=list)
    efficiency_gap: List[Number] = field(default_factory=list)
    agent_learning_ratio: List[List[Number]] = field(default_factory=list)
    agent_payoff: List[List[Number]] = field(default_factory=list)
    negative_gap_rounds: int = 0

    def add(self, metrics: RoundMetrics) -> None:
        if not self.agent_learning_ratio:
            self.agent_learning_ratio = [[] for _ in metrics.learning_ratios]
            self.agent_payoff = [[] for _ in metrics.payoffs]
        if len(metrics.learning_ratios) != len(self.agent_learning_ratio):
            raise AuctionDomainError("All rounds of a stream need the same number of bidders")
        self.revenue.append(metrics.revenue)
        self.efficiency_ratio.append(metrics.efficiency_ratio)
        self.efficiency_gap.append(metrics.efficiency_gap)
        for agent, (ratio, payoff) in enumerate(zip(metrics.learning_ratios, metrics.payoffs)):
            self.agent_learning_ratio[agent].append(ratio)
            self.agent_payoff[agent].append(payoff)
        if metrics.gap_negative:
            self.negative_gap_rounds += 1

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        if not other.revenue:
            return self
        if not self.revenue:
            self.agent_learning_ratio = [[] for _ in other.agent_learning_ratio]
            self.agent_payoff = [[] for _ in other.agent_payoff]
        self.revenue.extend(other.revenue)
        self.efficiency_ratio.extend(other.efficiency_ratio)
        self.efficiency_gap.extend(other.efficiency_gap)
        for mine, theirs in zip(self.agent_learning_ratio, other.agent_learning_ratio):
            mine.extend(theirs)
        for mine, theirs in zip(self.agent_payoff, other.agent_payoff):
            mine.extend(theirs)
        self.negative_gap_rounds += other.negative_gap_rounds
        return self

    def summary(self, window: Optional[int] = None) -> RoundSummary:
        if not self.revenue:
            raise AuctionDomainError("Cannot summarize an empty stream")
        agent_ratio = tuple(summarize(a) for a in self.agent_learning_ratio)
        agent_payoff = tuple(summarize(a) for a in self.agent_payoff)
        means = [float(p.mean) for p in agent_payoff]
        rolling = {}
        if window:
            per_round_ratio = [
                statistics.mean(r) for r in zip(*self.agent_learning_ratio)
            ]
            rolling = {
                "revenue": rolling_mean(self.revenue, window),
                "efficiency_ratio": rolling_mean(self.efficiency_ratio, window),
                "learning_ratio": rolling_mean(per_round_ratio, window),
            }
        return RoundSummary(
            rounds=len(self.revenue),
            revenue=summarize(self.revenue),
            efficiency_ratio=summarize(self.efficiency_ratio),
            efficiency_gap=summarize(self.efficiency_gap),
            learning_ratio=summarize(itertools.chain.from_iterable(self.agent_learning_ratio)),
            payoff=summarize(itertools.chain.from_iterable(self.agent_payoff)),
            agent_learning_ratio=agent_ratio,
            agent_payoff=agent_payoff,
            worst_agent=int(np.argmin(means)),
            best_agent=int(np.argmax(means)),
            negative_gap_rounds=self.negative_gap_rounds,
            rolling=rolling,
        )


def summarize_rounds(rounds: Iterable[RoundMetrics], window: Optional[int] = None) -> RoundSummary:
    """
    Fold a stream of rounds into a RoundSummary.

    Raises:
        AuctionDomainError: on an empty stream
    """
    accumulator = MetricAccumulator()
    for metrics in rounds:
        accumulator.add(metrics)
    return accumulator.summary(window)
