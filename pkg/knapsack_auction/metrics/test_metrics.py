import csv
import math
from fractions import Fraction

import pytest

from knapsack_auction.core.auction import AuctionInstance, BidProfile, truthful_profile
from knapsack_auction.core.exceptions import AuctionDomainError
from knapsack_auction.core.payments import PaymentRule, run_auction
from knapsack_auction.metrics.export import (
    BIDS_COLUMNS,
    EPISODE_COLUMNS,
    RoundCsvWriter,
    format_number,
)
from knapsack_auction.metrics.metrics import (
    MetricAccumulator,
    achieved_surplus,
    best_feasible_surplus,
    efficiency_ratio,
    full_info_surplus,
    learning_ratio,
    revenue,
    rolling_mean,
    round_metrics,
    skip_and_continue_surplus,
    summarize,
    summarize_rounds,
)


@pytest.fixture
def three_bidders():
    instance = AuctionInstance.build(10, sizes=[4, 5, 6], values=[9, 8, 7])
    profile = BidProfile.of([8, Fraction(15, 2), 6])
    return instance, profile


def test_learning_ratio():
    assert learning_ratio(8, 4, 8) == 0
    assert learning_ratio(8, 4, 6) == Fraction(1, 2)
    assert learning_ratio(8, 4, 10) < 0
    with pytest.raises(AuctionDomainError):
        learning_ratio(8, 0, 6)


def test_revenue_matches_outcome(three_bidders):
    instance, profile = three_bidders
    _, outcome = run_auction(instance, profile, PaymentRule.DP)
    assert revenue(outcome) == Fraction(31, 2) == outcome.revenue


def test_full_info_surplus_uses_stop_rule(three_bidders):
    instance, _ = three_bidders
    assert full_info_surplus(instance) == 17


def test_achieved_surplus_and_zero_gap(three_bidders):
    instance, profile = three_bidders
    _, outcome = run_auction(instance, profile, PaymentRule.UP)
    assert achieved_surplus(outcome, instance) == 17
    metrics = round_metrics(instance, profile, outcome)
    assert metrics.efficiency_gap == 0
    assert metrics.efficiency_ratio == 100


def test_surplus_benchmarks_differ_after_a_misfit():
    instance = AuctionInstance.build(10, sizes=[6, 5, 2], values=[12, 5, 1])
    assert full_info_surplus(instance) == 12
    assert skip_and_continue_surplus(instance) == 13
    assert best_feasible_surplus(instance) == 13


def test_best_feasible_on_nearly_empty_knapsack():
    instance = AuctionInstance.build(10, sizes=[1, 9.9], values=[1, 9])
    assert full_info_surplus(instance) == 1
    assert best_feasible_surplus(instance) == 9


def test_best_feasible_refuses_large_instances():
    instance = AuctionInstance.build(20, sizes=[1] * 21, values=[1] * 21)
    with pytest.raises(AuctionDomainError):
        best_feasible_surplus(instance)


def test_efficiency_ratio_with_zero_surplus():
    assert efficiency_ratio(Fraction(0), Fraction(0)) == 100
    instance = AuctionInstance.build(10, sizes=[4, 5, 6], values=[0, 0, 0])
    _, outcome = run_auction(instance, BidProfile.of([3, 2, 1]), PaymentRule.DP)
    assert round_metrics(instance, BidProfile.of([3, 2, 1]), outcome).efficiency_ratio == 100


@pytest.mark.parametrize("rule", list(PaymentRule))
def test_truthful_bids_leave_no_gap(rule):
    instance = AuctionInstance.build(36, sizes=[4, 5, 6, 7, 8, 9, 10], values=[3, 9, 1, 7, 10, 2, 6])
    profile = truthful_profile(instance)
    _, outcome = run_auction(instance, profile, rule)
    metrics = round_metrics(instance, profile, outcome)
    assert metrics.efficiency_gap == 0
    assert all(r == 0 for r in metrics.learning_ratios)


def test_negative_gap_is_recorded_and_flagged():
    # equal ratios put the small object first when values are bid truthfully
    instance = AuctionInstance.build(10, sizes=[2, 9], values=[2, 9])
    profile = BidProfile.of([0, 9])
    _, outcome = run_auction(instance, profile, PaymentRule.DP)
    metrics = round_metrics(instance, profile, outcome)
    assert metrics.full_info_surplus == 2
    assert metrics.achieved_surplus == 9
    assert metrics.efficiency_gap == -7
    assert metrics.gap_negative
    assert metrics.efficiency_ratio == 450


def test_summarize_small_sample():
    stats = summarize([1, 2, 3])
    assert stats.mean == 2
    assert stats.median == 2
    assert stats.sd == pytest.approx(math.sqrt(2 / 3))


def test_summarize_constant_and_exact():
    stats = summarize([Fraction(7, 3)] * 5)
    assert stats.mean == Fraction(7, 3) and stats.median == Fraction(7, 3)
    assert stats.sd == 0
    assert summarize([Fraction(1, 2), Fraction(3, 2)]).mean == 1


def test_summarize_is_order_free():
    values = [Fraction(v, 7) for v in (5, -2, 9, 0, 3, 3)]
    assert summarize(values) == summarize(list(reversed(values)))


def test_summarize_empty_stream():
    with pytest.raises(AuctionDomainError):
        summarize([])
    with pytest.raises(AuctionDomainError):
        summarize_rounds([])


def test_rolling_mean():
    assert rolling_mean([1, 2, 3, 4], 2).tolist() == [1.0, 1.5, 2.5, 3.5]
    assert rolling_mean([4, 4, 4], 1).tolist() == [4.0, 4.0, 4.0]
    with pytest.raises(AuctionDomainError):
        rolling_mean([1], 0)


def _rounds(instance, profiles, rule=PaymentRule.UP):
    rounds = []
    for profile in profiles:
        _, outcome = run_auction(instance, profile, rule)
        rounds.append(round_metrics(instance, profile, outcome))
    return rounds


def test_accumulator_picks_worst_and_best_agents(three_bidders):
    instance, _ = three_bidders
    rounds = _rounds(instance, [BidProfile.of([8, 7, 6]), BidProfile.of([9, 8, 7])])
    summary = summarize_rounds(rounds, window=1)
    assert summary.rounds == 2
    # bidder 0 always wins the most, bidder 2 never wins
    assert summary.best_agent == 0
    assert summary.worst_agent == 2
    assert summary.rolling["revenue"].shape == (2,)


def test_accumulators_merge_to_the_same_summary(three_bidders):
    instance, _ = three_bidders
    rounds = _rounds(instance, [BidProfile.of([8, 7, 6]), BidProfile.of([9, 8, 7]),
                                BidProfile.of([2, 9, 7])], PaymentRule.GSP)
    left, right = MetricAccumulator(), MetricAccumulator()
    left.add(rounds[0])
    for r in rounds[1:]:
        right.add(r)
    merged = left.merge(right).summary()
    whole = summarize_rounds(rounds)
    assert merged.revenue == whole.revenue
    assert merged.agent_payoff == whole.agent_payoff


def test_accumulator_rejects_changing_bidder_count(three_bidders):
    instance, profile = three_bidders
    accumulator = MetricAccumulator()
    accumulator.add(_rounds(instance, [profile])[0])
    other = AuctionInstance.build(10, sizes=[4, 7], values=[1, 1])
    with pytest.raises(AuctionDomainError):
        accumulator.add(_rounds(other, [BidProfile.of([1, 1])])[0])


def test_format_number():
    assert format_number(Fraction(4)) == "4"
    assert format_number(Fraction(15, 2)) == "7.500000"
    assert format_number(True) == "1"
    assert format_number(0.25) == "0.250000"


def test_csv_tables(tmp_path, three_bidders):
    instance, profile = three_bidders
    _, outcome = run_auction(instance, profile, PaymentRule.UP)
    metrics = round_metrics(instance, profile, outcome)
    with RoundCsvWriter(str(tmp_path)) as writer:
        for episode in range(3):
            writer.write(episode, instance, profile, outcome, metrics, epsilon=0.5)

    with open(writer.bids_path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == BIDS_COLUMNS
    assert len(rows) == 1 + 3 * instance.n, "Expected one row per bidder per episode"
    assert rows[1][:8] == ["0", "UP", "0", "9", "4", "8", "2", "1"]

    with open(writer.episodes_path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == EPISODE_COLUMNS
    assert rows[1] == ["0", "UP", "2", "9", "17", "17", "0", "100", "0.500000"]


def test_csv_output_is_byte_identical(tmp_path, three_bidders):
    instance, profile = three_bidders
    _, outcome = run_auction(instance, profile, PaymentRule.GSP)
    metrics = round_metrics(instance, profile, outcome)
    contents = []
    for run in ("a", "b"):
        with RoundCsvWriter(str(tmp_path / run)) as writer:
            writer.write(0, instance, profile, outcome, metrics)
        with open(writer.bids_path, "rb") as f:
            contents.append(f.read())
    assert contents[0] == contents[1]


def test_csv_append_keeps_a_single_header(tmp_path, three_bidders):
    instance, profile = three_bidders
    _, outcome = run_auction(instance, profile, PaymentRule.UP)
    metrics = round_metrics(instance, profile, outcome)
    with RoundCsvWriter(str(tmp_path)) as writer:
        writer.write(0, instance, profile, outcome, metrics)
    with RoundCsvWriter(str(tmp_path), append=True) as writer:
        writer.write(1, instance, profile, outcome, metrics)
    with open(writer.episodes_path, newline="") as f:
        rows = list(csv.reader(f))
    assert [r[0] for r in rows] == ["episode", "0", "1"]
