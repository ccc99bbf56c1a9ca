import numpy as np
import pytest

from knapsack_auction.core.exceptions import AuctionDomainError, AuctionInputError
from knapsack_auction.learning.agent import (
    AgentConfig,
    DecaySchedule,
    QLearningAgent,
    QTable,
    epsilon_at,
    q_update,
    select_action,
)


@pytest.fixture
def table():
    return QTable.create((1, 10), (4, 10), 21)


def test_table_covers_value_and_size_ranges(table):
    assert table.q.shape == (10, 7, 21)
    assert table.row((10, 10)).shape == (21,)
    with pytest.raises(AuctionInputError):
        table.row((11, 4))
    with pytest.raises(AuctionInputError):
        table.row((1, 3))


def test_full_exploration_is_uniform(table):
    rng = np.random.default_rng(0)
    counts = np.bincount([select_action(table, (5, 5), 1.0, rng) for _ in range(21_000)], minlength=21)
    assert counts.min() > 800 and counts.max() < 1200, f"Non-uniform exploration: {counts}"


def test_greedy_picks_unique_maximizer(table):
    table.row((5, 5))[7] = 3.0
    rng = np.random.default_rng(1)
    assert {select_action(table, (5, 5), 0.0, rng) for _ in range(50)} == {7}


def test_greedy_ties_split_evenly(table):
    row = table.row((3, 6))
    row[2] = row[9] = 1.0
    rng = np.random.default_rng(2)
    picks = [select_action(table, (3, 6), 0.0, rng) for _ in range(4000)]
    assert set(picks) == {2, 9}
    share = picks.count(2) / len(picks)
    assert 0.45 < share < 0.55, f"Tie broken unevenly: {share}"


def test_q_update_formula(table):
    q_update(table, (8, 4), 3, 5.0, 0.1)
    assert table.row((8, 4))[3] == pytest.approx(0.5)
    assert table.row((8, 4)).sum() == pytest.approx(0.5), "Only one cell may change"
    q_update(table, (8, 4), 3, 5.0, 1.0)
    assert table.row((8, 4))[3] == 5.0


def test_repeated_reward_converges_geometrically(table):
    alpha, reward = 0.2, -1.0
    for t in range(1, 30):
        q_update(table, (1, 4), 0, reward, alpha)
        assert abs(table.row((1, 4))[0] - reward) == pytest.approx((1 - alpha) ** t)


def test_zero_learning_rate_freezes_the_table(table):
    q_update(table, (2, 5), 4, 9.0, 0.0)
    assert not table.q.any()


def test_epsilon_schedule_endpoints():
    config = AgentConfig(pure_exploration_episodes=1000)
    assert epsilon_at(0, config, 100_000) == 1.0
    assert epsilon_at(999, config, 100_000) == 1.0
    assert epsilon_at(99_999, config, 100_000) == 0.0


def test_linear_midpoint():
    config = AgentConfig(pure_exploration_episodes=0)
    assert epsilon_at(1, config, 3) == pytest.approx(0.5)


@pytest.mark.parametrize("decay", list(DecaySchedule))
def test_epsilon_is_non_increasing(decay):
    config = AgentConfig(pure_exploration_episodes=10, decay=decay)
    schedule = [epsilon_at(t, config, 200) for t in range(200)]
    assert all(a >= b for a, b in zip(schedule, schedule[1:]))
    assert schedule[10] == pytest.approx(1.0)
    assert schedule[-1] == pytest.approx(0.0)


def test_epsilon_outside_run_is_an_error():
    with pytest.raises(AuctionDomainError):
        epsilon_at(10, AgentConfig(pure_exploration_episodes=0), 10)


def test_agent_config_validation():
    with pytest.raises(ValueError):
        AgentConfig(learning_rate=1.5)
    with pytest.raises(ValueError):
        AgentConfig(loser_reward=0.5)
    with pytest.raises(ValueError):
        AgentConfig(initial_epsilon=0.2, final_epsilon=0.5)


def test_optimistic_initialization():
    config = AgentConfig(optimistic_init=True, optimistic_value=12.0)
    assert config.initial_q == 12.0
    assert AgentConfig().initial_q == 0.0


def test_agent_maps_actions_to_grid_bids(table):
    agent = QLearningAgent(0, AgentConfig(), table, np.random.default_rng(0))
    table.row((6, 4))[6] = 1.0
    action, bid = agent.act((6, 4), 0.0)
    assert action == 6 and bid == 6
    assert agent.greedy_bid((6, 4)) == 6


def test_agent_rejects_mismatched_grid():
    with pytest.raises(AuctionInputError):
        QLearningAgent(0, AgentConfig(bid_max=10), QTable.create((1, 10), (4, 10), 21),
                       np.random.default_rng(0))
