"""
Tabular Q-learning bidders.

Each auction is a single terminal decision: the state is the agent's own
(value, size), the action is a total bid from a fixed grid and the update
has no discounted continuation term.
"""

import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.exceptions import AuctionDomainError, AuctionInputError
from ..core.grid import BidGrid

logger = logging.getLogger(__name__)

State = Tuple[int, int]


class DecaySchedule(str, Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


class AgentConfig(BaseModel):
    """
    Learning parameters shared by every agent of a simulation.

    Attributes:
        learning_rate: alpha in [0, 1]; 0 freezes the tables
        pure_exploration_episodes: Leading episodes played with epsilon = 1
        initial_epsilon: Epsilon at the start of the decay phase
        final_epsilon: Epsilon at the last episode
        decay: Shape of the decay phase
        decay_rate: Steepness of the exponential schedule
        bid_min, bid_max, bid_step: Action grid of total bids
        loser_reward: Reward for losing, at most 0
        optimistic_init: Start every Q-value at optimistic_value instead of 0
    """

    learning_rate: float = Field(0.1, ge=0.0, le=1.0)
    pure_exploration_episodes: int = Field(0, ge=0)
    initial_epsilon: float = Field(1.0, ge=0.0, le=1.0)
    final_epsilon: float = Field(0.0, ge=0.0, le=1.0)
    decay: DecaySchedule = DecaySchedule.LINEAR
    decay_rate: float = Field(5.0, gt=0.0)
    bid_min: float = Field(0.0, ge=0.0)
    bid_max: float = 20.0
    bid_step: float = Field(1.0, gt=0.0)
    loser_reward: float = Field(-1.0, le=0.0)
    optimistic_init: bool = False
    optimistic_value: float = 10.0

    @model_validator(mode="after")
    def check_schedule(self):
        if self.final_epsilon > self.initial_epsilon:
            raise ValueError("final_epsilon must not exceed initial_epsilon")
        if self.bid_max < self.bid_min:
            raise ValueError(f"Bid grid [{self.bid_min}, {self.bid_max}] is empty")
        return self

    @property
    def action_grid(self) -> BidGrid:
        return BidGrid(self.bid_min, self.bid_max, self.bid_step)

    @property
    def initial_q(self) -> float:
        return self.optimistic_value if self.optimistic_init else 0.0


def epsilon_at(episode: int, config: AgentConfig, total_episodes: int) -> float:
    """
    Exploration rate of an episode.

    1.0 for the first pure_exploration_episodes, then a non-increasing decay
    from initial_epsilon that reaches final_epsilon at the last episode.

    Raises:
        AuctionDomainError: if episode is outside [0, total_episodes)
    """
    if not 0 <= episode < total_episodes:
        raise AuctionDomainError(f"Episode {episode} outside [0, {total_episodes})")
    if episode < config.pure_exploration_episodes:
        return 1.0
    decay_len = total_episodes - config.pure_exploration_episodes
    if decay_len <= 1:
        return config.final_epsilon
    t = (episode - config.pure_exploration_episodes) / (decay_len - 1)
    start, end = config.initial_epsilon, config.final_epsilon
    if config.decay == DecaySchedule.EXPONENTIAL:
        r = config.decay_rate
        weight = (math.exp(-r * t) - math.exp(-r)) / (1.0 - math.exp(-r))
        return end + (start - end) * weight
    return start + (end - start) * t


class QTable:
    """
    Dense action-value table over integer (value, size) states.

    The array has shape (values, sizes, actions); state (v, k) lives at
    [v - value_low, k - size_low].
    """

    def __init__(self, q: np.ndarray, value_low: int, size_low: int):
        if q.ndim != 3:
            raise AuctionInputError(f"Q-table must be 3-dimensional, got shape {q.shape}")
        self.q = q
        self.value_low = value_low
        self.size_low = size_low

    @classmethod
    def create(cls, value_range: Tuple[int, int], size_range: Tuple[int, int], n_actions: int,
               initial: float = 0.0) -> "QTable":
        shape = (value_range[1] - value_range[0] + 1, size_range[1] - size_range[0] + 1, n_actions)
        return cls(np.full(shape, initial, dtype=float), value_range[0], size_range[0])

    @property
    def n_actions(self) -> int:
        return self.q.shape[2]

    def index(self, state: State) -> Tuple[int, int]:
        value, size = state
        i, j = value - self.value_low, size - self.size_low
        if not (0 <= i < self.q.shape[0] and 0 <= j < self.q.shape[1]):
            raise AuctionInputError(f"State {state} is not covered by the Q-table")
        return i, j

    def row(self, state: State) -> np.ndarray:
        i, j = self.index(state)
        return self.q[i, j]

    def greedy_actions(self, state: State) -> np.ndarray:
        row = self.row(state)
        return np.flatnonzero(row == row.max())

    def copy(self) -> "QTable":
        return QTable(self.q.copy(), self.value_low, self.size_low)

    def to_dict(self) -> Dict[str, Any]:
        return {"value_low": self.value_low, "size_low": self.size_low, "q": self.q.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QTable":
        return cls(np.asarray(data["q"], dtype=float), int(data["value_low"]), int(data["size_low"]))


def select_action(qtable: QTable, state: State, epsilon: float, rng: np.random.Generator) -> int:
    """
    Epsilon-greedy choice of an action index.

    With probability epsilon a uniformly random action, otherwise an argmax
    action with ties broken uniformly at random.
    """
    if rng.random() < epsilon:
        return int(rng.integers(qtable.n_actions))
    best = qtable.greedy_actions(state)
    if len(best) == 1:
        return int(best[0])
    return int(rng.choice(best))


def q_update(qtable: QTable, state: State, action: int, reward: float, alpha: float) -> QTable:
    """Q <- (1 - alpha) * Q + alpha * reward on one cell, in place."""
    i, j = qtable.index(state)
    qtable.q[i, j, action] = (1.0 - alpha) * qtable.q[i, j, action] + alpha * reward
    return qtable


class QLearningAgent:
    """A bidder that learns only from its own state, action and reward."""

    def __init__(self, agent_id: int, config: AgentConfig, table: QTable, rng: np.random.Generator):
        self.agent_id = agent_id
        self.config = config
        self.table = table
        self.rng = rng
        self.grid = config.action_grid
        if table.n_actions != len(self.grid):
            raise AuctionInputError(
                f"Agent {agent_id}: table has {table.n_actions} actions, grid has {len(self.grid)}"
            )

    def act(self, state: State, epsilon: float) -> Tuple[int, Fraction]:
        action = select_action(self.table, state, epsilon, self.rng)
        return action, self.grid[action]

    def learn(self, state: State, action: int, reward: float) -> None:
        q_update(self.table, state, action, reward, self.config.learning_rate)

    def greedy_bid(self, state: State) -> Fraction:
        """Lowest bid among the current argmax actions."""
        return self.grid[int(self.table.greedy_actions(state)[0])]
