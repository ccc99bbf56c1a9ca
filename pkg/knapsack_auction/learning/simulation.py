"""
Episode loop of the Q-learning market.

Every episode draws fresh values and sizes, lets each agent bid from its own
table, resolves one auction and feeds every agent its own reward. Episodes
run strictly in order; distinct simulations share nothing.
"""

import json
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np

from ..core.auction import AuctionInstance, BidProfile, TieMode
from ..core.exceptions import SimulationIOError
from ..core.payments import AuctionOutcome, PaymentRule, run_auction
from ..harness.config import SimConfig
from ..harness.environment import MarketEnvironment, sample_environment
from ..harness.rng import RngStreams
from ..metrics.export import RoundCsvWriter
from ..metrics.metrics import MetricAccumulator, RoundMetrics, round_metrics
from .agent import QLearningAgent, QTable, State, epsilon_at

logger = logging.getLogger(__name__)

CHECKPOINT_SCHEMA_VERSION = 1
CHECKPOINT_FILE = "checkpoint.json"
HISTORY_FILE = "history.npz"


@dataclass(frozen=True)
class EpisodeRecord:
    """
    One episode: what every agent saw, did and got.

    rewards equal payoffs for winners and the loser reward for losers.
    """

    episode: int
    epsilon: float
    states: Tuple[State, ...]
    actions: Tuple[int, ...]
    rewards: Tuple[float, ...]
    winners: Tuple[bool, ...]
    instance: AuctionInstance
    profile: BidProfile
    outcome: AuctionOutcome
    metrics: RoundMetrics
    resamples: int = 0


def run_episode(agents: List[QLearningAgent], environment: MarketEnvironment, rule: PaymentRule,
                tie_mode: TieMode, env_rng: np.random.Generator, tie_rng: np.random.Generator,
                episode: int = 0, epsilon: float = 0.0) -> EpisodeRecord:
    """Play and learn from a single auction."""
    draw = sample_environment(environment, env_rng)
    instance = draw.instance(environment.capacity)
    states = tuple((v, k) for v, k in zip(draw.values, draw.sizes))

    actions, bids = [], []
    for agent, state in zip(agents, states):
        action, bid = agent.act(state, epsilon)
        actions.append(action)
        bids.append(bid)
    profile = BidProfile(tuple(bids))

    _, outcome = run_auction(instance, profile, rule, tie_mode, tie_rng)
    metrics = round_metrics(instance, profile, outcome, tie_mode, tie_rng)

    rewards = []
    for agent, state, action, result in zip(agents, states, actions, outcome.bidders):
        reward = float(result.payoff) if result.is_winner else agent.config.loser_reward
        agent.learn(state, action, reward)
        rewards.append(reward)

    return EpisodeRecord(
        episode=episode,
        epsilon=epsilon,
        states=states,
        actions=tuple(actions),
        rewards=tuple(rewards),
        winners=tuple(b.is_winner for b in outcome.bidders),
        instance=instance,
        profile=profile,
        outcome=outcome,
        metrics=metrics,
        resamples=draw.resamples,
    )


class EpisodeHistory:
    """Per-episode metrics of a run as float arrays, for summaries and figures."""

    def __init__(self, episodes: int, n_agents: int):
        self.revenue = np.zeros(episodes)
        self.efficiency_ratio = np.zeros(episodes)
        self.efficiency_gap = np.zeros(episodes)
        self.epsilon = np.zeros(episodes)
        self.n_winners = np.zeros(episodes, dtype=int)
        self.resamples = np.zeros(episodes, dtype=int)
        self.negative_gap = np.zeros(episodes, dtype=bool)
        self.learning_ratio = np.zeros((episodes, n_agents))
        self.payoff = np.zeros((episodes, n_agents))

    ARRAYS = ("revenue", "efficiency_ratio", "efficiency_gap", "epsilon", "n_winners",
              "resamples", "negative_gap", "learning_ratio", "payoff")

    def record(self, record: EpisodeRecord) -> None:
        t = record.episode
        m = record.metrics
        self.revenue[t] = float(m.revenue)
        self.efficiency_ratio[t] = float(m.efficiency_ratio)
        self.efficiency_gap[t] = float(m.efficiency_gap)
        self.epsilon[t] = record.epsilon
        self.n_winners[t] = len(record.outcome.winners)
        self.resamples[t] = record.resamples
        self.negative_gap[t] = m.gap_negative
        self.learning_ratio[t] = [float(r) for r in m.learning_ratios]
        self.payoff[t] = [float(p) for p in m.payoffs]

    def accumulator(self, start: int = 0, end: Optional[int] = None) -> MetricAccumulator:
        """Metric accumulator over episodes [start, end)."""
        window = slice(start, end)
        return MetricAccumulator(
            revenue=self.revenue[window].tolist(),
            efficiency_ratio=self.efficiency_ratio[window].tolist(),
            efficiency_gap=self.efficiency_gap[window].tolist(),
            agent_learning_ratio=self.learning_ratio[window].T.tolist(),
            agent_payoff=self.payoff[window].T.tolist(),
            negative_gap_rounds=int(self.negative_gap[window].sum()),
        )

    def save(self, path: str) -> None:
        np.savez(path, **{name: getattr(self, name) for name in self.ARRAYS})

    @classmethod
    def load(cls, path: str) -> "EpisodeHistory":
        with np.load(path) as data:
            episodes, n_agents = data["payoff"].shape
            history = cls(episodes, n_agents)
            for name in cls.ARRAYS:
                setattr(history, name, data[name].copy())
        return history


@dataclass
class SimulationResult:
    config: SimConfig
    history: EpisodeHistory
    tables: List[QTable]
    episodes_run: int
    out_dir: Optional[str] = None


class Simulation:
    """
    A resumable run of one SimConfig.

    With an output directory, CSV tables are streamed there and a checkpoint
    (tables, random stream states, episode index) is written every
    checkpoint_every episodes and at the end.
    """

    def __init__(self, config: SimConfig, out_dir: Optional[str] = None):
        self.config = config
        self.out_dir = out_dir
        self.streams = RngStreams(config.master_seed)
        self.agents = [self._make_agent(i) for i in range(config.n_agents)]
        self.history = EpisodeHistory(config.episodes, config.n_agents)
        self.episode = 0
        self._writer: Optional[RoundCsvWriter] = None
        self._append = False

    def _make_agent(self, agent_id: int) -> QLearningAgent:
        env = self.config.environment
        agent_config = self.config.agent
        table = QTable.create(
            (env.values.low, env.values.high),
            (env.sizes.low, env.sizes.high),
            len(agent_config.action_grid),
            agent_config.initial_q,
        )
        return QLearningAgent(agent_id, agent_config, table, self.streams.agent(agent_id))

    @property
    def tables(self) -> List[QTable]:
        return [agent.table for agent in self.agents]

    @property
    def done(self) -> bool:
        return self.episode >= self.config.episodes

    def step(self) -> EpisodeRecord:
        """Play the next episode."""
        config = self.config
        epsilon = epsilon_at(self.episode, config.agent, config.episodes)
        record = run_episode(
            self.agents, config.environment, config.rule, config.tie_mode,
            self.streams.environment, self.streams.tie_break, self.episode, epsilon,
        )
        self.history.record(record)
        if self._writer is not None:
            self._writer.write(record.episode, record.instance, record.profile, record.outcome,
                               record.metrics, record.epsilon)
        self.episode += 1
        return record

    def iter_episodes(self, episodes: Optional[int] = None) -> Iterator[EpisodeRecord]:
        """Yield records until the run is complete or `episodes` more were played."""
        stop = self.config.episodes if episodes is None else min(self.config.episodes, self.episode + episodes)
        self._open_writer()
        try:
            while self.episode < stop:
                yield self.step()
                if self.config.checkpoint_every and self.episode % self.config.checkpoint_every == 0:
                    self.checkpoint()
        finally:
            self._close_writer()

    def run(self, episodes: Optional[int] = None) -> SimulationResult:
        """Play to the end (or `episodes` more) and checkpoint."""
        start = self.episode
        logger.info(
            f"Running {self.config.rule.value} with {self.config.n_agents} agents, "
            f"K={self.config.capacity}, episodes {start}..{self.config.episodes}"
        )
        for _ in self.iter_episodes(episodes):
            pass
        if self.out_dir is not None:
            self.checkpoint()
        resamples = int(self.history.resamples[start:self.episode].sum())
        if resamples:
            logger.warning(f"{resamples} size resamples during episodes {start}..{self.episode}")
        logger.info(f"Finished {self.config.rule.value} at episode {self.episode}")
        return SimulationResult(self.config, self.history, self.tables, self.episode - start, self.out_dir)

    def _open_writer(self) -> None:
        if self.out_dir is None or self._writer is not None:
            return
        self._writer = RoundCsvWriter(self.out_dir, append=self._append)
        if self._append:
            self._writer.truncate_from(self.episode)
        self._writer.open(self.episode)
        self._append = True

    def _close_writer(self) -> None:
        if self._writer is not None:
            self._writer.close()
            self._writer = None

    def checkpoint(self) -> Optional[str]:
        """
        Write checkpoint.json and history.npz into the output directory.

        Raises:
            SimulationIOError: when either file cannot be written
        """
        if self.out_dir is None:
            return None
        if self._writer is not None:
            self._writer.flush(self.episode)
        path = os.path.join(self.out_dir, CHECKPOINT_FILE)
        state = {
            "schema_version": CHECKPOINT_SCHEMA_VERSION,
            "config": self.config.model_dump(mode="json"),
            "episode": self.episode,
            "tables": [table.to_dict() for table in self.tables],
            "rng": self.streams.state(),
        }
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            self.history.save(os.path.join(self.out_dir, HISTORY_FILE))
            tmp_path = path + ".tmp"
            with open(tmp_path, "w") as f:
                json.dump(state, f)
            os.replace(tmp_path, path)
        except OSError as e:
            logger.error(f"Failed to write checkpoint {path}: {str(e)}")
            raise SimulationIOError(f"Checkpoint {path} failed", self.episode) from e
        logger.info(f"Checkpoint at episode {self.episode} written to {path}")
        return path

    @classmethod
    def resume(cls, out_dir: str) -> "Simulation":
        """
        Rebuild a simulation from the checkpoint in out_dir. Continuing it
        yields the same episodes an uninterrupted run would have played.
        """
        path = os.path.join(out_dir, CHECKPOINT_FILE)
        try:
            with open(path, "r") as f:
                state = json.load(f)
            history = EpisodeHistory.load(os.path.join(out_dir, HISTORY_FILE))
        except OSError as e:
            logger.error(f"Failed to read checkpoint {path}: {str(e)}")
            raise SimulationIOError(f"Cannot read checkpoint {path}", 0) from e

        simulation = cls(SimConfig.model_validate(state["config"]), out_dir)
        for agent, table in zip(simulation.agents, state["tables"]):
            agent.table = QTable.from_dict(table)
        simulation.streams.restore(state["rng"])
        simulation.history = history
        simulation.episode = int(state["episode"])
        simulation._append = True
        logger.info(f"Resumed from {path} at episode {simulation.episode}")
        return simulation


def run_simulation(config: SimConfig, out_dir: Optional[str] = None) -> SimulationResult:
    """Run a whole simulation from scratch."""
    return Simulation(config, out_dir).run()


def preload_bids(table: QTable, grid_points: Tuple[Fraction, ...], bid_of: Callable[[int, int], float],
                 high: float = 1.0) -> QTable:
    """
    Make bid_of(v, k) the unique greedy action of every state: that cell is
    set to `high` and the rest of the row to 0. Bids off the grid snap to the
    nearest grid point.
    """
    values = range(table.value_low, table.value_low + table.q.shape[0])
    sizes = range(table.size_low, table.size_low + table.q.shape[1])
    for v in values:
        for k in sizes:
            bid = Fraction(bid_of(v, k))
            action = min(range(len(grid_points)), key=lambda a: abs(grid_points[a] - bid))
            i, j = table.index((v, k))
            table.q[i, j, :] = 0.0
            table.q[i, j, action] = high
    return table
