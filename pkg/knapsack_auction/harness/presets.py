"""
Named parameterizations of the market.

lab and ai share one environment: 7 bidders, capacity 36, integer values
uniform on 1..10 and sizes a permutation of 4..10 (which always sum to 49).
The cs-* presets are comparative-statics sweeps over the capacity and desk
is the three-seed UP/DP/GSP comparison at 20,000 episodes.

The presets give losing bids a reward of 0, the payoff of the real game;
AgentConfig keeps -1 as its own default.
"""

import logging
from typing import Callable, Dict, Union

from ..core.exceptions import AuctionInputError
from ..core.payments import PaymentRule
from ..learning.agent import AgentConfig
from .config import SimConfig, SweepSpec
from .environment import MarketEnvironment, SizeMode, SizeSampler, ValueDistribution

logger = logging.getLogger(__name__)

LAB_EPISODES = 20
AI_EPISODES = 100_000
AI_PURE_EXPLORATION = 1_000
DESK_EPISODES = 20_000
DESK_SEEDS = [0, 1, 2]
LOSER_REWARD = 0.0
SWEEP_CAPACITIES = [30, 36, 40]


def lab_environment() -> MarketEnvironment:
    return MarketEnvironment(
        n_agents=7,
        capacity=36,
        values=ValueDistribution(low=1, high=10),
        sizes=SizeSampler(low=4, high=10, mode=SizeMode.WITHOUT_REPLACEMENT),
    )


def lab() -> SimConfig:
    """The 20-round session length."""
    return SimConfig(
        environment=lab_environment(),
        episodes=LAB_EPISODES,
        agent=AgentConfig(pure_exploration_episodes=0, loser_reward=LOSER_REWARD),
        checkpoint_every=0,
        rolling_window=1,
    )


def ai() -> SimConfig:
    """100,000 episodes, the first 1,000 of them pure exploration."""
    return SimConfig(
        environment=lab_environment(),
        episodes=AI_EPISODES,
        agent=AgentConfig(pure_exploration_episodes=AI_PURE_EXPLORATION, loser_reward=LOSER_REWARD),
        checkpoint_every=10_000,
        rolling_window=1000,
    )


def cs_7() -> SweepSpec:
    return SweepSpec(name="cs-7", base=ai(), n_agents=[7], capacities=SWEEP_CAPACITIES,
                     size_ranges=[(4, 10)], size_mode=SizeMode.WITHOUT_REPLACEMENT)


def cs_10() -> SweepSpec:
    """Sizes are a permutation of 1..10, mirroring the lab's draw."""
    return SweepSpec(name="cs-10", base=ai(), n_agents=[10], capacities=SWEEP_CAPACITIES,
                     size_ranges=[(1, 10)], size_mode=SizeMode.WITHOUT_REPLACEMENT)


def desk() -> SweepSpec:
    """UP, DP and GSP on the lab environment, 3 seeds x 20,000 episodes."""
    base = ai().model_copy(update={"episodes": DESK_EPISODES, "checkpoint_every": 0})
    return SweepSpec(name="desk", base=base, rules=[PaymentRule.UP, PaymentRule.DP, PaymentRule.GSP],
                     seeds=DESK_SEEDS)


PRESETS: Dict[str, Callable[[], Union[SimConfig, SweepSpec]]] = {
    "lab": lab,
    "ai": ai,
    "cs-7": cs_7,
    "cs-10": cs_10,
    "desk": desk,
}


def preset(name: str) -> Union[SimConfig, SweepSpec]:
    """
    Build a named preset.

    Raises:
        AuctionInputError: for an unknown name
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise AuctionInputError(f"Unknown preset {name!r}; choose one of {', '.join(PRESETS)}") from None
    logger.debug(f"Building preset {name}")
    return factory()
