import os
import json
import logging
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, model_validator

from ..core.auction import TieMode
from ..core.payments import PaymentRule
from ..learning.agent import AgentConfig
from .environment import MarketEnvironment, SizeMode, SizeSampler
from .rng import derive_seed

logger = logging.getLogger(__name__)


class Config:
    """
    Configuration management for knapsack auction runs.
    Loads configuration from environment variables or .env file.
    """

    def __init__(self, config_file: Optional[str] = None):
        """
        Initialize configuration.

        Args:
            config_file: Path to configuration file (optional)
        """
        load_dotenv()
        self.config = {}
        self._load_from_env()

        # If config file provided, load it
        if config_file:
            self._load_from_file(config_file)

    def _load_from_env(self):
        """Load configuration from environment variables"""
        self.config["core"] = {
            "log_level": os.environ.get("LOG_LEVEL", "INFO"),
            "output_dir": os.environ.get("KNAPSACK_OUTPUT_DIR", "results"),
        }

        self.config["simulation"] = {
            "checkpoint_every": int(os.environ.get("KNAPSACK_CHECKPOINT_EVERY", "10000")),
            "rolling_window": int(os.environ.get("KNAPSACK_ROLLING_WINDOW", "1000")),
            "summary_window_fraction": float(os.environ.get("KNAPSACK_SUMMARY_FRACTION", "0.1")),
        }

        self.config["verify"] = {
            "trials": int(os.environ.get("KNAPSACK_VERIFY_TRIALS", "1000")),
            "opponent_profiles": int(os.environ.get("KNAPSACK_OPPONENT_PROFILES", "20")),
            "search_budget": int(os.environ.get("KNAPSACK_SEARCH_BUDGET", "10000")),
        }

    def _load_from_file(self, file_path: str):
        """
        Load configuration from JSON file.

        Args:
            file_path: Path to configuration file
        """
        try:
            with open(file_path, 'r') as f:
                file_config = json.load(f)

            # Merge with existing config
            for section, values in file_config.items():
                if section not in self.config:
                    self.config[section] = {}
                self.config[section].update(values)

            logger.info(f"Loaded configuration from {file_path}")
        except Exception as e:
            logger.error(f"Failed to load configuration from {file_path}: {str(e)}")

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """
        Get configuration value.

        Args:
            section: Configuration section
            key: Configuration key
            default: Default value if not found

        Returns:
            Configuration value
        """
        return self.config.get(section, {}).get(key, default)


class SimConfig(BaseModel):
    """
    One simulation: a payment rule, a market environment and the learners.

    Attributes:
        rule: Payment rule applied every episode
        environment: Bidder count, capacity, value and size distributions
        episodes: Number of single-auction episodes
        tie_mode: Ordering of equal per-unit bids
        agent: Learning parameters of every agent
        master_seed: Seed all random streams derive from
        checkpoint_every: Episodes between checkpoints, 0 for none
        rolling_window: Window of the rolling means in figures
        summary_fraction: Final share of episodes the summary covers
    """

    rule: PaymentRule = PaymentRule.UP
    environment: MarketEnvironment = Field(default_factory=MarketEnvironment)
    episodes: int = Field(100_000, ge=1)
    tie_mode: TieMode = TieMode.DETERMINISTIC
    agent: AgentConfig = Field(default_factory=AgentConfig)
    master_seed: int = Field(0, ge=0)
    checkpoint_every: int = Field(10_000, ge=0)
    rolling_window: int = Field(1000, ge=1)
    summary_fraction: float = Field(0.1, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_exploration(self):
        if self.agent.pure_exploration_episodes >= self.episodes:
            raise ValueError(
                f"pure_exploration_episodes ({self.agent.pure_exploration_episodes}) "
                f"must be below episodes ({self.episodes})"
            )
        return self

    @property
    def n_agents(self) -> int:
        return self.environment.n_agents

    @property
    def capacity(self) -> int:
        return self.environment.capacity

    @property
    def summary_start(self) -> int:
        """First episode of the summary window."""
        return self.episodes - max(1, int(round(self.episodes * self.summary_fraction)))


class SweepCell(BaseModel):
    label: str
    config: SimConfig


class SweepSpec(BaseModel):
    """
    Cross product of rules, bidder counts, capacities, size ranges and seeds
    over a base configuration.

    A cell's master seed is derived from the sweep seed and the environment
    part of its label, so every rule sees the same environment draws.
    """

    name: str
    base: SimConfig = Field(default_factory=SimConfig)
    rules: List[PaymentRule] = Field(default_factory=lambda: [PaymentRule.UP, PaymentRule.DP, PaymentRule.GSP])
    n_agents: List[int] = Field(default_factory=lambda: [7])
    capacities: List[int] = Field(default_factory=lambda: [36])
    size_ranges: List[Tuple[int, int]] = Field(default_factory=lambda: [(4, 10)])
    size_mode: SizeMode = SizeMode.WITHOUT_REPLACEMENT
    seeds: List[int] = Field(default_factory=lambda: [0])

    @model_validator(mode="after")
    def check_cells(self):
        if not all([self.rules, self.n_agents, self.capacities, self.size_ranges, self.seeds]):
            raise ValueError("Every sweep dimension needs at least one entry")
        self.cells()
        return self

    def cells(self) -> List[SweepCell]:
        cells = []
        for seed in self.seeds:
            for n in self.n_agents:
                for capacity in self.capacities:
                    for low, high in self.size_ranges:
                        env_label = f"n{n}-K{capacity}-s{low}_{high}-seed{seed}"
                        environment = self.base.environment.model_copy(update={
                            "n_agents": n,
                            "capacity": capacity,
                            "sizes": SizeSampler(low=low, high=high, mode=self.size_mode),
                        })
                        environment = MarketEnvironment.model_validate(environment.model_dump())
                        for rule in self.rules:
                            config = self.base.model_copy(update={
                                "rule": rule,
                                "environment": environment,
                                "master_seed": derive_seed(seed, env_label),
                            })
                            cells.append(SweepCell(label=f"{rule.value}-{env_label}", config=config))
        return cells

    def __len__(self) -> int:
        return len(self.cells())


def load_sim_config(path: str) -> SimConfig:
    """Read a SimConfig from a JSON file."""
    try:
        with open(path, 'r') as f:
            return SimConfig.model_validate(json.load(f))
    except OSError as e:
        logger.error(f"Failed to read simulation config {path}: {str(e)}")
        raise


def config_dict(config: BaseModel) -> Dict[str, Any]:
    return config.model_dump(mode="json")
