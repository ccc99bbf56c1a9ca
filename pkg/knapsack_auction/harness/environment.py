"""
Market environments: how each episode's values and sizes are drawn.
"""

import logging
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.auction import AuctionInstance
from ..core.exceptions import AuctionInputError

logger = logging.getLogger(__name__)


class ValueDistribution(BaseModel):
    """Independent uniform integer values on [low, high]."""

    low: int = Field(1, ge=0)
    high: int = 10

    @model_validator(mode="after")
    def check_range(self):
        if self.high < self.low:
            raise ValueError(f"Value range [{self.low}, {self.high}] is empty")
        return self

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.integers(self.low, self.high + 1, size=n)


class SizeMode(str, Enum):
    WITHOUT_REPLACEMENT = "without_replacement"
    WITH_REPLACEMENT = "with_replacement"


class SizeSampler(BaseModel):
    """Integer sizes on [low, high], drawn with or without replacement."""

    low: int = Field(4, ge=1)
    high: int = 10
    mode: SizeMode = SizeMode.WITHOUT_REPLACEMENT

    @model_validator(mode="after")
    def check_range(self):
        if self.high < self.low:
            raise ValueError(f"Size range [{self.low}, {self.high}] is empty")
        return self

    @property
    def cardinality(self) -> int:
        return self.high - self.low + 1

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        support = np.arange(self.low, self.high + 1)
        if self.mode == SizeMode.WITHOUT_REPLACEMENT:
            return rng.choice(support, size=n, replace=False)
        return rng.choice(support, size=n, replace=True)


class MarketEnvironment(BaseModel):
    """
    Number of bidders, capacity and the distributions of values and sizes.

    Every draw must have total size above the capacity. Draws that do not are
    resampled, up to max_resamples times in a row.
    """

    n_agents: int = Field(7, ge=1)
    capacity: int = Field(36, ge=1)
    values: ValueDistribution = Field(default_factory=ValueDistribution)
    sizes: SizeSampler = Field(default_factory=SizeSampler)
    max_resamples: int = Field(1000, ge=0)

    @model_validator(mode="after")
    def check_feasible(self):
        if self.sizes.mode == SizeMode.WITHOUT_REPLACEMENT and self.sizes.cardinality < self.n_agents:
            raise ValueError(
                f"Cannot draw {self.n_agents} distinct sizes from [{self.sizes.low}, {self.sizes.high}]"
            )
        if self.sizes.high >= self.capacity:
            raise ValueError(f"Largest size {self.sizes.high} must be below capacity {self.capacity}")
        if self.n_agents * self.sizes.high <= self.capacity:
            raise ValueError(
                f"{self.n_agents} objects of size at most {self.sizes.high} always fit in {self.capacity}"
            )
        return self


class EnvironmentDraw(BaseModel):
    values: Tuple[int, ...]
    sizes: Tuple[int, ...]
    resamples: int = 0

    def instance(self, capacity: int) -> AuctionInstance:
        return AuctionInstance.build(capacity, self.sizes, self.values)


def sample_environment(environment: MarketEnvironment, rng: np.random.Generator) -> EnvironmentDraw:
    """
    Draw one episode's values and sizes.

    Raises:
        AuctionInputError: when no feasible size draw appears within max_resamples
    """
    values = tuple(int(v) for v in environment.values.sample(rng, environment.n_agents))
    for resamples in range(environment.max_resamples + 1):
        sizes = tuple(int(k) for k in environment.sizes.sample(rng, environment.n_agents))
        if sum(sizes) > environment.capacity:
            if resamples:
                logger.warning(f"Size draw needed {resamples} resamples to exceed capacity")
            return EnvironmentDraw(values=values, sizes=sizes, resamples=resamples)
    raise AuctionInputError(
        f"No size draw exceeded capacity {environment.capacity} after {environment.max_resamples} resamples"
    )
