"""
Probability that a bid is packed against opponents playing a symmetric strategy.

Opponents draw values from a continuous uniform distribution and sizes from a
finite integer support. An object of size k bidding B is packed exactly when
every opponent ranked ahead of it fits together with it:
sum(k_j for j ahead) + k <= K. Anything ranked after a misfit never matters
because the walk has already stopped.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core.exceptions import AuctionDomainError, AuctionInputError
from ..harness.environment import SizeMode

logger = logging.getLogger(__name__)


class BneEnvironment(BaseModel):
    """
    Symmetric environment for equilibrium analysis.

    Attributes:
        n_bidders: Bidders per auction, the focal bidder included
        capacity: Knapsack capacity K
        sizes: Integer size support
        size_mode: Opponents' sizes with or without replacement (the focal bidder's
            size is removed from the pool once when drawing without replacement)
        value_low, value_high: Values are uniform on [value_low, value_high]
    """

    n_bidders: int = Field(2, ge=1)
    capacity: int = Field(6, ge=1)
    sizes: Tuple[int, ...] = (4,)
    size_mode: SizeMode = SizeMode.WITH_REPLACEMENT
    value_low: float = Field(0.0, ge=0.0)
    value_high: float = 10.0

    @model_validator(mode="after")
    def check(self):
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("Sizes must be positive integers")
        if max(self.sizes) >= self.capacity:
            raise ValueError(f"Sizes must be below capacity {self.capacity}")
        if self.value_high <= self.value_low:
            raise ValueError("Value range is empty")
        if self.size_mode == SizeMode.WITHOUT_REPLACEMENT and len(self.sizes) < self.n_bidders:
            raise ValueError(f"Cannot draw {self.n_bidders} distinct sizes from {self.sizes}")
        return self

    @property
    def n_opponents(self) -> int:
        return self.n_bidders - 1


class TabulatedStrategy:
    """
    Bid function beta(v, k), piecewise linear in v on a value grid, one column
    per size of the support.
    """

    def __init__(self, value_grid: np.ndarray, sizes: Sequence[int], table: np.ndarray):
        table = np.asarray(table, dtype=float)
        if table.shape != (len(value_grid), len(sizes)):
            raise AuctionInputError(
                f"Strategy table shape {table.shape} does not match {len(value_grid)} values x {len(sizes)} sizes"
            )
        self.value_grid = np.asarray(value_grid, dtype=float)
        self.sizes = tuple(int(s) for s in sizes)
        self.table = table

    @classmethod
    def scaled(cls, environment: BneEnvironment, factor: float = 1.0, points: int = 41) -> "TabulatedStrategy":
        """beta(v, k) = factor * v on every size."""
        grid = np.linspace(environment.value_low, environment.value_high, points)
        table = np.repeat((factor * grid)[:, None], len(environment.sizes), axis=1)
        return cls(grid, environment.sizes, table)

    def column(self, size: int) -> int:
        try:
            return self.sizes.index(int(size))
        except ValueError as e:
            raise AuctionInputError(f"Size {size} is not in the strategy's support {self.sizes}") from e

    def bid(self, values: np.ndarray, sizes: np.ndarray) -> np.ndarray:
        """Vectorized beta over matching arrays of values and sizes."""
        values = np.asarray(values, dtype=float)
        sizes = np.asarray(sizes)
        bids = np.empty_like(values)
        for column, size in enumerate(self.sizes):
            mask = sizes == size
            if mask.any():
                bids[mask] = np.interp(values[mask], self.value_grid, self.table[:, column])
        return bids

    def bid_cdf(self, x: np.ndarray, size: int) -> np.ndarray:
        """
        P(beta(V, size) <= x) for V uniform on the value grid's range, exact for
        a non-decreasing piecewise linear beta.
        """
        x = np.asarray(x, dtype=float)
        column = self.table[:, self.column(size)]
        v_lo, v_hi = self.value_grid[:-1], self.value_grid[1:]
        b_lo, b_hi = column[:-1], column[1:]
        width = v_hi - v_lo
        xs = x[..., None]
        rising = b_hi > b_lo
        span = np.where(rising, b_hi - b_lo, 1.0)
        partial = np.clip((xs - b_lo) / span, 0.0, 1.0)
        flat = (xs >= b_hi).astype(float)
        covered = np.where(rising, partial, flat) * width
        return covered.sum(axis=-1) / (self.value_grid[-1] - self.value_grid[0])


@dataclass(frozen=True)
class PsiEstimate:
    bid: float
    size: int
    psi: float
    standard_error: float
    n_samples: int


@dataclass(frozen=True)
class OpponentDraws:
    """Opponents' values and sizes, shape (samples, opponents)."""

    values: np.ndarray
    sizes: np.ndarray


def draw_opponent_sizes(environment: BneEnvironment, size: int, n_samples: int,
                        rng: np.random.Generator) -> np.ndarray:
    support = np.asarray(environment.sizes)
    m = environment.n_opponents
    if environment.size_mode == SizeMode.WITHOUT_REPLACEMENT:
        pool = np.delete(support, np.flatnonzero(support == size)[:1])
        if len(pool) < m:
            raise AuctionDomainError(f"Cannot draw {m} opponent sizes from {pool.tolist()}")
        return rng.permuted(np.tile(pool, (n_samples, 1)), axis=1)[:, :m]
    return rng.choice(support, size=(n_samples, m), replace=True)


def draw_opponents(environment: BneEnvironment, size: int, n_samples: int,
                   rng: np.random.Generator, fixed_sizes: Optional[Sequence[int]] = None) -> OpponentDraws:
    """Shared draws for evaluating many focal bids on the same opponents."""
    m = environment.n_opponents
    values = rng.uniform(environment.value_low, environment.value_high, size=(n_samples, m))
    if fixed_sizes is not None:
        if len(fixed_sizes) != m:
            raise AuctionInputError(f"Expected {m} opponent sizes, got {len(fixed_sizes)}")
        sizes = np.tile(np.asarray(fixed_sizes, dtype=int), (n_samples, 1))
    else:
        sizes = draw_opponent_sizes(environment, size, n_samples, rng)
    return OpponentDraws(values, sizes)


def packed_fraction(bids: np.ndarray, size: int, strategy: TabulatedStrategy, draws: OpponentDraws,
                    capacity: int) -> np.ndarray:
    """
    Share of draws in which each focal bid is packed.

    Opponents tied with the focal bidder on per-unit bid rank ahead of it when their
    size is not larger, since the focal bidder takes the last bidder id.
    """
    bids = np.atleast_1d(np.asarray(bids, dtype=float))
    opp_bids = strategy.bid(draws.values, draws.sizes)
    lhs = opp_bids[None, :, :] * size
    rhs = bids[:, None, None] * draws.sizes[None, :, :]
    ahead = (lhs > rhs) | ((lhs == rhs) & (draws.sizes[None, :, :] <= size))
    load = (ahead * draws.sizes[None, :, :]).sum(axis=2)
    return (load + size <= capacity).mean(axis=1)


def estimate_psi(bid: float, size: int, strategy: TabulatedStrategy, environment: BneEnvironment,
                 n_samples: int = 10_000, seed: Optional[int] = None,
                 draws: Optional[OpponentDraws] = None) -> PsiEstimate:
    """
    Monte-Carlo estimate of the probability that `bid` with `size` is packed.

    Pass the same `draws` to compare bids on common random numbers; the
    estimate is then non-decreasing in the bid on every draw set.
    """
    if n_samples < 1:
        raise AuctionDomainError("n_samples must be positive")
    if environment.n_opponents == 0:
        return PsiEstimate(float(bid), size, 1.0, 0.0, n_samples)
    if draws is None:
        draws = draw_opponents(environment, size, n_samples, np.random.default_rng(seed))
    psi = float(packed_fraction(np.asarray([bid]), size, strategy, draws, environment.capacity)[0])
    n = draws.values.shape[0]
    return PsiEstimate(float(bid), size, psi, math.sqrt(psi * (1.0 - psi) / n), n)


def ahead_probability(bids: np.ndarray, size: int, opponent_size: int,
                      strategy: TabulatedStrategy) -> np.ndarray:
    """P(an opponent of opponent_size ranks ahead of a focal bidder bidding `bids` with `size`)."""
    threshold = np.asarray(bids, dtype=float) * opponent_size / size
    return 1.0 - strategy.bid_cdf(threshold, opponent_size)


def packing_probability(bids: np.ndarray, size: int, opponent_sizes: Sequence[int],
                        strategy: TabulatedStrategy, capacity: int) -> np.ndarray:
    """
    Exact packing probability for fixed opponent sizes, integrating their
    values. A convolution over the load of opponents ranked ahead.
    """
    bids = np.atleast_1d(np.asarray(bids, dtype=float))
    room = capacity - size
    if room < 0:
        return np.zeros_like(bids)
    load = np.zeros((len(bids), room + 1))
    load[:, 0] = 1.0
    for opponent_size in opponent_sizes:
        q = ahead_probability(bids, size, opponent_size, strategy)[:, None]
        shifted = np.zeros_like(load)
        if opponent_size <= room:
            shifted[:, opponent_size:] = load[:, :room + 1 - opponent_size]
        load = load * (1.0 - q) + shifted * q
    return load.sum(axis=1)


def psi_by_subsets(bid: float, size: int, opponent_sizes: Sequence[int], strategy: TabulatedStrategy,
                   environment: BneEnvironment) -> float:
    """
    Packing probability by enumerating every subset of opponents that could
    rank ahead of the focal bidder. Exponential in the opponent count.
    """
    if len(opponent_sizes) > 7:
        raise AuctionDomainError("Subset enumeration is limited to 7 opponents")
    q = [float(ahead_probability(np.asarray([bid]), size, s, strategy)[0]) for s in opponent_sizes]
    total = 0.0
    for ahead in itertools.product((False, True), repeat=len(opponent_sizes)):
        load = sum(s for s, a in zip(opponent_sizes, ahead) if a)
        if load + size > environment.capacity:
            continue
        total += math.prod(qj if a else 1.0 - qj for qj, a in zip(q, ahead))
    return total


class PsiModel:
    """
    Packing probability averaged over shared draws of opponent sizes, with
    opponents' values integrated exactly. Identical size draws are merged,
    so a deterministic size environment costs a single evaluation.
    """

    def __init__(self, environment: BneEnvironment, n_size_samples: int = 2000, seed: Optional[int] = None):
        self.environment = environment
        rng = np.random.default_rng(seed)
        self._profiles = {}
        for size in environment.sizes:
            if environment.n_opponents == 0:
                self._profiles[size] = (np.zeros((1, 0), dtype=int), np.ones(1))
                continue
            drawn = np.sort(draw_opponent_sizes(environment, size, n_size_samples, rng), axis=1)
            unique, counts = np.unique(drawn, axis=0, return_counts=True)
            self._profiles[size] = (unique, counts / counts.sum())

    def psi(self, bids: np.ndarray, size: int, strategy: TabulatedStrategy) -> np.ndarray:
        profiles, weights = self._profiles[size]
        bids = np.atleast_1d(np.asarray(bids, dtype=float))
        total = np.zeros_like(bids)
        for opponent_sizes, weight in zip(profiles, weights):
            total += weight * packing_probability(bids, size, opponent_sizes.tolist(), strategy,
                                                  self.environment.capacity)
        return total
