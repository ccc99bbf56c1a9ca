"""
Numerical symmetric equilibrium of the discriminatory-price auction.

Under pay-your-bid, a bidder with value v and size k maximizes
(v - B) * psi(B, k). The first-order condition gives B = v - psi / psi',
which is implicit because psi depends on everyone's strategy. The solver
iterates that condition on a value grid with damping and keeps the bid
function non-decreasing in the value after every sweep.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import isotonic_regression

from ..core.exceptions import AuctionDomainError
from .psi import (
    BneEnvironment,
    PsiModel,
    TabulatedStrategy,
    draw_opponents,
    packed_fraction,
)

logger = logging.getLogger(__name__)

SATURATED = 1.0 - 1e-12


@dataclass
class BneSolution:
    """
    Attributes:
        strategy: beta(v, k) tabulated on the value grid and size support
        residual: max |target - bid| of the last sweep
        iterations: Sweeps performed
        converged: residual fell below the tolerance
        flagged_points: Grid points skipped in the last sweep because psi'
            was not positive there
    """

    strategy: TabulatedStrategy
    residual: float
    iterations: int
    converged: bool
    flagged_points: int = 0
    residual_history: List[float] = field(default_factory=list)

    @property
    def value_grid(self) -> np.ndarray:
        return self.strategy.value_grid

    @property
    def sizes(self) -> Tuple[int, ...]:
        return self.strategy.sizes

    @property
    def bids(self) -> np.ndarray:
        return self.strategy.table

    def bid(self, value: float, size: int) -> float:
        return float(self.strategy.bid(np.asarray([value]), np.asarray([size]))[0])


def _psi_derivative(psi_model: PsiModel, bids: np.ndarray, size: int, strategy: TabulatedStrategy,
                    step: float) -> Tuple[np.ndarray, np.ndarray]:
    """psi and a one-step finite difference of psi at every bid."""
    at = psi_model.psi(bids, size, strategy)
    up = psi_model.psi(bids + step, size, strategy)
    down = psi_model.psi(np.maximum(bids - step, 0.0), size, strategy)
    central = (up - down) / (2.0 * step)
    forward = (up - at) / step
    backward = (at - down) / step
    derivative = np.where(bids - step < 0.0, forward, central)
    derivative = np.where(up >= SATURATED, backward, derivative)
    return at, derivative


def solve_dp_bne(environment: BneEnvironment, value_grid: Optional[np.ndarray] = None,
                 damping: float = 0.5, tol: float = 1e-3, max_iter: int = 500,
                 n_size_samples: int = 2000, seed: Optional[int] = 0,
                 initial: Optional[TabulatedStrategy] = None) -> BneSolution:
    """
    Damped fixed-point iteration of B <- v - psi(B) / psi'(B).

    Args:
        environment: Symmetric environment
        value_grid: Increasing grid over the value range; 41 points by default
        damping: Weight of the new target in each update, in (0, 1]
        tol: Stop once the largest |target - bid| falls below it
        max_iter: Sweep limit; the residual is reported either way
        n_size_samples: Shared draws of opponent sizes
        seed: Seed of the size draws
        initial: Starting strategy, truthful bidding by default

    Returns:
        BneSolution
    """
    if tol <= 0:
        raise AuctionDomainError("tol must be positive")
    if not 0 < damping <= 1:
        raise AuctionDomainError("damping must be in (0, 1]")
    if value_grid is None:
        value_grid = np.linspace(environment.value_low, environment.value_high, 41)
    value_grid = np.asarray(value_grid, dtype=float)
    if len(value_grid) < 2 or np.any(np.diff(value_grid) <= 0):
        raise AuctionDomainError("value_grid must be strictly increasing with at least two points")
    step = float(np.min(np.diff(value_grid)))
    sizes = environment.sizes

    if environment.n_opponents == 0:
        # nothing to beat: every bid wins, so the bid sinks to the floor
        logger.info("Single-bidder environment: equilibrium bid is the grid minimum")
        table = np.zeros((len(value_grid), len(sizes)))
        return BneSolution(TabulatedStrategy(value_grid, sizes, table), 0.0, 0, True)

    strategy = initial or TabulatedStrategy(
        value_grid, sizes, np.repeat(value_grid[:, None], len(sizes), axis=1)
    )
    psi_model = PsiModel(environment, n_size_samples, seed)
    history = []
    residual = math.inf
    flagged = 0

    for iteration in range(1, max_iter + 1):
        table = strategy.table.copy()
        residual = 0.0
        flagged = 0
        for column, size in enumerate(sizes):
            bids = strategy.table[:, column]
            psi, derivative = _psi_derivative(psi_model, bids, size, strategy, step)
            active = derivative > 0.0
            flagged += int((~active).sum())
            target = np.where(active, value_grid - psi / np.where(active, derivative, 1.0), bids)
            target = np.clip(target, 0.0, value_grid)
            if active.any():
                residual = max(residual, float(np.max(np.abs(target - bids)[active])))
            updated = (1.0 - damping) * bids + damping * target
            table[:, column] = np.minimum(isotonic_regression(updated, increasing=True).x, value_grid)
        strategy = TabulatedStrategy(value_grid, sizes, table)
        history.append(residual)
        if residual < tol:
            break

    converged = residual < tol
    if flagged:
        logger.warning(f"{flagged} grid points had a non-positive psi' in the last sweep")
    log = logger.info if converged else logger.warning
    log(f"DP equilibrium solver stopped after {iteration} sweeps with residual {residual:.2e}")
    return BneSolution(strategy, residual, iteration, converged, flagged, history)


@dataclass(frozen=True)
class BestResponse:
    value: float
    size: int
    best_bid: float
    best_payoff: float
    strategy_bid: float
    strategy_payoff: float
    standard_error: float

    @property
    def gain(self) -> float:
        return self.best_payoff - self.strategy_payoff


def bayesian_best_response(value: float, size: int, strategy: TabulatedStrategy,
                           environment: BneEnvironment, bid_grid: Optional[Sequence[float]] = None,
                           n_samples: int = 20_000, seed: Optional[int] = 0) -> BestResponse:
    """
    Best pay-your-bid response of one bidder against opponents playing
    `strategy`, by Monte Carlo over opponents on shared draws.
    """
    sb = float(strategy.bid(np.asarray([value]), np.asarray([size]))[0])
    if bid_grid is None:
        bid_grid = np.linspace(0.0, value, 41)
    bids = np.union1d(np.asarray(bid_grid, dtype=float), [sb])
    if environment.n_opponents == 0:
        psi = np.ones_like(bids)
        n = n_samples
    else:
        draws = draw_opponents(environment, size, n_samples, np.random.default_rng(seed))
        psi = packed_fraction(bids, size, strategy, draws, environment.capacity)
        n = draws.values.shape[0]
    payoffs = (value - bids) * psi
    best = int(np.argmax(payoffs))
    at_strategy = int(np.flatnonzero(bids == sb)[0])
    errors = np.abs(value - bids) * np.sqrt(psi * (1.0 - psi) / n)
    return BestResponse(
        value=float(value),
        size=int(size),
        best_bid=float(bids[best]),
        best_payoff=float(payoffs[best]),
        strategy_bid=sb,
        strategy_payoff=float(payoffs[at_strategy]),
        standard_error=float(max(errors[best], errors[at_strategy])),
    )


@dataclass(frozen=True)
class EpsilonCheck:
    epsilon: float
    tolerance: float
    passed: bool
    worst: Optional[BestResponse]
    checked: int


def check_epsilon_equilibrium(solution: BneSolution, environment: BneEnvironment,
                              bid_step: Optional[float] = None, n_samples: int = 20_000,
                              seed: Optional[int] = 0, values: Optional[Sequence[float]] = None) -> EpsilonCheck:
    """
    Largest payoff gain of a grid deviation from the solved strategy, against
    the strategy itself. Passes when every gain is within one bid step plus
    three Monte-Carlo standard errors.
    """
    grid = solution.value_grid
    step = bid_step or float(np.min(np.diff(grid)))
    values = grid if values is None else np.asarray(values, dtype=float)
    worst = None
    passed = True
    checked = 0
    for size in solution.sizes:
        for value in values:
            bid_grid = np.arange(0.0, value + step / 2, step)
            response = bayesian_best_response(value, size, solution.strategy, environment,
                                              bid_grid, n_samples, seed)
            checked += 1
            if response.gain > step + 3.0 * response.standard_error:
                passed = False
            if worst is None or response.gain > worst.gain:
                worst = response
    epsilon = worst.gain if worst else 0.0
    tolerance = step + 3.0 * (worst.standard_error if worst else 0.0)
    logger.info(f"Epsilon check over {checked} points: epsilon {epsilon:.4f}, passed {passed}")
    return EpsilonCheck(epsilon, tolerance, passed, worst, checked)
