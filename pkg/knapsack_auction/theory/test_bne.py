import numpy as np
import pytest

from knapsack_auction.core.exceptions import AuctionDomainError
from knapsack_auction.theory.bne import (
    bayesian_best_response,
    check_epsilon_equilibrium,
    solve_dp_bne,
)
from knapsack_auction.theory.psi import BneEnvironment, TabulatedStrategy


@pytest.fixture(scope="module")
def pair_solution():
    env = BneEnvironment()
    return env, solve_dp_bne(env)


def test_two_bidders_shade_to_half_value(pair_solution):
    _, solution = pair_solution
    assert solution.converged
    assert solution.residual < 1e-3
    assert solution.bids[:, 0] == pytest.approx(solution.value_grid / 2, abs=1e-3)
    assert solution.bid(6.0, 4) == pytest.approx(3.0, abs=1e-3)


def test_solution_shades_and_is_monotone(pair_solution):
    _, solution = pair_solution
    bids = solution.bids[:, 0]
    above = solution.value_grid > solution.value_grid[0]
    assert np.all(bids[above] < solution.value_grid[above])
    assert np.all(np.diff(bids) >= 0)
    assert solution.residual_history[0] > solution.residual_history[-1]


def test_solution_is_an_epsilon_equilibrium(pair_solution):
    env, solution = pair_solution
    check = check_epsilon_equilibrium(solution, env, n_samples=20_000, seed=1, values=[2.0, 5.0, 8.0])
    assert check.passed, f"Deviation gains {check.epsilon} above {check.tolerance}"
    assert check.checked == 3


def test_best_response_to_half_bids(pair_solution):
    env, _ = pair_solution
    response = bayesian_best_response(8.0, 4, TabulatedStrategy.scaled(env, 0.5), env,
                                      np.arange(0.0, 8.25, 0.25), n_samples=20_000, seed=2)
    assert response.strategy_bid == pytest.approx(4.0)
    assert abs(response.best_bid - 4.0) <= 0.5
    assert response.gain <= 0.25 + 3 * response.standard_error


def test_truthful_bids_are_not_a_best_response(pair_solution):
    env, _ = pair_solution
    response = bayesian_best_response(8.0, 4, TabulatedStrategy.scaled(env), env,
                                      n_samples=20_000, seed=3)
    assert response.strategy_payoff == 0.0
    assert response.gain > 1.0


def test_single_bidder_bids_nothing():
    solution = solve_dp_bne(BneEnvironment(n_bidders=1))
    assert solution.converged
    assert not solution.bids.any()


def test_three_bidders_stay_below_value_and_monotone():
    env = BneEnvironment(n_bidders=3, capacity=10, sizes=(3, 4, 5))
    solution = solve_dp_bne(env, value_grid=np.linspace(0, 10, 21), max_iter=60, n_size_samples=500)
    assert solution.iterations <= 60
    assert np.all(solution.bids <= solution.value_grid[:, None] + 1e-12)
    assert np.all(np.diff(solution.bids, axis=0) >= -1e-12)
    assert np.isfinite(solution.residual)


@pytest.mark.parametrize("kwargs", [{"damping": 0.0}, {"damping": 1.5}, {"tol": 0.0},
                                    {"value_grid": np.array([1.0, 1.0])}])
def test_solver_rejects_bad_parameters(kwargs):
    with pytest.raises(AuctionDomainError):
        solve_dp_bne(BneEnvironment(), **kwargs)
