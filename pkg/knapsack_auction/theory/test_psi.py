import numpy as np
import pytest

from knapsack_auction.core.exceptions import AuctionDomainError, AuctionInputError
from knapsack_auction.harness.environment import SizeMode
from knapsack_auction.theory.psi import (
    BneEnvironment,
    PsiModel,
    TabulatedStrategy,
    draw_opponent_sizes,
    draw_opponents,
    estimate_psi,
    packed_fraction,
    packing_probability,
    psi_by_subsets,
)


@pytest.fixture
def pair():
    env = BneEnvironment()
    return env, TabulatedStrategy.scaled(env)


@pytest.fixture
def crowd():
    env = BneEnvironment(n_bidders=4, capacity=12, sizes=(2, 3, 4, 5))
    return env, TabulatedStrategy.scaled(env, 0.5)


def test_one_opponent_against_truthful_bids(pair):
    env, strategy = pair
    psi = packing_probability(np.array([0.0, 2.5, 5.0, 10.0]), 4, [4], strategy, env.capacity)
    assert psi == pytest.approx([0.0, 0.25, 0.5, 1.0])


def test_huge_bid_is_always_packed(pair):
    env, strategy = pair
    estimate = estimate_psi(1e6, 4, strategy, env, n_samples=2000, seed=0)
    assert estimate.psi == 1.0
    assert estimate.standard_error == 0.0


def test_zero_bid_is_never_packed_against_positive_bids(pair):
    env, strategy = pair
    assert estimate_psi(0.0, 4, strategy, env, n_samples=2000, seed=0).psi == 0.0


def test_monte_carlo_agrees_with_exact(pair):
    env, strategy = pair
    estimate = estimate_psi(5.0, 4, strategy, env, n_samples=20_000, seed=1)
    assert abs(estimate.psi - 0.5) < 4 * estimate.standard_error


def test_psi_is_monotone_on_shared_draws(crowd):
    env, strategy = crowd
    draws = draw_opponents(env, 3, 5000, np.random.default_rng(2))
    psi = packed_fraction(np.linspace(0, 10, 51), 3, strategy, draws, env.capacity)
    assert np.all(np.diff(psi) >= 0)


def test_subset_enumeration_matches_convolution(crowd):
    env, strategy = crowd
    opponents = [2, 3, 5]
    for bid in (1.0, 4.0, 6.5):
        exact = packing_probability(np.array([bid]), 4, opponents, strategy, env.capacity)[0]
        assert psi_by_subsets(bid, 4, opponents, strategy, env) == pytest.approx(exact)


def test_estimate_with_fixed_sizes_agrees_with_exact(crowd):
    env, strategy = crowd
    opponents = [2, 3, 5]
    draws = draw_opponents(env, 4, 20_000, np.random.default_rng(3), fixed_sizes=opponents)
    estimate = estimate_psi(4.0, 4, strategy, env, draws=draws)
    exact = packing_probability(np.array([4.0]), 4, opponents, strategy, env.capacity)[0]
    assert abs(estimate.psi - exact) < 4 * estimate.standard_error + 1e-9


def test_subset_enumeration_is_capped(crowd):
    env, strategy = crowd
    with pytest.raises(AuctionDomainError):
        psi_by_subsets(1.0, 2, [2] * 8, strategy, env)


def test_draws_without_replacement_skip_the_focal_size():
    env = BneEnvironment(n_bidders=3, capacity=15, sizes=(4, 5, 6, 7), size_mode=SizeMode.WITHOUT_REPLACEMENT)
    sizes = draw_opponent_sizes(env, 5, 500, np.random.default_rng(4))
    assert sizes.shape == (500, 2)
    assert not np.any(sizes == 5)
    assert np.all(sizes[:, 0] != sizes[:, 1])


def test_model_merges_identical_size_draws(pair):
    env, strategy = pair
    model = PsiModel(env, n_size_samples=100, seed=0)
    bids = np.array([1.0, 3.0, 7.0])
    assert model.psi(bids, 4, strategy) == pytest.approx(
        packing_probability(bids, 4, [4], strategy, env.capacity)
    )


def test_strategy_bid_cdf_of_half_bids(pair):
    env, _ = pair
    half = TabulatedStrategy.scaled(env, 0.5)
    assert half.bid_cdf(np.array([0.0, 2.5, 5.0, 6.0]), 4) == pytest.approx([0.0, 0.5, 1.0, 1.0])
    assert half.bid(np.array([4.0, 10.0]), np.array([4, 4])) == pytest.approx([2.0, 5.0])


def test_strategy_shape_and_support_checks(pair):
    env, strategy = pair
    with pytest.raises(AuctionInputError):
        TabulatedStrategy(np.linspace(0, 10, 5), (4,), np.zeros((4, 1)))
    with pytest.raises(AuctionInputError):
        strategy.column(5)


def test_environment_validation():
    with pytest.raises(ValueError):
        BneEnvironment(capacity=4, sizes=(4,))
    with pytest.raises(ValueError):
        BneEnvironment(value_low=5.0, value_high=5.0)
    with pytest.raises(ValueError):
        BneEnvironment(n_bidders=3, sizes=(4, 5), capacity=8, size_mode=SizeMode.WITHOUT_REPLACEMENT)
