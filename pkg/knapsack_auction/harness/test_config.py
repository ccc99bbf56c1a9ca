import json

import pytest

from knapsack_auction.harness.config import Config, SimConfig, SweepSpec, config_dict, load_sim_config


def test_defaults_from_environment(monkeypatch):
    monkeypatch.setenv("KNAPSACK_OUTPUT_DIR", "/tmp/auctions")
    monkeypatch.setenv("KNAPSACK_VERIFY_TRIALS", "50")
    config = Config()
    assert config.get("core", "output_dir") == "/tmp/auctions"
    assert config.get("verify", "trials") == 50
    assert config.get("verify", "missing", "fallback") == "fallback"


def test_file_overrides_environment(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"simulation": {"rolling_window": 5}, "verify": {"search_budget": 50}}))
    config = Config(str(path))
    assert config.get("simulation", "rolling_window") == 5
    assert config.get("simulation", "checkpoint_every") == 10_000
    assert config.get("verify", "search_budget") == 50


def test_unreadable_file_is_ignored(tmp_path):
    config = Config(str(tmp_path / "missing.json"))
    assert config.get("core", "log_level") is not None


def test_sim_config_json_round_trip(tmp_path):
    config = SimConfig(episodes=500, master_seed=3)
    assert config.agent.pure_exploration_episodes == 0
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(config_dict(config)))
    assert load_sim_config(str(path)) == config


def test_exploration_must_end_before_the_run():
    with pytest.raises(ValueError):
        SimConfig(episodes=500, agent={"pure_exploration_episodes": 500})


def test_summary_window():
    assert SimConfig(episodes=20_000).summary_start == 18_000
    assert SimConfig(episodes=20, agent={"pure_exploration_episodes": 0}).summary_start == 18


def test_sweep_rejects_infeasible_cells():
    with pytest.raises(ValueError):
        SweepSpec(name="bad", n_agents=[12], size_ranges=[(4, 10)])
    with pytest.raises(ValueError):
        SweepSpec(name="empty", seeds=[])
