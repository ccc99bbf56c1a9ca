"""
Command line: run, sweep, verify and report.

Exit codes: 0 on success, 1 on a runtime error or a failed verification,
2 on a usage error.
"""

import argparse
import io
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import ValidationError

from ..core.exceptions import KnapsackAuctionError
from ..core.payments import PaymentRule
from ..learning.simulation import CHECKPOINT_FILE, Simulation
from ..theory.bne import check_epsilon_equilibrium, solve_dp_bne
from ..theory.oracle import (
    find_gsp_counterexample,
    find_up_inefficiency_witness,
    find_vcg_counterexample,
    nearly_empty_instance,
    replay,
    up_inefficiency,
    verify_critical_prices,
    verify_greedy_oracle,
    verify_monotonicity,
    verify_up_dsic,
)
from ..theory.psi import BneEnvironment
from .config import Config, SimConfig, SweepSpec, config_dict
from .environment import SizeMode
from .presets import preset
from .reporting import find_runs, report, write_summary
from .sweep import run_sweep, sweep_index

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class UsageError(Exception):
    """Flags that cannot be combined into a valid configuration."""


def int_range(text: str) -> Tuple[int, int]:
    """'lo:hi' -> (lo, hi)"""
    try:
        low, high = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI integers, got {text!r}") from None
    return low, high


def bid_grid(text: str) -> Tuple[float, float, float]:
    """'min:max:step' -> (min, max, step)"""
    try:
        low, high, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX:STEP, got {text!r}") from None
    return low, high, step


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knapsack_auction", description="Knapsack auction simulation and verification")
    parser.add_argument("--config", help="JSON configuration file merged over the environment")
    parser.add_argument("--log-level", help="Overrides LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one Q-learning simulation")
    run.add_argument("--preset", choices=["lab", "ai"], help="Start from a named preset")
    run.add_argument("--rule", choices=[r.value for r in PaymentRule], help="Payment rule")
    run.add_argument("--agents", type=int, help="Number of bidders")
    run.add_argument("--capacity", type=int, help="Knapsack capacity K")
    run.add_argument("--values", type=int_range, help="Value range LO:HI")
    run.add_argument("--sizes", type=int_range, help="Size range LO:HI")
    run.add_argument("--replacement", action="store_true", help="Draw sizes with replacement")
    run.add_argument("--episodes", type=int, help="Number of episodes")
    run.add_argument("--seed", type=int, help="Master seed")
    run.add_argument("--alpha", type=float, help="Learning rate")
    run.add_argument("--loser-reward", type=float, help="Reward of a losing bid, at most 0")
    run.add_argument("--grid", type=bid_grid, help="Bid grid MIN:MAX:STEP")
    run.add_argument("--out", help="Output directory")
    run.add_argument("--resume", action="store_true", help="Continue from the checkpoint in --out")
    run.add_argument("--format", choices=["csv", "json"], default="json", help="Summary printed to stdout")

    sweep = commands.add_parser("sweep", help="Run a comparative-statics sweep")
    source = sweep.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=["cs-7", "cs-10", "desk"], help="Named sweep")
    source.add_argument("--spec", help="SweepSpec JSON file")
    sweep.add_argument("--seeds", type=int, nargs="+", help="Sweep seeds")
    sweep.add_argument("--episodes", type=int, help="Episodes per cell")
    sweep.add_argument("--workers", type=int, help="Worker processes")
    sweep.add_argument("--out", help="Output directory")
    sweep.add_argument("--format", choices=["csv", "json"], default="json")

    verify = commands.add_parser("verify", help="Run theory checks")
    verify.add_argument("--check", choices=["all", *CHECKS], default="all")
    verify.add_argument("--trials", type=int, help="Sampled instances per check")
    verify.add_argument("--opponent-profiles", type=int, help="Opponent profiles per bidder (up-dsic)")
    verify.add_argument("--search-budget", type=int, help="Instances tried by counterexample searches")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--out", help="Also write the results to this JSON file")
    verify.add_argument("--format", choices=["csv", "json"], default="json")

    rep = commands.add_parser("report", help="Summaries and figures of finished runs")
    rep.add_argument("runs", nargs="+", help="Run directories or roots to search for runs")
    rep.add_argument("--out", help="Report directory, the first run root by default")
    rep.add_argument("--window", type=int, help="Rolling-mean window in episodes")
    rep.add_argument("--no-figures", action="store_true", help="Skip the SVG figures")
    rep.add_argument("--format", choices=["csv", "json"], default="json")
    return parser


def build_sim_config(args: argparse.Namespace, settings: Config) -> SimConfig:
    """SimConfig from a preset or the defaults, with command-line overrides applied."""
    if args.preset:
        data = config_dict(preset(args.preset))
    else:
        data = config_dict(SimConfig(
            checkpoint_every=settings.get("simulation", "checkpoint_every", 10_000),
            rolling_window=settings.get("simulation", "rolling_window", 1000),
            summary_fraction=settings.get("simulation", "summary_window_fraction", 0.1),
        ))
    env, agent = data["environment"], data["agent"]
    if args.rule:
        data["rule"] = args.rule
    if args.agents is not None:
        env["n_agents"] = args.agents
    if args.capacity is not None:
        env["capacity"] = args.capacity
    if args.values:
        env["values"] = {"low": args.values[0], "high": args.values[1]}
    if args.sizes:
        env["sizes"].update(low=args.sizes[0], high=args.sizes[1])
    if args.replacement:
        env["sizes"]["mode"] = SizeMode.WITH_REPLACEMENT.value
    if args.episodes is not None:
        data["episodes"] = args.episodes
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.alpha is not None:
        agent["learning_rate"] = args.alpha
    if args.loser_reward is not None:
        agent["loser_reward"] = args.loser_reward
    if args.grid:
        agent.update(bid_min=args.grid[0], bid_max=args.grid[1], bid_step=args.grid[2])
    exploring = agent.get("pure_exploration_episodes", 0)
    if exploring >= data["episodes"]:
        raise UsageError(f"--episodes {data['episodes']} leaves no room after the {exploring} pure-exploration "
                         f"episodes of the chosen settings")
    try:
        return SimConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"Invalid simulation settings: {e}") from e


def emit(data: Any, fmt: str) -> None:
    """Print results as JSON, or as CSV of their flattened fields."""
    if fmt == "json":
        print(json.dumps(data, indent=2))
        return
    rows = data if isinstance(data, list) else [data]
    buffer = io.StringIO()
    pd.json_normalize(rows, sep=".").to_csv(buffer, index=False)
    print(buffer.getvalue(), end="")


def command_run(args: argparse.Namespace, settings: Config) -> int:
    if args.resume:
        if not args.out or not os.path.exists(os.path.join(args.out, CHECKPOINT_FILE)):
            raise UsageError("--resume needs --out pointing at a run with a checkpoint")
        simulation = Simulation.resume(args.out)
    else:
        config = build_sim_config(args, settings)
        out_dir = args.out or os.path.join(
            settings.get("core", "output_dir", "results"), f"{config.rule.value}-seed{config.master_seed}"
        )
        simulation = Simulation(config, out_dir)
    result = simulation.run()
    path = write_summary(result)
    with open(path, 'r') as f:
        summary = json.load(f)
    summary.pop("config")
    emit(summary, args.format)
    return 0


def command_sweep(args: argparse.Namespace, settings: Config) -> int:
    if args.preset:
        spec = preset(args.preset)
    else:
        try:
            with open(args.spec, 'r') as f:
                spec = SweepSpec.model_validate(json.load(f))
        except OSError as e:
            logger.error(f"Error reading sweep spec {args.spec}: {str(e)}")
            raise
        except ValidationError as e:
            raise UsageError(f"Invalid sweep spec: {e}") from e
    updates: Dict[str, Any] = {}
    if args.seeds:
        updates["seeds"] = args.seeds
    if args.episodes is not None:
        updates["base"] = dict(config_dict(spec.base), episodes=args.episodes)
    if updates:
        try:
            spec = SweepSpec.model_validate(dict(config_dict(spec), **updates))
        except ValidationError as e:
            raise UsageError(f"Invalid sweep settings: {e}") from e
    out_dir = args.out or os.path.join(settings.get("core", "output_dir", "results"), spec.name)
    results = run_sweep(spec, out_dir, args.workers)
    emit(sweep_index(results), args.format)
    return 0


def check_up_dsic(args, settings) -> Dict[str, Any]:
    report_ = verify_up_dsic(
        trials=args.trials or settings.get("verify", "trials", 1000),
        opponent_profiles=args.opponent_profiles or settings.get("verify", "opponent_profiles", 20),
        seed=args.seed,
    )
    return dict(report_.to_dict(), check="up-dsic", residuals=[])


def _counterexample(name: str, search: Callable, rule: PaymentRule, args, settings) -> Dict[str, Any]:
    budget = args.search_budget or settings.get("verify", "search_budget", 10_000)
    result = search(search_budget=budget, seed=args.seed)
    data = {"check": name, "trials": result.instances_tried, "violations": int(result.found),
            "found": result.found, "constructed": result.constructed, "residuals": []}
    passed = result.found
    if result.found:
        counterexample = result.report.to_dict()
        truthful, deviation = replay(result.report)
        counterexample["replayed"] = (truthful, deviation) == (result.report.truthful_payoff,
                                                              result.report.deviation_payoff)
        passed = counterexample["replayed"]
        if rule == PaymentRule.VCG:
            up_payoff = replay(result.report, PaymentRule.UP)[1]
            counterexample["up_deviation_payoff"] = float(up_payoff)
            passed = passed and up_payoff < 0
        data["first_counterexample"] = counterexample
    data["passed"] = passed
    return data


def check_gsp(args, settings) -> Dict[str, Any]:
    return _counterexample("gsp-counterexample", find_gsp_counterexample, PaymentRule.GSP, args, settings)


def check_vcg(args, settings) -> Dict[str, Any]:
    return _counterexample("vcg-counterexample", find_vcg_counterexample, PaymentRule.VCG, args, settings)


def check_up_inefficiency(args, settings) -> Dict[str, Any]:
    budget = args.search_budget or settings.get("verify", "search_budget", 10_000)
    found, tried, witness = find_up_inefficiency_witness(search_budget=budget, seed=args.seed)
    intro = up_inefficiency(nearly_empty_instance())
    return {
        "check": "up-inefficiency",
        "trials": tried,
        "violations": int(found),
        "first_counterexample": witness.to_dict(),
        "nearly_empty_gap": float(intro.gap),
        "residuals": [],
        "passed": witness.gap > 0 and intro.gap == 8,
    }


def _sampled(name: str, check: Callable, default_trials: int) -> Callable:
    def run(args, settings) -> Dict[str, Any]:
        result = check(trials=args.trials or default_trials, seed=args.seed)
        return dict(result.to_dict(), check=name, residuals=[])
    return run


def check_dp_bne(args, settings) -> Dict[str, Any]:
    environment = BneEnvironment()
    solution = solve_dp_bne(environment, seed=args.seed)
    epsilon = check_epsilon_equilibrium(solution, environment, seed=args.seed)
    below_value = bool((solution.bids[1:] < solution.value_grid[1:, None]).all())
    passed = solution.converged and epsilon.passed and below_value
    return {
        "check": "dp-bne",
        "trials": solution.iterations,
        "violations": 0 if passed else 1,
        "residuals": solution.residual_history,
        "residual": solution.residual,
        "converged": solution.converged,
        "epsilon": epsilon.epsilon,
        "epsilon_tolerance": epsilon.tolerance,
        "flagged_points": solution.flagged_points,
        "passed": passed,
    }


CHECKS: Dict[str, Callable[[argparse.Namespace, Config], Dict[str, Any]]] = {
    "up-dsic": check_up_dsic,
    "gsp-counterexample": check_gsp,
    "vcg-counterexample": check_vcg,
    "up-inefficiency": check_up_inefficiency,
    "greedy-oracle": _sampled("greedy-oracle", verify_greedy_oracle, 10_000),
    "monotonicity": _sampled("monotonicity", verify_monotonicity, 1000),
    "critical-price": _sampled("critical-price", verify_critical_prices, 1000),
    "dp-bne": check_dp_bne,
}


def command_verify(args: argparse.Namespace, settings: Config) -> int:
    names = list(CHECKS) if args.check == "all" else [args.check]
    results = []
    for name in names:
        logger.info(f"Running check {name}")
        results.append(CHECKS[name](args, settings))
    if args.out:
        try:
            os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
            with open(args.out, 'w') as f:
                json.dump(results, f, indent=2)
        except OSError as e:
            logger.error(f"Error saving verification results to {args.out}: {str(e)}")
            raise
    emit(results[0] if len(results) == 1 else results, args.format)
    failed = [r["check"] for r in results if not r["passed"]]
    if failed:
        logger.error(f"Failed checks: {', '.join(failed)}")
        return 1
    return 0


def command_report(args: argparse.Namespace, settings: Config) -> int:
    run_dirs: List[str] = []
    for root in args.runs:
        run_dirs.extend(find_runs(root))
    if not run_dirs:
        raise UsageError(f"No finished runs under {', '.join(args.runs)}")
    out_dir = args.out or args.runs[0]
    window = args.window or settings.get("simulation", "rolling_window", 1000)
    data = report(sorted(set(run_dirs)), out_dir, window, figures=not args.no_figures)
    if args.format == "json":
        emit({"runs": len(data["runs"]), "orderings": data["orderings"], "figures": data["figures"]}, "json")
    else:
        emit([{"run_dir": r["run_dir"], **r["summary"]} for r in data["runs"]], "csv")
    return 0


COMMANDS = {
    "run": command_run,
    "sweep": command_sweep,
    "verify": command_verify,
    "report": command_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = Config(args.config)
    level = args.log_level or settings.get("core", "log_level", "INFO")
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO), format=LOG_FORMAT)

    try:
        return COMMANDS[args.command](args, settings)
    except UsageError as e:
        parser.error(str(e))
    except (KnapsackAuctionError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
