"""
Run summaries, rule comparisons and rolling-mean figures.

A finished run directory holds bids.csv, episodes.csv, checkpoint.json and
summary.json. Summaries follow the layout of the results tables: learning
ratio and payoff as Median/Mean/SD over all agents, the worst agent and the
best agent, and revenue and efficiency ratio as Median/Mean/SD.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional

import pandas as pd
import plotly.graph_objects as go

from ..core.exceptions import AuctionDomainError, AuctionInputError
from ..core.payments import PaymentRule
from ..learning.simulation import SimulationResult
from ..metrics.export import BIDS_FILE, EPISODES_FILE
from ..metrics.metrics import RoundSummary, SummaryStats
from .config import SimConfig, config_dict

logger = logging.getLogger(__name__)

SUMMARY_SCHEMA_VERSION = 1
SUMMARY_FILE = "summary.json"
REPORT_FILE = "report.json"

FIGURES = {
    "learning_ratio": ("Mean learning ratio", "Learning ratio"),
    "revenue": ("Revenue", "Revenue (points)"),
    "efficiency_ratio": ("Efficiency ratio", "Efficiency ratio (%)"),
}


def _stats(stats: SummaryStats) -> Dict[str, float]:
    return {"median": float(stats.median), "mean": float(stats.mean), "sd": float(stats.sd)}


def summary_dict(config: SimConfig, summary: RoundSummary, start: int, end: int) -> Dict[str, Any]:
    """JSON-ready summary of the episodes [start, end) of one run."""
    worst, best = summary.worst_agent, summary.best_agent
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "rule": config.rule.value,
        "n_agents": config.n_agents,
        "capacity": config.capacity,
        "master_seed": config.master_seed,
        "episodes": config.episodes,
        "window": {"start": start, "end": end, "rounds": summary.rounds},
        "learning_ratio": {
            "all": _stats(summary.learning_ratio),
            "worst_agent": _stats(summary.agent_learning_ratio[worst]),
            "best_agent": _stats(summary.agent_learning_ratio[best]),
        },
        "payoff": {
            "all": _stats(summary.payoff),
            "worst_agent": _stats(summary.agent_payoff[worst]),
            "best_agent": _stats(summary.agent_payoff[best]),
        },
        "revenue": _stats(summary.revenue),
        "efficiency_ratio": _stats(summary.efficiency_ratio),
        "efficiency_gap": _stats(summary.efficiency_gap),
        "worst_agent": worst,
        "best_agent": best,
        "negative_gap_rounds": summary.negative_gap_rounds,
        "config": config_dict(config),
    }


def summarize_run(result: SimulationResult) -> Dict[str, Any]:
    """Summary of a SimulationResult over its final summary window."""
    config = result.config
    end = config.episodes
    start = config.summary_start
    summary = result.history.accumulator(start, end).summary()
    return summary_dict(config, summary, start, end)


def write_summary(result: SimulationResult, out_dir: Optional[str] = None) -> str:
    """
    Write summary.json for a finished run.

    Returns:
        Path of the summary file
    """
    out_dir = out_dir or result.out_dir
    if out_dir is None:
        raise AuctionInputError("write_summary needs an output directory")
    path = os.path.join(out_dir, SUMMARY_FILE)
    data = summarize_run(result)
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(data, f, indent=2)
        logger.info(f"Summary written to {path}")
    except OSError as e:
        logger.error(f"Error saving summary to {path}: {str(e)}")
        raise
    return path


def load_summary(path: str) -> Dict[str, Any]:
    """
    Read a summary file or the summary.json of a run directory.

    Raises:
        AuctionInputError: on an unsupported schema version
    """
    if os.path.isdir(path):
        path = os.path.join(path, SUMMARY_FILE)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error(f"Error loading summary {path}: {str(e)}")
        raise
    if data.get("schema_version") != SUMMARY_SCHEMA_VERSION:
        raise AuctionInputError(f"Unsupported summary schema {data.get('schema_version')} in {path}")
    return data


def find_runs(root: str) -> List[str]:
    """Run directories under root (root itself included) that hold a summary."""
    runs = []
    for current, _, files in os.walk(root):
        if SUMMARY_FILE in files:
            runs.append(current)
    return sorted(runs)


def load_episodes(run_dir: str) -> pd.DataFrame:
    return pd.read_csv(os.path.join(run_dir, EPISODES_FILE))


def load_bids(run_dir: str) -> pd.DataFrame:
    return pd.read_csv(os.path.join(run_dir, BIDS_FILE))


def rolling_series(run_dir: str, window: int) -> pd.DataFrame:
    """
    Per-episode mean learning ratio, revenue and efficiency ratio of a run,
    with trailing rolling means over `window` episodes.
    """
    episodes = load_episodes(run_dir).set_index("episode").sort_index()
    ratio = load_bids(run_dir).groupby("episode")["learning_ratio"].mean()
    frame = pd.DataFrame({
        "learning_ratio": ratio,
        "revenue": episodes["revenue"],
        "efficiency_ratio": episodes["efficiency_ratio"],
    })
    return frame.rolling(window, min_periods=1).mean()


def build_figures(runs: Mapping[str, str], window: int = 1000) -> Dict[str, go.Figure]:
    """
    One figure per measure (learning ratio, revenue, efficiency ratio) with a
    rolling-mean trace per run, keyed by the trace label (usually the rule).
    """
    if not runs:
        raise AuctionDomainError("No runs to plot")
    series = {label: rolling_series(run_dir, window) for label, run_dir in runs.items()}
    figures = {}
    for column, (title, axis) in FIGURES.items():
        figure = go.Figure()
        for label, frame in series.items():
            figure.add_trace(go.Scatter(x=frame.index, y=frame[column], mode="lines", name=label))
        figure.update_layout(
            title=f"{title}, rolling mean over {window} episodes",
            xaxis_title="Episode",
            yaxis_title=axis,
            template="plotly_white",
        )
        figures[column] = figure
    return figures


def write_figures(figures: Mapping[str, go.Figure], out_dir: str) -> List[str]:
    """Export every figure as <name>.svg; needs the kaleido engine."""
    paths = []
    os.makedirs(out_dir, exist_ok=True)
    for name, figure in figures.items():
        path = os.path.join(out_dir, f"{name}.svg")
        try:
            figure.write_image(path, format="svg")
        except Exception as e:
            logger.error(f"Error exporting figure {path}: {str(e)}")
            raise
        paths.append(path)
    logger.info(f"Wrote {len(paths)} figures to {out_dir}")
    return paths


@dataclass(frozen=True)
class OrderingCheck:
    """
    Rule ordering over one seed's UP, DP and GSP summaries.

    learning_ratio: median learning ratio UP < GSP < DP
    revenue: mean revenue UP < min(DP, GSP) and |DP - GSP| <= 15% of DP
    efficiency: mean efficiency ratio UP >= GSP >= DP - 1 and all >= 95
    """

    learning_ratio: bool
    revenue: bool
    efficiency: bool

    @property
    def passed(self) -> bool:
        return self.learning_ratio and self.revenue and self.efficiency

    def to_dict(self) -> Dict[str, bool]:
        data = asdict(self)
        data["passed"] = self.passed
        return data


def check_rule_ordering(summaries: Mapping[str, Mapping[str, Any]]) -> OrderingCheck:
    """
    Args:
        summaries: Summary dicts keyed by rule name; UP, DP and GSP are required

    Raises:
        AuctionInputError: if a rule is missing
    """
    missing = [r.value for r in (PaymentRule.UP, PaymentRule.DP, PaymentRule.GSP) if r.value not in summaries]
    if missing:
        raise AuctionInputError(f"Rule ordering needs summaries for {', '.join(missing)}")
    ratio = {rule: summaries[rule]["learning_ratio"]["all"]["median"] for rule in ("UP", "DP", "GSP")}
    revenue = {rule: summaries[rule]["revenue"]["mean"] for rule in ("UP", "DP", "GSP")}
    efficiency = {rule: summaries[rule]["efficiency_ratio"]["mean"] for rule in ("UP", "DP", "GSP")}
    return OrderingCheck(
        learning_ratio=ratio["UP"] < ratio["GSP"] < ratio["DP"],
        revenue=(revenue["UP"] < min(revenue["DP"], revenue["GSP"])
                 and abs(revenue["DP"] - revenue["GSP"]) <= 0.15 * revenue["DP"]),
        efficiency=(efficiency["UP"] >= efficiency["GSP"] >= efficiency["DP"] - 1.0
                    and min(efficiency.values()) >= 95.0),
    )


def seed_orderings(summaries: Iterable[Mapping[str, Any]]) -> List[Dict[str, Any]]:
    """
    Rule ordering of every (seed, bidders, capacity) group that holds UP, DP
    and GSP summaries; groups missing a rule are skipped.
    """
    by_seed: Dict[tuple, Dict[str, Mapping[str, Any]]] = {}
    for summary in summaries:
        seed_key = (summary["master_seed"], summary["n_agents"], summary["capacity"])
        by_seed.setdefault(seed_key, {})[summary["rule"]] = summary
    orderings = []
    for (seed, n_agents, capacity), group in sorted(by_seed.items()):
        if all(rule in group for rule in ("UP", "DP", "GSP")):
            check = check_rule_ordering(group)
            orderings.append({"master_seed": seed, "n_agents": n_agents, "capacity": capacity, **check.to_dict()})
    return orderings


def report(run_dirs: List[str], out_dir: str, window: int = 1000, figures: bool = True) -> Dict[str, Any]:
    """
    Combine finished runs: collect their summaries, check the rule ordering
    per seed when UP, DP and GSP are all present, and draw the figures.

    Returns:
        The report, also written to report.json in out_dir
    """
    if not run_dirs:
        raise AuctionDomainError("No finished runs to report on")
    summaries = {run_dir: load_summary(run_dir) for run_dir in run_dirs}
    rules = [s["rule"] for s in summaries.values()]
    unique = len(set(rules)) == len(rules)
    runs = {}
    for run_dir, summary in summaries.items():
        label = summary["rule"] if unique else os.path.relpath(run_dir, out_dir)
        runs[run_dir] = {"label": label, "summary": summary}
    orderings = seed_orderings(summaries.values())

    data = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "runs": [{"run_dir": d, "label": r["label"], "summary": r["summary"]} for d, r in runs.items()],
        "orderings": orderings,
        "figures": [],
    }
    if figures:
        traces = {r["label"]: d for d, r in runs.items()}
        data["figures"] = write_figures(build_figures(traces, window), out_dir)

    path = os.path.join(out_dir, REPORT_FILE)
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(data, f, indent=2)
        logger.info(f"Report on {len(runs)} runs written to {path}")
    except OSError as e:
        logger.error(f"Error saving report to {path}: {str(e)}")
        raise
    return data
