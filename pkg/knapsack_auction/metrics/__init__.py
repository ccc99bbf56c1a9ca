"""Learning ratio, revenue and efficiency measures, summaries and CSV output."""

from .metrics import (
    MetricAccumulator,
    RoundMetrics,
    RoundSummary,
    SummaryStats,
    achieved_surplus,
    best_feasible_surplus,
    efficiency_ratio,
    full_info_surplus,
    learning_ratio,
    revenue,
    rolling_mean,
    round_metrics,
    skip_and_continue_surplus,
    summarize,
    summarize_rounds,
)
from .export import BIDS_COLUMNS, EPISODE_COLUMNS, RoundCsvWriter
