"""
CSV output for auction rounds.

Two tables are written per run: one row per bidder per episode, and one
aggregate row per episode. Integers are printed as integers and every other
number with six decimals, so a seeded run always produces the same bytes.
"""

import csv
import logging
import os
from fractions import Fraction
from typing import IO, Any, List, Optional

from ..core.auction import AuctionInstance, BidProfile
from ..core.exceptions import SimulationIOError
from ..core.payments import AuctionOutcome
from .metrics import RoundMetrics

logger = logging.getLogger(__name__)

BIDS_COLUMNS = [
    "episode", "rule", "bidder_id", "value", "size", "bid", "per_unit_bid", "winner",
    "payment", "payoff", "learning_ratio", "revenue", "S", "C", "E", "efficiency_ratio",
]

EPISODE_COLUMNS = [
    "episode", "rule", "n_winners", "revenue", "S", "C", "E", "efficiency_ratio", "epsilon",
]

BIDS_FILE = "bids.csv"
EPISODES_FILE = "episodes.csv"


def format_number(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction) and value.denominator == 1:
        return str(value.numerator)
    return f"{float(value):.6f}"


def bidder_rows(episode: int, instance: AuctionInstance, profile: BidProfile,
                outcome: AuctionOutcome, metrics: RoundMetrics) -> List[List[str]]:
    """Per-bidder rows in BIDS_COLUMNS order."""
    rows = []
    for bidder in instance.bidders:
        i = bidder.bidder_id
        result = outcome.bidders[i]
        rows.append([
            str(episode),
            outcome.rule.value,
            str(i),
            format_number(bidder.value),
            format_number(bidder.size),
            format_number(profile.bid(i)),
            format_number(profile.per_unit(i, instance)),
            format_number(result.is_winner),
            format_number(result.payment),
            format_number(result.payoff),
            format_number(metrics.learning_ratios[i]),
            format_number(metrics.revenue),
            format_number(metrics.full_info_surplus),
            format_number(metrics.achieved_surplus),
            format_number(metrics.efficiency_gap),
            format_number(metrics.efficiency_ratio),
        ])
    return rows


def episode_row(episode: int, outcome: AuctionOutcome, metrics: RoundMetrics,
                epsilon: Optional[float] = None) -> List[str]:
    """Aggregate row in EPISODE_COLUMNS order."""
    return [
        str(episode),
        outcome.rule.value,
        str(len(outcome.winners)),
        format_number(metrics.revenue),
        format_number(metrics.full_info_surplus),
        format_number(metrics.achieved_surplus),
        format_number(metrics.efficiency_gap),
        format_number(metrics.efficiency_ratio),
        "" if epsilon is None else format_number(epsilon),
    ]


class RoundCsvWriter:
    """
    Streams both CSV tables into a run directory.

    A fresh run truncates existing files; a resumed run appends to them.
    Write failures are raised as SimulationIOError carrying the episode index.
    """

    def __init__(self, out_dir: str, append: bool = False):
        self.out_dir = out_dir
        self.append = append
        self._bids_file: Optional[IO[str]] = None
        self._episodes_file: Optional[IO[str]] = None
        self._bids = None
        self._episodes = None

    @property
    def bids_path(self) -> str:
        return os.path.join(self.out_dir, BIDS_FILE)

    @property
    def episodes_path(self) -> str:
        return os.path.join(self.out_dir, EPISODES_FILE)

    def open(self, episode: int = 0) -> "RoundCsvWriter":
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            self._bids_file, self._bids = self._open_table(self.bids_path, BIDS_COLUMNS)
            self._episodes_file, self._episodes = self._open_table(self.episodes_path, EPISODE_COLUMNS)
        except OSError as e:
            logger.error(f"Failed to open CSV output in {self.out_dir}: {str(e)}")
            self.close()
            raise SimulationIOError(f"Cannot open CSV output in {self.out_dir}", episode) from e
        return self

    def _open_table(self, path: str, columns: List[str]):
        write_header = not (self.append and os.path.exists(path) and os.path.getsize(path) > 0)
        handle = open(path, "a" if self.append else "w", newline="")
        writer = csv.writer(handle, lineterminator="\n")
        if write_header:
            writer.writerow(columns)
        return handle, writer

    def truncate_from(self, episode: int) -> None:
        """
        Drop rows of episodes >= episode from existing tables, so a resumed
        run does not repeat what was written after its last checkpoint.
        """
        for path in (self.bids_path, self.episodes_path):
            if not os.path.exists(path):
                continue
            try:
                with open(path, newline="") as f:
                    rows = list(csv.reader(f))
                kept = rows[:1] + [r for r in rows[1:] if int(r[0]) < episode]
                with open(path, "w", newline="") as f:
                    csv.writer(f, lineterminator="\n").writerows(kept)
            except OSError as e:
                logger.error(f"Failed to truncate {path}: {str(e)}")
                raise SimulationIOError(f"Cannot truncate {path}", episode) from e
            if len(kept) < len(rows):
                logger.info(f"Dropped {len(rows) - len(kept)} rows past episode {episode} from {path}")

    def write(self, episode: int, instance: AuctionInstance, profile: BidProfile,
              outcome: AuctionOutcome, metrics: RoundMetrics,
              epsilon: Optional[float] = None) -> None:
        if self._bids is None:
            self.open(episode)
        try:
            self._bids.writerows(bidder_rows(episode, instance, profile, outcome, metrics))
            self._episodes.writerow(episode_row(episode, outcome, metrics, epsilon))
        except OSError as e:
            logger.error(f"Failed to write episode {episode}: {str(e)}")
            raise SimulationIOError("CSV write failed", episode) from e

    def flush(self, episode: int) -> None:
        try:
            for handle in (self._bids_file, self._episodes_file):
                if handle is not None:
                    handle.flush()
        except OSError as e:
            logger.error(f"Failed to flush CSV output: {str(e)}")
            raise SimulationIOError("CSV flush failed", episode) from e

    def close(self) -> None:
        for handle in (self._bids_file, self._episodes_file):
            if handle is not None:
                handle.close()
        self._bids_file = self._episodes_file = None
        self._bids = self._episodes = None

    def __enter__(self) -> "RoundCsvWriter":
        return self.open()

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()
