#!/usr/bin/env python3
"""
Desk-scale rule comparison.

Runs the desk preset (UP, DP and GSP for 3 seeds x 20,000 episodes in the lab
environment, losing bids rewarded 0) and checks the rule ordering over the
last 10% of each run. The check passes when at least 2 of the 3 seeds satisfy
every ordering.
"""

import os
import sys
import json
import logging
import argparse
from pathlib import Path

# Add the project root to the path
ROOT_DIR = Path(__file__).parent.parent
sys.path.append(str(ROOT_DIR))

from knapsack_auction.harness.presets import DESK_EPISODES, DESK_SEEDS, desk
from knapsack_auction.harness.reporting import load_summary, seed_orderings
from knapsack_auction.harness.sweep import run_sweep

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def main():
    parser = argparse.ArgumentParser(description="Desk-scale UP/DP/GSP ordering check")
    parser.add_argument("--episodes", type=int, default=DESK_EPISODES, help="Episodes per run")
    parser.add_argument("--seeds", type=int, nargs="+", default=DESK_SEEDS, help="Sweep seeds")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--out", default=str(ROOT_DIR / "results" / "desk-scale"), help="Output directory")
    args = parser.parse_args()

    spec = desk()
    spec = spec.model_copy(update={
        "base": spec.base.model_copy(update={"episodes": args.episodes}),
        "seeds": args.seeds,
    })

    try:
        results = run_sweep(spec, args.out, args.workers)
    except Exception as e:
        logger.error(f"Desk-scale sweep failed: {str(e)}")
        return 1

    verdicts = seed_orderings(load_summary(result.summary_path) for result in results)
    for verdict in verdicts:
        logger.info(f"Seed {verdict['master_seed']}: {verdict}")
    passed = sum(verdict["passed"] for verdict in verdicts)

    with open(os.path.join(args.out, "desk_scale.json"), 'w') as f:
        json.dump({"seeds_passed": passed, "verdicts": verdicts}, f, indent=2)

    required = min(2, len(verdicts))
    if passed < required:
        logger.error(f"Only {passed} of {len(verdicts)} seeds show the expected rule ordering")
        return 1
    logger.info(f"{passed} of {len(verdicts)} seeds show the expected rule ordering")
    return 0


if __name__ == "__main__":
    sys.exit(main())
