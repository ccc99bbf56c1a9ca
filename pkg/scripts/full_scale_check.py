#!/usr/bin/env python3
"""
Full-scale check: one 100,000-episode run per rule in the lab environment.

Mean revenue over the last 10% of episodes must land within 20% of the
target and mean efficiency ratio within 2 points. Takes hours; not part of
the test suite.
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

from knapsack_auction.core.payments import PaymentRule
from knapsack_auction.harness.presets import ai
from knapsack_auction.harness.reporting import write_summary
from knapsack_auction.learning.simulation import run_simulation

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

TARGET_REVENUE = {"UP": 10.923, "DP": 17.280, "GSP": 16.766}
TARGET_EFFICIENCY = {"UP": 99.337, "DP": 97.959, "GSP": 98.744}
REVENUE_TOLERANCE = 0.20
EFFICIENCY_TOLERANCE = 2.0


def main():
    parser = argparse.ArgumentParser(description="Full-scale revenue and efficiency check")
    parser.add_argument("--seed", type=int, default=0, help="Master seed")
    parser.add_argument("--out", default=str(ROOT_DIR / "results" / "full-scale"), help="Output directory")
    args = parser.parse_args()

    failures = 0
    results = {}
    for rule in (PaymentRule.UP, PaymentRule.DP, PaymentRule.GSP):
        config = ai().model_copy(update={"rule": rule, "master_seed": args.seed})
        out_dir = os.path.join(args.out, rule.value)
        try:
            with open(write_summary(run_simulation(config, out_dir)), 'r') as f:
                summary = json.load(f)
        except Exception as e:
            logger.error(f"{rule.value} run failed: {str(e)}")
            return 1

        revenue = summary["revenue"]["mean"]
        efficiency = summary["efficiency_ratio"]["mean"]
        revenue_ok = abs(revenue - TARGET_REVENUE[rule.value]) <= REVENUE_TOLERANCE * TARGET_REVENUE[rule.value]
        efficiency_ok = abs(efficiency - TARGET_EFFICIENCY[rule.value]) <= EFFICIENCY_TOLERANCE
        results[rule.value] = {"revenue": revenue, "efficiency_ratio": efficiency,
                               "revenue_ok": revenue_ok, "efficiency_ok": efficiency_ok}
        logger.info(f"{rule.value}: revenue {revenue:.3f} ({'ok' if revenue_ok else 'off'}), "
                    f"efficiency {efficiency:.3f} ({'ok' if efficiency_ok else 'off'})")
        failures += not (revenue_ok and efficiency_ok)

    with open(os.path.join(args.out, "full_scale.json"), 'w') as f:
        json.dump(results, f, indent=2)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
