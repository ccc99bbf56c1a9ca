#!/usr/bin/env python3
"""
Script to run the knapsack auction command line.
Accepts the same subcommands as `python -m knapsack_auction`.
"""

import sys
from pathlib import Path

# Add the project root to the path
ROOT_DIR = Path(__file__).parent.parent
sys.path.append(str(ROOT_DIR))

from knapsack_auction.harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
