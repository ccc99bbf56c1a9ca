"""
Comparative-statics sweeps: every cell of a SweepSpec runs as an independent
simulation in its own directory, cells in parallel worker processes.
"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

from ..core.exceptions import SimulationIOError
from ..learning.simulation import Simulation
from .config import SimConfig, SweepSpec, config_dict
from .reporting import write_summary

logger = logging.getLogger(__name__)

SWEEP_FILE = "sweep.json"


@dataclass(frozen=True)
class CellResult:
    label: str
    out_dir: str
    summary_path: str
    episodes_run: int


def run_cell(label: str, config: Dict[str, Any], out_dir: str) -> CellResult:
    """Run one cell from its JSON config; the process entry point of a sweep."""
    simulation = Simulation(SimConfig.model_validate(config), out_dir)
    result = simulation.run()
    return CellResult(label, out_dir, write_summary(result), result.episodes_run)


def run_sweep(spec: SweepSpec, out_dir: str, workers: Optional[int] = None) -> List[CellResult]:
    """
    Run every cell of a sweep under out_dir/<cell label>.

    Args:
        spec: Sweep definition
        out_dir: Root directory of the sweep
        workers: Worker processes; 1 runs the cells in this process

    Returns:
        One CellResult per cell, in the order the sweep lists its cells
    """
    cells = spec.cells()
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, SWEEP_FILE), 'w') as f:
            json.dump({"spec": config_dict(spec), "cells": [c.label for c in cells]}, f, indent=2)
    except OSError as e:
        logger.error(f"Error writing sweep manifest in {out_dir}: {str(e)}")
        raise SimulationIOError(f"Cannot write sweep manifest in {out_dir}", 0) from e

    logger.info(f"Sweep {spec.name}: {len(cells)} cells into {out_dir}")
    jobs = [(c.label, config_dict(c.config), os.path.join(out_dir, c.label)) for c in cells]
    results: Dict[str, CellResult] = {}

    if workers == 1:
        for job in jobs:
            result = run_cell(*job)
            results[result.label] = result
            logger.info(f"Cell {result.label} done")
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_cell, *job): job[0] for job in jobs}
            for future in as_completed(futures):
                label = futures[future]
                try:
                    results[label] = future.result()
                except Exception as e:
                    logger.error(f"Cell {label} failed: {str(e)}")
                    raise
                logger.info(f"Cell {label} done ({len(results)}/{len(jobs)})")

    return [results[c.label] for c in cells]


def sweep_index(results: List[CellResult]) -> List[Dict[str, Any]]:
    return [asdict(r) for r in results]
