"""
Named random streams derived from one master seed.

Each component label maps to SeedSequence(entropy=master_seed,
spawn_key=(crc32(label),)). The derivation depends only on the master seed and
the label, so adding a stream never shifts the draws of another.
"""

import logging
import zlib
from typing import Dict, Iterable

import numpy as np

logger = logging.getLogger(__name__)

ENVIRONMENT = "environment"
TIE_BREAK = "tie-break"


def agent_label(agent_id: int) -> str:
    return f"agent-{agent_id}"


def stream_seed(master_seed: int, label: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(zlib.crc32(label.encode("utf-8")),))


def derive_seed(master_seed: int, label: str) -> int:
    """A plain integer seed for a labelled sub-task, e.g. one sweep cell."""
    return int(stream_seed(master_seed, label).generate_state(1, dtype=np.uint32)[0])


def rng_streams(master_seed: int, labels: Iterable[str]) -> Dict[str, np.random.Generator]:
    """One independent Generator per label."""
    return {label: np.random.default_rng(stream_seed(master_seed, label)) for label in labels}


class RngStreams:
    """
    Lazily created streams of one simulation: the environment draws, the
    auction tie-breaks and one exploration stream per agent.
    """

    def __init__(self, master_seed: int):
        self.master_seed = master_seed
        self._streams: Dict[str, np.random.Generator] = {}

    def get(self, label: str) -> np.random.Generator:
        if label not in self._streams:
            self._streams[label] = np.random.default_rng(stream_seed(self.master_seed, label))
        return self._streams[label]

    @property
    def environment(self) -> np.random.Generator:
        return self.get(ENVIRONMENT)

    @property
    def tie_break(self) -> np.random.Generator:
        return self.get(TIE_BREAK)

    def agent(self, agent_id: int) -> np.random.Generator:
        return self.get(agent_label(agent_id))

    def state(self) -> Dict[str, dict]:
        """Bit-generator states of every stream created so far."""
        return {label: rng.bit_generator.state for label, rng in self._streams.items()}

    def restore(self, states: Dict[str, dict]) -> None:
        for label, state in states.items():
            self.get(label).bit_generator.state = state
        logger.debug(f"Restored {len(states)} random streams")
