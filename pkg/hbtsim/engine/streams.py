"""Counter-based random streams for reproducible, chunk-independent simulation.

Every block of pulses draws from its own Philox stream keyed by
(seed, purpose, block index), so results do not depend on how blocks are
distributed over workers.
"""

import numpy as np

# Pulses per random stream. Changing it changes every simulated series.
PULSES_PER_BLOCK = 4096

TEMPORAL_STREAM = 0
SPATIAL_STREAM = 1


def block_stream(seed: int, block: int, purpose: int = TEMPORAL_STREAM) -> np.random.Generator:
    """
    Independent generator for one block of pulses.

    Args:
        seed: Experiment seed (unsigned 64-bit)
        block: Block index
        purpose: Stream family, so different schemes never share draws

    Returns:
        Philox-backed generator
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(purpose, block))
    return np.random.Generator(np.random.Philox(sequence))


def block_ranges(count: int, size: int = PULSES_PER_BLOCK) -> list[tuple[int, int]]:
    """Split ``count`` items into consecutive [start, stop) blocks of ``size``."""
    if count <= 0:
        return [(0, 0)]
    return [(start, min(start + size, count)) for start in range(0, count, size)]
