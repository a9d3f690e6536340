"""Simulation engine producing click series for the HBT measurement schemes."""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from joblib import Parallel, delayed

from hbtsim.core.config import settings
from hbtsim.core.errors import UnsupportedConfigurationError
from hbtsim.core.models import (
    ClickSeries,
    DetectorSpec,
    ExperimentConfig,
    ModeKind,
    PhotonSource,
    SpatialOutcomes,
    SplitterSpec,
    WindowWeights,
)
from hbtsim.core.tracing import fingerprint, trace_step
from hbtsim.engine.streams import SPATIAL_STREAM, TEMPORAL_STREAM, block_ranges, block_stream
from hbtsim.physics.detector import click_ports, dark_clicks, split_photons
from hbtsim.physics.envelope import window_weights
from hbtsim.physics.statistics import sample, scale_to_mean

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Block:
    """Pulses [pulse_lo, pulse_hi) and the windows [win_lo, win_hi) they own."""
    index: int
    pulse_lo: int
    pulse_hi: int
    win_lo: int
    win_hi: int


def _plan_blocks(weights: WindowWeights) -> list[_Block]:
    on_idx = np.flatnonzero(weights.mask)
    on_pulse = weights.pulse_index[on_idx]
    first_window = on_idx[np.searchsorted(on_pulse, np.arange(weights.pulse_count), side="left")]

    blocks = []
    for index, (lo, hi) in enumerate(block_ranges(weights.pulse_count)):
        win_lo = 0 if index == 0 else int(first_window[lo])
        win_hi = int(first_window[hi]) if hi < weights.pulse_count else weights.n
        blocks.append(_Block(index, lo, hi, win_lo, win_hi))
    return blocks


def _photons_per_window(
    photons: npt.NDArray[np.int64],
    owner: npt.NDArray[np.int64],
    window_means: npt.NDArray[np.float64],
    stream: np.random.Generator,
) -> npt.NDArray[np.int64]:
    """
    Distribute each pulse's photons over its windows, multinomially by weight.

    ``owner`` gives the (block-local) pulse of every on-window, in window order.
    """
    per_pulse = np.bincount(owner, minlength=photons.size)
    if np.all(per_pulse <= 1):
        return photons[owner]

    starts = np.searchsorted(owner, np.arange(photons.size), side="left")
    position = np.arange(owner.size) - starts[owner]
    pvals = np.zeros((photons.size, int(per_pulse.max())), dtype=np.float64)
    pvals[owner, position] = window_means

    sums = pvals.sum(axis=1, keepdims=True)
    empty = sums[:, 0] <= 0
    pvals = np.divide(pvals, sums, out=np.zeros_like(pvals), where=sums > 0)
    pvals[empty, 0] = 1.0

    allocation = stream.multinomial(photons, pvals)
    return allocation[owner, position]


def _simulate_block(
    block: _Block,
    law: PhotonSource,
    weights: WindowWeights,
    splitter: SplitterSpec,
    detectors: tuple[DetectorSpec, ...],
    seed: int,
) -> npt.NDArray[np.bool_]:
    stream = block_stream(seed, block.index, TEMPORAL_STREAM)
    span = slice(block.win_lo, block.win_hi)
    local_mask = weights.mask[span]
    on_local = np.flatnonzero(local_mask)
    off_local = np.flatnonzero(~local_mask)

    photons = sample(law, stream, size=block.pulse_hi - block.pulse_lo)
    owner = weights.pulse_index[span][on_local] - block.pulse_lo
    window_photons = _photons_per_window(photons, owner, weights.weights[span][on_local], stream)

    clicks = np.zeros((len(detectors), block.win_hi - block.win_lo), dtype=bool)
    port_counts = split_photons(window_photons, splitter, stream)
    clicks[:, on_local] = click_ports(port_counts, detectors, stream)
    clicks[:, off_local] = dark_clicks(off_local.size, detectors, stream)
    return clicks


def _run_blocks(func, blocks: list, threads: int | None) -> list:
    workers = threads or settings.threads
    if workers <= 1 or len(blocks) <= 1:
        return [func(block) for block in blocks]
    return Parallel(n_jobs=workers, prefer="threads")(delayed(func)(block) for block in blocks)


@trace_step("simulate")
def simulate(config: ExperimentConfig, threads: int | None = None) -> ClickSeries:
    """
    Simulate temporally averaged click records for every detector.

    Each pulse draws its photon number once from the source (scaled to the
    train's photons_per_pulse), spreads it over its windows, routes photons
    through the splitter and lets every detector click at most once per window.

    Args:
        config: Experiment configuration (temporal or pulse-to-pulse mode)
        threads: Worker count (defaults to settings.threads); never changes results

    Returns:
        ClickSeries over all N windows
    """
    if config.mode.kind is ModeKind.SPATIAL_ENSEMBLE:
        raise UnsupportedConfigurationError(
            "spatial ensemble mode is simulated by simulate_spatial", field="mode"
        )

    weights = window_weights(config.train, config.grid)
    law = scale_to_mean(config.source, config.train.photons_per_pulse)
    blocks = _plan_blocks(weights)
    logger.info(
        "simulating %d windows (%d on) in %d blocks, source %s",
        weights.n, weights.m, len(blocks), law.describe(),
    )

    parts = _run_blocks(
        lambda block: _simulate_block(
            block, law, weights, config.splitter, config.detectors, config.seed
        ),
        blocks,
        threads,
    )
    clicks = np.concatenate(parts, axis=1)
    return ClickSeries(clicks=clicks, weights=weights, fingerprint=fingerprint(config.canonical()))


def _spatial_block(
    pulse_range: tuple[int, int],
    index: int,
    law: PhotonSource,
    pairs: int,
    detectors: tuple[DetectorSpec, ...],
    seed: int,
) -> npt.NDArray[np.bool_]:
    stream = block_stream(seed, index, SPATIAL_STREAM)
    photons = sample(law, stream, size=pulse_range[1] - pulse_range[0])
    port_counts = split_photons(photons, SplitterSpec.balanced(2 * pairs), stream)
    return click_ports(port_counts, detectors * pairs, stream)


@trace_step("simulate_spatial")
def simulate_spatial(config: ExperimentConfig, threads: int | None = None) -> SpatialOutcomes:
    """
    Simulate an ensemble of K detector pairs sharing every pulse equally.

    Each on-window's photons are split multinomially over 2K ports with
    probability 1/(2K); port 2k feeds detector x of pair k (DetectorSpec
    ``config.detectors[0]``) and port 2k+1 feeds detector y (``detectors[1]``).

    Args:
        config: Experiment configuration in spatial-ensemble mode
        threads: Worker count (defaults to settings.threads)

    Returns:
        SpatialOutcomes with (pulses, K) bit arrays

    Raises:
        UnsupportedConfigurationError: If a pulse spans more than one window
    """
    if config.mode.kind is not ModeKind.SPATIAL_ENSEMBLE:
        raise UnsupportedConfigurationError(
            "simulate_spatial needs a spatial ensemble mode", field="mode"
        )
    if len(config.detectors) != 2:
        raise UnsupportedConfigurationError(
            "spatial ensembles are built from one two-detector pair", field="detectors"
        )

    weights = window_weights(config.train, config.grid)
    if np.any(weights.windows_per_pulse() != 1):
        raise UnsupportedConfigurationError(
            "spatial ensemble mode needs single-window pulses", field="train.pulse_width"
        )

    pairs = config.mode.pairs
    law = scale_to_mean(config.source, config.train.photons_per_pulse)
    ranges = block_ranges(weights.pulse_count)
    logger.info("simulating %d pulses over %d detector pairs", weights.pulse_count, pairs)

    parts = _run_blocks(
        lambda item: _spatial_block(item[1], item[0], law, pairs, config.detectors, config.seed),
        list(enumerate(ranges)),
        threads,
    )
    clicks = np.concatenate(parts, axis=1)
    return SpatialOutcomes(
        x=clicks[0::2].T.copy(),
        y=clicks[1::2].T.copy(),
        window_index=np.flatnonzero(weights.mask),
        fingerprint=fingerprint(config.canonical()),
    )


def spatial_to_series(outcomes: SpatialOutcomes, weights: WindowWeights) -> ClickSeries:
    """Lay the pair outcomes out as a 2K-detector ClickSeries (x on even rows)."""
    clicks = np.zeros((2 * outcomes.pairs, weights.n), dtype=bool)
    clicks[0::2, outcomes.window_index] = outcomes.x.T
    clicks[1::2, outcomes.window_index] = outcomes.y.T
    return ClickSeries(clicks=clicks, weights=weights, fingerprint=outcomes.fingerprint)


def series_to_spatial(series: ClickSeries) -> SpatialOutcomes:
    """Inverse of ``spatial_to_series``; reads pair k from detectors 2k and 2k+1."""
    if series.detector_count % 2:
        raise UnsupportedConfigurationError(
            f"{series.detector_count} channels cannot form detector pairs", field="detectors"
        )
    if np.any(series.weights.windows_per_pulse() != 1):
        raise UnsupportedConfigurationError(
            "spatial ensemble analysis needs single-window pulses", field="train.pulse_width"
        )
    on = np.flatnonzero(series.mask)
    return SpatialOutcomes(
        x=series.clicks[0::2][:, on].T.copy(),
        y=series.clicks[1::2][:, on].T.copy(),
        window_index=on,
        fingerprint=series.fingerprint,
    )
