"""Pulse-train intensity envelopes discretized onto the detector window grid."""

import logging
import math

import numpy as np
import numpy.typing as npt
from scipy import special

from hbtsim.core.errors import ConfigurationError
from hbtsim.core.models import PulseShape, PulseTrain, WindowGrid, WindowWeights

logger = logging.getLogger(__name__)

# A window is "on" when it holds more than this fraction of its pulse
ON_THRESHOLD = 1e-12

# Smooth shapes are truncated at +/- this many FWHM
TRUNCATION_FWHM = 5.0

_GAUSS_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
_SECH2_FWHM_PER_T0 = 2.0 * math.acosh(math.sqrt(2.0))


def _raw_cdf(shape: PulseShape, x: npt.NDArray[np.float64], width: float) -> npt.NDArray[np.float64]:
    """Cumulative normalized intensity of a pulse centered at zero."""
    if shape is PulseShape.RECT:
        return np.clip(x / width + 0.5, 0.0, 1.0)
    if shape is PulseShape.GAUSSIAN:
        return special.ndtr(x * (_GAUSS_FWHM_PER_SIGMA / width))
    return 0.5 * (1.0 + np.tanh(x * (_SECH2_FWHM_PER_T0 / width)))


def half_support(train: PulseTrain) -> float:
    """Half-width of the pulse's (truncated) support."""
    if train.shape is PulseShape.RECT:
        return 0.5 * train.pulse_width
    return TRUNCATION_FWHM * train.pulse_width


def envelope_cdf(train: PulseTrain, x: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """
    Fraction of one pulse's photons arriving before time ``x`` relative to its center.

    Smooth shapes are truncated at +/-5 FWHM and renormalized.
    """
    x = np.asarray(x, dtype=np.float64)
    width = train.pulse_width
    if train.shape is PulseShape.RECT:
        return _raw_cdf(train.shape, x, width)

    limit = half_support(train)
    lo, hi = _raw_cdf(train.shape, np.array([-limit, limit]), width)
    clipped = np.clip(x, -limit, limit)
    return (_raw_cdf(train.shape, clipped, width) - lo) / (hi - lo)


def resolve_offset(train: PulseTrain, grid: WindowGrid) -> float:
    """
    Pulse-center position inside the first period.

    With no explicit offset the pulse is centered on a block of
    ceil(pulse_width / window_duration) whole windows.
    """
    if train.offset is not None:
        return train.offset

    windows = max(1, math.ceil(train.pulse_width / grid.window_duration - 1e-9))
    offset = 0.5 * windows * grid.window_duration
    if offset >= train.period:
        raise ConfigurationError(
            f"auto-aligned offset {offset} does not fit in period {train.period}",
            field="train.offset",
        )
    return offset


def window_weights(train: PulseTrain, grid: WindowGrid) -> WindowWeights:
    """
    Mean photons delivered to every detector window.

    Args:
        train: Pulse train
        grid: Detector window grid

    Returns:
        WindowWeights with per-window means, on/off mask and owning pulse

    Raises:
        ConfigurationError: If the grid spans less than one period or pulses share windows
    """
    tau = grid.window_duration
    n = grid.window_count
    pulses = math.floor(grid.span / train.period + 1e-12)
    if pulses < 1:
        raise ConfigurationError(
            f"grid span {grid.span} is shorter than one period {train.period}",
            field="grid.window_count",
        )

    offset = resolve_offset(train, grid)
    centers = offset + train.period * np.arange(pulses, dtype=np.float64)
    reach = half_support(train)

    first = np.maximum(np.floor((centers - reach) / tau).astype(np.int64), 0)
    last = np.minimum(np.ceil((centers + reach) / tau).astype(np.int64), n)
    width = int((last - first).max())

    # (pulses, width) matrix of windows touched by every pulse
    cols = first[:, None] + np.arange(width)[None, :]
    valid = cols < last[:, None]
    lo_edge = cols * tau - centers[:, None]
    fractions = envelope_cdf(train, lo_edge + tau) - envelope_cdf(train, lo_edge)
    fractions = np.where(valid, fractions, 0.0)
    fractions[fractions <= ON_THRESHOLD] = 0.0

    # Grid clipping and thresholding must not lose photons
    totals = fractions.sum(axis=1)
    if np.any(totals <= 0):
        raise ConfigurationError("a pulse deposits no photons inside the grid", field="train")
    fractions /= totals[:, None]

    on = fractions > 0
    on_cols = np.where(on, cols, -1)
    lowest = np.where(on, cols, np.iinfo(np.int64).max).min(axis=1)
    highest = on_cols.max(axis=1)
    if pulses > 1 and np.any(lowest[1:] <= highest[:-1]):
        raise ConfigurationError(
            "consecutive pulses share detector windows; increase the period or shorten the pulse",
            field="train.period",
        )

    weights = np.zeros(n, dtype=np.float64)
    pulse_index = np.full(n, -1, dtype=np.int64)
    rows = np.broadcast_to(np.arange(pulses)[:, None], cols.shape)
    weights[cols[on]] = train.photons_per_pulse * fractions[on]
    pulse_index[cols[on]] = rows[on]
    mask = pulse_index >= 0

    logger.debug(
        "window_weights: %d pulses, %d/%d windows on, offset %.3f", pulses, int(mask.sum()), n, offset
    )
    return WindowWeights(weights=weights, mask=mask, pulse_index=pulse_index, pulse_count=pulses)


def intensity_ratio(weights: WindowWeights) -> float:
    """Fraction R_I = M / N of windows during which the field has amplitude."""
    if weights.n < 1:
        raise ConfigurationError("window grid is empty")
    return weights.m / weights.n
