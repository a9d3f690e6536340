"""Coherence estimators for windowed click records.

All estimators pool counts (ratio of means): the product of same-window
clicks averaged over the selected elements, divided by the product of the
per-detector averages over the same elements.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from hbtsim.analysis.bootstrap import MIN_BLOCKS, BootstrapResult, bootstrap_ratio
from hbtsim.core.config import settings
from hbtsim.core.errors import InsufficientDataError, PartitionError, UndefinedEstimateError
from hbtsim.core.models import CorrelationEstimate, Normalization, SpatialOutcomes

logger = logging.getLogger(__name__)

BitSequence = npt.ArrayLike


def _bits(series: BitSequence) -> npt.NDArray[np.bool_]:
    bits = np.asarray(series)
    if bits.ndim != 1:
        raise ValueError(f"expected a 1-D bit sequence, got shape {bits.shape}")
    return bits.astype(bool)


def _stack(series_list: Sequence[BitSequence]) -> npt.NDArray[np.bool_]:
    columns = [_bits(s) for s in series_list]
    if len({c.size for c in columns}) > 1:
        raise ValueError("all bit sequences must have the same length")
    return np.stack(columns, axis=1)


def mean_partitioned(series: BitSequence, partitions: int = 1) -> float:
    """
    Average of ``partitions`` equal-length partial averages.

    Equals the plain mean for every divisor of the sequence length.

    Raises:
        PartitionError: If ``partitions`` does not divide the length
    """
    values = np.asarray(series, dtype=np.float64).ravel()
    if partitions < 1 or values.size == 0 or values.size % partitions:
        raise PartitionError(
            f"{partitions} partitions do not divide a sequence of length {values.size}"
        )
    return float(values.reshape(partitions, -1).mean(axis=1).mean())


def _stderr(
    columns: npt.NDArray[np.bool_],
    blocks: int | None,
    resamples: int | None,
    seed: int | None,
) -> BootstrapResult:
    rows = columns.shape[0]
    blocks = min(blocks or settings.bootstrap_blocks, rows)
    if blocks < MIN_BLOCKS:
        return BootstrapResult(float("nan"), True, blocks, 0)
    return bootstrap_ratio(
        columns,
        blocks,
        resamples or settings.bootstrap_resamples,
        settings.bootstrap_seed if seed is None else seed,
    )


def _estimate(
    columns: npt.NDArray[np.bool_],
    normalization: Normalization,
    n: int,
    *,
    partitions: int = 1,
    lag: int | None = None,
    blocks: int | None = None,
    resamples: int | None = None,
    seed: int | None = None,
    bootstrap: bool = True,
) -> CorrelationEstimate:
    rows, order = columns.shape
    singles = tuple(int(s) for s in columns.sum(axis=0))
    product = columns.all(axis=1)
    coincidences = int(product.sum())

    if rows == 0 or min(singles) == 0:
        raise UndefinedEstimateError(
            f"{normalization.value} estimate undefined: a detector has no clicks "
            f"in {rows} averaged elements"
        )

    if partitions == 1:
        # integer counts keep the temporal/on-window identity exact
        value = coincidences * float(rows) ** (order - 1) / math.prod(float(s) for s in singles)
    else:
        denominator = math.prod(mean_partitioned(columns[:, j], partitions) for j in range(order))
        value = mean_partitioned(product, partitions) / denominator

    result = (
        _stderr(columns, blocks, resamples, seed)
        if bootstrap
        else BootstrapResult(float("nan"), True, 0, 0)
    )
    return CorrelationEstimate(
        value=value,
        stderr=result.stderr,
        normalization=normalization,
        coincidences=coincidences,
        singles=singles,
        n=n,
        m=rows,
        lag=lag,
        order=order,
        stderr_degenerate=result.degenerate,
    )


def g2_temporal(x: BitSequence, y: BitSequence, **options) -> CorrelationEstimate:
    """
    Full-N normalized g2: mean(x*y) / (mean(x) * mean(y)) over all N windows.

    For pulsed light this equals the on-window g2 divided by R_I.

    Raises:
        UndefinedEstimateError: If either detector never clicks
    """
    columns = _stack([x, y])
    return _estimate(columns, Normalization.FULL_N, columns.shape[0], **options)


def g2_on_window(
    x: BitSequence, y: BitSequence, mask: BitSequence, **options
) -> CorrelationEstimate:
    """
    On-window normalized g2: the same ratio averaged over the M windows with field amplitude.

    Raises:
        UndefinedEstimateError: If M is zero or a detector never clicks in on-windows
    """
    columns = _stack([x, y])
    on = _bits(mask)
    if on.size != columns.shape[0]:
        raise ValueError("mask length differs from the bit sequences")
    return _estimate(columns[on], Normalization.ON_WINDOW_M, columns.shape[0], **options)


def gn_product(
    series_list: Sequence[BitSequence],
    mask: BitSequence | None = None,
    partitions: int = 1,
    **options,
) -> CorrelationEstimate:
    """
    n-th order coherence from n same-window click sequences.

    Args:
        series_list: n bit sequences of equal length (n >= 2)
        mask: On-window mask for on-window normalization, or None for full-N
        partitions: Number of equal partitions of the averaged elements

    Returns:
        CorrelationEstimate with ``order`` = n

    Raises:
        PartitionError: If ``partitions`` does not divide the averaged count
        UndefinedEstimateError: If a detector never clicks
    """
    if len(series_list) < 2:
        raise ValueError("gn_product needs at least two sequences")
    columns = _stack(series_list)
    total = columns.shape[0]
    normalization = Normalization.FULL_N
    if mask is not None:
        on = _bits(mask)
        if on.size != total:
            raise ValueError("mask length differs from the bit sequences")
        columns = columns[on]
        normalization = Normalization.ON_WINDOW_M
    if partitions < 1 or columns.shape[0] % partitions:
        raise PartitionError(
            f"{partitions} partitions do not divide {columns.shape[0]} averaged elements"
        )
    return _estimate(columns, normalization, total, partitions=partitions, **options)


def g2_spatial(
    outcomes: SpatialOutcomes | tuple[npt.ArrayLike, npt.ArrayLike], **options
) -> CorrelationEstimate:
    """
    Pooled g2 over an ensemble of K detector pairs and all pulses.

    Args:
        outcomes: SpatialOutcomes, or an (x, y) pair of (pulses, K) bit arrays

    Returns:
        CorrelationEstimate with SpatialPooled normalization (N = M = pulses * K)
    """
    if isinstance(outcomes, SpatialOutcomes):
        x, y = outcomes.x, outcomes.y
    else:
        x, y = (np.asarray(a, dtype=bool) for a in outcomes)
    if x.shape != y.shape or x.ndim != 2 or x.size == 0:
        raise InsufficientDataError("need at least one pulse and one detector pair")
    columns = np.stack([x.ravel(), y.ravel()], axis=1)
    return _estimate(columns, Normalization.SPATIAL_POOLED, columns.shape[0], **options)


def g2_pulse_to_pulse(
    x: BitSequence,
    y: BitSequence,
    mask: BitSequence,
    lag: int,
    windows_per_pulse: int = 1,
    **options,
) -> CorrelationEstimate:
    """
    Correlate detector-x clicks of pulse i with detector-y clicks of pulse i + lag.

    Only on-windows are used; window j of pulse i is paired with window j of
    pulse i + lag. A lag of zero reduces to ``g2_on_window``.

    Raises:
        InsufficientDataError: If there are fewer than lag + 1 pulses
    """
    if lag < 0:
        raise ValueError(f"lag must be >= 0, got {lag}")
    columns = _stack([x, y])
    on = _bits(mask)
    xo, yo = columns[on, 0], columns[on, 1]
    if xo.size % windows_per_pulse:
        raise ValueError("on-windows are not a whole number of pulses")

    pulses = xo.size // windows_per_pulse
    if pulses < lag + 1:
        raise InsufficientDataError(f"{pulses} pulses cannot support a lag of {lag}")

    shift = lag * windows_per_pulse
    paired = np.stack([xo[: xo.size - shift], yo[shift:]], axis=1)
    return _estimate(paired, Normalization.PULSE_LAG, columns.shape[0], lag=lag, **options)


def pulse_correlation_curve(
    x: BitSequence,
    y: BitSequence,
    mask: BitSequence,
    max_lag: int,
    windows_per_pulse: int = 1,
    **options,
) -> list[CorrelationEstimate]:
    """Pulse-to-pulse g2 for every lag 0..max_lag."""
    return [
        g2_pulse_to_pulse(x, y, mask, lag, windows_per_pulse, **options)
        for lag in range(max_lag + 1)
    ]


def stderr_block_bootstrap(
    series_list: Sequence[BitSequence],
    estimator: Normalization,
    blocks: int | None = None,
    *,
    mask: BitSequence | None = None,
    lag: int = 0,
    windows_per_pulse: int = 1,
    resamples: int | None = None,
    seed: int | None = None,
) -> BootstrapResult:
    """
    Block-bootstrap standard error for one of the estimators.

    Args:
        series_list: Input sequences; for SpatialPooled pass (x, y) pulse-by-pair arrays
        estimator: Which estimator's averaging to reproduce
        blocks: Contiguous block count (>= 10 and <= averaged elements)
        mask: On-window mask (OnWindowM and PulseLag)
        lag: Pulse lag (PulseLag)
        resamples: Bootstrap resamples (defaults to settings)
        seed: Resampling seed (defaults to settings)

    Returns:
        BootstrapResult; stderr 0 with ``degenerate`` set for all-equal resamples
    """
    if estimator is Normalization.SPATIAL_POOLED:
        x, y = (np.asarray(a, dtype=bool) for a in series_list)
        columns = np.stack([x.ravel(), y.ravel()], axis=1)
    else:
        columns = _stack(series_list)
        if estimator in (Normalization.ON_WINDOW_M, Normalization.PULSE_LAG):
            if mask is None:
                raise ValueError(f"{estimator.value} needs an on-window mask")
            columns = columns[_bits(mask)]
        if estimator is Normalization.PULSE_LAG:
            shift = lag * windows_per_pulse
            if columns.shape[0] <= shift:
                raise InsufficientDataError(f"not enough pulses for a lag of {lag}")
            columns = np.stack([columns[: columns.shape[0] - shift, 0], columns[shift:, 1]], axis=1)

    blocks = blocks or settings.bootstrap_blocks
    if not MIN_BLOCKS <= blocks <= columns.shape[0]:
        raise ValueError(
            f"blocks must be between {MIN_BLOCKS} and {columns.shape[0]}, got {blocks}"
        )
    return bootstrap_ratio(
        columns,
        blocks,
        resamples or settings.bootstrap_resamples,
        settings.bootstrap_seed if seed is None else seed,
    )


def spatial_intensity(clicks: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """
    Intensity as the fraction of ensemble detectors that clicked.

    Args:
        clicks: (detectors, windows) bits, or SpatialOutcomes-style (pulses, K) x/y
            arrays stacked along the first axis

    Returns:
        Fraction of clicked detectors per window
    """
    bits = np.asarray(clicks, dtype=bool)
    if bits.ndim != 2 or bits.shape[0] == 0:
        raise ValueError("expected a (detectors, windows) bit matrix")
    return bits.mean(axis=0)


def classify_g2(estimate: CorrelationEstimate, band: float = 3.0) -> str:
    """
    Label a g2 estimate relative to the coherent (1) and thermal (2) benchmarks.

    Returns:
        One of "antibunched", "coherent", "bunched", "superbunched"
    """
    spread = band * estimate.stderr if math.isfinite(estimate.stderr) else 0.0
    if estimate.value + spread < 1.0:
        return "antibunched"
    if estimate.value - spread > 2.0:
        return "superbunched"
    if estimate.value - spread > 1.0:
        return "bunched"
    return "coherent"
