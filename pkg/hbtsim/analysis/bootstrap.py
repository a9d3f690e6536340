"""Moving-block bootstrap over pooled coincidence/singles partial sums."""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)

MIN_BLOCKS = 10


@dataclass
class BootstrapResult:
    """Bootstrap standard error of a ratio-of-means estimator."""
    stderr: float
    degenerate: bool
    blocks: int
    resamples: int  # resamples with a defined estimate


@dataclass
class BlockSums:
    """Partial sums per contiguous block: rows, singles per column, all-column coincidences."""
    rows: npt.NDArray[np.int64]
    singles: npt.NDArray[np.int64]
    coincidences: npt.NDArray[np.int64]


def block_sums(columns: npt.NDArray[np.bool_], blocks: int) -> BlockSums:
    """
    Reduce a (rows, k) bit matrix to per-block partial sums.

    Blocks are contiguous and differ in length by at most one row.
    """
    total = columns.shape[0]
    if not 1 <= blocks <= total:
        raise ValueError(f"blocks must be between 1 and {total}, got {blocks}")

    edges = np.linspace(0, total, blocks + 1).astype(np.int64)
    starts = edges[:-1]
    return BlockSums(
        rows=np.diff(edges),
        singles=np.add.reduceat(columns.astype(np.int64), starts, axis=0),
        coincidences=np.add.reduceat(columns.all(axis=1).astype(np.int64), starts),
    )


def ratio_of_means(
    rows: npt.NDArray, singles: npt.NDArray, coincidences: npt.NDArray
) -> npt.NDArray[np.float64]:
    """
    Pooled estimator mean(product) / prod(mean(column)), vectorized over resamples.

    Undefined entries (a column with no clicks) come back as NaN.
    """
    rows = rows.astype(np.float64)
    means = singles / rows[..., None]
    denominator = np.prod(means, axis=-1)
    numerator = coincidences / rows
    return np.divide(
        numerator, denominator, out=np.full(np.shape(numerator), np.nan), where=denominator > 0
    )


def bootstrap_ratio(
    columns: npt.NDArray[np.bool_], blocks: int, resamples: int, seed: int
) -> BootstrapResult:
    """
    Block-bootstrap standard error of the pooled ratio estimator.

    Args:
        columns: (rows, k) bit matrix, one column per correlated detector
        blocks: Number of contiguous blocks (>= 10 and <= rows)
        resamples: Number of bootstrap resamples
        seed: Seed of the resampling generator

    Returns:
        BootstrapResult; a degenerate flag marks all-equal or undefined resamples
    """
    if blocks < MIN_BLOCKS:
        raise ValueError(f"block bootstrap needs at least {MIN_BLOCKS} blocks, got {blocks}")

    sums = block_sums(columns, blocks)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, blocks, size=(resamples, blocks))

    values = ratio_of_means(
        sums.rows[picks].sum(axis=1),
        sums.singles[picks].sum(axis=1),
        sums.coincidences[picks].sum(axis=1),
    )
    defined = values[np.isfinite(values)]
    if defined.size < 2:
        logger.debug("bootstrap: only %d defined resamples", defined.size)
        return BootstrapResult(float("nan"), True, blocks, int(defined.size))
    if np.ptp(defined) == 0:
        return BootstrapResult(0.0, True, blocks, int(defined.size))
    return BootstrapResult(float(np.std(defined, ddof=1)), False, blocks, int(defined.size))
