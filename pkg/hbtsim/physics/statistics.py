"""Photon-number distributions, their sampling, and analytic coherence values.

A ``PhotonSource`` is the stochastic factor of a single temporal mode; the
deterministic pulse envelope lives in ``hbtsim.physics.envelope``.
"""

import math

import numpy as np
import numpy.typing as npt
from scipy import stats

from hbtsim.core.errors import ConfigurationError, UndefinedEstimateError
from hbtsim.core.models import PhotonSource, SourceKind

# Infinite supports are truncated where the survival probability drops below this.
DEFAULT_TAIL = 1e-12

# Factorial moments weight the tail by k**order, so they are summed much deeper.
MOMENT_TAIL = 1e-30

# Dense binomial thinning builds a (support x support) matrix.
MAX_THINNING_SUPPORT = 4096


def support_bound(source: PhotonSource, tail: float = DEFAULT_TAIL) -> int:
    """
    Largest photon number kept when the distribution is truncated at ``tail``.

    Args:
        source: Photon source
        tail: Survival probability P(n > bound) allowed beyond the bound

    Returns:
        Inclusive upper bound of the truncated support
    """
    if source.kind is SourceKind.FOCK:
        return source.m
    if source.kind is SourceKind.EMPIRICAL:
        return max(k for k, _ in source.table)
    if source.mu == 0:
        return 0

    if source.kind is SourceKind.THERMAL:
        # P(n > k) = r**(k + 1)
        r = source.mu / (1.0 + source.mu)
        return max(0, math.ceil(math.log(tail) / math.log(r)))

    guess = int(source.mu + 20.0 * math.sqrt(source.mu) + 64)
    while True:
        ks = np.arange(guess + 1)
        below = np.flatnonzero(stats.poisson.sf(ks, source.mu) <= tail)
        if below.size:
            return int(below[0])
        guess *= 2


def pmf_array(source: PhotonSource, ks: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Vectorized P(photon number = k); out-of-support k give 0."""
    ks = np.asarray(ks, dtype=np.int64)
    out = np.zeros(ks.shape, dtype=np.float64)
    valid = ks >= 0

    if source.kind is SourceKind.COHERENT:
        if source.mu == 0:
            out[ks == 0] = 1.0
        else:
            out[valid] = stats.poisson.pmf(ks[valid], source.mu)
    elif source.kind is SourceKind.THERMAL:
        if source.mu == 0:
            out[ks == 0] = 1.0
        else:
            k = ks[valid].astype(np.float64)
            out[valid] = np.exp(k * math.log(source.mu) - (k + 1.0) * math.log1p(source.mu))
    elif source.kind is SourceKind.FOCK:
        out[ks == source.m] = 1.0
    else:
        lookup = dict(source.table)
        out = np.array([lookup.get(int(k), 0.0) for k in ks.ravel()]).reshape(ks.shape)

    return out


def pmf(source: PhotonSource, n: int) -> float:
    """
    Probability that the source holds exactly ``n`` photons.

    Args:
        source: Photon source
        n: Photon number

    Returns:
        P(photon number = n)
    """
    if n < 0:
        return 0.0
    return float(pmf_array(source, [n])[0])


def pmf_table(
    source: PhotonSource, tail: float = DEFAULT_TAIL
) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.float64]]:
    """
    Truncated (counts, probabilities) table of the distribution.

    Args:
        source: Photon source
        tail: Survival probability allowed beyond the table

    Returns:
        Tuple of (photon numbers, probabilities)
    """
    if source.kind is SourceKind.EMPIRICAL:
        ks = np.array([k for k, _ in source.table], dtype=np.int64)
        ps = np.array([p for _, p in source.table], dtype=np.float64)
        return ks, ps

    ks = np.arange(support_bound(source, tail) + 1, dtype=np.int64)
    return ks, pmf_array(source, ks)


def sample(
    source: PhotonSource,
    stream: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
) -> int | npt.NDArray[np.int64]:
    """
    Draw photon numbers from the source.

    Args:
        source: Photon source
        stream: Random generator; results are deterministic given its state
        size: Output shape, or None for a single draw

    Returns:
        A photon count, or an array of counts when ``size`` is given
    """
    if source.kind is SourceKind.COHERENT:
        draws = stream.poisson(source.mu, size=size)
    elif source.kind is SourceKind.THERMAL:
        # Bose-Einstein is a geometric law shifted to start at zero
        draws = stream.geometric(1.0 / (1.0 + source.mu), size=size) - 1
    elif source.kind is SourceKind.FOCK:
        draws = np.full(size if size is not None else (), source.m, dtype=np.int64)
    else:
        ks, ps = pmf_table(source)
        cdf = np.cumsum(ps)
        idx = np.searchsorted(cdf, stream.random(size=size), side="right")
        draws = ks[np.minimum(idx, ks.size - 1)]

    if size is None:
        return int(draws)
    return np.asarray(draws, dtype=np.int64)


def factorial_moment(source: PhotonSource, order: int) -> float:
    """
    Factorial moment E[n(n-1)...(n-order+1)] by direct summation.

    Args:
        source: Photon source
        order: Moment order (>= 1)

    Returns:
        The factorial moment
    """
    if order < 1:
        raise ValueError(f"factorial moment order must be >= 1, got {order}")

    ks, ps = pmf_table(source, MOMENT_TAIL)
    falling = np.ones(ks.shape, dtype=np.float64)
    k = ks.astype(np.float64)
    for j in range(order):
        falling *= k - j
    return math.fsum(ps * falling)


def analytic_gn(source: PhotonSource, order: int) -> float:
    """
    Statistics-only n-th order coherence, factorial moment over mean**n.

    Args:
        source: Photon source with mean > 0
        order: Coherence order (>= 2)

    Returns:
        g(n) of the source

    Raises:
        UndefinedEstimateError: If the source mean is zero
    """
    if order < 2:
        raise ValueError(f"coherence order must be >= 2, got {order}")

    mean = source.mean
    if mean <= 0:
        raise UndefinedEstimateError("undefined coherence: source mean is zero")

    if source.kind is SourceKind.COHERENT:
        return 1.0
    if source.kind is SourceKind.THERMAL:
        return float(math.factorial(order))
    if source.kind is SourceKind.FOCK:
        if order > source.m:
            return 0.0
        return math.perm(source.m, order) / source.m**order
    return factorial_moment(source, order) / mean**order


def thin(source: PhotonSource, p: float, tail: float = 1e-16) -> PhotonSource:
    """
    Exact distribution after keeping each photon independently with probability ``p``.

    Args:
        source: Photon source
        p: Survival probability in (0, 1]
        tail: Truncation of infinite supports before thinning

    Returns:
        Empirical source holding the thinned distribution
    """
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"thinning probability must be in (0, 1], got {p}")

    ks, ps = pmf_table(source, tail)
    if ks.size > MAX_THINNING_SUPPORT:
        raise ConfigurationError(
            f"support of {ks.size} photon numbers is too large for dense thinning"
        )

    js = np.arange(int(ks.max()) + 1)
    kernel = stats.binom.pmf(js[None, :], ks[:, None], p)
    thinned = ps @ kernel
    keep = thinned > 0
    return PhotonSource.empirical(zip(js[keep].tolist(), thinned[keep].tolist()))


def scale_to_mean(source: PhotonSource, mean: float) -> PhotonSource:
    """
    Per-pulse photon-number law with the requested mean and the source's g(n).

    Coherent and thermal sources are re-parameterized; Fock and empirical
    sources are binomially thinned, so the mean cannot exceed theirs.

    Args:
        source: Photon source
        mean: Requested mean photon number

    Returns:
        Source with mean ``mean``
    """
    if source.kind is SourceKind.COHERENT:
        return PhotonSource.coherent(mean)
    if source.kind is SourceKind.THERMAL:
        return PhotonSource.thermal(mean)

    current = source.mean
    if math.isclose(mean, current, rel_tol=1e-12, abs_tol=1e-15):
        return source
    if mean > current:
        raise ConfigurationError(
            f"{source.describe()} cannot deliver {mean} photons per pulse (mean {current})",
            field="train.photons_per_pulse",
        )
    if mean == 0:
        return PhotonSource.fock(0)
    return thin(source, mean / current)
