"""Single-click detector and lossless multiport splitter models."""

import numpy as np
import numpy.typing as npt

from hbtsim.core.models import DetectorSpec, SplitterSpec


def split_photons(
    n: int | npt.ArrayLike, splitter: SplitterSpec, stream: np.random.Generator
) -> npt.NDArray[np.int64]:
    """
    Route every photon independently to one splitter port.

    Args:
        n: Photon count, or an array of counts (one per window)
        splitter: Port routing probabilities
        stream: Random generator

    Returns:
        Counts per port, shape (ports,) or (len(n), ports); rows sum to n
    """
    counts = np.asarray(n, dtype=np.int64)
    if np.any(counts < 0):
        raise ValueError("photon counts must be non-negative")
    return stream.multinomial(counts, np.asarray(splitter.port_probs, dtype=np.float64))


def click(
    photons_at_port: int | npt.ArrayLike, spec: DetectorSpec, stream: np.random.Generator
) -> int | npt.NDArray[np.bool_]:
    """
    Single-click response of one detector during one reset window.

    A click happens when at least one photon is detected (each with probability
    ``spec.efficiency``) or a dark count fires (probability ``spec.dark_prob``).

    Args:
        photons_at_port: Photons reaching the detector (scalar or array of windows)
        spec: Detector specification
        stream: Random generator

    Returns:
        0/1 for a scalar input, otherwise a boolean array
    """
    photons = np.asarray(photons_at_port, dtype=np.int64)
    if np.any(photons < 0):
        raise ValueError("photon counts must be non-negative")

    detected = stream.binomial(photons, spec.efficiency) > 0
    if spec.dark_prob > 0:
        detected = detected | (stream.random(photons.shape) < spec.dark_prob)

    if photons.ndim == 0:
        return int(detected)
    return np.asarray(detected, dtype=bool)


def click_ports(
    port_counts: npt.NDArray[np.int64],
    detectors: tuple[DetectorSpec, ...],
    stream: np.random.Generator,
) -> npt.NDArray[np.bool_]:
    """
    Apply every port's detector to a (windows, ports) matrix of photon counts.

    Returns:
        Boolean clicks with shape (ports, windows)
    """
    efficiencies = np.array([d.efficiency for d in detectors], dtype=np.float64)
    clicks = stream.binomial(port_counts, efficiencies) > 0

    dark = np.array([d.dark_prob for d in detectors], dtype=np.float64)
    if np.any(dark > 0):
        clicks |= stream.random(port_counts.shape) < dark
    return clicks.T


def dark_clicks(
    windows: int, detectors: tuple[DetectorSpec, ...], stream: np.random.Generator
) -> npt.NDArray[np.bool_]:
    """Dark-count clicks over ``windows`` photon-free windows, shape (detectors, windows)."""
    dark = np.array([d.dark_prob for d in detectors], dtype=np.float64)
    if not np.any(dark > 0):
        return np.zeros((len(detectors), windows), dtype=bool)
    return (stream.random((windows, len(detectors))) < dark).T


def weak_field_click_prob(mean_photons: float, spec: DetectorSpec) -> float:
    """
    Linear-in-exposure click probability, efficiency x mean photons.

    Valid only in the weak-field, dark-free limit; compare with
    ``exact_click_prob`` to see the nonlinearity.
    """
    if mean_photons < 0:
        raise ValueError("mean_photons must be non-negative")
    return spec.efficiency * mean_photons


def exact_click_prob(mean_photons: float, spec: DetectorSpec) -> float:
    """Exact dark-free click probability 1 - exp(-efficiency x mean) for coherent input."""
    if mean_photons < 0:
        raise ValueError("mean_photons must be non-negative")
    return float(-np.expm1(-spec.efficiency * mean_photons))
