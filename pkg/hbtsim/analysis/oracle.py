"""Exact click probabilities by enumeration over the photon-number distribution."""

import numpy as np

from hbtsim.core.errors import ConfigurationError, UnsupportedConfigurationError
from hbtsim.core.models import DetectorSpec, OracleResult, PhotonSource, SplitterSpec
from hbtsim.physics.statistics import MOMENT_TAIL, pmf_table


def oracle_click_probs(
    source: PhotonSource,
    splitter: SplitterSpec,
    detectors: tuple[DetectorSpec, ...] | list[DetectorSpec],
) -> OracleResult:
    """
    Exact singles and pairwise coincidence probabilities for one window.

    With n photons, port j stays dark with probability (1 - eta_j p_j)**n and
    ports j, k both stay dark with probability (1 - eta_j p_j - eta_k p_k)**n;
    coincidences follow by inclusion-exclusion. The photon-number sum runs to
    a 1e-30 tail.

    Args:
        source: Photon-number distribution reaching the splitter
        splitter: Port routing probabilities
        detectors: One dark-free detector per port

    Returns:
        OracleResult; g2_click refers to ports 0 and 1 (None for one port)

    Raises:
        UnsupportedConfigurationError: If any detector has dark counts
    """
    if len(detectors) != splitter.port_count:
        raise ConfigurationError(
            f"{len(detectors)} detectors for {splitter.port_count} ports", field="detectors"
        )
    if any(d.dark_prob > 0 for d in detectors):
        raise UnsupportedConfigurationError(
            "the oracle is dark-count free", field="detectors.dark_prob"
        )

    ks, ps = pmf_table(source, MOMENT_TAIL)
    q = np.array(splitter.port_probs) * np.array([d.efficiency for d in detectors])

    def hit(detect: np.ndarray) -> np.ndarray:
        """E[1 - (1 - detect)**n] for every entry of ``detect``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            log_keep = np.log1p(-np.clip(detect, 0.0, 1.0))[..., None]
            exponent = np.where(ks > 0, ks * log_keep, 0.0)
        return -np.expm1(exponent) @ ps

    click = hit(q)
    either = hit(q[:, None] + q[None, :])
    coincidence = click[:, None] + click[None, :] - either
    np.fill_diagonal(coincidence, click)
    coincidence = np.clip(coincidence, 0.0, 1.0)

    g2_click = None
    if splitter.port_count >= 2 and click[0] > 0 and click[1] > 0:
        g2_click = float(coincidence[0, 1] / (click[0] * click[1]))

    return OracleResult(
        click_probs=tuple(float(p) for p in click),
        coincidence_probs=coincidence,
        g2_click=g2_click,
    )


def expected_temporal_g2(oracle: OracleResult, r_i: float) -> float | None:
    """Dark-free full-N g2 expected for single-window pulses: g2_click / R_I."""
    if oracle.g2_click is None or r_i <= 0:
        return None
    return oracle.g2_click / r_i
