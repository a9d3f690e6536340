"""Tests for the exact click-probability oracle."""

import numpy as np
import pytest

from hbtsim.analysis.oracle import expected_temporal_g2, oracle_click_probs
from hbtsim.core.errors import UnsupportedConfigurationError
from hbtsim.core.models import DetectorSpec, PhotonSource, SplitterSpec
from hbtsim.physics.statistics import analytic_gn

PAIR = (DetectorSpec(), DetectorSpec())


class TestOracle:
    """Closed-form checks."""

    @pytest.mark.parametrize("mean", [0.01, 0.5, 3.0])
    @pytest.mark.parametrize("efficiency", [0.3, 1.0])
    def test_coherent_is_one(self, mean, efficiency):
        """Test that coherent light gives click g2 of 1 at any efficiency."""
        detectors = (DetectorSpec(efficiency=efficiency),) * 2
        result = oracle_click_probs(PhotonSource.coherent(mean), SplitterSpec(), detectors)
        assert result.g2_click == pytest.approx(1.0, rel=1e-9)

    def test_thermal_two(self):
        """Test the thermal click probabilities at mean 2."""
        result = oracle_click_probs(PhotonSource.thermal(2.0), SplitterSpec(), PAIR)
        assert result.click_probs[0] == pytest.approx(0.5, rel=1e-10)
        assert result.coincidence_probs[0, 1] == pytest.approx(1 / 3, rel=1e-10)
        assert result.g2_click == pytest.approx(4 / 3, rel=1e-10)

    def test_fock_two(self):
        """Test the click probabilities of a two-photon state."""
        result = oracle_click_probs(PhotonSource.fock(2), SplitterSpec(), PAIR)
        assert result.click_probs == pytest.approx((0.75, 0.75))
        assert result.coincidence_probs[0, 1] == pytest.approx(0.5)
        assert result.g2_click == pytest.approx(8 / 9)

    def test_fock_one_never_coincides(self):
        """Test that one photon never clicks both detectors."""
        result = oracle_click_probs(PhotonSource.fock(1), SplitterSpec(), PAIR)
        assert result.coincidence_probs[0, 1] == pytest.approx(0.0, abs=1e-15)
        assert result.g2_click == pytest.approx(0.0, abs=1e-15)

    def test_dark_counts_unsupported(self):
        """Test that dark counts are refused by the oracle."""
        detectors = (DetectorSpec(dark_prob=0.01), DetectorSpec())
        with pytest.raises(UnsupportedConfigurationError, match="dark"):
            oracle_click_probs(PhotonSource.coherent(1.0), SplitterSpec(), detectors)

    def test_probability_bounds(self):
        """Test that probabilities are bounded and coincidences below singles."""
        splitter = SplitterSpec((0.2, 0.3, 0.5))
        detectors = (DetectorSpec(efficiency=0.9),) * 3
        result = oracle_click_probs(PhotonSource.thermal(1.5), splitter, detectors)
        probs = np.array(result.click_probs)
        assert np.all((probs >= 0) & (probs <= 1))
        assert np.allclose(np.diag(result.coincidence_probs), probs)
        assert np.all(result.coincidence_probs <= np.minimum.outer(probs, probs) + 1e-15)

    def test_single_port_has_no_g2(self):
        """Test that one port has no click g2."""
        result = oracle_click_probs(PhotonSource.coherent(1.0), SplitterSpec((1.0,)), (DetectorSpec(),))
        assert result.g2_click is None

    @pytest.mark.parametrize(
        "source",
        [PhotonSource.coherent(1.0), PhotonSource.thermal(1.0), PhotonSource.fock(2)],
        ids=lambda s: s.describe(),
    )
    def test_low_intensity_limit(self, source):
        """At efficiency x mean = 0.01 the click g2 approaches the statistics-only g2."""
        efficiency = 0.01 / source.mean
        detectors = (DetectorSpec(efficiency=efficiency),) * 2
        result = oracle_click_probs(source, SplitterSpec(), detectors)
        assert abs(result.g2_click - analytic_gn(source, 2)) <= 0.02

    def test_to_dict(self):
        """Test that the oracle serializes to plain keys."""
        payload = oracle_click_probs(PhotonSource.thermal(2.0), SplitterSpec(), PAIR).to_dict()
        assert set(payload) == {"click_probs", "coincidence_probs", "g2_click"}
        assert len(payload["coincidence_probs"]) == 2

    def test_expected_temporal(self):
        """Test that the expected full-N g2 divides by R_I."""
        result = oracle_click_probs(PhotonSource.coherent(0.05), SplitterSpec(), PAIR)
        assert expected_temporal_g2(result, 0.1) == pytest.approx(10.0)
        assert expected_temporal_g2(result, 0.0) is None
