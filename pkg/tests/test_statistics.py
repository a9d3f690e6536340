"""Tests for photon-number statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from hbtsim.core.errors import ConfigurationError, UndefinedEstimateError
from hbtsim.core.models import PhotonSource, SourceKind
from hbtsim.physics.statistics import (
    analytic_gn,
    factorial_moment,
    pmf,
    pmf_table,
    sample,
    scale_to_mean,
    thin,
)


@pytest.fixture
def rng():
    """Seeded generator for sampling tests."""
    return np.random.default_rng(20240611)


SOURCES = [
    PhotonSource.coherent(0.5),
    PhotonSource.coherent(3.0),
    PhotonSource.thermal(0.2),
    PhotonSource.thermal(2.0),
    PhotonSource.fock(1),
    PhotonSource.fock(2),
    PhotonSource.fock(4),
    PhotonSource.empirical({0: 0.5, 1: 0.3, 3: 0.2}),
]


class TestPhotonSource:
    """Validation of source parameters."""

    def test_negative_mean_rejected(self):
        """Test that a negative mean is rejected."""
        with pytest.raises(ConfigurationError, match="source.mean"):
            PhotonSource.coherent(-0.1)

    def test_non_finite_mean_rejected(self):
        """Test that an infinite mean is rejected."""
        with pytest.raises(ConfigurationError):
            PhotonSource.thermal(float("inf"))

    def test_empirical_must_sum_to_one(self):
        """Test that an empirical distribution must sum to 1."""
        with pytest.raises(ConfigurationError, match="source.pmf"):
            PhotonSource.empirical({0: 0.5, 1: 0.4})

    def test_empirical_rejects_negative_probability(self):
        """Test that negative empirical probabilities are rejected."""
        with pytest.raises(ConfigurationError):
            PhotonSource.empirical({0: 1.2, 1: -0.2})

    def test_empirical_table_is_sorted(self):
        """Test that empirical tables are sorted by photon number."""
        source = PhotonSource.empirical([(3, 0.25), (0, 0.75)])
        assert source.table == ((0, 0.75), (3, 0.25))
        assert source.mean == pytest.approx(0.75)

    def test_kind_and_mean(self):
        """Test that constructors set the kind and mean."""
        assert PhotonSource.fock(3).kind is SourceKind.FOCK
        assert PhotonSource.fock(3).mean == 3.0
        assert PhotonSource.thermal(1.5).mean == 1.5


class TestPmf:
    """Probability mass functions."""

    def test_coherent_at_zero(self):
        """Test the coherent vacuum probability."""
        assert pmf(PhotonSource.coherent(1.0), 0) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_thermal_at_zero(self):
        """Test the thermal vacuum probability."""
        assert pmf(PhotonSource.thermal(1.0), 0) == pytest.approx(0.5, rel=1e-12)

    def test_fock_is_definite(self):
        """Test that a Fock state has a single photon number."""
        source = PhotonSource.fock(3)
        assert pmf(source, 3) == 1.0
        assert pmf(source, 2) == 0.0

    def test_negative_n_is_zero(self):
        """Test that negative photon numbers have zero probability."""
        assert pmf(PhotonSource.coherent(1.0), -1) == 0.0

    def test_empirical_lookup(self):
        """Test that empirical probabilities are looked up by photon number."""
        source = PhotonSource.empirical({0: 0.5, 2: 0.5})
        assert pmf(source, 1) == 0.0
        assert pmf(source, 2) == 0.5

    @pytest.mark.parametrize("source", SOURCES, ids=lambda s: s.describe())
    def test_table_sums_to_one(self, source):
        """Test that truncated tables keep all but a negligible tail."""
        _, ps = pmf_table(source)
        assert math.fsum(ps) == pytest.approx(1.0, abs=1e-9)

    def test_zero_mean_table(self):
        """Test that a zero-mean source is vacuum."""
        ks, ps = pmf_table(PhotonSource.thermal(0.0))
        assert ks.tolist() == [0]
        assert ps.tolist() == [1.0]


class TestSample:
    """Sampling from sources."""

    def test_fock_always_m(self, rng):
        """Test that Fock draws are always m."""
        draws = sample(PhotonSource.fock(2), rng, size=1000)
        assert np.all(draws == 2)

    def test_zero_mean_coherent_always_zero(self, rng):
        """Test that zero-mean coherent draws are always 0."""
        assert np.all(sample(PhotonSource.coherent(0.0), rng, size=1000) == 0)

    def test_scalar_draw_is_int(self, rng):
        """Test that a scalar draw is a Python int."""
        assert isinstance(sample(PhotonSource.thermal(1.0), rng), int)

    def test_deterministic_given_stream(self):
        """Test that one stream reproduces the draws."""
        a = sample(PhotonSource.thermal(1.0), np.random.default_rng(5), size=100)
        b = sample(PhotonSource.thermal(1.0), np.random.default_rng(5), size=100)
        assert np.array_equal(a, b)

    def test_thermal_sample_mean(self, rng):
        """Bose-Einstein variance is mean(1 + mean)."""
        draws = sample(PhotonSource.thermal(2.0), rng, size=1_000_000)
        sigma = math.sqrt(2.0 * 3.0 / 1_000_000)
        assert abs(draws.mean() - 2.0) < 4 * sigma

    @pytest.mark.parametrize(
        "source",
        [PhotonSource.coherent(1.0), PhotonSource.thermal(1.0), PhotonSource.empirical({0: 0.2, 1: 0.5, 4: 0.3})],
        ids=lambda s: s.describe(),
    )
    def test_histogram_matches_pmf(self, source, rng):
        """Test that draw frequencies follow the distribution."""
        draws = 1_000_000
        counts = np.bincount(sample(source, rng, size=draws), minlength=12)
        for k in range(8):
            p = pmf(source, k)
            sigma = math.sqrt(draws * p * (1 - p)) or 1.0
            assert abs(counts[k] - draws * p) < 4 * sigma + 1


class TestAnalyticCoherence:
    """Closed-form g(n) and factorial moments."""

    @pytest.mark.parametrize("mean", [0.01, 1.0, 7.5])
    def test_coherent_g2_is_one(self, mean):
        """Test that coherent g2 is 1."""
        assert analytic_gn(PhotonSource.coherent(mean), 2) == 1.0

    @pytest.mark.parametrize("mean", [0.01, 1.0, 7.5])
    def test_thermal_g2_is_two(self, mean):
        """Test that thermal g2 is 2."""
        assert analytic_gn(PhotonSource.thermal(mean), 2) == 2.0

    def test_fock_one_g2_is_zero(self):
        """Test that a single photon has g2 of 0."""
        assert analytic_gn(PhotonSource.fock(1), 2) == 0.0

    def test_thermal_g3(self):
        """Test that thermal g3 is 3 factorial."""
        assert analytic_gn(PhotonSource.thermal(1.0), 3) == pytest.approx(6.0)

    def test_zero_mean_is_undefined(self):
        """Test that g(n) of vacuum is undefined."""
        with pytest.raises(UndefinedEstimateError, match="undefined coherence"):
            analytic_gn(PhotonSource.coherent(0.0), 2)

    def test_order_below_two_rejected(self):
        """Test that orders below 2 are rejected."""
        with pytest.raises(ValueError):
            analytic_gn(PhotonSource.coherent(1.0), 1)

    def test_factorial_moment_examples(self):
        """Test factorial moments against hand values."""
        assert factorial_moment(PhotonSource.fock(2), 2) == pytest.approx(2.0)
        assert factorial_moment(PhotonSource.coherent(0.5), 2) == pytest.approx(0.25, rel=1e-10)
        assert factorial_moment(PhotonSource.thermal(2.0), 2) == pytest.approx(8.0, rel=1e-10)

    @pytest.mark.parametrize(
        "source",
        [
            PhotonSource.coherent(0.5),
            PhotonSource.coherent(3.0),
            PhotonSource.thermal(0.3),
            PhotonSource.thermal(2.0),
            PhotonSource.fock(1),
            PhotonSource.fock(2),
            PhotonSource.fock(3),
            PhotonSource.fock(4),
        ],
        ids=lambda s: s.describe(),
    )
    @pytest.mark.parametrize("order", [2, 3, 4])
    def test_closed_form_matches_summation(self, source, order):
        """Test that closed forms agree with summing the distribution."""
        brute = factorial_moment(source, order) / source.mean**order
        assert analytic_gn(source, order) == pytest.approx(brute, rel=1e-10, abs=1e-12)


class TestThinning:
    """Binomial thinning and mean scaling."""

    @pytest.mark.parametrize(
        "source",
        [PhotonSource.thermal(1.0), PhotonSource.coherent(2.0), PhotonSource.fock(3)],
        ids=lambda s: s.describe(),
    )
    @pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
    def test_thinning_preserves_gn(self, source, p):
        """Test that binomial thinning scales the mean and keeps g(n)."""
        thinned = thin(source, p)
        assert thinned.kind is SourceKind.EMPIRICAL
        assert thinned.mean == pytest.approx(p * source.mean, rel=1e-8)
        for order in (2, 3):
            assert analytic_gn(thinned, order) == pytest.approx(
                analytic_gn(source, order), rel=1e-8, abs=1e-10
            )

    @given(
        probs=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
        p=st.floats(0.05, 1.0),
    )
    @hyp_settings(max_examples=40, deadline=None)
    def test_thinning_invariance_property(self, probs, p):
        """Test that thinning any distribution keeps its g2."""
        total = math.fsum(probs)
        source = PhotonSource.empirical({k + 1: w / total for k, w in enumerate(probs)})
        thinned = thin(source, p)
        assert analytic_gn(thinned, 2) == pytest.approx(analytic_gn(source, 2), rel=1e-8)

    def test_invalid_probability(self):
        """Test that a thinning probability outside [0, 1] is rejected."""
        with pytest.raises(ConfigurationError):
            thin(PhotonSource.fock(2), 0.0)

    def test_scale_coherent_and_thermal(self):
        """Test that coherent and thermal sources rescale in closed form."""
        assert scale_to_mean(PhotonSource.coherent(1.0), 0.05) == PhotonSource.coherent(0.05)
        assert scale_to_mean(PhotonSource.thermal(3.0), 0.5) == PhotonSource.thermal(0.5)

    def test_scale_fock_thins(self):
        """Test that scaling a Fock state thins it."""
        scaled = scale_to_mean(PhotonSource.fock(2), 0.2)
        assert scaled.mean == pytest.approx(0.2)
        assert analytic_gn(scaled, 2) == pytest.approx(0.5)

    def test_scale_fock_to_own_mean_is_identity(self):
        """Test that scaling a Fock state to its own mean changes nothing."""
        assert scale_to_mean(PhotonSource.fock(1), 1.0) == PhotonSource.fock(1)

    def test_scale_beyond_mean_rejected(self):
        """Test that a Fock state cannot be scaled above its mean."""
        with pytest.raises(ConfigurationError, match="train.photons_per_pulse"):
            scale_to_mean(PhotonSource.fock(1), 2.0)

    def test_scale_to_zero(self):
        """Test that scaling to zero gives vacuum."""
        assert scale_to_mean(PhotonSource.fock(3), 0.0).mean == 0.0
