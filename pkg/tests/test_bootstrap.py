"""Tests for the block bootstrap."""

import math

import numpy as np
import pytest

from hbtsim.analysis.bootstrap import block_sums, bootstrap_ratio, ratio_of_means
from hbtsim.analysis.correlate import g2_on_window, g2_temporal, stderr_block_bootstrap
from hbtsim.analysis.oracle import oracle_click_probs
from hbtsim.core.models import (
    DetectorSpec,
    ExperimentConfig,
    Normalization,
    PhotonSource,
    PulseShape,
    PulseTrain,
    SplitterSpec,
    WindowGrid,
)
from hbtsim.engine.hbt import simulate


@pytest.fixture
def coherent_pairs():
    """Independent click pairs at 39% click probability (coherent, one photon per window)."""
    rng = np.random.default_rng(99)

    def make(n):
        x = rng.random(n) < 0.39
        y = rng.random(n) < 0.39
        return x, y

    return make


class TestBlockSums:
    """Per-block reductions."""

    def test_sums_cover_all_rows(self):
        """Test that block sums add up to the column totals."""
        columns = np.array([[1, 0], [1, 1], [0, 1], [1, 1], [0, 0]], dtype=bool)
        sums = block_sums(columns, 2)
        assert sums.rows.sum() == 5
        assert sums.singles.sum(axis=0).tolist() == [3, 3]
        assert sums.coincidences.sum() == 2

    def test_block_count_bounds(self):
        """Test that more blocks than rows are rejected."""
        with pytest.raises(ValueError):
            block_sums(np.ones((5, 2), dtype=bool), 6)

    def test_ratio_matches_estimator(self):
        """Test that the ratio of sums reproduces the temporal estimator."""
        x = np.array([1, 0, 1, 1, 0, 1, 0, 0, 1, 1], dtype=bool)
        y = np.array([1, 1, 0, 1, 0, 1, 1, 0, 0, 1], dtype=bool)
        columns = np.stack([x, y], axis=1)
        value = ratio_of_means(
            np.array(10), columns.sum(axis=0), np.array((x & y).sum())
        )
        assert float(value) == pytest.approx(g2_temporal(x, y).value)

    def test_ratio_undefined_is_nan(self):
        """Test that a zero singles count gives NaN."""
        assert math.isnan(float(ratio_of_means(np.array(4), np.array([0, 2]), np.array(0))))


class TestBootstrapRatio:
    """Standard errors."""

    def test_constant_series_is_degenerate(self):
        """Test that identical resamples give a degenerate zero stderr."""
        ones = np.ones(1000, dtype=bool)
        result = stderr_block_bootstrap([ones, ones], Normalization.FULL_N, blocks=50)
        assert result.stderr == 0.0
        assert result.degenerate

    def test_deterministic_given_seed(self, coherent_pairs):
        """Test that a fixed seed reproduces the bootstrap."""
        x, y = coherent_pairs(20_000)
        a = stderr_block_bootstrap([x, y], Normalization.FULL_N, blocks=100, seed=3)
        b = stderr_block_bootstrap([x, y], Normalization.FULL_N, blocks=100, seed=3)
        assert a == b

    def test_matches_estimator_stderr(self, coherent_pairs):
        """Test that the estimator reports the bootstrap stderr."""
        x, y = coherent_pairs(20_000)
        estimate = g2_temporal(x, y, blocks=100, resamples=200, seed=0)
        result = stderr_block_bootstrap([x, y], Normalization.FULL_N, blocks=100, resamples=200, seed=0)
        assert estimate.stderr == result.stderr

    def test_on_window_uses_mask(self, coherent_pairs):
        """Test that the on-window bootstrap resamples only masked windows."""
        x, y = coherent_pairs(20_000)
        mask = np.zeros(20_000, dtype=bool)
        mask[::2] = True
        estimate = g2_on_window(x & mask, y & mask, mask, blocks=50, seed=1)
        result = stderr_block_bootstrap(
            [x & mask, y & mask], Normalization.ON_WINDOW_M, blocks=50, mask=mask, seed=1
        )
        assert estimate.stderr == result.stderr

    def test_block_count_validated(self, coherent_pairs):
        """Test that block counts outside 10..N are rejected."""
        x, y = coherent_pairs(100)
        with pytest.raises(ValueError):
            stderr_block_bootstrap([x, y], Normalization.FULL_N, blocks=5)
        with pytest.raises(ValueError):
            stderr_block_bootstrap([x, y], Normalization.FULL_N, blocks=101)

    def test_quadrupling_windows_halves_stderr(self, coherent_pairs):
        """Test that four times the windows halves the stderr."""
        small = stderr_block_bootstrap(list(coherent_pairs(40_000)), Normalization.FULL_N, blocks=100, resamples=400)
        large = stderr_block_bootstrap(list(coherent_pairs(160_000)), Normalization.FULL_N, blocks=100, resamples=400)
        assert large.stderr / small.stderr == pytest.approx(0.5, rel=0.2)

    def test_stderr_tracks_binomial_scale(self, coherent_pairs):
        """For independent windows the spread is close to the delta-method value."""
        n = 100_000
        x, y = coherent_pairs(n)
        result = bootstrap_ratio(np.stack([x, y], axis=1), blocks=100, resamples=400, seed=0)
        p = 0.39
        # relative variance of C/(Sx Sy / N) for independent Bernoulli pairs
        expected = math.sqrt((1 - p * p) / (n * p * p) - 2 * (1 - p) / (n * p))
        assert result.stderr == pytest.approx(expected, rel=0.25)


class TestCoverage:
    """Bootstrap error bars against the exact click statistics."""

    def test_three_sigma_band_covers_oracle(self):
        """Test that 3-stderr bands around thermal g2 cover the oracle for at least 95 of 100 seeds."""
        source = PhotonSource.thermal(1.0)
        detectors = (DetectorSpec(), DetectorSpec())
        expected = oracle_click_probs(source, SplitterSpec(), detectors).g2_click
        assert expected == pytest.approx(1.5)

        covered = 0
        for seed in range(100):
            config = ExperimentConfig(
                source=source,
                train=PulseTrain(PulseShape.RECT, 1000.0, 1000.0, photons_per_pulse=1.0),
                grid=WindowGrid(1000.0, 20_000),
                detectors=detectors,
                splitter=SplitterSpec(),
                seed=seed,
            )
            series = simulate(config)
            estimate = g2_on_window(
                series.detector(0), series.detector(1), series.mask, blocks=100, seed=seed
            )
            if abs(estimate.value - expected) <= 3 * estimate.stderr:
                covered += 1
        assert covered >= 95
