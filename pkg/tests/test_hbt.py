"""Tests for the simulation engine."""

import math

import numpy as np
import pytest

from hbtsim.analysis.correlate import g2_on_window
from hbtsim.analysis.oracle import oracle_click_probs
from hbtsim.core.errors import ConfigurationError, UnsupportedConfigurationError
from hbtsim.core.models import (
    DetectorSpec,
    ExperimentConfig,
    MeasurementMode,
    ModeKind,
    PhotonSource,
    PulseShape,
    PulseTrain,
    SplitterSpec,
    WindowGrid,
)
from hbtsim.engine.hbt import series_to_spatial, simulate, simulate_spatial, spatial_to_series
from hbtsim.engine.streams import PULSES_PER_BLOCK, block_ranges, block_stream
from hbtsim.physics.envelope import window_weights
from hbtsim.physics.statistics import pmf

TAU = 1000.0


def make_config(
    source,
    ppp=None,
    period=10,
    windows=10_000,
    width=1.0,
    shape=PulseShape.RECT,
    detectors=None,
    splitter=None,
    mode=None,
    seed=1,
):
    splitter = splitter or SplitterSpec()
    return ExperimentConfig(
        source=source,
        train=PulseTrain(
            shape=shape,
            pulse_width=width * TAU,
            period=period * TAU,
            photons_per_pulse=source.mean if ppp is None else ppp,
        ),
        grid=WindowGrid(TAU, windows),
        detectors=detectors or tuple(DetectorSpec() for _ in range(splitter.port_count)),
        splitter=splitter,
        mode=mode or MeasurementMode(),
        seed=seed,
    )


class TestStreams:
    """Counter-based block streams."""

    def test_same_key_same_draws(self):
        """Test that one key always yields the same draws."""
        a = block_stream(3, 5).random(10)
        b = block_stream(3, 5).random(10)
        assert np.array_equal(a, b)

    def test_blocks_and_purposes_differ(self):
        """Test that other blocks and purposes give other draws."""
        base = block_stream(3, 5).random(10)
        assert not np.array_equal(base, block_stream(3, 6).random(10))
        assert not np.array_equal(base, block_stream(3, 5, purpose=1).random(10))

    def test_block_ranges(self):
        """Test that pulses are split into fixed-size blocks."""
        assert block_ranges(10, 4) == [(0, 4), (4, 8), (8, 10)]
        assert block_ranges(0) == [(0, 0)]


class TestSimulate:
    """Temporal-mode simulation."""

    def test_fock_one_never_coincides(self):
        """Test that a single photon never clicks both detectors."""
        series = simulate(make_config(PhotonSource.fock(1)))
        x, y = series.detector(0), series.detector(1)
        assert not np.any(x & y)
        assert np.array_equal((x | y), series.mask)

    def test_zero_photons_all_zero(self):
        """Test that an empty train produces no clicks."""
        series = simulate(make_config(PhotonSource.coherent(1.0), ppp=0.0))
        assert not series.clicks.any()
        assert series.m == 1000

    def test_identical_seeds_identical_series(self):
        """Test that one seed reproduces the series."""
        config = make_config(PhotonSource.thermal(0.3), windows=50_000)
        assert simulate(config) == simulate(config)

    def test_seed_changes_series(self):
        """Test that another seed gives another series."""
        a = simulate(make_config(PhotonSource.thermal(0.3), seed=1))
        b = simulate(make_config(PhotonSource.thermal(0.3), seed=2))
        assert not np.array_equal(a.clicks, b.clicks)

    def test_worker_count_does_not_matter(self):
        """Test that the worker count leaves the series unchanged."""
        config = make_config(PhotonSource.thermal(0.5), windows=10 * PULSES_PER_BLOCK * 3 + 70)
        serial = simulate(config, threads=1)
        parallel = simulate(config, threads=4)
        assert np.array_equal(serial.clicks, parallel.clicks)
        assert serial.fingerprint == parallel.fingerprint

    def test_off_windows_silent_without_dark_counts(self):
        """Test that off-windows stay silent without dark counts."""
        series = simulate(make_config(PhotonSource.thermal(2.0)))
        assert not series.clicks[:, ~series.mask].any()

    def test_off_window_dark_rate(self):
        """Test that off-window clicks follow the dark-count probability."""
        dark = 0.02
        config = make_config(
            PhotonSource.coherent(0.1),
            windows=200_000,
            detectors=(DetectorSpec(dark_prob=dark), DetectorSpec(dark_prob=dark)),
        )
        series = simulate(config)
        off = series.clicks[0, ~series.mask]
        sigma = math.sqrt(dark * (1 - dark) / off.size)
        assert abs(off.mean() - dark) < 4 * sigma

    def test_single_port_click_frequency(self):
        """Unit efficiency on one port clicks whenever the pulse is non-empty."""
        source = PhotonSource.thermal(0.7)
        config = make_config(source, windows=1_000_000, splitter=SplitterSpec((1.0,)))
        series = simulate(config)
        on = series.clicks[0, series.mask]
        p = 1.0 - pmf(source, 0)
        assert abs(on.mean() - p) < 4 * math.sqrt(p * (1 - p) / on.size)

    @pytest.mark.parametrize(
        "source",
        [PhotonSource.coherent(0.5), PhotonSource.thermal(2.0), PhotonSource.fock(2)],
        ids=lambda s: s.describe(),
    )
    def test_matches_oracle(self, source):
        """Test that click and coincidence frequencies agree with the oracle."""
        config = make_config(source, period=1, windows=1_000_000)
        series = simulate(config)
        oracle = oracle_click_probs(source, config.splitter, config.detectors)
        x, y = series.detector(0), series.detector(1)
        m = series.m
        for observed, p in (
            (x.mean(), oracle.click_probs[0]),
            (y.mean(), oracle.click_probs[1]),
            ((x & y).mean(), oracle.coincidence_probs[0, 1]),
        ):
            assert abs(observed - p) < 4 * math.sqrt(p * (1 - p) / m)

    def test_coherent_ports_independent(self):
        """Test that coherent light gives uncorrelated ports."""
        series = simulate(make_config(PhotonSource.coherent(1.0), period=1, windows=500_000))
        x = series.detector(0).astype(float)
        y = series.detector(1).astype(float)
        covariance = np.mean(x * y) - x.mean() * y.mean()
        sigma = x.std() * y.std() / math.sqrt(x.size)
        assert abs(covariance) < 4 * sigma

    def test_halving_efficiency_keeps_thermal_g2(self):
        """Test that halving both detector efficiencies leaves the thermal on-window g2 in place."""
        estimates = []
        for efficiency in (1.0, 0.5):
            detectors = (DetectorSpec(efficiency=efficiency), DetectorSpec(efficiency=efficiency))
            config = make_config(
                PhotonSource.thermal(0.05), period=1, windows=1_000_000, detectors=detectors, seed=5
            )
            series = simulate(config)
            estimates.append(g2_on_window(series.detector(0), series.detector(1), series.mask))
        full, half = estimates
        # click g2 moves from 1.952 to 1.976, far inside the noise at this intensity
        assert abs(full.value - half.value) < 3 * math.hypot(full.stderr, half.stderr)
        assert abs(half.value - 2.0) < 4 * half.stderr + 0.05

    def test_multi_window_pulse_keeps_photons_in_pulse(self):
        """Test that a photon spread over several windows clicks once per pulse."""
        config = make_config(PhotonSource.fock(1), width=4.0, period=20, windows=20_000)
        series = simulate(config)
        clicks = series.clicks.any(axis=0)
        per_pulse = np.bincount(
            series.weights.pulse_index[clicks], minlength=series.weights.pulse_count
        )
        assert np.all(per_pulse == 1)

    def test_spatial_mode_rejected(self):
        """Test that temporal simulation refuses a spatial mode."""
        config = make_config(PhotonSource.thermal(0.1), mode=MeasurementMode(ModeKind.SPATIAL_ENSEMBLE, pairs=2))
        with pytest.raises(UnsupportedConfigurationError):
            simulate(config)

    def test_detector_count_must_match_ports(self):
        """Test that the detector count must equal the splitter ports."""
        with pytest.raises(ConfigurationError, match="detectors"):
            make_config(PhotonSource.coherent(1.0), detectors=(DetectorSpec(),))


class TestSimulateSpatial:
    """Detector-pair ensembles."""

    def spatial_config(self, source, pairs, ppp=None, period=10, windows=20_000):
        return make_config(
            source,
            ppp=ppp,
            period=period,
            windows=windows,
            mode=MeasurementMode(ModeKind.SPATIAL_ENSEMBLE, pairs=pairs),
        )

    def test_fock_one_single_click_per_pulse(self):
        """Test that one photon clicks exactly one ensemble detector per pulse."""
        outcomes = simulate_spatial(self.spatial_config(PhotonSource.fock(1), pairs=8))
        per_pulse = outcomes.x.sum(axis=1) + outcomes.y.sum(axis=1)
        assert np.all(per_pulse == 1)
        assert outcomes.pairs == 8
        assert outcomes.pulses == 2000

    def test_multi_window_pulses_rejected(self):
        """Test that spatial ensembles need single-window pulses."""
        config = make_config(
            PhotonSource.thermal(0.1),
            width=2.0,
            mode=MeasurementMode(ModeKind.SPATIAL_ENSEMBLE, pairs=2),
        )
        with pytest.raises(UnsupportedConfigurationError, match="single-window"):
            simulate_spatial(config)

    def test_requires_spatial_mode(self):
        """Test that ensemble simulation needs the spatial mode."""
        with pytest.raises(UnsupportedConfigurationError):
            simulate_spatial(make_config(PhotonSource.thermal(0.1)))

    def test_deterministic(self):
        """Test that ensemble outcomes do not depend on the worker count."""
        config = self.spatial_config(PhotonSource.thermal(0.5), pairs=4)
        a, b = simulate_spatial(config), simulate_spatial(config, threads=3)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)

    def test_series_layout_round_trip(self):
        """Test that ensemble outcomes survive the channel layout."""
        config = self.spatial_config(PhotonSource.thermal(0.5), pairs=3)
        outcomes = simulate_spatial(config)
        series = spatial_to_series(outcomes, window_weights(config.train, config.grid))
        assert series.detector_count == 6
        assert not series.clicks[:, ~series.mask].any()
        back = series_to_spatial(series)
        assert np.array_equal(back.x, outcomes.x)
        assert np.array_equal(back.y, outcomes.y)
