"""Measurement workflow: simulate, export, analyze, compare with the oracle and sweep."""

import json
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from tqdm import tqdm

from hbtsim.analysis.correlate import (
    classify_g2,
    g2_on_window,
    g2_spatial,
    g2_temporal,
    gn_product,
    pulse_correlation_curve,
    spatial_intensity,
)
from hbtsim.analysis.oracle import expected_temporal_g2, oracle_click_probs
from hbtsim.core.config import settings
from hbtsim.core.errors import ConfigurationError, HbtsimError, UnsupportedConfigurationError
from hbtsim.core.models import ClickSeries, CorrelationEstimate, ModeKind, WindowWeights
from hbtsim.core.runconfig import RunConfig, SweepAxis
from hbtsim.core.tracing import TracingContext, fingerprint
from hbtsim.engine.hbt import series_to_spatial, simulate, simulate_spatial, spatial_to_series
from hbtsim.io.timetag import (
    bin_to_windows,
    export_series,
    format_csv,
    parse_binary,
    parse_csv,
    write_binary,
)
from hbtsim.physics.envelope import window_weights
from hbtsim.physics.statistics import scale_to_mean

logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    "estimator", "value", "stderr", "normalization", "N", "M", "R_I",
    "coincidences", "singles_a", "singles_b", "reason",
]
_COUNT_COLUMNS = ["N", "M", "coincidences", "singles_a", "singles_b"]


def is_csv(path: Path) -> bool:
    return path.suffix.lower() == ".csv"


def write_table(frame: pd.DataFrame, path: Path | None, fmt: str = "csv") -> str:
    """
    Render a result table as CSV (undefined values as ``NA``) or JSON records.

    Writes to ``path`` when given and always returns the rendered text.
    """
    if fmt == "json":
        text = frame.to_json(orient="records", indent=2) + "\n"
    else:
        text = frame.to_csv(index=False, na_rep="NA", lineterminator="\n")
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


class MeasurementWorkflow:
    """
    Orchestrates one HBT measurement from a RunConfig.

    Steps:
    1. simulate: ClickSeries for the configured mode (spatial ensembles are
       laid out over 2K channels)
    2. export / read: TTG2 or CSV time tags, binned back onto the window grid
    3. analyze: table of estimator rows side by side with R_I
    4. sweep: one analyzed row per axis value
    """

    def __init__(self, run: RunConfig):
        self.run = run
        self._weights: WindowWeights | None = None

    @property
    def weights(self) -> WindowWeights:
        """Envelope weights of the configured train and grid."""
        if self._weights is None:
            config = self.run.experiment()
            self._weights = window_weights(config.train, config.grid)
        return self._weights

    @property
    def estimator_options(self) -> dict[str, Any]:
        return {
            "blocks": self.run.bootstrap_blocks,
            "resamples": self.run.bootstrap_resamples,
            "seed": self.run.bootstrap_seed,
        }

    # -- simulation and time tags -------------------------------------------

    def simulate(self) -> ClickSeries:
        """Simulate the configured measurement as a ClickSeries."""
        config = self.run.experiment()
        if config.mode.kind is ModeKind.SPATIAL_ENSEMBLE:
            outcomes = simulate_spatial(config, threads=self.run.threads)
            return spatial_to_series(outcomes, self.weights)
        return simulate(config, threads=self.run.threads)

    def write_timetags(self, series: ClickSeries, path: Path) -> tuple[int, int]:
        """
        Export clicks as time tags; CSV for a ``.csv`` suffix, TTG2 otherwise.

        Returns:
            Tuple of (records written, bytes written)
        """
        config = self.run.experiment()
        header, records = export_series(series, config.grid, self.run.timetag_resolution)
        path.parent.mkdir(parents=True, exist_ok=True)
        if is_csv(path):
            payload = format_csv(records, header.resolution).encode("utf-8")
            path.write_bytes(payload)
            return int(records.size), len(payload)
        with path.open("wb") as sink:
            written = write_binary(records, header, sink)
        return int(records.size), written

    def read_timetags(self, path: Path) -> ClickSeries:
        """
        Read a time-tag file and bin it onto the configured window grid.

        Raises:
            ConfigurationError: If the file's channel count differs from the configuration
            TimeTagFormatError: If the file is malformed
        """
        expected = self.run.channel_count()
        data = path.read_bytes()
        if is_csv(path):
            records = parse_csv(data.decode("utf-8"))
            resolution = 1
            channels = int(records["channel"].max()) + 1 if records.size else expected
            if channels > expected:
                raise ConfigurationError(
                    f"{path} uses channel {channels - 1}, configuration has {expected} channels",
                    field="detectors",
                )
        else:
            header, records = parse_binary(data)
            resolution = header.resolution
            if header.channel_count != expected:
                raise ConfigurationError(
                    f"{path} has {header.channel_count} channels, configuration expects {expected}",
                    field="detectors",
                )

        config = self.run.experiment()
        return bin_to_windows(
            records,
            config.grid,
            self.weights,
            channel_map=list(range(expected)),
            resolution=resolution,
            on_overflow=self.run.timetag_overflow,  # type: ignore[arg-type]
            fingerprint=path.name,
        )

    def summarize(self, series: ClickSeries, records: int, nbytes: int, path: Path) -> dict[str, Any]:
        """JSON-ready summary of a simulated run."""
        coincidences = None
        if series.detector_count >= 2:
            coincidences = int(np.count_nonzero(series.detector(0) & series.detector(1)))
        summary = {
            "seed": self.run.seed,
            "fingerprint": series.fingerprint,
            "mode": self.run.mode.describe(),
            "N": series.n,
            "M": series.m,
            "R_I": series.r_i,
            "pulses": series.weights.pulse_count,
            "click_counts": series.click_counts(),
            "coincidences": coincidences,
            "timetags": str(path),
            "records": records,
            "bytes": nbytes,
            "resolution_ps": self.run.timetag_resolution,
            "channel_count": series.detector_count,
        }
        if self.run.mode.kind is ModeKind.SPATIAL_ENSEMBLE and series.m:
            # fraction of the 2K channels that clicked, per on-window
            intensity = spatial_intensity(series.clicks[:, series.mask])
            summary["spatial_intensity"] = {
                "mean": float(intensity.mean()),
                "max": float(intensity.max()),
            }
        return summary

    def run_simulate(self, out: Path | None = None) -> dict[str, Any]:
        """
        Simulate, write the time-tag file and its JSON summary.

        Returns:
            The summary, including the trace context
        """
        path = out or self.run.timetags_path or settings.output_dir / "timetags.ttg2"
        summary_path = self.run.summary_path or path.with_name(path.stem + ".summary.json")
        config = self.run.experiment()

        with TracingContext("simulate", config_fingerprint=fingerprint(config.canonical())) as ctx:
            series = self.simulate()
            records, nbytes = self.write_timetags(series, path)
            ctx.add_metadata("records", records)

        summary = self.summarize(series, records, nbytes, path)
        summary["summary"] = str(summary_path)
        summary["trace"] = ctx.get_context()
        summary_path.parent.mkdir(parents=True, exist_ok=True)
        summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        return summary

    # -- analysis -------------------------------------------------------------

    def _estimate_row(self, name: str, compute, series: ClickSeries) -> dict[str, Any]:
        row: dict[str, Any] = {
            "estimator": name,
            "value": None,
            "stderr": None,
            "normalization": None,
            "N": series.n,
            "M": series.m,
            "R_I": series.r_i,
            "coincidences": None,
            "singles_a": None,
            "singles_b": None,
            "reason": "",
        }
        try:
            estimate: CorrelationEstimate = compute()
        except ConfigurationError:
            raise
        except HbtsimError as exc:
            row["reason"] = str(exc)
            return row

        row["_estimate"] = estimate
        row.update(
            value=estimate.value,
            stderr=None if math.isnan(estimate.stderr) else estimate.stderr,
            normalization=estimate.normalization.value,
            N=estimate.n,
            M=estimate.m,
            coincidences=estimate.coincidences,
            singles_a=estimate.singles[0],
            singles_b=estimate.singles[1],
        )
        return row

    def estimate_rows(self, series: ClickSeries) -> list[dict[str, Any]]:
        """
        Evaluate every selected estimator on a ClickSeries.

        Undefined estimates become rows with empty values and a ``reason``.
        """
        options = self.estimator_options
        selected = self.run.selected_estimators()
        if series.detector_count < 2:
            raise UnsupportedConfigurationError("correlations need two detectors", field="detectors")
        x, y = series.detector(0), series.detector(1)
        rows: list[dict[str, Any]] = []

        temporal = None
        if "g2_temporal" in selected:
            rows.append(self._estimate_row("g2_temporal", lambda: g2_temporal(x, y, **options), series))
            temporal = rows[-1]
        if "g2_on_window" in selected:
            rows.append(
                self._estimate_row(
                    "g2_on_window", lambda: g2_on_window(x, y, series.mask, **options), series
                )
            )
        if temporal is not None:
            product = dict(temporal, estimator="g2_temporal_x_R_I", normalization="derived")
            if temporal["value"] is not None:
                product["value"] = temporal["value"] * series.r_i
                if temporal["stderr"] is not None:
                    product["stderr"] = temporal["stderr"] * series.r_i
            rows.append(product)

        if "g3" in selected:
            if series.detector_count < 3:
                raise UnsupportedConfigurationError("g3 needs three detectors", field="estimators")
            rows.append(
                self._estimate_row(
                    "g3",
                    lambda: gn_product(
                        [series.detector(i) for i in range(3)], mask=series.mask, **options
                    ),
                    series,
                )
            )

        if "pulse_to_pulse" in selected:
            per_pulse = np.unique(series.weights.windows_per_pulse())
            if per_pulse.size != 1:
                raise UnsupportedConfigurationError(
                    "pulse-to-pulse analysis needs the same window count for every pulse",
                    field="train",
                )
            curve: list[CorrelationEstimate] | HbtsimError
            try:
                curve = pulse_correlation_curve(
                    x, y, series.mask, self.run.mode.max_lag, int(per_pulse[0]), **options
                )
            except ConfigurationError:
                raise
            except HbtsimError as exc:
                curve = exc

            def lagged(lag: int) -> CorrelationEstimate:
                if isinstance(curve, HbtsimError):
                    raise curve
                return curve[lag]

            for lag in range(self.run.mode.max_lag + 1):
                rows.append(
                    self._estimate_row(f"g2_pulse_lag_{lag}", lambda lag=lag: lagged(lag), series)
                )

        if "spatial" in selected:
            rows.append(
                self._estimate_row(
                    "g2_spatial", lambda: g2_spatial(series_to_spatial(series), **options), series
                )
            )
        return rows

    def analyze(self, series: ClickSeries) -> pd.DataFrame:
        """Estimator table with the columns of TABLE_COLUMNS."""
        frame = pd.DataFrame(self.estimate_rows(series), columns=TABLE_COLUMNS)
        for column in _COUNT_COLUMNS:
            frame[column] = frame[column].astype("Int64")
        frame["value"] = frame["value"].astype("float64")
        frame["stderr"] = frame["stderr"].astype("float64")
        return frame

    def run_analyze(self, path: Path) -> pd.DataFrame:
        """Read a time-tag file and analyze it."""
        with TracingContext("analyze", config_fingerprint=fingerprint(path.name)) as ctx:
            series = self.read_timetags(path)
            ctx.add_metadata("collision_count", series.collision_count)
            frame = self.analyze(series)
        if series.collision_count:
            logger.warning("%d same-window collisions collapsed while binning", series.collision_count)
        return frame

    # -- oracle ---------------------------------------------------------------

    def oracle(self) -> dict[str, Any]:
        """Exact click probabilities for one on-window of the configured arrangement."""
        per_pulse = self.run.source
        if self.run.train is not None:
            per_pulse = scale_to_mean(self.run.source, self.run.train.photons_per_pulse)

        with TracingContext("oracle") as ctx:
            result = oracle_click_probs(per_pulse, self.run.splitter, self.run.detectors)

        payload: dict[str, Any] = {
            "source": per_pulse.describe(),
            "port_probs": list(self.run.splitter.port_probs),
            "efficiencies": [d.efficiency for d in self.run.detectors],
            **result.to_dict(),
        }
        if self.run.train is not None and self.run.grid is not None:
            weights = self.weights
            payload["R_I"] = weights.r_i
            if np.all(weights.windows_per_pulse() == 1):
                payload["expected_g2_temporal"] = expected_temporal_g2(result, weights.r_i)
        payload["trace"] = ctx.get_context()
        return payload

    # -- sweeps ---------------------------------------------------------------

    def sweep_config(self, value: float) -> RunConfig:
        """RunConfig with the sweep axis set to ``value``."""
        run = self.run
        axis = run.sweep_axis
        train = run.experiment().train

        if axis is SweepAxis.PULSE_WIDTH:
            return replace(run, train=replace(train, pulse_width=value))
        if axis is SweepAxis.MEAN:
            return replace(run, train=replace(train, photons_per_pulse=value))
        if axis is SweepAxis.EFFICIENCY:
            return replace(
                run, detectors=tuple(replace(d, efficiency=value) for d in run.detectors)
            )
        if axis is SweepAxis.R_I:
            if not 0 < value <= 1:
                raise ConfigurationError(f"R_I must be in (0, 1], got {value}", field="sweep.values")
            per_pulse = np.unique(self.weights.windows_per_pulse())
            if per_pulse.size != 1:
                raise UnsupportedConfigurationError(
                    "an R_I sweep needs the same window count for every pulse", field="sweep.axis"
                )
            windows = int(per_pulse[0]) / value
            if not math.isclose(windows, round(windows), rel_tol=1e-9):
                raise ConfigurationError(
                    f"R_I = {value} needs {windows:.6g} windows per period; "
                    f"choose {int(per_pulse[0])}/R_I to be a whole number",
                    field="sweep.values",
                )
            period = round(windows) * run.grid.window_duration  # type: ignore[union-attr]
            return replace(run, train=replace(train, period=period))
        raise ConfigurationError("no sweep axis configured", field="sweep.axis")

    def sweep_row(self, value: float) -> dict[str, Any]:
        """Simulate and analyze one sweep point."""
        step = MeasurementWorkflow(self.sweep_config(value))
        series = step.simulate()
        rows = {row["estimator"]: row for row in step.estimate_rows(series)}

        def pick(name: str, key: str) -> Any:
            row = rows.get(name)
            return None if row is None else row[key]

        record: dict[str, Any] = {
            "axis": self.run.sweep_axis.value,  # type: ignore[union-attr]
            "value": value,
            "N": series.n,
            "M": series.m,
            "R_I": series.r_i,
            "g2_temporal": pick("g2_temporal", "value"),
            "g2_temporal_stderr": pick("g2_temporal", "stderr"),
            "g2_on_window": pick("g2_on_window", "value"),
            "g2_on_window_stderr": pick("g2_on_window", "stderr"),
            "g2_temporal_x_R_I": pick("g2_temporal_x_R_I", "value"),
        }
        if "g2_spatial" in rows:
            record["g2_spatial"] = pick("g2_spatial", "value")
            record["g2_spatial_stderr"] = pick("g2_spatial", "stderr")

        temporal = rows.get("g2_temporal", {}).get("_estimate")
        record["classification"] = None if temporal is None else classify_g2(temporal)
        return record

    def run_sweep(self) -> pd.DataFrame:
        """
        One analyzed row per sweep value.

        Raises:
            ConfigurationError: If no axis or an empty value list is configured
        """
        if self.run.sweep_axis is None or not self.run.sweep_values:
            raise ConfigurationError("needs sweep.axis and at least one value", field="sweep.values")

        with TracingContext("sweep") as ctx:
            records = [
                self.sweep_row(value)
                for value in tqdm(
                    self.run.sweep_values,
                    desc=f"sweep {self.run.sweep_axis.value}",
                    disable=not settings.show_progress,
                )
            ]
            ctx.add_metadata("rows", len(records))
        frame = pd.DataFrame(records)
        for column in ("N", "M"):
            frame[column] = frame[column].astype("Int64")
        return frame
