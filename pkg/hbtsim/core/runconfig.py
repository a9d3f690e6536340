"""Flat ``key = value`` run configuration, sectioned by dots (``source.kind``).

Example::

    source.kind = thermal
    source.mean = 0.05
    train.shape = rect
    train.pulse_width = 1000
    train.period = 10000
    grid.window_duration = 1000
    grid.window_count = 1000000
    detectors.efficiency = 1.0
    seed = 7
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from hbtsim.core.errors import ConfigurationError
from hbtsim.core.models import (
    DetectorSpec,
    ExperimentConfig,
    MeasurementMode,
    ModeKind,
    PhotonSource,
    PulseShape,
    PulseTrain,
    SourceKind,
    SplitterSpec,
    WindowGrid,
)

logger = logging.getLogger(__name__)


class SweepAxis(str, Enum):
    """Parameters a sweep can step through."""
    PULSE_WIDTH = "pulse_width"
    R_I = "R_I"
    MEAN = "mean"
    EFFICIENCY = "efficiency"


ESTIMATORS = ("g2_temporal", "g2_on_window", "g3", "pulse_to_pulse", "spatial")

KNOWN_KEYS = frozenset({
    "source.kind", "source.mean", "source.m", "source.pmf",
    "train.shape", "train.pulse_width", "train.period", "train.photons_per_pulse", "train.offset",
    "grid.window_duration", "grid.window_count",
    "detectors.efficiency", "detectors.dark_prob", "detectors.labels",
    "splitter.port_probs",
    "mode", "mode.pairs", "mode.max_lag",
    "seed", "threads",
    "output.timetags", "output.summary", "output.table",
    "estimators",
    "bootstrap.blocks", "bootstrap.resamples", "bootstrap.seed",
    "timetag.resolution_ps", "timetag.overflow",
    "sweep.axis", "sweep.values",
})


@dataclass
class RunConfig:
    """
    Parsed run configuration.

    ``train`` and ``grid`` may be absent for commands that only need the source
    (the oracle); ``experiment()`` insists on them.
    """
    source: PhotonSource
    detectors: tuple[DetectorSpec, ...]
    splitter: SplitterSpec
    mode: MeasurementMode = field(default_factory=MeasurementMode)
    train: PulseTrain | None = None
    grid: WindowGrid | None = None
    seed: int = 0
    threads: int | None = None
    timetags_path: Path | None = None
    summary_path: Path | None = None
    table_path: Path | None = None
    estimators: tuple[str, ...] = ()
    bootstrap_blocks: int | None = None
    bootstrap_resamples: int | None = None
    bootstrap_seed: int | None = None
    timetag_resolution: int = 1
    timetag_overflow: str = "error"
    sweep_axis: SweepAxis | None = None
    sweep_values: tuple[float, ...] = ()

    def experiment(self) -> ExperimentConfig:
        """
        Assemble the ExperimentConfig for simulation and analysis.

        Raises:
            ConfigurationError: If the pulse train or window grid is missing
        """
        if self.train is None:
            raise ConfigurationError("train.pulse_width and train.period are required", field="train")
        if self.grid is None:
            raise ConfigurationError(
                "grid.window_duration and grid.window_count are required", field="grid"
            )
        return ExperimentConfig(
            source=self.source,
            train=self.train,
            grid=self.grid,
            detectors=self.detectors,
            splitter=self.splitter,
            mode=self.mode,
            seed=self.seed,
        )

    def with_overrides(self, seed: int | None = None, threads: int | None = None) -> "RunConfig":
        """Apply command-line overrides (they win over file values)."""
        updated = self
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigurationError("must be an unsigned 64-bit integer", field="seed")
            updated = replace(updated, seed=seed)
        if threads is not None:
            if threads < 1:
                raise ConfigurationError("must be >= 1", field="threads")
            updated = replace(updated, threads=threads)
        return updated

    def selected_estimators(self) -> tuple[str, ...]:
        """Requested estimators, or the defaults for the measurement mode."""
        if self.estimators:
            return self.estimators
        chosen = ["g2_temporal", "g2_on_window"]
        if len(self.detectors) >= 3:
            chosen.append("g3")
        if self.mode.kind is ModeKind.PULSE_TO_PULSE:
            chosen.append("pulse_to_pulse")
        if self.mode.kind is ModeKind.SPATIAL_ENSEMBLE:
            chosen.append("spatial")
        return tuple(chosen)

    def channel_count(self) -> int:
        """Channels in exported time tags: 2K for spatial ensembles, else one per detector."""
        if self.mode.kind is ModeKind.SPATIAL_ENSEMBLE:
            return 2 * self.mode.pairs
        return len(self.detectors)


def _number(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"not a number: {raw!r}", field=key) from None
    if not math.isfinite(value):
        raise ConfigurationError(f"must be finite, got {raw!r}", field=key)
    return value


def _integer(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        value = _number(key, raw)
        if not value.is_integer():
            raise ConfigurationError(f"not an integer: {raw!r}", field=key) from None
        return int(value)


def _numbers(key: str, raw: str) -> list[float]:
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if not items:
        raise ConfigurationError("needs at least one value", field=key)
    return [_number(key, item) for item in items]


def _choice(key: str, raw: str, enum: type[Enum]) -> Any:
    try:
        return enum(raw)
    except ValueError:
        allowed = ", ".join(str(member.value) for member in enum)  # type: ignore[attr-defined]
        raise ConfigurationError(f"must be one of {allowed}, got {raw!r}", field=key) from None


def _pmf(key: str, raw: str) -> PhotonSource:
    pairs = []
    for item in raw.split(","):
        if not item.strip():
            continue
        count, sep, prob = item.partition(":")
        if not sep:
            raise ConfigurationError(f"expected count:probability, got {item.strip()!r}", field=key)
        pairs.append((_integer(key, count.strip()), _number(key, prob.strip())))
    return PhotonSource.empirical(pairs)


def parse_pairs(text: str, origin: str = "<config>") -> dict[str, str]:
    """
    Split configuration text into raw key/value strings.

    Blank lines and ``#`` comments are ignored. Unknown or repeated keys are errors.
    """
    values: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"{origin}:{number}: expected key = value, got {line.strip()!r}")
        if key not in KNOWN_KEYS:
            raise ConfigurationError(f"{origin}:{number}: unknown key", field=key)
        if key in values:
            raise ConfigurationError(f"{origin}:{number}: key given twice", field=key)
        values[key] = value.strip()
    return values


def _source(values: dict[str, str]) -> PhotonSource:
    if "source.kind" not in values:
        raise ConfigurationError("is required", field="source.kind")
    kind = _choice("source.kind", values["source.kind"], SourceKind)

    if kind is SourceKind.FOCK:
        if "source.m" not in values:
            raise ConfigurationError("is required for fock sources", field="source.m")
        return PhotonSource.fock(_integer("source.m", values["source.m"]))
    if kind is SourceKind.EMPIRICAL:
        if "source.pmf" not in values:
            raise ConfigurationError("is required for empirical sources", field="source.pmf")
        return _pmf("source.pmf", values["source.pmf"])

    if "source.mean" not in values:
        raise ConfigurationError(f"is required for {kind.value} sources", field="source.mean")
    mean = _number("source.mean", values["source.mean"])
    return PhotonSource.coherent(mean) if kind is SourceKind.COHERENT else PhotonSource.thermal(mean)


def _broadcast(key: str, items: list, count: int) -> list:
    if len(items) == 1:
        return items * count
    if len(items) != count:
        raise ConfigurationError(f"expected 1 or {count} values, got {len(items)}", field=key)
    return items


def _detectors(values: dict[str, str], ports: int) -> tuple[DetectorSpec, ...]:
    efficiency = _broadcast(
        "detectors.efficiency", _numbers("detectors.efficiency", values.get("detectors.efficiency", "1")), ports
    )
    dark = _broadcast(
        "detectors.dark_prob", _numbers("detectors.dark_prob", values.get("detectors.dark_prob", "0")), ports
    )
    if "detectors.labels" in values:
        labels = [label.strip() for label in values["detectors.labels"].split(",")]
        if len(labels) != ports:
            raise ConfigurationError(f"expected {ports} labels", field="detectors.labels")
    else:
        labels = [chr(ord("A") + i) if i < 26 else f"D{i}" for i in range(ports)]
    return tuple(DetectorSpec(efficiency=e, dark_prob=d, label=lab) for e, d, lab in zip(efficiency, dark, labels))


def _optional(values: dict[str, str], key: str, convert: Callable[[str, str], Any]) -> Any:
    return convert(key, values[key]) if key in values else None


def build_run_config(values: dict[str, str]) -> RunConfig:
    """
    Turn raw key/value strings into a validated RunConfig.

    Raises:
        ConfigurationError: Naming the offending key
    """
    source = _source(values)

    mode_kind = _choice("mode", values.get("mode", "temporal"), ModeKind)
    mode = MeasurementMode(
        kind=mode_kind,
        pairs=_integer("mode.pairs", values.get("mode.pairs", "1")),
        max_lag=_integer("mode.max_lag", values.get("mode.max_lag", "1")),
    )

    if "splitter.port_probs" in values:
        splitter = SplitterSpec(tuple(_numbers("splitter.port_probs", values["splitter.port_probs"])))
    else:
        splitter = SplitterSpec()
    detectors = _detectors(values, splitter.port_count)

    train = None
    if "train.pulse_width" in values or "train.period" in values:
        for key in ("train.pulse_width", "train.period"):
            if key not in values:
                raise ConfigurationError("is required", field=key)
        offset_raw = values.get("train.offset", "auto")
        ppp = _optional(values, "train.photons_per_pulse", _number)
        train = PulseTrain(
            shape=_choice("train.shape", values.get("train.shape", "rect"), PulseShape),
            pulse_width=_number("train.pulse_width", values["train.pulse_width"]),
            period=_number("train.period", values["train.period"]),
            photons_per_pulse=source.mean if ppp is None else ppp,
            offset=None if offset_raw == "auto" else _number("train.offset", offset_raw),
        )

    grid = None
    if "grid.window_duration" in values or "grid.window_count" in values:
        for key in ("grid.window_duration", "grid.window_count"):
            if key not in values:
                raise ConfigurationError("is required", field=key)
        grid = WindowGrid(
            window_duration=_number("grid.window_duration", values["grid.window_duration"]),
            window_count=_integer("grid.window_count", values["grid.window_count"]),
        )

    estimators: tuple[str, ...] = ()
    if "estimators" in values:
        estimators = tuple(item.strip() for item in values["estimators"].split(",") if item.strip())
        unknown = [name for name in estimators if name not in ESTIMATORS]
        if unknown or not estimators:
            raise ConfigurationError(
                f"unknown estimator(s) {unknown}; choose from {', '.join(ESTIMATORS)}",
                field="estimators",
            )

    blocks = _optional(values, "bootstrap.blocks", _integer)
    if blocks is not None and blocks < 10:
        raise ConfigurationError("must be >= 10", field="bootstrap.blocks")
    resamples = _optional(values, "bootstrap.resamples", _integer)
    if resamples is not None and resamples < 2:
        raise ConfigurationError("must be >= 2", field="bootstrap.resamples")

    resolution = _integer("timetag.resolution_ps", values.get("timetag.resolution_ps", "1"))
    if resolution < 1:
        raise ConfigurationError("must be >= 1", field="timetag.resolution_ps")
    overflow = values.get("timetag.overflow", "error")
    if overflow not in ("error", "discard"):
        raise ConfigurationError("must be 'error' or 'discard'", field="timetag.overflow")

    sweep_axis = None
    sweep_values: tuple[float, ...] = ()
    if "sweep.axis" in values or "sweep.values" in values:
        if "sweep.axis" not in values:
            raise ConfigurationError("is required with sweep.values", field="sweep.axis")
        sweep_axis = _choice("sweep.axis", values["sweep.axis"], SweepAxis)
        sweep_values = tuple(_numbers("sweep.values", values.get("sweep.values", "")))

    seed = _integer("seed", values.get("seed", "0"))
    threads = _optional(values, "threads", _integer)

    run = RunConfig(
        source=source,
        detectors=detectors,
        splitter=splitter,
        mode=mode,
        train=train,
        grid=grid,
        timetags_path=_optional(values, "output.timetags", lambda _, raw: Path(raw)),
        summary_path=_optional(values, "output.summary", lambda _, raw: Path(raw)),
        table_path=_optional(values, "output.table", lambda _, raw: Path(raw)),
        estimators=estimators,
        bootstrap_blocks=blocks,
        bootstrap_resamples=resamples,
        bootstrap_seed=_optional(values, "bootstrap.seed", _integer),
        timetag_resolution=resolution,
        timetag_overflow=overflow,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
    )
    return run.with_overrides(seed=seed, threads=threads)


def parse_run_config(text: str, overrides: list[str] | None = None, origin: str = "<config>") -> RunConfig:
    """
    Parse configuration text, then apply ``key=value`` overrides.

    Args:
        text: Configuration file contents
        overrides: Extra ``key=value`` items that replace file values
        origin: Name used in error messages

    Returns:
        Validated RunConfig
    """
    values = parse_pairs(text, origin)
    for item in overrides or []:
        values.update(parse_pairs(item, "--set"))
    return build_run_config(values)


def load_run_config(path: str | Path | None, overrides: list[str] | None = None) -> RunConfig:
    """
    Read and parse a configuration file.

    Raises:
        ConfigurationError: If the file is missing or unreadable, or a value is invalid
    """
    if path is None:
        return parse_run_config("", overrides)
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    logger.debug("loaded run config from %s", path)
    return parse_run_config(text, overrides, origin=str(path))
