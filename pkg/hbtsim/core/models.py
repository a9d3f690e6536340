"""Data models shared by the simulation, analysis and I/O layers.

Times are picoseconds throughout.
"""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt

from hbtsim.core.errors import ConfigurationError

PMF_SUM_TOLERANCE = 1e-9
SPLITTER_SUM_TOLERANCE = 1e-12


class SourceKind(str, Enum):
    """Photon-number distribution families."""
    COHERENT = "coherent"
    THERMAL = "thermal"
    FOCK = "fock"
    EMPIRICAL = "empirical"


class PulseShape(str, Enum):
    """Intensity envelope shapes."""
    RECT = "rect"
    GAUSSIAN = "gaussian"
    SECH2 = "sech2"


class ModeKind(str, Enum):
    """Measurement schemes."""
    TEMPORAL = "temporal"
    SPATIAL_ENSEMBLE = "spatial"
    PULSE_TO_PULSE = "pulse_to_pulse"


class Normalization(str, Enum):
    """How an estimator normalizes its averages."""
    FULL_N = "full_n"
    ON_WINDOW_M = "on_window_m"
    SPATIAL_POOLED = "spatial_pooled"
    PULSE_LAG = "pulse_lag"


@dataclass(frozen=True)
class PhotonSource:
    """
    Photon-number statistics of a single temporal mode.

    Use the constructors ``coherent``, ``thermal``, ``fock`` and ``empirical``;
    ``mu`` is only meaningful for coherent/thermal, ``m`` for Fock and
    ``table`` for empirical sources.
    """
    kind: SourceKind
    mu: float = 0.0
    m: int = 0
    table: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind in (SourceKind.COHERENT, SourceKind.THERMAL):
            if not math.isfinite(self.mu) or self.mu < 0:
                raise ConfigurationError(
                    f"mean must be finite and non-negative, got {self.mu}", field="source.mean"
                )
        elif self.kind is SourceKind.FOCK:
            if self.m < 0:
                raise ConfigurationError(f"m must be >= 0, got {self.m}", field="source.m")
        elif self.kind is SourceKind.EMPIRICAL:
            if not self.table:
                raise ConfigurationError("empirical pmf is empty", field="source.pmf")
            counts = [k for k, _ in self.table]
            if any(k < 0 for k in counts) or len(set(counts)) != len(counts):
                raise ConfigurationError(
                    "empirical counts must be distinct non-negative integers", field="source.pmf"
                )
            probs = [p for _, p in self.table]
            if any(p < 0 or not math.isfinite(p) for p in probs):
                raise ConfigurationError("empirical probabilities must be >= 0", field="source.pmf")
            if abs(math.fsum(probs) - 1.0) > PMF_SUM_TOLERANCE:
                raise ConfigurationError(
                    f"empirical probabilities sum to {math.fsum(probs)!r}, expected 1",
                    field="source.pmf",
                )

    @classmethod
    def coherent(cls, mean: float) -> "PhotonSource":
        return cls(SourceKind.COHERENT, mu=float(mean))

    @classmethod
    def thermal(cls, mean: float) -> "PhotonSource":
        return cls(SourceKind.THERMAL, mu=float(mean))

    @classmethod
    def fock(cls, m: int) -> "PhotonSource":
        return cls(SourceKind.FOCK, m=int(m))

    @classmethod
    def empirical(cls, pmf: Any) -> "PhotonSource":
        """Build from a mapping or an iterable of (count, probability) pairs."""
        items = pmf.items() if isinstance(pmf, dict) else pmf
        table = tuple(sorted((int(k), float(p)) for k, p in items))
        return cls(SourceKind.EMPIRICAL, table=table)

    @property
    def mean(self) -> float:
        """Mean photon number."""
        if self.kind in (SourceKind.COHERENT, SourceKind.THERMAL):
            return self.mu
        if self.kind is SourceKind.FOCK:
            return float(self.m)
        return math.fsum(k * p for k, p in self.table)

    def describe(self) -> str:
        if self.kind is SourceKind.FOCK:
            return f"fock(m={self.m})"
        if self.kind is SourceKind.EMPIRICAL:
            return "empirical(" + ",".join(f"{k}:{p!r}" for k, p in self.table) + ")"
        return f"{self.kind.value}(mean={self.mu!r})"


@dataclass(frozen=True)
class PulseTrain:
    """
    Deterministic pulse-train intensity envelope.

    ``pulse_width`` is the intensity FWHM for Gaussian/Sech2 and the full width
    for Rect. ``offset`` is the pulse-center position inside the first period;
    ``None`` centers each pulse on a block of whole detector windows.
    """
    shape: PulseShape
    pulse_width: float
    period: float
    photons_per_pulse: float = 1.0
    offset: float | None = None

    def __post_init__(self) -> None:
        if not self.pulse_width > 0:
            raise ConfigurationError("must be > 0", field="train.pulse_width")
        if not self.period > 0:
            raise ConfigurationError("must be > 0", field="train.period")
        if not math.isfinite(self.photons_per_pulse) or self.photons_per_pulse < 0:
            raise ConfigurationError("must be finite and >= 0", field="train.photons_per_pulse")
        if self.offset is not None and not 0 <= self.offset < self.period:
            raise ConfigurationError("must satisfy 0 <= offset < period", field="train.offset")


@dataclass(frozen=True)
class WindowGrid:
    """Detector reset windows [i*tau, (i+1)*tau) for i in 0..N-1."""
    window_duration: float
    window_count: int

    def __post_init__(self) -> None:
        if not self.window_duration > 0:
            raise ConfigurationError("must be > 0", field="grid.window_duration")
        if self.window_count < 1:
            raise ConfigurationError("must be >= 1", field="grid.window_count")

    @property
    def span(self) -> float:
        """Total time covered by the grid."""
        return self.window_duration * self.window_count


@dataclass(frozen=True, eq=False)
class WindowWeights:
    """
    Per-window mean photon numbers and the on/off mask.

    ``pulse_index[i]`` is the pulse owning on-window ``i`` and -1 for off-windows.
    """
    weights: npt.NDArray[np.float64]
    mask: npt.NDArray[np.bool_]
    pulse_index: npt.NDArray[np.int64]
    pulse_count: int

    @property
    def n(self) -> int:
        return int(self.weights.size)

    @property
    def m(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def r_i(self) -> float:
        return self.m / self.n

    def windows_per_pulse(self) -> npt.NDArray[np.int64]:
        """Number of on-windows of every pulse."""
        owned = self.pulse_index[self.mask]
        return np.bincount(owned, minlength=self.pulse_count)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WindowWeights):
            return NotImplemented
        return (
            self.pulse_count == other.pulse_count
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.pulse_index, other.pulse_index)
        )


@dataclass(frozen=True)
class DetectorSpec:
    """Single-click detector: one click at most per window."""
    efficiency: float = 1.0
    dark_prob: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigurationError("must be in [0, 1]", field="detectors.efficiency")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ConfigurationError("must be in [0, 1)", field="detectors.dark_prob")


@dataclass(frozen=True)
class SplitterSpec:
    """Lossless multiport splitter given by per-port routing probabilities."""
    port_probs: tuple[float, ...] = (0.5, 0.5)

    def __post_init__(self) -> None:
        if not self.port_probs:
            raise ConfigurationError("needs at least one port", field="splitter.port_probs")
        if any(p < 0 or not math.isfinite(p) for p in self.port_probs):
            raise ConfigurationError("probabilities must be >= 0", field="splitter.port_probs")
        if abs(math.fsum(self.port_probs) - 1.0) > SPLITTER_SUM_TOLERANCE:
            raise ConfigurationError(
                f"probabilities sum to {math.fsum(self.port_probs)!r}, expected 1",
                field="splitter.port_probs",
            )

    @classmethod
    def balanced(cls, ports: int) -> "SplitterSpec":
        return cls(tuple([1.0 / ports] * ports))

    @property
    def port_count(self) -> int:
        return len(self.port_probs)


@dataclass(frozen=True)
class MeasurementMode:
    """Measurement scheme: temporal averaging, detector-pair ensemble or pulse-to-pulse."""
    kind: ModeKind = ModeKind.TEMPORAL
    pairs: int = 1
    max_lag: int = 1

    def __post_init__(self) -> None:
        if self.pairs < 1:
            raise ConfigurationError("must be >= 1", field="mode.pairs")
        if self.max_lag < 0:
            raise ConfigurationError("must be >= 0", field="mode.max_lag")

    def describe(self) -> str:
        if self.kind is ModeKind.SPATIAL_ENSEMBLE:
            return f"spatial(pairs={self.pairs})"
        if self.kind is ModeKind.PULSE_TO_PULSE:
            return f"pulse_to_pulse(max_lag={self.max_lag})"
        return "temporal"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to simulate one HBT measurement."""
    source: "PhotonSource"
    train: PulseTrain
    grid: WindowGrid
    detectors: tuple[DetectorSpec, ...] = (DetectorSpec(label="A"), DetectorSpec(label="B"))
    splitter: SplitterSpec = field(default_factory=SplitterSpec)
    mode: MeasurementMode = field(default_factory=MeasurementMode)
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.detectors) != self.splitter.port_count:
            raise ConfigurationError(
                f"{len(self.detectors)} detectors for {self.splitter.port_count} splitter ports",
                field="detectors",
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("must be an unsigned 64-bit integer", field="seed")

    @property
    def dark_free(self) -> bool:
        return all(d.dark_prob == 0 for d in self.detectors)

    def canonical(self) -> str:
        """Stable textual form used for fingerprints."""
        parts = [
            f"source={self.source.describe()}",
            f"train={self.train.shape.value},{self.train.pulse_width!r},{self.train.period!r},"
            f"{self.train.photons_per_pulse!r},{self.train.offset!r}",
            f"grid={self.grid.window_duration!r},{self.grid.window_count}",
            "detectors=" + ";".join(
                f"{d.efficiency!r},{d.dark_prob!r},{d.label}" for d in self.detectors
            ),
            "splitter=" + ",".join(repr(p) for p in self.splitter.port_probs),
            f"mode={self.mode.describe()}",
            f"seed={self.seed}",
        ]
        return "|".join(parts)


@dataclass(frozen=True, eq=False)
class ClickSeries:
    """
    Per-detector binary click sequences over N windows.

    ``clicks`` has shape (detectors, N). Equality ignores the fingerprint, so a
    series rebuilt from time tags compares equal to the simulated original.
    """
    clicks: npt.NDArray[np.bool_]
    weights: WindowWeights
    fingerprint: str = ""
    collision_count: int = 0

    def __post_init__(self) -> None:
        if self.clicks.ndim != 2 or self.clicks.shape[1] != self.weights.n:
            raise ConfigurationError(
                f"click array shape {self.clicks.shape} does not match {self.weights.n} windows"
            )

    @property
    def n(self) -> int:
        return self.weights.n

    @property
    def m(self) -> int:
        return self.weights.m

    @property
    def r_i(self) -> float:
        return self.weights.r_i

    @property
    def mask(self) -> npt.NDArray[np.bool_]:
        return self.weights.mask

    @property
    def detector_count(self) -> int:
        return int(self.clicks.shape[0])

    def detector(self, index: int) -> npt.NDArray[np.bool_]:
        return self.clicks[index]

    def click_counts(self) -> list[int]:
        return [int(c) for c in self.clicks.sum(axis=1)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClickSeries):
            return NotImplemented
        return (
            self.collision_count == other.collision_count
            and np.array_equal(self.clicks, other.clicks)
            and self.weights == other.weights
        )


@dataclass(frozen=True, eq=False)
class SpatialOutcomes:
    """K detector-pair outcomes per pulse; ``x`` and ``y`` have shape (pulses, K)."""
    x: npt.NDArray[np.bool_]
    y: npt.NDArray[np.bool_]
    window_index: npt.NDArray[np.int64]
    fingerprint: str = ""

    @property
    def pulses(self) -> int:
        return int(self.x.shape[0])

    @property
    def pairs(self) -> int:
        return int(self.x.shape[1])


@dataclass
class CorrelationEstimate:
    """Estimator value with its bootstrap standard error and the raw counts behind it."""
    value: float
    stderr: float
    normalization: Normalization
    coincidences: int
    singles: tuple[int, ...]
    n: int  # windows (or pair trials) in the record
    m: int  # elements actually averaged
    lag: int | None = None
    order: int = 2
    stderr_degenerate: bool = False

    def __post_init__(self) -> None:
        if self.coincidences < 0 or any(s < 0 for s in self.singles):
            raise ValueError("counts must be non-negative")
        if self.m > self.n:
            raise ValueError("M cannot exceed N")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for serialization."""
        data = asdict(self)
        data["normalization"] = self.normalization.value
        data["singles"] = list(self.singles)
        return data


@dataclass
class OracleResult:
    """Exact click probabilities for a dark-free splitter/detector arrangement."""
    click_probs: tuple[float, ...]
    coincidence_probs: npt.NDArray[np.float64]
    g2_click: float | None

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "click_probs": list(self.click_probs),
            "coincidence_probs": self.coincidence_probs.tolist(),
            "g2_click": self.g2_click,
        }


class TimeTagRecord(NamedTuple):
    """One detector click: tick count and channel."""
    timestamp: int
    channel: int


@dataclass(frozen=True)
class TimeTagHeader:
    """Header of a TTG2 binary time-tag file."""
    resolution: int = 1  # picoseconds per tick
    channel_count: int = 2
    magic: bytes = b"TTG2"
    version: int = 1
