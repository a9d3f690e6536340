"""Core modules for the hbtsim toolkit."""

from hbtsim.core.config import settings
from hbtsim.core.errors import (
    ConfigurationError,
    HbtsimError,
    InsufficientDataError,
    PartitionError,
    TimeTagFormatError,
    UndefinedEstimateError,
    UnsupportedConfigurationError,
)
from hbtsim.core.models import (
    ClickSeries,
    CorrelationEstimate,
    DetectorSpec,
    ExperimentConfig,
    MeasurementMode,
    ModeKind,
    Normalization,
    OracleResult,
    PhotonSource,
    PulseShape,
    PulseTrain,
    SourceKind,
    SpatialOutcomes,
    SplitterSpec,
    TimeTagHeader,
    TimeTagRecord,
    WindowGrid,
    WindowWeights,
)
from hbtsim.core.tracing import (
    TracingContext,
    configure_logging,
    generate_run_id,
    get_trace_metadata,
    trace_step,
)

__all__ = [
    # Config
    "settings",
    # Errors
    "ConfigurationError",
    "HbtsimError",
    "InsufficientDataError",
    "PartitionError",
    "TimeTagFormatError",
    "UndefinedEstimateError",
    "UnsupportedConfigurationError",
    # Models
    "ClickSeries",
    "CorrelationEstimate",
    "DetectorSpec",
    "ExperimentConfig",
    "MeasurementMode",
    "ModeKind",
    "Normalization",
    "OracleResult",
    "PhotonSource",
    "PulseShape",
    "PulseTrain",
    "SourceKind",
    "SpatialOutcomes",
    "SplitterSpec",
    "TimeTagHeader",
    "TimeTagRecord",
    "WindowGrid",
    "WindowWeights",
    # Tracing
    "TracingContext",
    "configure_logging",
    "generate_run_id",
    "get_trace_metadata",
    "trace_step",
]
