"""Exception types shared across the harness."""


class FlexBenchError(Exception):
    """Base class for all flexbench errors."""


class ConfigError(FlexBenchError, ValueError):
    """Invalid scenario or endpoint configuration."""


class TransportError(FlexBenchError):
    """Endpoint unreachable or connection-level failure."""


class ProtocolError(FlexBenchError):
    """Server spoke, but not the expected stream protocol."""


class SummaryError(FlexBenchError, ValueError):
    """No successful measurements to aggregate."""


class InvalidRunError(FlexBenchError, ValueError):
    """Run failed its validity checks and cannot become a dataset record."""


class IngestError(FlexBenchError, ValueError):
    """Raw record cannot be normalized into the dataset schema."""


class FeaturizeError(FlexBenchError, ValueError):
    """Record lacks the fields needed for feature engineering."""


class QueryError(FlexBenchError, ValueError):
    """Dataset filter references an unknown key."""


class FitError(FlexBenchError, ValueError):
    """No usable records to fit the throughput model."""


class NoDataError(FlexBenchError):
    """No dataset support for the requested accelerator/scenario."""
