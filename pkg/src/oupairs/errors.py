"""Exception hierarchy shared across the engine.

ConfigError / DataError / PipelineError map to the CLI exit codes 1 / 2 / 3.
"""


class OuPairsError(Exception):
    """Base class for engine errors."""


class ConfigError(OuPairsError):
    """Invalid or inconsistent run configuration."""


class DataError(OuPairsError):
    """Bad or missing input data (files, columns, unparseable rows)."""


class PipelineError(OuPairsError):
    """A pipeline stage cannot proceed (no pairs retained, empty panel, ...)."""


class RankDeficientError(OuPairsError):
    """OLS design matrix does not have full column rank."""


class DegenerateSeriesError(OuPairsError):
    """Series unusable for the requested test (zero variance, too short)."""


class NonMeanRevertingError(OuPairsError):
    """AR(1) slope outside (0, 1): the OU inversion is undefined.

    Carries the offending slope so callers can log why a pair was dropped.
    """

    def __init__(self, a: float):
        self.a = a
        super().__init__(f"AR(1) slope a={a:.6g} outside (0, 1); spread is not mean-reverting")


class UndefinedMetricError(OuPairsError):
    """A performance ratio has a zero denominator (volatility or downside)."""
