"""Exception types raised by fugseg."""


class FugSegError(ValueError):
    """Base class for all data and configuration errors."""


class DegeneratePointError(FugSegError):
    pass


class ZeroBaselineError(FugSegError):
    pass


class ConfigError(FugSegError):
    pass


class FormatError(FugSegError):
    """Malformed input file (point cloud, labels, mapping)."""


class UnsupportedCellError(FugSegError):
    pass


class EvaluationError(FugSegError):
    pass
