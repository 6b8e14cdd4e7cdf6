"""
errors.py
Exception hierarchy shared by every stage of the side-tuning pipeline.

Each error kind raised by the numerics, geometry, model, training and harness
modules has its own class so callers (and the CLI) can tell them apart.
"""


class StagError(Exception):
    """Base class for every error raised by this project."""


# ---------------------------------------------------------------------------
# Numerics
# ---------------------------------------------------------------------------

class DimensionError(StagError):
    pass


class NumericError(StagError):
    pass


class ContractError(StagError):
    pass


class OracleError(StagError):
    pass


class IndexRangeError(StagError):
    pass


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

class DegenerateCloudError(StagError):
    pass


class SampleSizeError(StagError):
    pass


class GroupingError(StagError):
    pass


class NeighborhoodTooLargeError(StagError):
    pass


class GraphError(StagError):
    pass


# ---------------------------------------------------------------------------
# Model / training
# ---------------------------------------------------------------------------

class ConfigError(StagError):
    pass


class LabelError(StagError):
    pass


class ScheduleError(StagError):
    pass


class OptimizerError(StagError):
    pass


# ---------------------------------------------------------------------------
# Data / storage
# ---------------------------------------------------------------------------

class DataError(StagError):
    pass


class DatasetParseError(DataError):
    """A cloud or manifest file could not be parsed; names the file and line."""

    def __init__(self, path, line: int | None, reason: str):
        self.path = str(path)
        self.line = line
        self.reason = reason
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {reason}")


class ParamFileError(StagError):
    pass
