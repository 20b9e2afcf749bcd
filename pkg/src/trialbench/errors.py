"""Exception types raised across the pipeline."""


class TrialBenchError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(TrialBenchError):
    """A column does not match the declared schema."""


class ParseError(TrialBenchError):
    """A cell could not be parsed; carries row/column coordinates."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConsistencyError(TrialBenchError):
    """Contradictory records, e.g. duplicate (clone, year) trial entries."""


class MissingControlError(TrialBenchError):
    """No control variety has a usable yield for a (year, region) cell."""


class DomainError(TrialBenchError):
    """An argument is outside the mathematical domain of an operation."""


class DataError(TrialBenchError):
    """Physically impossible data, e.g. t_max < t_min; carries context."""


class StratificationError(TrialBenchError):
    """A class is too small for the requested stratified split."""


class EncodingError(TrialBenchError):
    """A categorical level was not seen when the encoder was fitted."""


class ImputationError(TrialBenchError):
    """Imputation cannot proceed, e.g. a fully missing column."""


class HyperparameterError(TrialBenchError):
    """A model hyperparameter failed validation."""


class ShapeError(TrialBenchError):
    """Array dimensions do not match the fitted model or each other."""


class UndefinedMetricError(TrialBenchError):
    """The metric is undefined on this input (e.g. single-class AUC)."""


class OptimizationError(TrialBenchError):
    """An optimizer failed to make progress."""


class NumericalError(TrialBenchError):
    """A numerical routine diverged or produced non-finite values."""


class ScenarioError(TrialBenchError):
    """An illegal scenario definition, e.g. a (kind, family) mismatch."""


class GenerationError(TrialBenchError):
    """Synthetic data generation failed, e.g. no observed reference cells."""


class ConfigError(TrialBenchError):
    """A run configuration is invalid or incomplete."""
