"""Selection-trial classification benchmark engine."""

__version__ = "0.1.0"

from trialbench.dataset import Dataset, NAProfile, RowKey, load_trials, na_profile
from trialbench.metrics import ConfusionCounts, EvalReport
from trialbench.schema import ColumnSpec, default_schema

__all__ = ["Dataset", "NAProfile", "RowKey", "load_trials", "na_profile",
           "ConfusionCounts", "EvalReport", "ColumnSpec", "default_schema",
           "__version__"]
