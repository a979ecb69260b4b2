"""Exception hierarchy.

The CLI maps these onto exit codes:
  ConfigurationError / DimensionError → 1 (usage)
  DataError                           → 2 (data)
  NumericError / UnderdeterminedError / HarnessError → 3 (numerical failure)
"""

from __future__ import annotations


class CostError(Exception):
    """Base class for every error raised by costtest."""


class ConfigurationError(CostError, ValueError):
    """Inconsistent model, study, split or weight configuration."""


class DimensionError(CostError, ValueError):
    """Argument shapes do not match the model dimensions."""


class DataError(CostError):
    """Input data is malformed: non-numeric cells, missing values, non-finite entries."""


class UnderdeterminedError(CostError):
    """Fewer observations than parameters."""


class NumericError(CostError):
    """A numerical procedure failed (non-finite loss, failed factorization)."""


class DegenerateVarianceError(NumericError):
    """The conditional standard deviation is numerically zero."""


class SingularMatrixError(NumericError):
    """The gradient Gram matrix stayed singular after ridge escalation."""


class HarnessError(CostError):
    """Too many replications failed for a simulation result to be meaningful."""
