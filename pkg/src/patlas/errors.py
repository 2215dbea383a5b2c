"""Exception and warning types shared across the package.

Everything raised deliberately by this package derives from
:class:`PatlasError`, so callers (including the CLI) can distinguish
anticipated data/model failures from genuine bugs.
"""

from __future__ import annotations


class PatlasError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(PatlasError):
    """An input file is missing required columns or is structurally unusable."""


class DataError(PatlasError):
    """Input rows are present but semantically invalid beyond tolerated limits."""


class ConvergenceError(PatlasError):
    """An iterative estimator exhausted its iteration budget without converging."""


class SeparationError(PatlasError):
    """A binary-response fit diverged because a covariate perfectly predicts the outcome."""

    def __init__(self, message: str, culprit: str | None = None):
        super().__init__(message)
        self.culprit = culprit


class CollinearityWarning(UserWarning):
    """Design columns were dropped because they are linearly dependent."""


class FewClustersWarning(UserWarning):
    """Cluster-robust covariance requested with too few clusters to be reliable."""
