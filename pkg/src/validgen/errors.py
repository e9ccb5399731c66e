"""Semantic exception hierarchy shared across the package."""

from __future__ import annotations


class ValidgenError(Exception):
    """Base class for all package-specific errors."""


class NoFeasibleDistribution(ValidgenError):
    """No candidate distribution avoids every negative point.

    Carries the offending negative set so callers can diagnose which
    constraint emptied the search space.
    """

    def __init__(self, message: str, negatives=None):
        super().__init__(message)
        self.negatives = list(negatives) if negatives is not None else None


class NoCandidateSurvived(ValidgenError):
    """Every loss level exhausted its candidate set during elimination.

    ``history`` maps each loss level to the per-iteration elimination
    record accumulated before the set emptied.
    """

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history


class AmplificationExhausted(ValidgenError):
    """All amplification repetitions produced candidates that failed verification."""

    def __init__(self, message: str, reports=None):
        super().__init__(message)
        self.reports = list(reports) if reports is not None else []


class ConfigError(ValidgenError):
    """Scenario configuration is malformed; ``path`` locates the bad field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
