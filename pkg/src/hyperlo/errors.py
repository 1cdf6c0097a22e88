from __future__ import annotations


class InvalidConfiguration(ValueError):
    """Raised when parameters describe a run, operator or query that cannot exist."""


class BudgetExceeded(RuntimeError):
    """Raised when an exhaustive computation would exceed its work budget."""
