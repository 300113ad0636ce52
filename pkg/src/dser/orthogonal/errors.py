"""Exception hierarchy for the orthogonal group toolkit.

Every error derives from ``ValueError`` so command handlers can keep the
``except ValueError as error`` shape and report a single line on stderr.
"""

from __future__ import annotations


class DserError(ValueError):
    """Base class for all toolkit errors."""


class UsageError(DserError):
    """Invalid configuration or command-line input (exit code 2)."""


class RingError(DserError):
    """Ring construction or arithmetic failure (non-unit, bad modulus, empty vector)."""


class SetupError(DserError):
    """Quadratic setup is malformed or two setups do not match."""


class NotOrthogonalError(DserError):
    """A matrix failed the exact check T^t Psi T = Psi."""


class IndexConstraintError(DserError):
    """Relation indices violate their side conditions."""


class FactorizationError(DserError):
    """A conjugation factorization was requested for an unsupported generator."""


class ReductionError(DserError):
    """An entry-clearing step found no solvable parameter."""


class DecompositionError(DserError):
    """FDG decomposition could not be completed."""


class CensusBudgetError(DserError):
    """Enumeration exceeded its element budget."""

    def __init__(self, message: str, *, partial: int) -> None:
        super().__init__(f"{message} (partial census: {partial} elements)")
        self.partial = partial
