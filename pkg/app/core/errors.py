"""
Domain-specific exceptions for Resonance Lab.

These exceptions separate bad input from numerical failure and are mapped
to process exit codes by the command-line layer.
"""

from typing import Any


class ResonanceLabError(Exception):
    """Base exception for all Resonance Lab domain errors."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ValidationError(ResonanceLabError):
    """
    Raised when input data fails validation.

    Examples:
    - Breakpoints not strictly ascending
    - Non-positive h or k
    - Interval outside the support [0, B]

    Exit code: 2
    """

    pass


class ConfigParseError(ValidationError):
    """
    Raised when a run configuration file is not valid JSON.

    Details carry ``line`` and ``column`` of the syntax error.
    """

    pass


class ConfigValidationError(ValidationError):
    """
    Raised when a run configuration is well-formed but invalid.

    Details carry ``field`` (dotted path of the first offending key).
    """

    pass


class SymmetryError(ValidationError):
    """
    Raised when a whole-line potential is not even within tolerance.

    Details carry ``max_defect`` and the sample ``x`` where it occurs.
    """

    pass


class NumericalError(ResonanceLabError):
    """
    Raised when a computation cannot be completed to the requested accuracy.

    Exit code: 3
    """

    pass


class IntegrationError(NumericalError):
    """
    Raised when the phase integrator gives up (step-size underflow).

    Details carry ``last_x``, the last position reached.
    """

    pass


class RefinementBudgetError(NumericalError):
    """
    Raised when the root scan cannot resolve the lifted mismatch.

    Details carry the offending subinterval ``k_lo``, ``k_hi``.
    """

    pass


class FitError(NumericalError):
    """Raised when a decay fit has fewer than three usable points."""

    pass


class HypothesisError(ResonanceLabError):
    """
    Raised when the hypotheses of a lemma check do not hold.

    This is not a lemma violation; suites report such cases as skipped.
    """

    pass


ERROR_EXIT_CODE_MAP: dict[type[ResonanceLabError], int] = {
    ValidationError: 2,
    NumericalError: 3,
}


def get_exit_code(error: Exception) -> int:
    """
    Get the process exit code for a given exception.

    Args:
        error: The exception instance

    Returns:
        Exit code (defaults to 1 for unknown errors)
    """
    for error_type, code in ERROR_EXIT_CODE_MAP.items():
        if isinstance(error, error_type):
            return code
    return 1
