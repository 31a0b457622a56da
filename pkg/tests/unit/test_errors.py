"""Unit tests for errors module."""

import pytest

from app.core.errors import (
    ERROR_EXIT_CODE_MAP,
    ConfigParseError,
    ConfigValidationError,
    FitError,
    HypothesisError,
    IntegrationError,
    NumericalError,
    RefinementBudgetError,
    ResonanceLabError,
    SymmetryError,
    ValidationError,
    get_exit_code,
)


class TestResonanceLabError:
    """Test base exception class."""

    def test_base_exception_creation(self):
        """Test creating base exception with message."""
        error = ResonanceLabError("Test error message")
        assert error.message == "Test error message"
        assert error.details == {}
        assert str(error) == "Test error message"

    def test_base_exception_with_details(self):
        """Test creating base exception with details."""
        error = ResonanceLabError("Test error", details={"k_lo": 0.5, "k_hi": 0.6})
        assert error.details == {"k_lo": 0.5, "k_hi": 0.6}


class TestHierarchy:
    """Test exception grouping."""

    @pytest.mark.parametrize(
        "error_type", [ConfigParseError, ConfigValidationError, SymmetryError]
    )
    def test_input_errors_are_validation_errors(self, error_type):
        """Test configuration and symmetry failures are validation errors."""
        assert issubclass(error_type, ValidationError)

    @pytest.mark.parametrize("error_type", [IntegrationError, RefinementBudgetError, FitError])
    def test_numerical_failures(self, error_type):
        """Test solver failures are numerical errors."""
        assert issubclass(error_type, NumericalError)

    def test_hypothesis_error_is_neither(self):
        """Test unmet lemma hypotheses are not validation or numerical errors."""
        error = HypothesisError("W+ not positive")
        assert isinstance(error, ResonanceLabError)
        assert not isinstance(error, ValidationError | NumericalError)


class TestExitCodes:
    """Test exit code mapping."""

    def test_exit_code_map(self):
        """Test the map covers both error families."""
        assert ERROR_EXIT_CODE_MAP[ValidationError] == 2
        assert ERROR_EXIT_CODE_MAP[NumericalError] == 3

    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (ConfigValidationError("bad band", details={"field": "band"}), 2),
            (SymmetryError("not even"), 2),
            (RefinementBudgetError("budget"), 3),
            (FitError("too few"), 3),
            (HypothesisError("cone"), 1),
            (RuntimeError("boom"), 1),
        ],
    )
    def test_get_exit_code(self, error, code):
        """Test subclasses inherit their family's exit code."""
        assert get_exit_code(error) == code
