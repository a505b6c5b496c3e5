"""
Custom exceptions for the robust capacity package.

This module provides specific exception types for better error handling
and more informative diagnostics from the library and the CLI.
"""

from typing import Optional, Dict, Any, List, Tuple


class RobustCapacityError(Exception):
    """Base exception for all robust capacity errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if self.details:
            detail_str = ", ".join(f"{k}={v}" for k, v in self.details.items())
            return f"{self.message} ({detail_str})"
        return self.message


class ConfigurationError(RobustCapacityError, ValueError):
    """Raised when there's a configuration issue."""

    def __init__(self, message: str, errors: Optional[List[str]] = None):
        details = {"errors": errors} if errors else None
        super().__init__(message, details)
        self.errors = errors or []


class ValidationError(RobustCapacityError, ValueError):
    """Raised when input validation fails."""

    def __init__(self, field: str, value: Any, reason: str):
        message = f"Validation failed for field '{field}': {reason}"
        details = {"field": field, "value": value, "reason": reason}
        super().__init__(message, details)


class DimensionMismatchError(ValidationError):
    """Raised when array shapes disagree."""

    def __init__(self, field: str, expected: Tuple[int, ...], actual: Tuple[int, ...]):
        super().__init__(field, actual, f"expected shape {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class ChannelError(RobustCapacityError, ValueError):
    """Raised when a channel matrix or uncertainty model is invalid."""

    def __init__(self, reason: str, **details: Any):
        super().__init__(f"Invalid channel: {reason}", dict(reason=reason, **details))


class NegativeEntryError(ChannelError):
    """Raised when a perturbed channel has an entry below its floor."""

    def __init__(self, index: Tuple[int, int], value: float, floor: float = 0.0):
        reason = f"entry {index} equals {value:.3e}, below {floor:.3e}"
        super().__init__(reason, index=index, value=value, floor=floor)
        self.index = index
        self.value = value


class PerturbationOutOfSetError(ValidationError):
    """Raised when a perturbation vector lies outside its declared set."""

    def __init__(self, kind: str, xi: Any, violation: float):
        reason = f"outside the {kind} set by {violation:.3e}"
        super().__init__("xi", xi, reason)
        self.kind = kind
        self.violation = violation


class ProxError(RobustCapacityError):
    """Raised when a proximal step cannot be computed."""

    def __init__(self, operator: str, reason: str, **details: Any):
        message = f"Prox operator '{operator}' failed: {reason}"
        super().__init__(message, dict(operator=operator, reason=reason, **details))


class ConvergenceError(RobustCapacityError):
    """Raised when an iterative algorithm exhausts its iteration budget."""

    def __init__(self, algorithm: str, iterations: int, reason: str, **details: Any):
        message = f"{algorithm} did not converge after {iterations} iterations: {reason}"
        super().__init__(message, dict(algorithm=algorithm, iterations=iterations, **details))
        self.algorithm = algorithm
        self.iterations = iterations


class NonFiniteIterateError(RobustCapacityError):
    """Raised when the solver produces a non-finite value or gradient."""

    def __init__(self, iteration: int, quantity: str, dump: Dict[str, Any]):
        message = f"Non-finite {quantity} at iteration {iteration}"
        super().__init__(message, {"iteration": iteration, "quantity": quantity, "iterate": dump})
        self.iteration = iteration


class CostModelError(RobustCapacityError, ValueError):
    """Raised when an average-cost constraint is unusable."""

    def __init__(self, reason: str, **details: Any):
        super().__init__(f"Invalid cost constraint: {reason}", dict(reason=reason, **details))


class ScenarioError(RobustCapacityError):
    """Raised when a scenario or model file cannot be loaded."""

    def __init__(self, path: str, reason: str, location: Optional[str] = None):
        where = f" at {location}" if location else ""
        message = f"Scenario {path}{where}: {reason}"
        details = {"path": path, "reason": reason}
        if location:
            details["location"] = location
        super().__init__(message, details)


class UnknownGeneratorError(ConfigurationError):
    """Raised when a scenario names a generator kind that is not registered."""

    def __init__(self, kind: str, supported: Optional[List[str]] = None):
        message = f"Unknown generator kind '{kind}'"
        if supported:
            message += f". Supported kinds: {', '.join(supported)}"
        super().__init__(message)
        self.details.update({"kind": kind, "supported": supported or []})


# Exit codes of the command-line front end
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3


def exit_code_for(error: Exception) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(error, (ConfigurationError, ScenarioError, ValidationError, ChannelError, CostModelError)):
        return EXIT_CONFIG_ERROR
    return EXIT_SOLVER_FAILURE


def create_user_friendly_error(error: Exception) -> str:
    """
    Create a one-line diagnostic from any exception.

    Args:
        error: The exception to convert

    Returns:
        A message suitable for stderr
    """
    if isinstance(error, ScenarioError):
        location = error.details.get("location")
        where = f" ({location})" if location else ""
        return f"❌ Scenario {error.details.get('path')}{where}: {error.details.get('reason')}"

    elif isinstance(error, UnknownGeneratorError):
        supported = error.details.get("supported", [])
        return f"❌ Unknown generator '{error.details.get('kind')}'. Supported: {', '.join(supported)}"

    elif isinstance(error, ConfigurationError):
        errors = error.errors
        if errors:
            return f"⚙️ Configuration error: {'; '.join(errors)}"
        return f"⚙️ Configuration error: {error.message}"

    elif isinstance(error, PerturbationOutOfSetError):
        return f"📝 Perturbation rejected: {error.details.get('reason')}"

    elif isinstance(error, ValidationError):
        field = error.details.get("field", "input")
        reason = error.details.get("reason", "invalid value")
        return f"📝 Invalid {field}: {reason}"

    elif isinstance(error, ChannelError):
        return f"📝 {error.message}"

    elif isinstance(error, CostModelError):
        return f"📝 {error.message}"

    elif isinstance(error, ConvergenceError):
        return f"⏱️ {error.message}"

    elif isinstance(error, NonFiniteIterateError):
        return f"🔢 {error.message}; rerun with RCC_LOG=debug for the iterate trace"

    elif isinstance(error, RobustCapacityError):
        return f"❌ {error.message}"

    else:
        return f"❌ An unexpected error occurred: {str(error)}"
