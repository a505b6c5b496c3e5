"""
Validation utilities for the robust capacity package.

This module provides validation functions for probability vectors,
channel matrices and scalar parameters with detailed error messages.
"""

from typing import Any, Optional, Tuple

import numpy as np

from ..exceptions import ValidationError, DimensionMismatchError, ChannelError

ROW_SUM_ATOL = 1e-12


def as_float_array(value: Any, field: str, ndim: Optional[int] = None) -> np.ndarray:
    """
    Convert a value to a finite float array.

    Args:
        value: Array-like input
        field: Field name for error messages
        ndim: Required number of dimensions, if any

    Returns:
        A new float64 array

    Raises:
        ValidationError: If the value is not numeric, not finite or has the wrong rank
    """
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValidationError(field, value, f"must be numeric: {e}")

    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(field, value, f"must be a {ndim}-dimensional array, got {arr.ndim} dimensions")

    if arr.size == 0:
        raise ValidationError(field, value, "cannot be empty")

    if not np.all(np.isfinite(arr)):
        raise ValidationError(field, value, "must contain only finite numbers")

    return arr


def validate_shape(arr: np.ndarray, expected: Tuple[int, ...], field: str) -> np.ndarray:
    """Raise DimensionMismatchError unless arr has the expected shape."""
    if tuple(arr.shape) != tuple(expected):
        raise DimensionMismatchError(field, tuple(expected), tuple(arr.shape))
    return arr


def validate_simplex_point(value: Any, field: str = "p", atol: float = ROW_SUM_ATOL) -> np.ndarray:
    """
    Validate a probability vector.

    Args:
        value: Array-like input
        field: Field name for error messages
        atol: Tolerance on the unit sum

    Returns:
        The vector as a float array

    Raises:
        ValidationError: If an entry is negative or the entries do not sum to 1
    """
    arr = as_float_array(value, field, ndim=1)

    if np.any(arr < 0):
        idx = int(np.argmin(arr))
        raise ValidationError(field, value, f"entry {idx} is negative ({arr[idx]:.3e})")

    total = float(arr.sum())
    if abs(total - 1.0) > atol:
        raise ValidationError(field, value, f"entries must sum to 1, got {total:.15g}")

    return arr


def validate_row_stochastic(value: Any, field: str = "Q", atol: float = ROW_SUM_ATOL) -> np.ndarray:
    """
    Validate a channel law matrix.

    Args:
        value: Array-like N x M input
        field: Field name for error messages
        atol: Tolerance on each row sum

    Returns:
        The matrix as a float array

    Raises:
        ChannelError: If an entry is negative or a row does not sum to 1
    """
    arr = as_float_array(value, field, ndim=2)

    if np.any(arr < 0):
        n, m = np.unravel_index(int(np.argmin(arr)), arr.shape)
        raise ChannelError(f"{field} has a negative entry", row=int(n), column=int(m), value=float(arr[n, m]))

    row_sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > atol)
    if bad.size:
        row = int(bad[0])
        raise ChannelError(f"{field} row {row} sums to {row_sums[row]:.15g}, expected 1", row=row)

    return arr


def validate_zero_row_sums(directions: np.ndarray, field: str = "directions", atol: float = ROW_SUM_ATOL) -> None:
    """
    Check that every direction matrix keeps row sums unchanged.

    Raises:
        ChannelError: On the first direction with a non-zero row sum
    """
    sums = directions.sum(axis=2)
    bad = np.argwhere(np.abs(sums) > atol)
    if bad.size:
        s, n = (int(i) for i in bad[0])
        raise ChannelError(
            f"{field}[{s}] row {n} sums to {sums[s, n]:.3e}, expected 0",
            direction=s, row=n,
        )


def validate_positive(value: Any, field: str, allow_zero: bool = False) -> float:
    """Validate a positive (or nonnegative) finite scalar."""
    if not isinstance(value, (int, float, np.floating, np.integer)) or isinstance(value, bool):
        raise ValidationError(field, value, "must be a number")

    value = float(value)
    if not np.isfinite(value):
        raise ValidationError(field, value, "must be finite")

    if allow_zero and value < 0:
        raise ValidationError(field, value, "must be nonnegative")

    if not allow_zero and value <= 0:
        raise ValidationError(field, value, "must be positive")

    return value


def validate_unit_interval(value: Any, field: str) -> float:
    """Validate a scalar in [0, 1]."""
    value = validate_positive(value, field, allow_zero=True)
    if value > 1:
        raise ValidationError(field, value, "must lie in [0, 1]")
    return value

