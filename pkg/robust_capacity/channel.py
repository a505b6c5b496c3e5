"""
Discrete memoryless channels and their average mutual information.

All quantities are in nats. The private ``_``-prefixed helpers work on raw
arrays and skip validation; the solver calls them in its inner loop.
"""

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import rel_entr

from .exceptions import ChannelError, DimensionMismatchError
from .utils.validation import (
    ROW_SUM_ATOL,
    validate_row_stochastic,
    validate_simplex_point,
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Row-stochastic N x M channel law matrix Q[n, m] = P(output m | input n)."""
    entries: np.ndarray
    atol: float = field(default=ROW_SUM_ATOL, repr=False, compare=False)

    def __post_init__(self):
        entries = validate_row_stochastic(self.entries, "Q", self.atol)
        object.__setattr__(self, "entries", _frozen(entries))

    @classmethod
    def from_rows(cls, rows: Any, atol: float = ROW_SUM_ATOL) -> "ChannelMatrix":
        return cls(rows, atol)

    @property
    def n_inputs(self) -> int:
        return self.entries.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.entries.shape[1]

    @property
    def min_entry(self) -> float:
        return float(self.entries.min())

    def strictly_positive(self, tau: float) -> bool:
        """Whether every entry is at least tau > 0."""
        return tau > 0 and self.min_entry >= tau

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChannelMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Probability vector over the N channel inputs."""
    probs: np.ndarray

    def __post_init__(self):
        probs = validate_simplex_point(self.probs, "p")
        object.__setattr__(self, "probs", _frozen(probs))

    @classmethod
    def uniform(cls, n: int) -> "InputDistribution":
        return cls(np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InputDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


def bsc_matrix(beta: float) -> ChannelMatrix:
    """Binary symmetric channel with crossover probability beta."""
    return ChannelMatrix.from_rows([[1.0 - beta, beta], [beta, 1.0 - beta]])


def _check_dims(p: InputDistribution, Q: ChannelMatrix) -> None:
    if p.size != Q.n_inputs:
        raise DimensionMismatchError("p", (Q.n_inputs,), (p.size,))


def _information(p: np.ndarray, Q: np.ndarray) -> float:
    q = p @ Q
    joint = p[:, None] * Q
    # p_n Q_nm log(Q_nm / q_m); rel_entr gives 0 where the joint mass is 0
    return float(rel_entr(joint, p[:, None] * q[None, :]).sum())


def _row_divergences(p: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """D(Q_n || q) for every input n, where q is the output law under p."""
    q = p @ Q
    return rel_entr(Q, q[None, :]).sum(axis=1)


def _grad_p(p: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return _row_divergences(p, Q) - 1.0


def _grad_q(p: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """dI/dQ_nm = p_n log(Q_nm / q_m); requires Q > 0."""
    q = p @ Q
    return p[:, None] * (np.log(Q) - np.log(q)[None, :])


def mutual_information(p: InputDistribution, Q: ChannelMatrix) -> float:
    """
    Average mutual information I(p, Q) in nats.

    Terms with p_n Q_nm = 0 contribute 0.

    Raises:
        DimensionMismatchError: If p and Q disagree on the number of inputs
    """
    _check_dims(p, Q)
    return max(_information(p.probs, Q.entries), 0.0)


def grad_p(p: InputDistribution, Q: ChannelMatrix) -> np.ndarray:
    """
    Gradient of I(p, Q) with respect to p.

    The j-th entry is sum_m Q_jm log(Q_jm / q_m) - 1. Boundary points of the
    simplex are accepted (the formula extends continuously), but every entry
    of Q must be strictly positive.

    Raises:
        DimensionMismatchError: If p and Q disagree on the number of inputs
        ChannelError: If Q has a zero entry
    """
    _check_dims(p, Q)
    if Q.min_entry <= 0:
        raise ChannelError("gradient requires a strictly positive channel", min_entry=Q.min_entry)
    return _grad_p(p.probs, Q.entries)


def is_weakly_symmetric(Q: ChannelMatrix, atol: float = 1e-12) -> bool:
    """Rows are permutations of one another and all column sums are equal."""
    rows = np.sort(Q.entries, axis=1)
    if not np.allclose(rows, rows[0][None, :], atol=atol, rtol=0.0):
        return False
    col = Q.entries.sum(axis=0)
    return bool(np.allclose(col, col[0], atol=atol, rtol=0.0))
