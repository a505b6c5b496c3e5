"""
Parametric channel uncertainty: Q(xi) = Q0 + Gamma * sum_s xi_s Q^s with xi in a
simple compact convex set.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Sequence

import numpy as np

from .channel import ChannelMatrix, InputDistribution, _grad_q, _information
from .exceptions import (
    ChannelError,
    DimensionMismatchError,
    NegativeEntryError,
    PerturbationOutOfSetError,
)
from .utils.validation import (
    as_float_array,
    validate_shape,
    validate_unit_interval,
    validate_zero_row_sums,
)

logger = logging.getLogger(__name__)

MEMBERSHIP_TOL = 1e-9


class SetKind(str, Enum):
    INF_BALL = "inf_ball"
    TWO_BALL = "two_ball"
    SIMPLEX = "simplex"
    BOX_CAP_TWO_BALL = "box_cap_two_ball"


@dataclass(frozen=True)
class PerturbationSet:
    """The set B of admissible perturbation vectors, with scale Gamma on the directions."""
    kind: SetKind
    dim: int
    scale: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", SetKind(self.kind))
        except ValueError:
            raise ChannelError(f"unknown perturbation set kind '{self.kind}'",
                               supported=[k.value for k in SetKind])
        if int(self.dim) < 1:
            raise ChannelError("perturbation dimension must be at least 1", dim=self.dim)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "scale", validate_unit_interval(self.scale, "gamma"))

    def violation(self, xi: np.ndarray) -> float:
        """Distance-like measure of how far xi lies outside the set (0 inside)."""
        if self.kind is SetKind.INF_BALL:
            v = np.max(np.abs(xi)) - 1.0
        elif self.kind is SetKind.TWO_BALL:
            v = np.linalg.norm(xi) - 1.0
        elif self.kind is SetKind.SIMPLEX:
            v = max(-np.min(xi), abs(np.sum(xi) - 1.0))
        else:
            v = max(-np.min(xi), np.max(xi) - 1.0, np.linalg.norm(xi) - 1.0)
        return max(float(v), 0.0)

    def contains(self, xi: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return xi.shape == (self.dim,) and self.violation(xi) <= tol

    def center(self) -> np.ndarray:
        """A canonical interior (or relative-interior) starting point."""
        if self.kind is SetKind.SIMPLEX:
            return np.full(self.dim, 1.0 / self.dim)
        return np.zeros(self.dim)

    def linear_min(self, g: np.ndarray) -> np.ndarray:
        """
        min over xi in B of <g, xi>, vectorised over leading axes of g.

        The last axis of g has length dim.
        """
        if self.kind is SetKind.INF_BALL:
            return -np.abs(g).sum(axis=-1)
        if self.kind is SetKind.TWO_BALL:
            return -np.linalg.norm(g, axis=-1)
        if self.kind is SetKind.SIMPLEX:
            return g.min(axis=-1)
        # box [0,1]^S cut by the unit ball: the minimiser is -g^- / ||g^-||
        return -np.linalg.norm(np.minimum(g, 0.0), axis=-1)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "gamma": self.scale}


@dataclass(frozen=True, eq=False)
class UncertaintyModel:
    """Nominal channel, perturbation directions and the perturbation set."""
    nominal: ChannelMatrix
    directions: np.ndarray
    set: PerturbationSet
    atol: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self):
        directions = as_float_array(self.directions, "directions", ndim=3)
        expected = (self.set.dim, self.nominal.n_inputs, self.nominal.n_outputs)
        validate_shape(directions, expected, "directions")
        validate_zero_row_sums(directions, atol=self.atol)
        directions.setflags(write=False)
        object.__setattr__(self, "directions", directions)

        entry_min = self.entry_minima
        if entry_min.min() < 0:
            n, m = np.unravel_index(int(np.argmin(entry_min)), entry_min.shape)
            raise NegativeEntryError((int(n), int(m)), float(entry_min[n, m]))

    @property
    def n_inputs(self) -> int:
        return self.nominal.n_inputs

    @property
    def n_outputs(self) -> int:
        return self.nominal.n_outputs

    @property
    def n_perturbations(self) -> int:
        return self.set.dim

    @cached_property
    def scaled_directions(self) -> np.ndarray:
        scaled = self.set.scale * self.directions
        scaled.setflags(write=False)
        return scaled

    @cached_property
    def entry_minima(self) -> np.ndarray:
        """Exact minimum of each entry Q_nm(xi) over the perturbation set."""
        per_entry = np.moveaxis(self.scaled_directions, 0, -1)
        return self.nominal.entries + self.set.linear_min(per_entry)

    @property
    def tau(self) -> float:
        """Smallest entry of Q(xi) over the whole set."""
        return float(self.entry_minima.min())

    def with_scale(self, gamma: float) -> "UncertaintyModel":
        return UncertaintyModel(self.nominal, self.directions,
                                PerturbationSet(self.set.kind, self.set.dim, gamma), self.atol)

    @classmethod
    def from_vertices(cls, channels: Sequence[ChannelMatrix]) -> "UncertaintyModel":
        """Convex hull of the given channels, parameterised over the simplex."""
        if not channels:
            raise ChannelError("at least one vertex channel is required")
        base = channels[0].entries
        directions = np.stack([c.entries - base for c in channels])
        return cls(channels[0], directions, PerturbationSet(SetKind.SIMPLEX, len(channels)))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UncertaintyModel":
        """Build from the JSON model layout: nominal, directions, set."""
        nominal = ChannelMatrix.from_rows(data["nominal"])
        raw = data.get("directions")
        set_data = data.get("set", {})
        if raw:
            directions = as_float_array(raw, "directions", ndim=3)
        else:
            directions = np.zeros((1,) + nominal.entries.shape)
        pset = PerturbationSet(set_data.get("kind", SetKind.INF_BALL.value),
                               directions.shape[0], set_data.get("gamma", 1.0))
        logger.debug(f"Model {nominal.n_inputs}x{nominal.n_outputs}, {pset.dim} direction(s), "
                     f"{pset.kind.value} set, gamma={pset.scale:g}")
        return cls(nominal, directions, pset)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nominal": self.nominal.entries.tolist(),
            "directions": self.directions.tolist(),
            "set": self.set.to_dict(),
        }


def _assemble(U: UncertaintyModel, xi: np.ndarray) -> np.ndarray:
    return U.nominal.entries + np.tensordot(xi, U.scaled_directions, axes=1)


def _grad_xi(xi: np.ndarray, p: np.ndarray, U: UncertaintyModel, Q: np.ndarray = None) -> np.ndarray:
    if Q is None:
        Q = _assemble(U, xi)
    return np.einsum("snm,nm->s", U.scaled_directions, _grad_q(p, Q))


def _phi(xi: np.ndarray, p: np.ndarray, U: UncertaintyModel) -> float:
    return _information(p, _assemble(U, xi))


def _check_xi(U: UncertaintyModel, xi: Any) -> np.ndarray:
    xi = as_float_array(xi, "xi", ndim=1)
    if xi.shape != (U.n_perturbations,):
        raise DimensionMismatchError("xi", (U.n_perturbations,), xi.shape)
    violation = U.set.violation(xi)
    if violation > MEMBERSHIP_TOL:
        raise PerturbationOutOfSetError(U.set.kind.value, xi.tolist(), violation)
    return xi


def _check_positive(Q: np.ndarray, floor: float = 0.0, strict: bool = False) -> None:
    lowest = Q.min()
    if lowest < floor or (strict and lowest <= floor):
        n, m = np.unravel_index(int(np.argmin(Q)), Q.shape)
        raise NegativeEntryError((int(n), int(m)), float(Q[n, m]), floor)


def assemble(U: UncertaintyModel, xi: Any) -> ChannelMatrix:
    """
    Channel matrix at a perturbation: Q0 + Gamma * sum_s xi_s Q^s.

    Raises:
        PerturbationOutOfSetError: If xi is outside the declared set
        NegativeEntryError: If an entry of the result is negative
    """
    xi = _check_xi(U, xi)
    Q = _assemble(U, xi)
    _check_positive(Q)
    return ChannelMatrix(Q, atol=1e-10)


def grad_xi(xi: Any, p: InputDistribution, U: UncertaintyModel) -> np.ndarray:
    """
    Gradient of I(p, Q(xi)) with respect to xi.

    Entry s is sum_{n,m} Gamma Q^s_nm p_n log(Q_nm(xi) / q_m(xi)).

    Raises:
        PerturbationOutOfSetError: If xi is outside the declared set
        NegativeEntryError: If Q(xi) has a nonpositive entry
    """
    xi = _check_xi(U, xi)
    if p.size != U.n_inputs:
        raise DimensionMismatchError("p", (U.n_inputs,), (p.size,))
    Q = _assemble(U, xi)
    _check_positive(Q, strict=True)
    return _grad_xi(xi, p.probs, U, Q)


def robust_objective(xi: Any, p: InputDistribution, U: UncertaintyModel) -> float:
    """phi(xi, p) = I(p, Q(xi))."""
    xi = _check_xi(U, xi)
    if p.size != U.n_inputs:
        raise DimensionMismatchError("p", (U.n_inputs,), (p.size,))
    return max(_phi(xi, p.probs, U), 0.0)
