"""
Channels where each input lands on its own output or one of four
neighbouring outputs, with one shared uncertainty moving mass between the
two.
"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..channel import ChannelMatrix
from ..exceptions import ValidationError
from ..uncertainty import PerturbationSet, SetKind, UncertaintyModel
from .base import BaseGenerator

DIAGONAL = 0.92
NEIGHBOUR = 0.02
DIAGONAL_SHIFT = 0.07
NEIGHBOUR_SHIFT = DIAGONAL_SHIFT / 4
DEFAULT_TAU = 1e-5


class Boundary(str, Enum):
    WRAP = "wrap"
    CLAMP = "clamp"


def _neighbours(n: int, size: int, boundary: Boundary) -> np.ndarray:
    if boundary is Boundary.WRAP:
        return np.array([(n + k) % size for k in (-2, -1, 1, 2)])
    start = min(max(n - 2, 0), size - 5)
    return np.array([m for m in range(start, start + 5) if m != n])


def gen_neighbor_ring(N: int, W: int, tau: float = DEFAULT_TAU,
                      boundary: Boundary = Boundary.WRAP) -> UncertaintyModel:
    """
    Model Q(xi) = Q0 + xi * Qp with xi in [-1, 1] and N = M inputs and outputs.

    Q0 sends input n to output n with probability 0.92 - (N - 5) tau, to each
    of four neighbours with 0.02 and elsewhere with tau. Qp takes 0.07 w_n
    from the diagonal and gives 0.0175 w_n to each neighbour, where w holds W
    entries -1 followed by N - W entries 1.

    Args:
        N: Alphabet size, greater than 4
        W: Number of rows perturbed against the rest, 0 <= W <= N
        tau: Mass on non-neighbouring outputs
        boundary: Neighbours wrap around the alphabet or clamp to a 5-wide window
    """
    if N <= 4:
        raise ValidationError("N", N, "must be greater than 4")
    if not 0 <= W <= N:
        raise ValidationError("W", W, f"must lie in [0, {N}]")
    boundary = Boundary(boundary)

    w = np.concatenate([-np.ones(W), np.ones(N - W)])
    nominal = np.full((N, N), tau)
    direction = np.zeros((N, N))
    for n in range(N):
        cols = _neighbours(n, N, boundary)
        nominal[n, cols] = NEIGHBOUR
        nominal[n, n] = DIAGONAL - (N - 5) * tau
        direction[n, cols] = NEIGHBOUR_SHIFT * w[n]
        direction[n, n] = -DIAGONAL_SHIFT * w[n]

    return UncertaintyModel(ChannelMatrix(nominal), direction[None], PerturbationSet(SetKind.INF_BALL, 1))


class NeighborRingParams(BaseModel):
    N: int = Field(default=50, gt=4)
    W: int = Field(default=0, ge=0)
    tau: float = Field(default=DEFAULT_TAU, gt=0)
    boundary: Boundary = Boundary.WRAP

    @model_validator(mode="after")
    def _w_within_alphabet(self):
        if self.W > self.N:
            raise ValueError(f"W must not exceed N ({self.N})")
        return self


class NeighborRingGenerator(BaseGenerator):
    @property
    def kind(self) -> str:
        return "neighbor_ring"

    @property
    def params_model(self):
        return NeighborRingParams

    def build(self, params: NeighborRingParams, rng: np.random.Generator) -> UncertaintyModel:
        return gen_neighbor_ring(params.N, params.W, params.tau, params.boundary)
