"""Binary symmetric channel with an interval of crossover probabilities."""

import numpy as np
from pydantic import BaseModel, Field

from ..channel import bsc_matrix
from ..exceptions import ValidationError
from ..uncertainty import PerturbationSet, SetKind, UncertaintyModel
from .base import BaseGenerator


def gen_bsc(beta_lo: float, beta_hi: float) -> UncertaintyModel:
    """
    BSC model Q(xi) = Q0 + xi * Q1 with xi in [-1, 1].

    Q0 is the BSC at the interval midpoint and Q1 moves the crossover
    probability by the half-width, so xi = -1 and xi = 1 give the endpoints.
    """
    if not 0 < beta_lo <= beta_hi < 1:
        raise ValidationError("beta", (beta_lo, beta_hi), "need 0 < beta_lo <= beta_hi < 1")
    mid = 0.5 * (beta_lo + beta_hi)
    half = 0.5 * (beta_hi - beta_lo)
    direction = np.array([[[-half, half], [half, -half]]])
    return UncertaintyModel(bsc_matrix(mid), direction, PerturbationSet(SetKind.INF_BALL, 1))


class BscParams(BaseModel):
    beta_lo: float = Field(gt=0, lt=1)
    beta_hi: float = Field(gt=0, lt=1)


class BscGenerator(BaseGenerator):
    @property
    def kind(self) -> str:
        return "bsc_interval"

    @property
    def params_model(self):
        return BscParams

    def build(self, params: BscParams, rng: np.random.Generator) -> UncertaintyModel:
        return gen_bsc(params.beta_lo, params.beta_hi)
