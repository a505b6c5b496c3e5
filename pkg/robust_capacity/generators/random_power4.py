"""
Random nominal channels with fourth-power concentrated rows, perturbed
toward the uniform row along S primitive uncertainties.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..channel import ChannelMatrix
from ..config import SolverConfig
from ..cost import CostConstraint, threshold_cost
from ..exceptions import ChannelError
from ..solver import solve
from ..uncertainty import PerturbationSet, SetKind, UncertaintyModel
from .base import BaseGenerator, point_rng

logger = logging.getLogger(__name__)

W_LOW = 1.0
W_HIGH = 6.7
MIN_NOMINAL_ENTRY = 1e-5


def random_power4_model(N: int, M: int, S: int, gamma: float,
                        rng: np.random.Generator) -> UncertaintyModel:
    """
    Q0_nm = W_nm^4 / sum_l W_nl^4 with W_nm ~ U[1, 6.7].

    Each input n is assigned one uncertainty s_n uniformly at random; row n of
    direction s_n is 1/M - Q0_n and every other row of that direction is zero.
    The set is the box [0, 1]^S cut by the unit ball, scaled by gamma.
    """
    W = rng.uniform(W_LOW, W_HIGH, size=(N, M))
    fourth = W ** 4
    nominal = fourth / fourth.sum(axis=1, keepdims=True)
    if nominal.min() < MIN_NOMINAL_ENTRY:
        raise ChannelError("nominal entry below 1e-5", min_entry=float(nominal.min()))

    logger.debug(f"random_power4: N={N}, M={M}, S={S}, gamma={gamma:g}, min nominal entry {nominal.min():.3e}")

    assignment = rng.integers(0, S, size=N)
    directions = np.zeros((S, N, M))
    directions[assignment, np.arange(N)] = 1.0 / M - nominal

    pset = PerturbationSet(SetKind.BOX_CAP_TWO_BALL, S, gamma)
    return UncertaintyModel(ChannelMatrix(nominal), directions, pset)


def gen_random_power4(N: int, M: int, S: int, gamma: float, seed: int,
                      cfg: Optional[SolverConfig] = None) -> Tuple[UncertaintyModel, CostConstraint]:
    """
    Random model plus the cost vector derived from its unconstrained solution.

    The unconstrained robust problem is solved first; inputs it uses with
    probability at least 0.05 get cost 50, the rest 0, with budget 1.
    """
    U = random_power4_model(N, M, S, gamma, point_rng(seed))
    report = solve(U, cfg)
    return U, threshold_cost(np.array(report.ergodic.p))


class RandomPower4Params(BaseModel):
    N: int = Field(default=50, ge=2)
    M: int = Field(default=50, ge=2)
    S: int = Field(default=5, ge=1)
    gamma: float = Field(default=0.5, ge=0, le=1)


class RandomPower4Generator(BaseGenerator):
    @property
    def kind(self) -> str:
        return "random_power4"

    @property
    def params_model(self):
        return RandomPower4Params

    def build(self, params: RandomPower4Params, rng: np.random.Generator) -> UncertaintyModel:
        return random_power4_model(params.N, params.M, params.S, params.gamma, rng)
