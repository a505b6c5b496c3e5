"""
Robust capacity of discrete memoryless channels under law-matrix uncertainty.

Solves max_p min_xi I(p, Q(xi)) with a prox-method, plus closed-form
oracles, upper-bound certificates and an average-cost extension.
"""

from .channel import ChannelMatrix, InputDistribution, mutual_information, grad_p, is_weakly_symmetric
from .config import Config, SolverConfig, RunConfig, get_config, set_config, reset_config
from .cost import CostConstraint, solve_with_cost, lambda_cap, g_of_lambda, threshold_cost
from .oracles import (
    BscInterval,
    KlRow,
    blahut_arimoto,
    bsc_robust_capacity,
    kl_symmetric_dual,
    upper_bound_weakly_symmetric,
    dual_certificate,
)
from .prox import SaddlePoint, Geometry, DgfKind, prox_joint, bregman_divergence, euclidean_projection
from .solver import SolverReport, Termination, solve, gap_estimate, step_constants, lipschitz_bounds
from .uncertainty import SetKind, PerturbationSet, UncertaintyModel, assemble, grad_xi, robust_objective
from .exceptions import (
    RobustCapacityError,
    ConfigurationError,
    ValidationError,
    DimensionMismatchError,
    ChannelError,
    NegativeEntryError,
    PerturbationOutOfSetError,
    ProxError,
    ConvergenceError,
    NonFiniteIterateError,
    CostModelError,
    ScenarioError,
    UnknownGeneratorError,
)

__version__ = "0.1.0"
__all__ = [
    "ChannelMatrix",
    "InputDistribution",
    "mutual_information",
    "grad_p",
    "is_weakly_symmetric",
    "Config",
    "SolverConfig",
    "RunConfig",
    "get_config",
    "set_config",
    "reset_config",
    "CostConstraint",
    "solve_with_cost",
    "lambda_cap",
    "g_of_lambda",
    "threshold_cost",
    "BscInterval",
    "KlRow",
    "blahut_arimoto",
    "bsc_robust_capacity",
    "kl_symmetric_dual",
    "upper_bound_weakly_symmetric",
    "dual_certificate",
    "SaddlePoint",
    "Geometry",
    "DgfKind",
    "prox_joint",
    "bregman_divergence",
    "euclidean_projection",
    "SolverReport",
    "Termination",
    "solve",
    "gap_estimate",
    "step_constants",
    "lipschitz_bounds",
    "SetKind",
    "PerturbationSet",
    "UncertaintyModel",
    "assemble",
    "grad_xi",
    "robust_objective",
    "RobustCapacityError",
    "ConfigurationError",
    "ValidationError",
    "DimensionMismatchError",
    "ChannelError",
    "NegativeEntryError",
    "PerturbationOutOfSetError",
    "ProxError",
    "ConvergenceError",
    "NonFiniteIterateError",
    "CostModelError",
    "ScenarioError",
    "UnknownGeneratorError",
]
