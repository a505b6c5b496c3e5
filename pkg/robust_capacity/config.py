"""
Configuration management for the robust capacity package.
"""

import os
from typing import Dict, Optional, Any
from dataclasses import dataclass, field, asdict, fields

from .exceptions import ConfigurationError


@dataclass
class SolverConfig:
    """Prox-method solver configuration."""
    epsilon: float = 1e-3  # target duality gap, nats
    max_iters: int = 20000
    gamma0: float = 1.0
    gamma_growth: float = 1.5
    gamma_min: float = 1e-8
    gamma_cap: float = 1e4
    delta: float = 1e-3
    fixed_gamma: Optional[float] = None
    use_theory_step: bool = False
    gap_check_every: int = 25
    seed: int = 0
    tau_floor: float = 1e-7
    max_inner_iters: int = 50
    fixed_point_tol: float = 1e-12
    ba_tol: float = 1e-8
    ba_max_iter: int = 100000
    lower_leg_iters: int = 200
    lower_leg_tol: float = 1e-9
    location_tol: float = 1e-2  # best responses vs ergodic iterate, inf disables
    record_iterates: bool = False

    @property
    def adaptive(self) -> bool:
        """Whether the step size follows the grow/shrink heuristic."""
        return self.fixed_gamma is None and not self.use_theory_step

    def errors(self) -> list:
        """Return the list of violated constraints (empty if valid)."""
        errors = []

        if not self.epsilon > 0:
            errors.append("solver epsilon must be positive")

        if self.max_iters < 1:
            errors.append("solver max_iters must be at least 1")

        if not self.gamma0 > 0:
            errors.append("solver gamma0 must be positive")

        if not self.gamma_growth > 1:
            errors.append("solver gamma_growth must be greater than 1")

        if not 0 < self.gamma_min <= self.gamma_cap:
            errors.append("solver gamma_min must be positive and not above gamma_cap")

        if not self.delta > 0:
            errors.append("solver delta must be positive")

        if self.fixed_gamma is not None and not self.fixed_gamma > 0:
            errors.append("solver fixed_gamma must be positive when set")

        if self.gap_check_every < 1:
            errors.append("solver gap_check_every must be at least 1")

        if not self.tau_floor > 0:
            errors.append("solver tau_floor must be positive")

        if self.max_inner_iters < 2:
            errors.append("solver max_inner_iters must be at least 2")

        if not self.ba_tol > 0:
            errors.append("solver ba_tol must be positive")

        if not self.location_tol > 0:
            errors.append("solver location_tol must be positive")

        if self.lower_leg_iters < 1:
            errors.append("solver lower_leg_iters must be at least 1")

        return errors

    def validate(self) -> None:
        """Validate solver settings."""
        errors = self.errors()
        if errors:
            raise ConfigurationError(f"Solver configuration validation failed: {'; '.join(errors)}", errors)

    def replace(self, **changes: Any) -> "SolverConfig":
        """Return a copy with the given fields changed (None values are ignored)."""
        data = asdict(self)
        unknown = set(changes) - set(data)
        if unknown:
            raise ConfigurationError(f"Unknown solver settings: {', '.join(sorted(unknown))}")
        data.update({k: v for k, v in changes.items() if v is not None})
        return SolverConfig(**data)


@dataclass
class RunConfig:
    """Configuration for scenario execution and output."""
    parallelism: int = field(default_factory=lambda: os.cpu_count() or 1)
    output_dir: str = "results"
    bits: bool = False
    log_level: str = "info"


_LOG_LEVELS = ("debug", "info", "warning", "error")


@dataclass
class Config:
    """Main configuration class."""
    solver: SolverConfig = field(default_factory=SolverConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        """Load configuration from environment variables."""
        self._load_from_env()

    def _load_from_env(self):
        """Load configuration from environment variables."""
        if os.getenv('RCC_LOG'):
            self.run.log_level = os.getenv('RCC_LOG').strip().lower()

        if os.getenv('RCC_OUTPUT_DIR'):
            self.run.output_dir = os.getenv('RCC_OUTPUT_DIR')

        if os.getenv('RCC_PARALLELISM'):
            self.run.parallelism = int(os.getenv('RCC_PARALLELISM'))

        if os.getenv('RCC_BITS'):
            self.run.bits = os.getenv('RCC_BITS').strip().lower() in ('1', 'true', 'yes')

        # Solver defaults
        if os.getenv('RCC_EPSILON'):
            self.solver.epsilon = float(os.getenv('RCC_EPSILON'))

        if os.getenv('RCC_MAX_ITERS'):
            self.solver.max_iters = int(os.getenv('RCC_MAX_ITERS'))

        if os.getenv('RCC_DELTA'):
            self.solver.delta = float(os.getenv('RCC_DELTA'))

        if os.getenv('RCC_SEED'):
            self.solver.seed = int(os.getenv('RCC_SEED'))

    def validate(self) -> None:
        """Validate configuration values."""
        errors = self.solver.errors()

        if self.run.parallelism <= 0:
            errors.append("run parallelism must be positive")

        if not self.run.output_dir:
            errors.append("run output_dir cannot be empty")

        if self.run.log_level not in _LOG_LEVELS:
            errors.append(f"log level must be one of: {', '.join(_LOG_LEVELS)}")

        if errors:
            raise ConfigurationError(f"Configuration validation failed: {'; '.join(errors)}", errors)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Config':
        """Create configuration from dictionary."""
        config = cls()

        try:
            if 'solver' in data:
                config.solver = SolverConfig(**data['solver'])

            if 'run' in data:
                config.run = RunConfig(**data['run'])
        except TypeError as e:
            raise ConfigurationError(f"Unknown configuration field: {e}") from e

        return config

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return {
            'solver': {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
            'run': {f.name: getattr(self.run, f.name) for f in fields(self.run)},
        }


# Global configuration instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = Config()
        _config.validate()
    return _config


def set_config(config: Config) -> None:
    """Set the global configuration instance."""
    global _config
    config.validate()
    _config = config


def reset_config() -> None:
    """Reset the global configuration instance."""
    global _config
    _config = None
