from abc import ABC, abstractmethod
from typing import Any, Dict, List, Type

import numpy as np
from pydantic import BaseModel

from ..uncertainty import UncertaintyModel


def point_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream for one sweep point, keyed by (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


class BaseGenerator(ABC):
    """Base class for all uncertainty model generators"""

    @property
    @abstractmethod
    def kind(self) -> str:
        pass

    @property
    @abstractmethod
    def params_model(self) -> Type[BaseModel]:
        """Pydantic model validating this generator's parameters"""
        pass

    @abstractmethod
    def build(self, params: BaseModel, rng: np.random.Generator) -> UncertaintyModel:
        pass

    def parse(self, params: Dict[str, Any]) -> BaseModel:
        return self.params_model(**params)

    def matches(self, kind: str) -> bool:
        return kind == self.kind

    @property
    def sweepable(self) -> List[str]:
        """Parameter names a sweep may vary"""
        return list(self.params_model.model_fields)
