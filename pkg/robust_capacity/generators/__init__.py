from typing import List, Optional

from .base import BaseGenerator, point_rng


class GeneratorRegistry:
    def __init__(self):
        self.generators = []
        self._register_generators()

    def _register_generators(self):
        """Register all available generators"""
        from .bsc import BscGenerator
        from .neighbor_ring import NeighborRingGenerator
        from .random_power4 import RandomPower4Generator

        self.generators.extend([
            BscGenerator(),
            RandomPower4Generator(),
            NeighborRingGenerator(),
        ])

    def get_generator(self, kind: str) -> Optional[BaseGenerator]:
        """Find the generator registered under a kind"""
        for generator in self.generators:
            if generator.matches(kind):
                return generator
        return None

    def get_supported_kinds(self) -> List[str]:
        """Get list of registered generator kinds"""
        return [g.kind for g in self.generators]


__all__ = ["BaseGenerator", "GeneratorRegistry", "point_rng"]
