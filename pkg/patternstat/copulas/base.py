"""
Common interface of the copula models
"""

from typing import Any, Dict, Tuple, Union

import numpy as np

Size = Union[int, Tuple[int, ...]]


class CopulaModel:
    """
    A bivariate model that can be sampled.

    draw() returns two arrays of the requested shape. For copulas these are
    (u, v) in the unit square; delay models return raw (x, x + d) points,
    which induce the same rank permutations as their copula.
    """

    name: str = ''
    parameters: Dict[str, Dict[str, Any]] = {}

    def draw(self, size: Size, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def spec(self) -> str:
        """Model string of the CLI mini-language, e.g. 'fgm:0.5'."""
        raise NotImplementedError

    def param_values(self) -> Dict[str, Any]:
        return {key: getattr(self, key) for key in self.parameters}

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name, 'spec': self.spec(), 'parameters': self.param_values()}

    def __str__(self) -> str:
        return self.spec()
