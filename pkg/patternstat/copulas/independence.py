from dataclasses import dataclass

import numpy as np

from .base import CopulaModel, Size


@dataclass(frozen=True)
class Independence(CopulaModel):
    """The product copula C(u, v) = uv."""

    name = 'indep'
    parameters = {}

    def draw(self, size: Size, rng: np.random.Generator):
        u = rng.random(size)
        w = rng.random(size)
        return u, w

    def cdf(self, u, v):
        return np.asarray(u) * np.asarray(v)

    def spec(self) -> str:
        return 'indep'
