"""
Farlie-Gumbel-Morgenstern copula C(u, v) = uv + theta uv (1 - u)(1 - v)
"""

from dataclasses import dataclass

import numpy as np

from .base import CopulaModel, Size
from ..utils.validators import ParameterError

DEGENERATE_COEFFICIENT = 1e-12


@dataclass(frozen=True)
class FGM(CopulaModel):

    theta: float = 0.0

    name = 'fgm'
    parameters = {
        'theta': {'display_name': 'Dependence parameter', 'default': 0.0, 'range': (-1.0, 1.0)},
    }

    def __post_init__(self):
        if not -1.0 <= self.theta <= 1.0:
            raise ParameterError(f"FGM parameter theta must lie in [-1, 1], got {self.theta}")

    def draw(self, size: Size, rng: np.random.Generator):
        """
        Conditional inversion: with a = theta (1 - 2u), v solves
        a v^2 - (1 + a) v + w = 0; the root in [0, 1] is taken in the
        cancellation-free form 2w / ((1 + a) + sqrt((1 + a)^2 - 4 a w)).
        """
        u = rng.random(size)
        w = rng.random(size)
        a = self.theta * (1.0 - 2.0 * u)
        root = np.sqrt((1.0 + a) ** 2 - 4.0 * a * w)
        v = np.where(np.abs(a) < DEGENERATE_COEFFICIENT, w, 2.0 * w / ((1.0 + a) + root))
        return u, np.clip(v, 0.0, 1.0)

    def cdf(self, u, v):
        u, v = np.asarray(u), np.asarray(v)
        return u * v + self.theta * u * v * (1.0 - u) * (1.0 - v)

    def spec(self) -> str:
        return f'fgm:{self.theta:g}'

    def pattern_probabilities(self, m: int):
        """C^S over S_m in lex order for m <= 3, None for longer patterns."""
        t = self.theta
        if m == 1:
            return np.array([1.0])
        if m == 2:
            return np.array([0.5 + t / 9.0, 0.5 - t / 9.0])
        if m == 3:
            up = 1.0 / 6.0 + t / 12.0 + t * t / 100.0
            near_up = 1.0 / 6.0 + t / 24.0 - t * t / 200.0
            near_down = 1.0 / 6.0 - t / 24.0 - t * t / 200.0
            down = 1.0 / 6.0 - t / 12.0 + t * t / 100.0
            return np.array([up, near_up, near_up, near_down, near_down, down])
        return None
