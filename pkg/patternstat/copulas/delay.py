"""
Delay models: (X, X + D) with X uniform on [0, 1] and D independent of X.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base import CopulaModel, Size
from ..utils.validators import ParameterError


def zero_delay(p: np.ndarray) -> np.ndarray:
    """Quantile function of the point mass at 0."""
    return np.zeros_like(p)


@dataclass(frozen=True)
class Delay(CopulaModel):
    """Delay copula of an arbitrary delay law given by its quantile function."""

    quantile: Callable[[np.ndarray], np.ndarray] = zero_delay
    label: str = 'custom'

    name = 'delay'
    parameters = {}

    def draw(self, size: Size, rng: np.random.Generator):
        x = rng.random(size)
        d = np.asarray(self.quantile(rng.random(size)), dtype=float)
        if np.any(d < 0):
            raise ParameterError("Delay quantile function returned negative delays")
        return x, x + d

    def draw_with_delays(self, size: Size, rng: np.random.Generator):
        x, y = self.draw(size, rng)
        return x, y, y - x

    def spec(self) -> str:
        return f'delay:{self.label}'


@dataclass(frozen=True)
class DelayExp(CopulaModel):
    """Delays exponentially distributed with rate theta."""

    theta: float = 1.0

    name = 'delay-exp'
    parameters = {
        'theta': {'display_name': 'Delay rate', 'default': 1.0, 'range': (0.0, float('inf'))},
    }

    def __post_init__(self):
        if not self.theta > 0 or not np.isfinite(self.theta):
            raise ParameterError(f"Exponential delay rate must be positive, got {self.theta}")

    def draw(self, size: Size, rng: np.random.Generator):
        x, y, _ = self.draw_with_delays(size, rng)
        return x, y

    def draw_with_delays(self, size: Size, rng: np.random.Generator):
        x = rng.random(size)
        d = rng.exponential(1.0 / self.theta, size)
        return x, x + d, d

    def spec(self) -> str:
        return f'delay-exp:{self.theta:g}'
