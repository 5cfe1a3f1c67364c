"""
Clayton copula C(u, v) = max(u^-kappa + v^-kappa - 1, 0)^(-1/kappa)
"""

from dataclasses import dataclass

import numpy as np

from .base import CopulaModel, Size
from ..utils.validators import ParameterError


@dataclass(frozen=True)
class Clayton(CopulaModel):

    kappa: float = 1.0

    name = 'clayton'
    parameters = {
        'kappa': {'display_name': 'Dependence parameter', 'default': 1.0, 'range': (-1.0, float('inf'))},
    }

    def __post_init__(self):
        if self.kappa < -1.0 or self.kappa == 0.0 or not np.isfinite(self.kappa):
            raise ParameterError(f"Clayton parameter kappa must lie in [-1, inf) without 0, got {self.kappa}")

    def draw(self, size: Size, rng: np.random.Generator):
        u = rng.random(size)
        w = rng.random(size)
        if self.kappa == -1.0:
            # lower Frechet bound
            return u, 1.0 - u
        kappa = self.kappa
        with np.errstate(divide='ignore', over='ignore'):
            base = 1.0 + u ** (-kappa) * (w ** (-kappa / (1.0 + kappa)) - 1.0)
            v = np.where(base > 0.0, np.maximum(base, 0.0) ** (-1.0 / kappa), 0.0)
        return u, np.clip(v, 0.0, 1.0)

    def cdf(self, u, v):
        u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
        kappa = self.kappa
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            base = np.maximum(u ** (-kappa) + v ** (-kappa) - 1.0, 0.0)
            value = base ** (-1.0 / kappa)
        if kappa > 0:
            value = np.where((u == 0) | (v == 0), 0.0, value)
        else:
            value = np.where(base == 0.0, 0.0, value)
        return value

    def spec(self) -> str:
        return f'clayton:{self.kappa:g}'
