"""
Discrete permutons and their mixtures.

The permuton of sigma (size s) has density s * 1(sigma(ceil(s u)) = ceil(s v)):
pick a column i uniformly, then a point uniformly in the cell
(i, sigma(i)) of the s x s grid.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .base import CopulaModel, Size
from ..permutations.permutation import Permutation
from ..utils.validators import ParameterError

WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PermutonMixture(CopulaModel):
    """Mixture of discrete permutons with weights summing to 1."""

    components: Tuple[Tuple[Permutation, float], ...]
    source: str = ''

    name = 'permuton'
    parameters = {}

    def __post_init__(self):
        components = tuple((sigma, float(w)) for sigma, w in self.components)
        object.__setattr__(self, 'components', components)
        if not components:
            raise ParameterError("A permuton mixture needs at least one component")
        weights = np.array([w for _, w in components])
        if np.any(weights < 0):
            raise ParameterError("Permuton mixture weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ParameterError(f"Permuton mixture weights sum to {weights.sum()}, expected 1")

    @classmethod
    def of(cls, sigma: Permutation) -> "PermutonMixture":
        return cls(((sigma, 1.0),))

    @classmethod
    def from_weights(cls, permutations: Sequence[Permutation], weights: Sequence[float],
                     source: str = '') -> "PermutonMixture":
        return cls(tuple(zip(permutations, weights)), source)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.components])

    def draw_with_labels(self, size: Size, rng: np.random.Generator):
        """Points together with the index of the component each one came from."""
        shape = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
        r_component, r_cell, r_u, r_v = rng.random((4,) + shape)
        cumulative = np.cumsum(self.weights)
        cumulative[-1] = 1.0
        labels = np.minimum(np.searchsorted(cumulative, r_component, side='right'),
                            len(self.components) - 1)
        u = np.empty(shape)
        v = np.empty(shape)
        for j, (sigma, _) in enumerate(self.components):
            mask = labels == j
            if not mask.any():
                continue
            s = len(sigma)
            cell = np.minimum((r_cell[mask] * s).astype(np.int64), s - 1)
            u[mask] = (cell + r_u[mask]) / s
            v[mask] = (sigma.array[cell] + r_v[mask]) / s
        return u, v, labels

    def draw(self, size: Size, rng: np.random.Generator):
        u, v, _ = self.draw_with_labels(size, rng)
        return u, v

    def spec(self) -> str:
        if self.source:
            return f'permuton:{self.source}'
        return 'permuton:' + ';'.join(f'{w:g}*{sigma}' for sigma, w in self.components)

    def param_values(self):
        return {'components': [[str(sigma), w] for sigma, w in self.components]}
