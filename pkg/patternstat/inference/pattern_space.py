"""
The weighted pattern space: weights p_sigma and truncated CvM / KS norms.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import e, factorial, sqrt
from typing import Dict, List, Mapping

import numpy as np

from ..permutations.permutation import MAX_PATTERN_LENGTH, Permutation, check_pattern_length, patterns_of_length
from ..utils.validators import ValidationError

MAX_ENUMERATION_LENGTH = MAX_PATTERN_LENGTH


def enumerate_patterns(k: int) -> List[Permutation]:
    """All patterns of length 1..k, lex order within each length."""
    check_pattern_length(k)
    return [sigma for m in range(1, k + 1) for sigma in patterns_of_length(m)]


@lru_cache(maxsize=None)
def pattern_lengths(k: int) -> np.ndarray:
    lengths = np.concatenate([np.full(factorial(m), m) for m in range(1, k + 1)]).astype(float)
    lengths.setflags(write=False)
    return lengths


@dataclass(frozen=True)
class WeightedSpace:
    """
    Weights p_sigma = gamma / (|sigma|!^2 2^|sigma|), gamma = 1 / (e^{1/2} - 1).

    The level masses q_k = gamma / (k! 2^k) are the zero-truncated Poisson(1/2)
    probabilities, so they sum to 1 over k >= 1.
    """
    gamma: float = 1.0 / (sqrt(e) - 1.0)

    def weight_of_length(self, m: int) -> float:
        return self.gamma / (factorial(m) ** 2 * 2.0 ** m)

    def level_mass(self, m: int) -> float:
        return self.gamma / (factorial(m) * 2.0 ** m)

    def weights(self, k: int) -> np.ndarray:
        """p_sigma aligned with enumerate_patterns(k)."""
        return _weights(self.gamma, k)


@lru_cache(maxsize=None)
def _weights(gamma: float, k: int) -> np.ndarray:
    weights = np.concatenate([np.full(factorial(m), gamma / (factorial(m) ** 2 * 2.0 ** m))
                              for m in range(1, k + 1)])
    weights.setflags(write=False)
    return weights


SPACE = WeightedSpace()


def weight(sigma: Permutation) -> float:
    return SPACE.weight_of_length(len(sigma))


@dataclass(frozen=True, eq=False)
class TruncatedVector:
    """A real vector indexed by all patterns of length <= max_len (enumerate_patterns order)."""
    max_len: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = len(pattern_lengths(self.max_len))
        if values.shape != (expected,):
            raise ValidationError(f"A truncated vector of length {self.max_len} needs "
                                  f"{expected} entries, got {values.shape}")
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_mapping(cls, mapping: Mapping[Permutation, float], k: int) -> "TruncatedVector":
        patterns = enumerate_patterns(k)
        missing = [str(sigma) for sigma in patterns if sigma not in mapping]
        if missing:
            raise ValidationError(f"Truncated vector is missing patterns {missing[:5]}")
        return cls(k, np.array([float(mapping[sigma]) for sigma in patterns]))

    def as_mapping(self) -> Dict[Permutation, float]:
        return dict(zip(enumerate_patterns(self.max_len), self.values.tolist()))

    def __sub__(self, other: "TruncatedVector") -> "TruncatedVector":
        if other.max_len != self.max_len:
            raise ValidationError("Truncated vectors of different lengths")
        return TruncatedVector(self.max_len, self.values - other.values)

    def __neg__(self) -> "TruncatedVector":
        return TruncatedVector(self.max_len, -self.values)


def _as_values(diff) -> tuple:
    if isinstance(diff, TruncatedVector):
        return diff.values, diff.max_len
    values = np.asarray(diff, dtype=float)
    lengths = pattern_lengths(MAX_ENUMERATION_LENGTH)
    k = int(lengths[len(values) - 1]) if 0 < len(values) <= len(lengths) else 0
    if k == 0 or len(pattern_lengths(k)) != len(values):
        raise ValidationError(f"{len(values)} entries do not form a complete truncated vector")
    return values, k


def cvm_norm_sq(diff, n: float) -> float:
    """n * sum p_sigma |sigma|^-2 diff(sigma)^2 over all patterns of the vector."""
    values, k = _as_values(diff)
    return float(n * np.sum(SPACE.weights(k) / pattern_lengths(k) ** 2 * values ** 2))


def ks_norm(diff, n: float) -> float:
    """sqrt(n) * max p_sigma^{1/2} |sigma|^-1 |diff(sigma)|."""
    values, k = _as_values(diff)
    return float(np.sqrt(n) * np.max(np.sqrt(SPACE.weights(k)) / pattern_lengths(k) * np.abs(values)))
