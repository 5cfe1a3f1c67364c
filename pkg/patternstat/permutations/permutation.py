"""
Permutations in one-line notation and rank reduction of bivariate data
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import permutations as _permutations
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..utils.rng import SeedLike, as_generator
from ..utils.validators import ResourceError, SizeError, TiesError, ValidationError

logger = logging.getLogger(__name__)

MAX_PATTERN_LENGTH = 8


@dataclass(frozen=True, order=True)
class Permutation:
    """A bijection of {1, ..., n} in one-line notation (pi(1), ..., pi(n))."""
    values: Tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, 'values', values)
        n = len(values)
        if n < 1:
            raise ValidationError("A permutation needs at least one entry")
        if sorted(values) != list(range(1, n + 1)):
            raise ValidationError(f"{values} is not a permutation of 1..{n}")

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """
        Parse '5 4 1 3 6 2' (whitespace or comma separated) or the compact
        form '541362' (only unambiguous for n <= 9).
        """
        text = text.strip()
        tokens = text.replace(',', ' ').split()
        if len(tokens) == 1 and len(tokens[0]) > 1 and tokens[0].isdigit():
            tokens = list(tokens[0])
        try:
            return cls(tuple(int(token) for token in tokens))
        except ValueError as e:
            raise ValidationError(f"Cannot parse permutation {text!r}: {e}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __str__(self) -> str:
        if len(self.values) <= 9:
            return ''.join(str(v) for v in self.values)
        return ' '.join(str(v) for v in self.values)

    @cached_property
    def array(self) -> np.ndarray:
        """0-based values as an int array."""
        array = np.asarray(self.values, dtype=np.int64) - 1
        array.setflags(write=False)
        return array

    def inverse(self) -> "Permutation":
        inverse = np.empty(len(self), dtype=np.int64)
        inverse[self.array] = np.arange(1, len(self) + 1)
        return Permutation(tuple(inverse))

    def reverse(self) -> "Permutation":
        """Positions read right to left: pi(n), ..., pi(1)."""
        return Permutation(self.values[::-1])

    def complement(self) -> "Permutation":
        """Values flipped: n + 1 - pi(i)."""
        n = len(self)
        return Permutation(tuple(n + 1 - v for v in self.values))

    def compose(self, other: "Permutation") -> "Permutation":
        """(self o other)(i) = self(other(i))."""
        if len(other) != len(self):
            raise SizeError("Only permutations of equal length can be composed")
        return Permutation(tuple(self.values[j - 1] for j in other.values))

    def is_involution(self) -> bool:
        return self.inverse() == self


def invert(pi: Permutation) -> Permutation:
    """Group inverse of pi."""
    return pi.inverse()


def _tied_indices(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind='stable')
    sorted_values = values[order]
    tied = np.zeros(len(values), dtype=bool)
    equal = sorted_values[1:] == sorted_values[:-1]
    tied[1:] |= equal
    tied[:-1] |= equal
    return np.sort(order[tied])


def _ranks(values: np.ndarray, coordinate: str, break_ties: bool,
           rng: Optional[np.random.Generator]) -> np.ndarray:
    """0-based ranks of a tie-free sequence."""
    tied = _tied_indices(values)
    if len(tied):
        if not break_ties:
            raise TiesError(coordinate, tied)
        logger.warning(f"Breaking {len(tied)} tied {coordinate}-values at random; "
                       f"this changes the statistic")
        order = np.lexsort((rng.random(len(values)), values))
    else:
        order = np.argsort(values, kind='stable')
    ranks = np.empty(len(values), dtype=np.int64)
    ranks[order] = np.arange(len(values))
    return ranks


def rank_permutation(xs: Sequence[float], ys: Sequence[float],
                     break_ties: bool = False, seed: Optional[SeedLike] = None) -> Permutation:
    """
    Rank permutation of a bivariate sample.

    Sorting the points by x and reading off the y-ranks gives
    pi = ra_y o ra_x^{-1}.

    Args:
        xs: first coordinates
        ys: second coordinates
        break_ties: break ties by a seeded random perturbation instead of failing
        seed: seed used when break_ties is set

    Returns:
        The rank permutation

    Raises:
        TiesError: If xs or ys contains duplicates and break_ties is False
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise SizeError(f"Coordinates must be two sequences of equal length, got {xs.shape} and {ys.shape}")
    if len(xs) < 1:
        raise SizeError("At least one point is required")
    rng = as_generator(seed) if break_ties else None
    x_ranks = _ranks(xs, 'x', break_ties, rng)
    y_ranks = _ranks(ys, 'y', break_ties, rng)
    by_x = np.empty(len(xs), dtype=np.int64)
    by_x[x_ranks] = np.arange(len(xs))
    return Permutation(tuple(y_ranks[by_x] + 1))


def pattern_of(values: Iterable[float]) -> Permutation:
    """The pattern sigma order-isomorphic to a sequence of distinct values."""
    values = np.asarray(list(values), dtype=float)
    if len(values) < 1:
        raise SizeError("pattern_of needs at least one value")
    tied = _tied_indices(values)
    if len(tied):
        raise TiesError('values', tied)
    return Permutation(tuple(np.argsort(np.argsort(values, kind='stable')) + 1))


def check_pattern_length(k: int) -> int:
    """
    Guard for computations over all patterns of length <= k.

    Raises:
        ValidationError: If k < 1
        ResourceError: If k > MAX_PATTERN_LENGTH
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > MAX_PATTERN_LENGTH:
        raise ResourceError(f"Enumerating all patterns up to length {k} is not supported "
                            f"(maximum {MAX_PATTERN_LENGTH})")
    return k


@lru_cache(maxsize=None)
def patterns_of_length(m: int) -> Tuple[Permutation, ...]:
    """All of S_m in lexicographic order."""
    return tuple(Permutation(p) for p in _permutations(range(1, m + 1)))


def random_permutation(n: int, seed: SeedLike) -> Permutation:
    """Uniformly random permutation of size n."""
    rng = as_generator(seed)
    return Permutation(tuple(rng.permutation(n) + 1))
