"""
Exact and Monte Carlo pattern frequencies t(pi, sigma)

Exact counting enumerates the m-subsets of positions in lexicographic
order and classifies each one by the order type of its values. The
classification is vectorized: for m <= 6 every subset is encoded by its
pairwise comparisons and looked up in a table of S_m, longer patterns are
encoded by their rank vectors.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import chain, combinations, islice
from math import comb, factorial
from typing import Dict, Iterator, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .permutation import Permutation, check_pattern_length, patterns_of_length
from ..utils.rng import replicate_rng
from ..utils.validators import ResourceError, SizeError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_EXACT_BUDGET = 10_000_000
DEFAULT_DRAWS_FACTOR = 10
CHUNK_ROWS = 1 << 18
CACHED_INDEX_ROWS = 1 << 22
MAX_PAIRWISE_LENGTH = 6
QUADRATIC_LEVEL3_ABOVE = 60
QUADRATIC_LEVEL3_MAX = 3000

Frequency = Union[Fraction, float]


@dataclass(frozen=True)
class PatternFrequency:
    """Exact occurrence count of one pattern."""
    count: int
    subsets: int

    @property
    def frequency(self) -> Fraction:
        if self.subsets == 0:
            return Fraction(0)
        return Fraction(self.count, self.subsets)

    def __float__(self) -> float:
        return float(self.frequency)


@dataclass(frozen=True)
class SubsetSamplerPlan:
    """Number of random subsets drawn by the Monte Carlo counter, and its seed."""
    draws: int
    seed: int

    def __post_init__(self):
        if self.draws < 1:
            raise ValidationError(f"The number of random subsets must be >= 1, got {self.draws}")

    @classmethod
    def default(cls, n: int, k: int, seed: int, factor: int = DEFAULT_DRAWS_FACTOR) -> "SubsetSamplerPlan":
        return cls(draws=max(1, factor * n * k), seed=seed)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    standard_error: float
    draws: int


# ---------------------------------------------------------------------------
# subset classification kernels

@lru_cache(maxsize=4)
def _subset_index(n: int, m: int) -> np.ndarray:
    """All m-subsets of range(n) in lexicographic order, one per row."""
    total = comb(n, m)
    flat = np.fromiter(chain.from_iterable(combinations(range(n), m)), dtype=_index_dtype(n), count=total * m)
    index = flat.reshape(total, m)
    index.setflags(write=False)
    return index


def _index_dtype(n: int):
    return np.uint8 if n <= 256 else np.int32


def _subset_blocks(n: int, m: int) -> Iterator[np.ndarray]:
    """
    The m-subsets of range(n) in lexicographic order, CHUNK_ROWS rows at a time.

    Small enumerations come from the cached index; larger ones are generated
    block by block so that only one block is held in memory.
    """
    total = comb(n, m)
    if total <= CACHED_INDEX_ROWS:
        index = _subset_index(n, m)
        for start in range(0, total, CHUNK_ROWS):
            yield index[start:start + CHUNK_ROWS]
        return
    subsets = combinations(range(n), m)
    while True:
        flat = np.fromiter(chain.from_iterable(islice(subsets, CHUNK_ROWS)), dtype=_index_dtype(n))
        if not flat.size:
            return
        yield flat.reshape(-1, m)


@lru_cache(maxsize=None)
def _pairs(m: int) -> Tuple[Tuple[int, int], ...]:
    return tuple(combinations(range(m), 2))


@lru_cache(maxsize=None)
def _pairwise_table(m: int) -> np.ndarray:
    """Maps the pairwise-comparison code of a subset to the lex index in S_m."""
    table = np.full(1 << len(_pairs(m)), -1, dtype=np.int32)
    for index, sigma in enumerate(patterns_of_length(m)):
        code = sum(1 << bit for bit, (i, j) in enumerate(_pairs(m)) if sigma[i] > sigma[j])
        table[code] = index
    return table


@lru_cache(maxsize=None)
def _rank_keys(m: int) -> np.ndarray:
    weights = m ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return np.array([(np.asarray(s.values) - 1) @ weights for s in patterns_of_length(m)], dtype=np.int64)


def classify(block: np.ndarray) -> np.ndarray:
    """
    Lex index in S_m of the order type of every row of a (rows, m) value block.
    """
    m = block.shape[1]
    if m == 1:
        return np.zeros(len(block), dtype=np.int64)
    if m <= MAX_PAIRWISE_LENGTH:
        code = np.zeros(len(block), dtype=np.int32)
        for bit, (i, j) in enumerate(_pairs(m)):
            code |= (block[:, i] > block[:, j]).astype(np.int32) << bit
        return _pairwise_table(m)[code]
    ranks = np.argsort(np.argsort(block, axis=1), axis=1)
    weights = m ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return np.searchsorted(_rank_keys(m), ranks @ weights)


def _level_counts(values: np.ndarray, m: int, workers: int = 1) -> np.ndarray:
    """Occurrence counts of every sigma in S_m (lex order) among the m-subsets."""
    n = len(values)
    size = factorial(m)
    if m > n:
        return np.zeros(size, dtype=np.int64)
    if m == 1:
        return np.array([n], dtype=np.int64)
    if m == 3 and QUADRATIC_LEVEL3_ABOVE < n <= QUADRATIC_LEVEL3_MAX:
        return _level3_counts_quadratic(values)

    def count_block(block: np.ndarray) -> np.ndarray:
        return np.bincount(classify(values[block]), minlength=size)

    counts = np.zeros(size, dtype=np.int64)
    blocks = _subset_blocks(n, m)
    if workers > 1 and comb(n, m) > CHUNK_ROWS:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            while True:
                wave = list(islice(blocks, workers))
                if not wave:
                    break
                for partial in executor.map(count_block, wave):
                    counts += partial
    else:
        for block in blocks:
            counts += count_block(block)
    return counts


def _quadrant_counts(values: np.ndarray):
    """Per position j: #left-lower, #right-lower, #left-higher, #right-higher points."""
    positions = np.arange(len(values))
    before = positions[None, :] < positions[:, None]
    below = values[None, :] < values[:, None]
    left_lower = (before & below).sum(axis=1)
    right_lower = below.sum(axis=1) - left_lower
    right_higher = (len(values) - 1 - positions) - right_lower
    left_higher = positions - left_lower
    return left_lower, right_lower, left_higher, right_higher


def _level3_counts_quadratic(values: np.ndarray) -> np.ndarray:
    """
    Occurrence counts of S_3 in O(n^2) time and memory.

    Classifying each triple by its middle position gives 123, 321 and the sums
    132 + 231, 213 + 312 from quadrant counts; 132 and 213 are counted over
    ascending pairs (i, k) with prefix counts of the values lying between them.
    """
    n = len(values)
    left_lower, right_lower, left_higher, right_higher = _quadrant_counts(values)
    n123 = int(np.sum(left_lower * right_higher))
    n321 = int(np.sum(left_higher * right_lower))
    middle_highest = int(np.sum(left_lower * right_lower))
    middle_lowest = int(np.sum(left_higher * right_higher))

    # prefix[p, v] = #{q < p : values[q] < v}
    prefix = np.zeros((n + 1, n + 1), dtype=np.int64)
    prefix[1:] = np.cumsum(values[:, None] < np.arange(n + 1)[None, :], axis=0)
    i = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    ascending = (i < k) & (values[:, None] < values[None, :])
    v_k = values[None, :]
    v_i = values[:, None]
    between = k - i - 1
    # j strictly between i and k with values[j] > values[k]
    above_k = between - (prefix[k, v_k + 1] - prefix[i + 1, v_k + 1])
    # j strictly between i and k with values[j] < values[i]
    below_i = prefix[k, v_i] - prefix[i + 1, v_i]
    n132 = int(np.sum(np.where(ascending, above_k, 0)))
    n213 = int(np.sum(np.where(ascending, below_i, 0)))
    return np.array([n123, n132, n213, middle_highest - n132, middle_lowest - n213, n321], dtype=np.int64)


def _draw_subsets(n: int, m: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """
    Independent uniformly random m-subsets of range(n), sorted within rows.

    Rows containing a repeated position are redrawn until all are proper subsets.
    """
    subsets = np.sort(rng.integers(0, n, size=(draws, m)), axis=1)
    bad = (np.diff(subsets, axis=1) == 0).any(axis=1)
    while bad.any():
        subsets[bad] = np.sort(rng.integers(0, n, size=(int(bad.sum()), m)), axis=1)
        bad = (np.diff(subsets, axis=1) == 0).any(axis=1)
    return subsets


def _matches(block: np.ndarray, sigma: Permutation) -> np.ndarray:
    """Rows of a value block whose order type is sigma."""
    by_value = block[:, sigma.inverse().array]
    return np.all(np.diff(by_value, axis=1) > 0, axis=1)


# ---------------------------------------------------------------------------
# single-pattern counts

def count_exact(pi: Permutation, sigma: Permutation, budget: int = DEFAULT_EXACT_BUDGET) -> PatternFrequency:
    """
    Exact frequency t(pi, sigma) = #{A : pi(A) ~ sigma} / C(n, m).

    t is 0 when n < m.

    Raises:
        ResourceError: If C(n, m) exceeds budget
    """
    n, m = len(pi), len(sigma)
    if m > n:
        return PatternFrequency(0, 0)
    if m == 1:
        return PatternFrequency(n, n)
    total = comb(n, m)
    if total > budget:
        raise ResourceError(f"Exact count of a length-{m} pattern needs C({n},{m}) = {total} subset "
                            f"classifications, above the budget of {budget}")
    count = 0
    for block in _subset_blocks(n, m):
        count += int(_matches(pi.array[block], sigma).sum())
    return PatternFrequency(count, total)


def count_inversions(pi: Permutation) -> PatternFrequency:
    """
    Inversion frequency t(pi, 21) by bottom-up merge sort in O(n log n).

    Raises:
        SizeError: If n < 2
    """
    n = len(pi)
    if n < 2:
        raise SizeError(f"Inversion counting needs n >= 2, got n={n}")
    values = list(pi.values)
    buffer = [0] * n
    inversions = 0
    width = 1
    while width < n:
        for left in range(0, n, 2 * width):
            mid = min(left + width, n)
            right = min(left + 2 * width, n)
            i, j, out = left, mid, left
            while i < mid and j < right:
                if values[i] <= values[j]:
                    buffer[out] = values[i]
                    i += 1
                else:
                    buffer[out] = values[j]
                    inversions += mid - i
                    j += 1
                out += 1
            buffer[out:right] = values[i:mid] + values[j:right]
        values, buffer = buffer, values
        width *= 2
    return PatternFrequency(inversions, comb(n, 2))


def count_monte_carlo(pi: Permutation, sigma: Permutation, plan: SubsetSamplerPlan) -> MonteCarloEstimate:
    """
    Unbiased estimate of t(pi, sigma) from plan.draws random |sigma|-subsets.

    Raises:
        SizeError: If n < |sigma|
    """
    n, m = len(pi), len(sigma)
    if n < m:
        raise SizeError(f"Pattern of length {m} cannot occur in a permutation of size {n}")
    if m == 1:
        return MonteCarloEstimate(1.0, 0.0, plan.draws)
    rng = replicate_rng(plan.seed)
    hits = 0
    done = 0
    rows = max(1, CHUNK_ROWS // m)
    while done < plan.draws:
        batch = min(rows, plan.draws - done)
        subsets = _draw_subsets(n, m, batch, rng)
        hits += int(_matches(pi.array[subsets], sigma).sum())
        done += batch
    p = hits / plan.draws
    return MonteCarloEstimate(p, float(np.sqrt(p * (1.0 - p) / plan.draws)), plan.draws)


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True, eq=False)
class FrequencyProfile:
    """
    Pattern frequencies of one permutation over all patterns of length <= max_len.

    counts[m-1] holds the occurrence (exact) or hit (Monte Carlo) counts of
    S_m in lexicographic order; denominators[m-1] is C(n, m) or the number of
    random subsets, and 0 when m > n.
    """
    max_len: int
    source_size: int
    mode: str
    counts: Tuple[np.ndarray, ...]
    denominators: Tuple[int, ...]
    draws: Optional[int] = None

    @property
    def is_exact(self) -> bool:
        return self.mode == 'exact'

    @property
    def mode_label(self) -> str:
        return 'exact' if self.is_exact else f'monte_carlo({self.draws})'

    def level(self, m: int) -> np.ndarray:
        """Frequencies of S_m in lexicographic order as floats."""
        if not 1 <= m <= self.max_len:
            raise ValidationError(f"Length {m} is outside this profile (max {self.max_len})")
        denominator = self.denominators[m - 1]
        if denominator == 0:
            return np.zeros(factorial(m))
        return self.counts[m - 1] / denominator

    def frequency(self, sigma: Permutation) -> Frequency:
        m = len(sigma)
        if m > self.max_len:
            raise ValidationError(f"Pattern {sigma} is longer than the profile (max {self.max_len})")
        denominator = self.denominators[m - 1]
        count = int(self.counts[m - 1][patterns_of_length(m).index(sigma)])
        if not self.is_exact:
            return count / denominator if denominator else 0.0
        return Fraction(count, denominator) if denominator else Fraction(0)

    @property
    def entries(self) -> Dict[Permutation, Frequency]:
        return {sigma: self.frequency(sigma)
                for m in range(1, self.max_len + 1) for sigma in patterns_of_length(m)}

    def vector(self) -> np.ndarray:
        """All frequencies over S_<=max_len, lengths ascending, lex within a length."""
        return np.concatenate([self.level(m) for m in range(1, self.max_len + 1)])

    def standard_errors(self) -> np.ndarray:
        """Binomial standard errors per entry (zeros in exact mode)."""
        if self.is_exact:
            return np.zeros(sum(factorial(m) for m in range(1, self.max_len + 1)))
        errors = []
        for m in range(1, self.max_len + 1):
            p = self.level(m)
            denominator = self.denominators[m - 1]
            errors.append(np.sqrt(p * (1.0 - p) / denominator) if denominator else np.zeros_like(p))
        return np.concatenate(errors)

    def to_series(self) -> pd.Series:
        index = [str(sigma) for m in range(1, self.max_len + 1) for sigma in patterns_of_length(m)]
        return pd.Series(self.vector(), index=index, name='frequency')


def _enumeration_size(n: int, m: int) -> int:
    """Subset classifications needed for the exact count of length m."""
    if m <= 2 or (m == 3 and QUADRATIC_LEVEL3_ABOVE < n <= QUADRATIC_LEVEL3_MAX):
        return 0
    return comb(n, m)


def exact_work(n: int, k: int) -> int:
    """Largest per-length enumeration of an exact profile of size n up to length k."""
    return max(_enumeration_size(n, m) for m in range(1, min(k, n) + 1))


def profile(pi: Permutation, k: int, mode: str = 'exact',
            plan: Optional[SubsetSamplerPlan] = None,
            budget: int = DEFAULT_EXACT_BUDGET, workers: int = 1) -> FrequencyProfile:
    """
    Frequency profile of pi over all patterns of length <= k.

    Args:
        pi: permutation
        k: maximal pattern length
        mode: 'exact' or 'monte_carlo'
        plan: subset sampler plan (required in Monte Carlo mode)
        budget: maximal number of subset classifications per length in exact mode
        workers: threads used for exact enumeration

    Returns:
        FrequencyProfile

    Raises:
        ValidationError: If k < 1
        ResourceError: If k > 8, or exact mode needs more than budget classifications
    """
    check_pattern_length(k)
    n = len(pi)
    if mode == 'exact':
        work = exact_work(n, k)
        if work > budget:
            raise ResourceError(f"Exact profile of size {n} up to length {k} needs {work} subset "
                                f"classifications for one length, above the budget of {budget}")
        counts, denominators = [], []
        for m in range(1, k + 1):
            if m == 2 and n >= 2:
                inversions = count_inversions(pi).count
                counts.append(np.array([comb(n, 2) - inversions, inversions], dtype=np.int64))
            else:
                counts.append(_level_counts(pi.array, m, workers))
            denominators.append(comb(n, m) if m <= n else 0)
        return FrequencyProfile(k, n, 'exact', tuple(counts), tuple(denominators))

    if mode != 'monte_carlo':
        raise ValidationError(f"Unknown profile mode {mode!r}")
    if plan is None:
        raise ValidationError("Monte Carlo profiles need a SubsetSamplerPlan")
    counts, denominators = [], []
    for m in range(1, k + 1):
        if m > n:
            counts.append(np.zeros(factorial(m), dtype=np.int64))
            denominators.append(0)
        elif m == 1:
            counts.append(np.array([plan.draws], dtype=np.int64))
            denominators.append(plan.draws)
        else:
            subsets = _draw_subsets(n, m, plan.draws, replicate_rng(plan.seed, m))
            counts.append(np.bincount(classify(pi.array[subsets]), minlength=factorial(m)).astype(np.int64))
            denominators.append(plan.draws)
    return FrequencyProfile(k, n, 'monte_carlo', tuple(counts), tuple(denominators), plan.draws)


def auto_profile(pi: Permutation, k: int, seed: Optional[int] = None,
                 budget: int = DEFAULT_EXACT_BUDGET,
                 draws_factor: int = DEFAULT_DRAWS_FACTOR) -> FrequencyProfile:
    """
    Exact profile when every C(n, m), m <= k, fits the budget, otherwise Monte Carlo with
    N = draws_factor * n * k random subsets.
    """
    n = len(pi)
    check_pattern_length(k)
    if exact_work(n, k) <= budget:
        return profile(pi, k, 'exact', budget=budget)
    if seed is None:
        raise ValidationError(f"Exact counting of size {n} up to length {k} exceeds the exact budget; "
                              "a seed is needed for Monte Carlo counting")
    logger.info(f"Profile of size {n} up to length {k}: using Monte Carlo counting")
    return profile(pi, k, 'monte_carlo', SubsetSamplerPlan.default(n, k, seed, draws_factor))
