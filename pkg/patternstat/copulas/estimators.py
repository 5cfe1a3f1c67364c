"""
Pattern probabilities C^S(sigma) and the two-argument C^{S,2}(sigma, tau)

C^{S,2}(sigma, tau) is the probability that a size-|sigma| sample and a
size-|tau| sample sharing exactly their first point induce sigma and tau.
rho(sigma, tau) = C^{S,2}(sigma, tau) - C^S(sigma) C^S(tau) is the covariance
of the first-order projections of the pattern indicators.
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Iterator, Optional, Tuple

import numpy as np

from .base import CopulaModel
from .delay import DelayExp
from .fgm import FGM
from .independence import Independence
from .models import draw_pattern_indices
from ..permutations.counting import MonteCarloEstimate, classify
from ..permutations.permutation import Permutation, patterns_of_length
from ..utils.rng import replicate_rng
from ..utils.validators import ValidationError

logger = logging.getLogger(__name__)

BATCH_SIZE = 100_000


def _batches(reps: int) -> Iterator[Tuple[int, int]]:
    if reps < 1:
        raise ValidationError(f"reps must be >= 1, got {reps}")
    for batch, start in enumerate(range(0, reps, BATCH_SIZE)):
        yield batch, min(BATCH_SIZE, reps - start)


def _lex_index(sigma: Permutation) -> int:
    return patterns_of_length(len(sigma)).index(sigma)


def cS_level_closed(model: CopulaModel, m: int) -> Optional[np.ndarray]:
    """Closed-form C^S over S_m in lex order, or None."""
    if m == 1:
        return np.array([1.0])
    if isinstance(model, Independence):
        return np.full(factorial(m), 1.0 / factorial(m))
    if isinstance(model, FGM):
        return model.pattern_probabilities(m)
    if isinstance(model, DelayExp) and m == 2:
        from ..parametric.delay import phi_I
        inversion = phi_I(model.theta)
        return np.array([1.0 - inversion, inversion])
    return None


def cS_closed(model: CopulaModel, sigma: Permutation) -> Optional[float]:
    """C^S(sigma) in closed form, None when unavailable."""
    level = cS_level_closed(model, len(sigma))
    if level is None:
        return None
    return float(level[_lex_index(sigma)])


def cS_estimate(model: CopulaModel, sigma: Permutation, reps: int, seed: int) -> MonteCarloEstimate:
    """Frequency of the rank pattern sigma over reps independent size-|sigma| samples."""
    m = len(sigma)
    if m == 1:
        return MonteCarloEstimate(1.0, 0.0, reps)
    target = _lex_index(sigma)
    hits = 0
    for batch, count in _batches(reps):
        hits += int(np.count_nonzero(draw_pattern_indices(model, count, m, replicate_rng(seed, batch)) == target))
    p = hits / reps
    return MonteCarloEstimate(p, float(np.sqrt(p * (1.0 - p) / reps)), reps)


def cS_table(model: CopulaModel, k: int, reps: int, seed: int) -> np.ndarray:
    """
    C^S over all patterns of length <= k (lengths ascending, lex within).

    Closed forms are used where available, the remaining lengths are estimated.
    """
    levels = []
    for m in range(1, k + 1):
        level = cS_level_closed(model, m)
        if level is None:
            counts = np.zeros(factorial(m), dtype=np.int64)
            for batch, count in _batches(reps):
                counts += np.bincount(draw_pattern_indices(model, count, m, replicate_rng(seed, batch, m)),
                                      minlength=factorial(m))
            level = counts / reps
        levels.append(level)
    return np.concatenate(levels)


@dataclass(frozen=True, eq=False)
class JointPatternTable:
    """Joint counts of (pattern of the first sample, pattern of the second sample)."""
    k: int
    j: int
    counts: np.ndarray
    reps: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.reps

    def row_marginal(self) -> np.ndarray:
        return self.frequencies.sum(axis=1)

    def column_marginal(self) -> np.ndarray:
        return self.frequencies.sum(axis=0)


def cS2_table(model: CopulaModel, k: int, j: int, reps: int, seed: int, stream: Tuple[int, ...] = ()) -> JointPatternTable:
    """
    Joint pattern counts over S_k x S_j from reps pairs of samples sharing one point.
    """
    if k < 1 or j < 1:
        raise ValidationError("Pattern lengths must be >= 1")
    counts = np.zeros((factorial(k), factorial(j)), dtype=np.int64)
    second = np.r_[0, np.arange(k, k + j - 1)].astype(np.int64)
    for batch, count in _batches(reps):
        rng = replicate_rng(seed, batch, *stream)
        x, y = model.draw((count, k + j - 1), rng)
        first_x, first_y = x[:, :k], y[:, :k]
        second_x, second_y = x[:, second], y[:, second]
        a = classify(np.take_along_axis(first_y, np.argsort(first_x, axis=1), axis=1))
        b = classify(np.take_along_axis(second_y, np.argsort(second_x, axis=1), axis=1))
        counts += np.bincount(a * factorial(j) + b, minlength=counts.size).reshape(counts.shape)
    return JointPatternTable(k, j, counts, reps)


def cS2_estimate(model: CopulaModel, sigma: Permutation, tau: Permutation,
                 reps: int, seed: int) -> MonteCarloEstimate:
    """Estimate of C^{S,2}(sigma, tau) with binomial standard error."""
    table = cS2_table(model, len(sigma), len(tau), reps, seed)
    p = float(table.frequencies[_lex_index(sigma), _lex_index(tau)])
    return MonteCarloEstimate(p, float(np.sqrt(p * (1.0 - p) / reps)), reps)


def _rho_from_table(model: CopulaModel, table: JointPatternTable) -> np.ndarray:
    row = cS_level_closed(model, table.k)
    column = cS_level_closed(model, table.j)
    row = table.row_marginal() if row is None else row
    column = table.column_marginal() if column is None else column
    return table.frequencies - np.outer(row, column)


def covariance_rho(model: CopulaModel, sigma: Permutation, tau: Permutation,
                   reps: int, seed: int) -> MonteCarloEstimate:
    """
    rho(sigma, tau) = C^{S,2}(sigma, tau) - C^S(sigma) C^S(tau).

    Marginals use closed forms when available, else the marginals of the same
    joint draws; the standard error is that of the mean of the linearized
    indicator 1{sigma}1{tau} - C(tau) 1{sigma} - C(sigma) 1{tau}.
    """
    table = cS2_table(model, len(sigma), len(tau), reps, seed)
    a, b = _lex_index(sigma), _lex_index(tau)
    closed_sigma = cS_closed(model, sigma)
    closed_tau = cS_closed(model, tau)
    c_sigma = table.row_marginal()[a] if closed_sigma is None else closed_sigma
    c_tau = table.column_marginal()[b] if closed_tau is None else closed_tau
    rho = float(table.frequencies[a, b] - c_sigma * c_tau)

    in_sigma = (np.arange(table.counts.shape[0]) == a)[:, None]
    in_tau = (np.arange(table.counts.shape[1]) == b)[None, :]
    influence = (in_sigma & in_tau).astype(float)
    if closed_sigma is None:
        influence = influence - c_tau * in_sigma
    if closed_tau is None:
        influence = influence - c_sigma * in_tau
    mean = np.sum(table.frequencies * influence)
    variance = max(np.sum(table.frequencies * influence ** 2) - mean ** 2, 0.0)
    return MonteCarloEstimate(rho, float(np.sqrt(variance / reps)), reps)


def rho_matrix(model: CopulaModel, k: int, reps: int, seed: int) -> np.ndarray:
    """Estimated rho over all pairs of patterns of length <= k (enumerate_patterns order)."""
    sizes = [factorial(m) for m in range(1, k + 1)]
    offsets = np.r_[0, np.cumsum(sizes)]
    rho = np.zeros((offsets[-1], offsets[-1]))
    for a in range(2, k + 1):
        for b in range(a, k + 1):
            block = _rho_from_table(model, cS2_table(model, a, b, reps, seed, stream=(a, b)))
            rho[offsets[a - 1]:offsets[a], offsets[b - 1]:offsets[b]] = block
            rho[offsets[b - 1]:offsets[b], offsets[a - 1]:offsets[a]] = block.T
    return rho
