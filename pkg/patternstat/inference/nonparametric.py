"""
Goodness-of-fit, two-sample and symmetry tests on pattern frequencies

Statistics compare frequency profiles in the weighted pattern space:
CvM flavors use the weighted squared norm, KS flavors the weighted maximum.
Critical values come from Monte Carlo replicates under the null model
(goodness of fit) or from permuton bootstrap replicates (two-sample and
symmetry).
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .pattern_space import cvm_norm_sq, enumerate_patterns, ks_norm
from .results import NullQuantileTable, TestResult
from ..copulas.base import CopulaModel
from ..copulas.estimators import cS_level_closed
from ..copulas.models import sample
from ..copulas.permuton import PermutonMixture
from ..permutations.counting import DEFAULT_EXACT_BUDGET, FrequencyProfile, auto_profile
from ..permutations.permutation import Permutation, patterns_of_length
from ..simulation.engine import MonteCarloEngine
from ..utils.validators import ModelError, RunValidator, SizeError

logger = logging.getLogger(__name__)

SEED_SPACE = 2 ** 63
NullTable = Union[np.ndarray, Sequence[float], Mapping[Permutation, float]]


def _norm(diff: np.ndarray, n: float, flavor: str) -> float:
    RunValidator.validate_flavor(flavor)
    return cvm_norm_sq(diff, n) if flavor == 'cvm' else ks_norm(diff, n)


def null_vector(null_model: CopulaModel, k: int, cs_table: Optional[NullTable] = None) -> np.ndarray:
    """
    C0^S over all patterns of length <= k.

    Raises:
        ModelError: If the model has no closed form and no table is supplied
    """
    patterns = enumerate_patterns(k)
    if cs_table is not None:
        if isinstance(cs_table, Mapping):
            missing = [str(sigma) for sigma in patterns if sigma not in cs_table]
            if missing:
                raise ModelError(f"C0^S table lacks patterns {missing[:5]}")
            return np.array([float(cs_table[sigma]) for sigma in patterns])
        values = np.asarray(cs_table, dtype=float)
        if values.shape != (len(patterns),):
            raise ModelError(f"C0^S table has {values.size} entries, {len(patterns)} needed for k={k}")
        return values
    levels = []
    for m in range(1, k + 1):
        level = cS_level_closed(null_model, m)
        if level is None:
            raise ModelError(f"No closed form for C^S of {null_model.spec()} at length {m}; "
                             f"supply a precomputed table")
        levels.append(level)
    return np.concatenate(levels)


# ---------------------------------------------------------------------------
# goodness of fit

@dataclass(frozen=True, eq=False)
class GofStatistic:
    """Distance between the profile of a permutation and a fixed null vector."""
    null: np.ndarray
    k: int
    flavor: str = 'cvm'
    budget: int = DEFAULT_EXACT_BUDGET

    def __call__(self, pi: Permutation, seed: Optional[int] = None) -> float:
        frequencies = auto_profile(pi, self.k, seed=seed, budget=self.budget).vector()
        return _norm(frequencies - self.null, len(pi), self.flavor)


def gof_statistic(pi: Permutation, null_model: CopulaModel, k: int = 4, flavor: str = 'cvm',
                  cs_table: Optional[NullTable] = None, seed: Optional[int] = None,
                  budget: int = DEFAULT_EXACT_BUDGET) -> float:
    """CvM or KS distance between T_n and C0^S over all patterns of length <= k."""
    return GofStatistic(null_vector(null_model, k, cs_table), k, flavor, budget)(pi, seed)


@dataclass(frozen=True, eq=False)
class NullReplicate:
    """Statistic of one fresh sample of size n from the null model."""
    model: CopulaModel
    n: int
    statistic: GofStatistic

    def __call__(self, rng) -> float:
        pi = sample(self.model, self.n, rng).permutation
        return self.statistic(pi, seed=int(rng.integers(SEED_SPACE)))


def null_quantiles(null_model: CopulaModel, n: int, k: int, flavor: str, reps: int, seed: int,
                   cs_table: Optional[NullTable] = None, engine: Optional[MonteCarloEngine] = None,
                   budget: int = DEFAULT_EXACT_BUDGET) -> NullQuantileTable:
    """Monte Carlo null distribution of the goodness-of-fit statistic."""
    RunValidator.validate_reps(reps)
    RunValidator.validate_seed(seed)
    engine = engine or MonteCarloEngine()
    statistic = GofStatistic(null_vector(null_model, k, cs_table), k, flavor, budget)
    logger.info(f"Simulating {reps} null replicates of the {flavor} statistic "
                f"(model={null_model.spec()}, n={n}, k={k})")
    values = engine.run(NullReplicate(null_model, n, statistic), reps, seed)
    return NullQuantileTable(values, {'model': null_model.spec(), 'n': n, 'k': k,
                                      'flavor': flavor, 'reps': reps, 'seed': seed})


def gof_test(pi: Permutation, null_model: CopulaModel, k: int = 4, flavor: str = 'cvm',
             alpha: float = 0.05, reps: int = 1000, seed: int = 0,
             cs_table: Optional[NullTable] = None, table: Optional[NullQuantileTable] = None,
             engine: Optional[MonteCarloEngine] = None,
             budget: int = DEFAULT_EXACT_BUDGET) -> TestResult:
    """
    Goodness-of-fit test of H0: the data come from null_model.

    Args:
        table: precomputed null quantile table (skips the simulation)
    """
    alpha = RunValidator.validate_alpha(alpha)
    statistic = gof_statistic(pi, null_model, k, flavor, cs_table, seed, budget)
    if table is None:
        table = null_quantiles(null_model, len(pi), k, flavor, reps, seed, cs_table, engine, budget)
    else:
        _check_table(table, null_model, len(pi), k, flavor)
    return table.decide(statistic, alpha, {
        'test': 'gof', 'model': null_model.spec(), 'n': len(pi), 'k': k, 'flavor': flavor,
        'alpha': alpha, 'reps': table.reps, 'seed': table.metadata.get('seed', seed),
    })


def _check_table(table: NullQuantileTable, model: CopulaModel, n: int, k: int, flavor: str):
    expected = {'model': model.spec(), 'n': n, 'k': k, 'flavor': flavor}
    for key, value in expected.items():
        if key in table.metadata and table.metadata[key] != value:
            logger.warning(f"Null table was built with {key}={table.metadata[key]}, the test uses {value}")


# ---------------------------------------------------------------------------
# two-sample

def _profiles_diff(pi1: Permutation, pi2: Permutation, k: int, seed: Optional[int], budget: int) -> np.ndarray:
    seed2 = None if seed is None else seed + 1
    first = auto_profile(pi1, k, seed=seed, budget=budget).vector()
    second = auto_profile(pi2, k, seed=seed2, budget=budget).vector()
    return first - second


def two_sample_statistic(pi1: Permutation, pi2: Permutation, k: int = 3, flavor: str = 'cvm',
                         seed: Optional[int] = None, budget: int = DEFAULT_EXACT_BUDGET) -> float:
    """
    Weighted distance between the profiles of two permutations, scaled by mn/(m+n).

    Raises:
        SizeError: If k exceeds either sample size
    """
    m, n = len(pi1), len(pi2)
    if k > min(m, n):
        raise SizeError(f"k={k} exceeds the smaller sample size {min(m, n)}")
    return _norm(_profiles_diff(pi1, pi2, k, seed, budget), m * n / (m + n), flavor)


def bootstrap_mixture(pi1: Permutation, pi2: Permutation) -> PermutonMixture:
    """Pooled permuton (m/(m+n)) C(pi1) + (n/(m+n)) C(pi2)."""
    m, n = len(pi1), len(pi2)
    return PermutonMixture(((pi1, m / (m + n)), (pi2, n / (m + n))))


@dataclass(frozen=True, eq=False)
class TwoSampleReplicate:
    mixture: PermutonMixture
    m: int
    n: int
    k: int
    flavor: str
    budget: int

    def __call__(self, rng) -> float:
        first = sample(self.mixture, self.m, rng).permutation
        second = sample(self.mixture, self.n, rng).permutation
        return two_sample_statistic(first, second, self.k, self.flavor,
                                    seed=int(rng.integers(SEED_SPACE)), budget=self.budget)


def two_sample_test(pi1: Permutation, pi2: Permutation, k: int = 3, flavor: str = 'cvm',
                    alpha: float = 0.05, bootstrap: int = 200, seed: int = 0,
                    engine: Optional[MonteCarloEngine] = None,
                    budget: int = DEFAULT_EXACT_BUDGET) -> TestResult:
    """Two-sample test with critical values from the pooled-permuton bootstrap."""
    alpha = RunValidator.validate_alpha(alpha)
    RunValidator.validate_reps(bootstrap, name='bootstrap')
    statistic = two_sample_statistic(pi1, pi2, k, flavor, seed, budget)
    engine = engine or MonteCarloEngine()
    replicate = TwoSampleReplicate(bootstrap_mixture(pi1, pi2), len(pi1), len(pi2), k, flavor, budget)
    table = NullQuantileTable(engine.run(replicate, bootstrap, seed))
    return table.decide(statistic, alpha, {
        'test': 'two-sample', 'm': len(pi1), 'n': len(pi2), 'k': k, 'flavor': flavor,
        'alpha': alpha, 'bootstrap': bootstrap, 'seed': seed, 'resampling': 'pooled-permuton',
    })


# ---------------------------------------------------------------------------
# symmetry

def _inverse_positions(k: int) -> np.ndarray:
    """Position of sigma^-1 for every sigma of length <= k, in enumerate_patterns order."""
    positions, offset = [], 0
    for m in range(1, k + 1):
        level = patterns_of_length(m)
        index = {sigma: i for i, sigma in enumerate(level)}
        positions.extend(offset + index[sigma.inverse()] for sigma in level)
        offset += factorial(m)
    return np.array(positions)


def symmetry_statistic(pi: Permutation, k: int = 3, flavor: str = 'cvm',
                       seed: Optional[int] = None, budget: int = DEFAULT_EXACT_BUDGET,
                       profile: Optional[FrequencyProfile] = None) -> float:
    """Weighted distance between T_n(sigma) and T_n(sigma^-1)."""
    frequencies = (profile or auto_profile(pi, k, seed=seed, budget=budget)).vector()
    return _norm(frequencies - frequencies[_inverse_positions(k)], len(pi), flavor)


def symmetrized_permuton(pi: Permutation) -> PermutonMixture:
    return PermutonMixture(((pi, 0.5), (pi.inverse(), 0.5)))


@dataclass(frozen=True, eq=False)
class SymmetryReplicate:
    mixture: PermutonMixture
    n: int
    k: int
    flavor: str
    budget: int

    def __call__(self, rng) -> float:
        pi = sample(self.mixture, self.n, rng).permutation
        return symmetry_statistic(pi, self.k, self.flavor, seed=int(rng.integers(SEED_SPACE)),
                                  budget=self.budget)


def symmetry_test(pi: Permutation, k: int = 3, flavor: str = 'cvm', alpha: float = 0.05,
                  bootstrap: int = 200, seed: int = 0, engine: Optional[MonteCarloEngine] = None,
                  budget: int = DEFAULT_EXACT_BUDGET) -> TestResult:
    """
    Test of exchangeability, (U, V) and (V, U) equal in law.

    Bootstrap samples come from the symmetrized permuton (C(pi) + C(pi^-1)) / 2.
    """
    alpha = RunValidator.validate_alpha(alpha)
    RunValidator.validate_reps(bootstrap, name='bootstrap')
    statistic = symmetry_statistic(pi, k, flavor, seed, budget)
    engine = engine or MonteCarloEngine()
    replicate = SymmetryReplicate(symmetrized_permuton(pi), len(pi), k, flavor, budget)
    table = NullQuantileTable(engine.run(replicate, bootstrap, seed))
    return table.decide(statistic, alpha, {
        'test': 'symmetry', 'n': len(pi), 'k': k, 'flavor': flavor, 'alpha': alpha,
        'bootstrap': bootstrap, 'seed': seed, 'resampling': 'symmetrized-permuton',
    })
