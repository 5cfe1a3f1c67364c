"""
Classical independence statistics used as benchmarks: BDY, HBKR* and the
unweighted CvM* / KS* on patterns of length 4.
"""

from typing import Dict, Optional

import numpy as np

from .pattern_space import cvm_norm_sq, ks_norm
from ..permutations.counting import DEFAULT_EXACT_BUDGET, FrequencyProfile, auto_profile
from ..permutations.permutation import Permutation, patterns_of_length
from ..utils.validators import RunValidator, SizeError

BDY_SET = frozenset(Permutation.parse(s) for s in
                    ('1234', '1243', '2134', '2143', '3412', '3421', '4312', '4321'))
BDY_MASK = np.array([sigma in BDY_SET for sigma in patterns_of_length(4)])
INDEPENDENCE_4 = np.concatenate([np.full(len(patterns_of_length(m)), 1.0 / len(patterns_of_length(m)))
                                 for m in range(1, 5)])
BATTERY = ('cvm', 'ks', 'hbkr', 'cvm-star', 'ks-star', 'bdy')


def _level4(pi: Permutation, profile: Optional[FrequencyProfile], seed: Optional[int], budget: int) -> np.ndarray:
    if len(pi) < 4:
        raise SizeError(f"Statistics on patterns of length 4 need n >= 4, got n={len(pi)}")
    if profile is None or profile.max_len < 4:
        profile = auto_profile(pi, 4, seed=seed, budget=budget)
    return profile.level(4)


def bdy_statistic(pi: Permutation, profile: Optional[FrequencyProfile] = None,
                  seed: Optional[int] = None, budget: int = DEFAULT_EXACT_BUDGET) -> float:
    """n ((2/3) sum_C T_n - (1/3) sum_D T_n) with C the eight BDY patterns and D the rest of S_4."""
    level = _level4(pi, profile, seed, budget)
    return float(len(pi) * (2.0 / 3.0 * level[BDY_MASK].sum() - 1.0 / 3.0 * level[~BDY_MASK].sum()))


def hbkr_statistic(pi: Permutation) -> float:
    """
    (1/n^4) sum_j (m1 m4 - m2 m3)^2 over the strict quadrant counts around (j, pi(j)).
    """
    n = len(pi)
    values = pi.array
    positions = np.arange(n)
    before = positions[None, :] < positions[:, None]
    after = positions[None, :] > positions[:, None]
    below = values[None, :] < values[:, None]
    above = values[None, :] > values[:, None]
    m1 = (before & below).sum(axis=1)
    m2 = (after & below).sum(axis=1)
    m3 = (before & above).sum(axis=1)
    m4 = (after & above).sum(axis=1)
    return float(np.sum((m1 * m4 - m2 * m3).astype(float) ** 2) / n ** 4)


def star_statistics(pi: Permutation, flavor: str = 'cvm', profile: Optional[FrequencyProfile] = None,
                    seed: Optional[int] = None, budget: int = DEFAULT_EXACT_BUDGET) -> float:
    """Unweighted n sum (T_n - 1/24)^2 (cvm) or sqrt(n) max |T_n - 1/24| (ks) over S_4."""
    RunValidator.validate_flavor(flavor)
    diff = _level4(pi, profile, seed, budget) - 1.0 / 24.0
    n = len(pi)
    if flavor == 'cvm':
        return float(n * np.sum(diff ** 2))
    return float(np.sqrt(n) * np.max(np.abs(diff)))


def statistic_battery(pi: Permutation, seed: Optional[int] = None,
                      budget: int = DEFAULT_EXACT_BUDGET) -> Dict[str, float]:
    """All benchmark statistics of one permutation from a single profile up to length 4."""
    profile = auto_profile(pi, 4, seed=seed, budget=budget)
    diff = profile.vector() - INDEPENDENCE_4
    n = len(pi)
    return {
        'cvm': cvm_norm_sq(diff, n),
        'ks': ks_norm(diff, n),
        'hbkr': hbkr_statistic(pi),
        'cvm-star': star_statistics(pi, 'cvm', profile),
        'ks-star': star_statistics(pi, 'ks', profile),
        'bdy': bdy_statistic(pi, profile),
    }
