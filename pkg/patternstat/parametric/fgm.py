"""
Linear pattern statistics on S_3 for the Farlie-Gumbel-Morgenstern family

Coefficient vectors are indexed by S_3 in lexicographic order
(123, 132, 213, 231, 312, 321). Under FGM(theta) the statistic
L_a = sum a_i t(Pi_n, sigma_i) is asymptotically normal with mean
mu_a(theta) and variance a' Xi a / n; local alternatives theta = h / sqrt(n)
shift it by h a' m, which gives the slope s(a) = a' m / sqrt(a' Xi a).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb, sqrt
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from ..copulas.fgm import FGM
from ..copulas.independence import Independence
from ..copulas.models import sample
from ..inference.results import NullQuantileTable, TestResult
from ..permutations.counting import count_inversions, profile
from ..permutations.permutation import Permutation
from ..simulation.engine import MonteCarloEngine
from ..utils.validators import DegenerateError, RunValidator, SizeError, ValidationError

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]
OPTIMAL_SET_TOLERANCE = 1e-10


def _dot(a: Iterable[Number], b: Iterable[Number]):
    return sum(x * y for x, y in zip(a, b))


@dataclass(frozen=True)
class CoefficientVector:
    """Six coefficients a_1..a_6 of a linear pattern statistic on S_3."""
    values: Tuple[Number, ...]
    label: str = ''

    def __post_init__(self):
        values = tuple(self.values)
        if len(values) != 6:
            raise ValidationError(f"A coefficient vector has 6 entries, got {len(values)}")
        if not all(np.isfinite(float(v)) for v in values):
            raise ValidationError("Coefficients must be finite")
        object.__setattr__(self, 'values', values)

    @classmethod
    def of(cls, *values: Number, label: str = '') -> "CoefficientVector":
        return cls(tuple(values), label)

    @classmethod
    def parse(cls, text: str) -> "CoefficientVector":
        """A named vector or six comma-separated decimals (kept as exact rationals)."""
        name = text.strip().lower()
        if name in NAMED_COEFFICIENTS:
            return NAMED_COEFFICIENTS[name]
        try:
            return cls(tuple(Fraction(token.strip()) for token in text.split(',')), text.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"Cannot parse coefficients {text!r}: expected a name "
                                  f"({', '.join(sorted(NAMED_COEFFICIENTS))}) or six decimals")

    @property
    def exact(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(v) for v in self.values)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def reflect(self) -> "CoefficientVector":
        """a_i -> a_{7-i}: the statistic for theta < 0 alternatives."""
        return CoefficientVector(self.values[::-1], f'reflected({self.label})' if self.label else '')

    def __str__(self) -> str:
        return self.label or ','.join(str(v) for v in self.values)


A_STAR = CoefficientVector.of(1, 0, 0, 0, 0, -1, label='k3')
A_UP = CoefficientVector.of(1, 0, 0, 0, 0, 0, label='ascending-triples')
A_BREVE = CoefficientVector.of(1, 1, 1, -1, -1, -1, label='breve')
KENDALL = CoefficientVector(tuple(Fraction(v, 3) for v in (3, 1, 1, -1, -1, -3)), 'kendall')
NAMED_COEFFICIENTS = {'k3': A_STAR, 'ascending-triples': A_UP, 'kendall': KENDALL}


class FgmConstants:
    """
    Exact constants of the FGM analysis on S_3.

    Xi is the asymptotic covariance of sqrt(n)(T_n(sigma_i)) under independence,
    m the derivative of C^S_theta at theta = 0. e1, e5, e6 are eigenvectors of
    Xi with eigenvalues 3/16, 0, 0.
    """

    XI = tuple(tuple(Fraction(v, 400) for v in row) for row in (
        (26, 12, 12, -13, -13, -24),
        (12, 14, -1, -6, -6, -13),
        (12, -1, 14, -6, -6, -13),
        (-13, -6, -6, 14, -1, 12),
        (-13, -6, -6, -1, 14, 12),
        (-24, -13, -13, 12, 12, 26),
    ))
    E = (1, 1, 1, 1, 1, 1)
    E1 = (2, 1, 1, -1, -1, -2)
    E5 = (1, -1, -1, 1, 1, -1)
    E6 = E
    C = (2, -1, -1, -1, -1, 2)
    M = tuple(Fraction(v, 24) for v in E1)
    LAMBDA1 = Fraction(3, 16)

    def xi_times(self, a: Sequence[Number]) -> Tuple:
        return tuple(_dot(row, a) for row in self.XI)

    def variance(self, a: Sequence[Number]):
        """v(a) = a' Xi a."""
        return _dot(a, self.xi_times(a))

    @cached_property
    def xi_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.XI])

    @cached_property
    def eigenbasis(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Orthonormal eigenvectors (columns e1..e6) and their eigenvalues.

        e1, e5 and e6 are the known exact directions; e2..e4 are computed
        numerically on their orthogonal complement.
        """
        known = np.array([self.E1, self.E5, self.E6], dtype=float).T
        known /= np.linalg.norm(known, axis=0)
        projector = np.eye(6) - known @ known.T
        values, vectors = np.linalg.eigh(projector @ self.xi_array @ projector)
        order = np.argsort(values)[::-1][:3]
        basis = np.column_stack([known[:, 0], vectors[:, order], known[:, 1], known[:, 2]])
        eigenvalues = np.r_[float(self.LAMBDA1), values[order], 0.0, 0.0]
        return eigenvalues, basis


FGM_CONSTANTS = FgmConstants()


# ---------------------------------------------------------------------------
# means and slopes

def fgm_cS3(theta: Number) -> np.ndarray:
    """C^S_theta over S_3 in lexicographic order."""
    return FGM(float(theta)).pattern_probabilities(3)


def fgm_cS3_exact(theta: Fraction) -> Tuple[Fraction, ...]:
    """C^S_theta over S_3 as exact rationals."""
    theta = Fraction(theta)
    FGM(float(theta))
    return tuple(Fraction(1, 6) + theta * Fraction(b, 24) + theta * theta * Fraction(c, 200)
                 for b, c in zip(FGM_CONSTANTS.E1, FGM_CONSTANTS.C))


def mu_a(a: CoefficientVector, theta: Number):
    """
    mu_a(theta) = a'e / 6 + theta a'm + theta^2 a'c / 200, the limit of L_a
    under FGM(theta). Exact for rational inputs.
    """
    if isinstance(theta, float):
        return float(a.as_array() @ fgm_cS3(theta))
    return _dot(a.exact, fgm_cS3_exact(Fraction(theta)))


def compound_consistent(a: CoefficientVector) -> bool:
    """
    Whether mu_a(theta) - mu_a(0) has the sign of theta on [-1, 1] without 0,
    i.e. a'm > |a'c| / 200.
    """
    exact = a.exact
    return _dot(exact, FGM_CONSTANTS.M) > abs(_dot(exact, FGM_CONSTANTS.C)) / 200


def slope_squared(a: CoefficientVector) -> Optional[Fraction]:
    """(a'm)^2 / (a' Xi a), or None when a'm <= 0 or a' Xi a = 0."""
    exact = a.exact
    drift = _dot(exact, FGM_CONSTANTS.M)
    variance = FGM_CONSTANTS.variance(exact)
    if drift <= 0 or variance <= 0:
        return None
    return drift * drift / variance


def slope(a: CoefficientVector) -> Optional[float]:
    """Asymptotic slope s(a); None marks a degenerate vector."""
    squared = slope_squared(a)
    return None if squared is None else sqrt(squared)


def eigen_coefficients(a: CoefficientVector) -> np.ndarray:
    """Coordinates of a in the orthonormal eigenbasis e1..e6."""
    _, basis = FGM_CONSTANTS.eigenbasis
    return basis.T @ a.as_array()


def slope_squared_eigen(a: CoefficientVector) -> float:
    """s(a)^2 from the eigen decomposition: (eta1 |e1| / 24)^2 / sum lambda_i eta_i^2."""
    eigenvalues, _ = FGM_CONSTANTS.eigenbasis
    eta = eigen_coefficients(a)
    drift = eta[0] * np.linalg.norm(FGM_CONSTANTS.E1) / 24.0
    return float(drift ** 2 / np.sum(eigenvalues * eta ** 2))


def in_optimal_set(a: CoefficientVector) -> bool:
    """
    Whether a maximizes the slope: no component along e2, e3, e4 and a
    positive component along e1.
    """
    eta = eigen_coefficients(a)
    return bool(np.all(np.abs(eta[1:4]) <= OPTIMAL_SET_TOLERANCE) and _dot(a.exact, FGM_CONSTANTS.E1) > 0)


def pitman_are(a: CoefficientVector, b: CoefficientVector) -> Fraction:
    """
    Pitman asymptotic relative efficiency s(a)^2 / s(b)^2 of L_a against L_b.

    Raises:
        DegenerateError: If either slope is undefined
    """
    sa, sb = slope_squared(a), slope_squared(b)
    if sa is None or sb is None:
        raise DegenerateError(f"Slope undefined for {a if sa is None else b}")
    return sa / sb


def asymptotic_critical_value(a: CoefficientVector, n: int, alpha: float) -> float:
    """mu_a(0) + z_alpha sqrt(v(a) / n)."""
    alpha = RunValidator.validate_alpha(alpha)
    z = stats.norm.ppf(1.0 - alpha)
    return float(mu_a(a, 0)) + z * sqrt(float(FGM_CONSTANTS.variance(a.exact)) / n)


def asymptotic_local_power(a: CoefficientVector, h: float, alpha: float) -> float:
    """Limiting power 1 - Phi(z_alpha - h s(a)) at theta = h / sqrt(n)."""
    alpha = RunValidator.validate_alpha(alpha)
    s = slope(a)
    if s is None:
        raise DegenerateError(f"Slope undefined for {a}")
    return float(stats.norm.sf(stats.norm.ppf(1.0 - alpha) - h * s))


# ---------------------------------------------------------------------------
# statistics

def _level3(pi: Permutation) -> Tuple[Fraction, ...]:
    if len(pi) < 3:
        raise SizeError(f"Statistics on S_3 need n >= 3, got n={len(pi)}")
    counts = profile(pi, 3).counts[2]
    total = comb(len(pi), 3)
    return tuple(Fraction(int(c), total) for c in counts)


def la_statistic(pi: Permutation, a: CoefficientVector) -> Fraction:
    """L_a(pi) = sum a_i t(pi, sigma_i), exact."""
    return _dot(a.exact, _level3(pi))


def kendall_k2(pi: Permutation) -> Fraction:
    """K_2 = t(pi, 12) - t(pi, 21) (Kendall's tau)."""
    return 1 - 2 * count_inversions(pi).frequency


def k3(pi: Permutation) -> Fraction:
    """K_3 = t(pi, 123) - t(pi, 321)."""
    return la_statistic(pi, A_STAR)


def spearman(pi: Permutation) -> Fraction:
    """Spearman's rank correlation as (3/(n+1)) K_2 + ((n-2)/(n+1)) L_breve."""
    n = len(pi)
    return Fraction(3, n + 1) * kendall_k2(pi) + Fraction(n - 2, n + 1) * la_statistic(pi, A_BREVE)


STATISTICS = {'kendall': kendall_k2, 'k3': k3, 'spearman': spearman}


@dataclass(frozen=True)
class LinearStatistic:
    """L_a, or a named special statistic."""
    coefficients: Optional[CoefficientVector] = None
    name: str = ''

    def __call__(self, pi: Permutation) -> float:
        if self.name:
            return float(STATISTICS[self.name](pi))
        return float(la_statistic(pi, self.coefficients))


@dataclass(frozen=True)
class IndependenceReplicate:
    statistic: LinearStatistic
    n: int
    centre: float = 0.0
    absolute: bool = False

    def __call__(self, rng) -> float:
        value = self.statistic(sample(Independence(), self.n, rng).permutation) - self.centre
        return abs(value) if self.absolute else value


def _independence_table(statistic, n: int, reps: int, seed: int, engine, centre=0.0, absolute=False):
    RunValidator.validate_reps(reps)
    engine = engine or MonteCarloEngine()
    values = engine.run(IndependenceReplicate(statistic, n, centre, absolute), reps, seed)
    return NullQuantileTable(values, {'model': 'indep', 'n': n, 'reps': reps, 'seed': seed})


def la_test(pi: Permutation, a: Union[CoefficientVector, str], alpha: float = 0.05, reps: int = 1000,
            seed: int = 0, direction: str = 'greater',
            engine: Optional[MonteCarloEngine] = None) -> TestResult:
    """
    One-sided test of independence against FGM(theta), theta > 0 ('greater')
    or theta < 0 ('less', by coefficient reflection). Critical values are
    simulated under independence.

    a may also name a special statistic: 'kendall', 'k3' or 'spearman'.
    """
    alpha = RunValidator.validate_alpha(alpha)
    if direction not in ('greater', 'less'):
        raise ValidationError(f"direction must be 'greater' or 'less', got {direction!r}")
    if isinstance(a, str):
        if a == 'spearman':
            if direction == 'less':
                raise ValidationError("Use coefficient vectors for the 'less' direction of Spearman's statistic")
            statistic = LinearStatistic(name='spearman')
            label = 'spearman'
        else:
            a = CoefficientVector.parse(a)
    if not isinstance(a, str):
        coefficients = a.reflect() if direction == 'less' else a
        statistic = LinearStatistic(coefficients)
        label = str(coefficients)
    value = statistic(pi)
    table = _independence_table(statistic, len(pi), reps, seed, engine)
    return table.decide(value, alpha, {
        'test': 'fgm-la', 'coefficients': label, 'direction': direction, 'n': len(pi),
        'alpha': alpha, 'reps': reps, 'seed': seed,
    })


def ma_statistic(pi: Permutation, a: CoefficientVector) -> Fraction:
    """|L_a - mu_a(0)|, the two-sided variant."""
    return abs(la_statistic(pi, a) - mu_a(a, 0))


def ma_test(pi: Permutation, a: CoefficientVector, alpha: float = 0.05, reps: int = 1000,
            seed: int = 0, engine: Optional[MonteCarloEngine] = None) -> TestResult:
    """Two-sided test based on M_a with a Monte Carlo critical value under independence."""
    alpha = RunValidator.validate_alpha(alpha)
    value = float(ma_statistic(pi, a))
    table = _independence_table(LinearStatistic(a), len(pi), reps, seed, engine,
                                centre=float(mu_a(a, 0)), absolute=True)
    return table.decide(value, alpha, {
        'test': 'fgm-ma', 'coefficients': str(a), 'n': len(pi), 'alpha': alpha,
        'reps': reps, 'seed': seed,
    })
