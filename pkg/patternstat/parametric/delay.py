"""
Exponential delay models: the inversion-count I-test, the mean-delay D-test
and their asymptotic efficiencies

Under DelayExp(theta) the probability of an inversion in a pair is
phi_I(theta); the mean delay of n observations is Gamma(n, n theta)
distributed, which gives the D-test its exact critical values.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import exp, expm1, factorial, log
from typing import Sequence

import numpy as np
from scipy import optimize, special, stats

from ..copulas.delay import DelayExp
from ..copulas.models import sample
from ..inference.results import NullQuantileTable, TestResult
from ..permutations.counting import count_inversions
from ..permutations.permutation import Permutation
from ..simulation.engine import MonteCarloEngine
from ..utils.validators import DataError, ParameterError, RunValidator, SizeError

logger = logging.getLogger(__name__)

SERIES_TERMS = 20
PHI_SERIES_BELOW = 1e-3
PHI_PRIME_SERIES_BELOW = 1e-2
VARIANCE_SERIES_BELOW = 0.1
LOCAL_APPROXIMATION = 'local approximation'


def _check_theta(theta: float, name: str = 'theta') -> float:
    theta = float(theta)
    if not theta > 0 or not np.isfinite(theta):
        raise ParameterError(f"{name} must be positive, got {theta}")
    return theta


@lru_cache(maxsize=None)
def _variance_series() -> tuple:
    """Taylor coefficients of v_I around 0 (exact rationals, as floats)."""
    coefficients = []
    for m in range(4, 4 + SERIES_TERMS):
        c = (2 * (Fraction(6 * (-1) ** m, factorial(m))
                  + Fraction(2 * (-1) ** (m - 1), factorial(m - 1))
                  + Fraction(3 * (-1) ** (m - 2), factorial(m - 2)))
             - Fraction(6 * (-2) ** m, factorial(m))
             - Fraction((-2) ** (m - 1), factorial(m - 1)))
        coefficients.append(float(Fraction(2, 3) * c))
    return tuple(coefficients)


def _series(coefficients, theta: float) -> float:
    return float(np.polyval(coefficients[::-1], theta))


def phi_I(theta: float) -> float:
    """Inversion probability P_theta(Pi_2 = 21) = (e^-theta - 1 + theta) / theta^2."""
    theta = _check_theta(theta)
    if theta < PHI_SERIES_BELOW:
        return _series([(-1) ** j / factorial(j + 2) for j in range(SERIES_TERMS)], theta)
    return (expm1(-theta) + theta) / theta ** 2


def phi_I_prime(theta: float) -> float:
    theta = _check_theta(theta)
    if theta < PHI_PRIME_SERIES_BELOW:
        return _series([(j + 1) * (-1) ** (j + 1) / factorial(j + 3) for j in range(SERIES_TERMS)], theta)
    return -((2.0 + theta) * exp(-theta) - (2.0 - theta)) / theta ** 3


def v_I(theta: float) -> float:
    """Asymptotic variance of sqrt(n) I_n under DelayExp(theta)."""
    theta = _check_theta(theta)
    if theta < VARIANCE_SERIES_BELOW:
        return _series(_variance_series(), theta)
    return (2.0 / (3.0 * theta ** 4)) * (
        2 * theta ** 2 - 3 * theta - 6
        + 2 * (3 * theta ** 2 + 2 * theta + 6) * exp(-theta)
        - (theta + 6) * exp(-2 * theta))


# ---------------------------------------------------------------------------
# gamma distribution of the mean delay

def gamma_cdf(shape: float, rate: float, x: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.gammainc(shape, rate * x))


def gamma_upper_quantile(shape: float, rate: float, alpha: float) -> float:
    """
    x with P(G > x) = alpha for G ~ Gamma(shape, rate).

    Bracketed root finding on the regularized incomplete gamma function,
    polished by Newton steps.
    """
    if shape <= 0 or rate <= 0:
        raise ParameterError(f"Gamma shape and rate must be positive, got {shape}, {rate}")
    alpha = RunValidator.validate_alpha(alpha)
    target = 1.0 - alpha

    def excess(x: float) -> float:
        return special.gammainc(shape, rate * x) - target

    upper = shape / rate
    while excess(upper) < 0:
        upper *= 2.0
    x = optimize.brentq(excess, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    for _ in range(3):
        density = stats.gamma.pdf(x, a=shape, scale=1.0 / rate)
        if density <= 0:
            break
        step = excess(x) / density
        candidate = x - step
        if candidate <= 0 or abs(excess(candidate)) >= abs(excess(x)):
            break
        x = candidate
    return float(x)


# ---------------------------------------------------------------------------
# tests

@dataclass(frozen=True)
class DelayTestConfig:
    """Hypothesis theta >= theta0 against smaller rates (longer delays)."""
    theta0: float
    alpha: float
    n: int
    reps: int = 1000
    seed: int = 0

    def __post_init__(self):
        _check_theta(self.theta0, 'theta0')
        RunValidator.validate_alpha(self.alpha)
        RunValidator.validate_sample_size(self.n, minimum=2)
        RunValidator.validate_reps(self.reps)
        RunValidator.validate_seed(self.seed)


@dataclass(frozen=True)
class InversionReplicate:
    """Inversion frequency of one sample of size n from DelayExp(theta)."""
    theta: float
    n: int

    def __call__(self, rng) -> float:
        return float(count_inversions(sample(DelayExp(self.theta), self.n, rng).permutation).frequency)


def inversion_null_table(config: DelayTestConfig, engine: MonteCarloEngine = None) -> NullQuantileTable:
    engine = engine or MonteCarloEngine()
    values = engine.run(InversionReplicate(config.theta0, config.n), config.reps, config.seed)
    return NullQuantileTable(values, {'model': DelayExp(config.theta0).spec(), 'n': config.n,
                                      'statistic': 'inversions', 'reps': config.reps, 'seed': config.seed})


def i_test(pi: Permutation, config: DelayTestConfig, engine: MonteCarloEngine = None) -> TestResult:
    """
    Reject theta >= theta0 when the inversion frequency I_n exceeds its
    Monte Carlo upper-alpha quantile under DelayExp(theta0).
    """
    if len(pi) != config.n:
        raise SizeError(f"Permutation has size {len(pi)}, the test was configured for n={config.n}")
    statistic = float(count_inversions(pi).frequency)
    table = inversion_null_table(config, engine)
    logger.info(f"I-test: I_n={statistic:.6f}, theta0={config.theta0}, n={config.n}")
    return table.decide(statistic, config.alpha, {
        'test': 'delay-i', 'theta0': config.theta0, 'n': config.n, 'alpha': config.alpha,
        'reps': config.reps, 'seed': config.seed, 'p_value_kind': 'monte_carlo',
    })


def d_test(delays: Sequence[float], theta0: float, alpha: float) -> TestResult:
    """
    Reject theta >= theta0 when the mean delay exceeds the upper-alpha
    quantile of Gamma(n, n theta0); the p-value is exact.

    Raises:
        DataError: If a delay is not positive
    """
    theta0 = _check_theta(theta0, 'theta0')
    alpha = RunValidator.validate_alpha(alpha)
    delays = np.asarray(delays, dtype=float)
    if len(delays) < 1:
        raise SizeError("The D-test needs at least one delay")
    nonpositive = np.flatnonzero(~(delays > 0))
    if len(nonpositive):
        raise DataError(f"Delays must be positive; offending entries at rows {(nonpositive + 1).tolist()[:10]}")
    n = len(delays)
    mean_delay = float(delays.mean())
    critical_value = gamma_upper_quantile(n, n * theta0, alpha)
    p_value = float(special.gammaincc(n, n * theta0 * mean_delay))
    return TestResult(mean_delay, critical_value, p_value, bool(mean_delay > critical_value), {
        'test': 'delay-d', 'theta0': theta0, 'n': n, 'alpha': alpha, 'p_value_kind': 'exact',
    })


def d_test_power(theta: float, theta0: float, n: int, alpha: float) -> float:
    """Exact rejection probability of the D-test when the true rate is theta."""
    theta = _check_theta(theta)
    critical_value = gamma_upper_quantile(n, n * _check_theta(theta0, 'theta0'), alpha)
    return float(special.gammaincc(n, n * theta * critical_value))


# ---------------------------------------------------------------------------
# efficiencies

def efficiency(theta0: float) -> float:
    """Pitman (and local Bahadur) efficiency of the I-test relative to the D-test."""
    theta0 = _check_theta(theta0, 'theta0')
    return theta0 ** 2 * phi_I_prime(theta0) ** 2 / v_I(theta0)


def _check_alternative(theta: float, theta0: float):
    theta0 = _check_theta(theta0, 'theta0')
    theta = _check_theta(theta)
    if theta >= theta0:
        raise ParameterError(f"Alternatives must satisfy theta < theta0, got theta={theta}, theta0={theta0}")
    return theta, theta0


def bahadur_slope_d(theta: float, theta0: float) -> float:
    """c_D(theta) = theta0/theta - 1 - log(theta0/theta)."""
    theta, theta0 = _check_alternative(theta, theta0)
    ratio = theta0 / theta
    return ratio - 1.0 - log(ratio)


@dataclass(frozen=True)
class LocalSlope:
    """A Bahadur slope known only through its leading term near theta0."""
    value: float
    kind: str = LOCAL_APPROXIMATION

    def __float__(self) -> float:
        return self.value


def bahadur_slope_i_local(theta: float, theta0: float) -> LocalSlope:
    """
    Leading term (phi_I(theta) - phi_I(theta0))^2 / (2 v_I(theta0)) of the
    I-test's Bahadur slope.

    The expansion holds only in an unspecified window around theta0, so the
    value comes back labelled as a local approximation (LocalSlope.kind).
    """
    theta, theta0 = _check_alternative(theta, theta0)
    return LocalSlope((phi_I(theta) - phi_I(theta0)) ** 2 / (2.0 * v_I(theta0)))


def cramer_rate_d(t: float, theta0: float) -> float:
    """Large-deviation rate of the mean delay at t under Exp(theta0)."""
    theta0 = _check_theta(theta0, 'theta0')
    if not t > 0:
        raise ParameterError(f"The mean delay must be positive, got {t}")
    return theta0 * t - 1.0 - log(theta0 * t)
