from functools import partial
from math import e, exp, log, sqrt

import mpmath
import numpy as np
import pytest
from scipy import stats

from patternstat.copulas.delay import Delay, DelayExp
from patternstat.copulas.estimators import cS2_estimate
from patternstat.copulas.models import sample
from patternstat.parametric.delay import (
    PHI_PRIME_SERIES_BELOW,
    PHI_SERIES_BELOW,
    VARIANCE_SERIES_BELOW,
    DelayTestConfig,
    InversionReplicate,
    LocalSlope,
    bahadur_slope_d,
    bahadur_slope_i_local,
    cramer_rate_d,
    d_test,
    d_test_power,
    efficiency,
    gamma_cdf,
    gamma_upper_quantile,
    i_test,
    inversion_null_table,
    phi_I,
    phi_I_prime,
    v_I,
)
from patternstat.permutations.counting import count_inversions
from patternstat.permutations.permutation import Permutation
from patternstat.simulation.engine import MonteCarloEngine
from patternstat.utils.validators import DataError, ParameterError, SizeError, ValidationError

mpmath.mp.dps = 50
P = Permutation.parse


def exponential_quantile(rate, p):
    return -np.log1p(-p) / rate


def mp_phi_prime(theta):
    t = mpmath.mpf(theta)
    return -((2 + t) * mpmath.exp(-t) - (2 - t)) / t ** 3


def mp_variance(theta):
    t = mpmath.mpf(theta)
    return (2 / (3 * t ** 4)) * (2 * t ** 2 - 3 * t - 6 + 2 * (3 * t ** 2 + 2 * t + 6) * mpmath.exp(-t)
                                 - (t + 6) * mpmath.exp(-2 * t))


class TestInversionProbability:

    def test_unit_rate(self):
        assert phi_I(1.0) == pytest.approx(exp(-1.0), rel=1e-14)
        assert phi_I_prime(1.0) == pytest.approx(1.0 - 3.0 / e, rel=1e-12)

    def test_limits(self):
        assert phi_I(1e-8) == pytest.approx(0.5, rel=1e-7)
        assert phi_I_prime(1e-8) == pytest.approx(-1 / 6, rel=1e-6)
        assert phi_I(1e6) == pytest.approx(1e-6, rel=1e-5)

    def test_decreasing(self):
        thetas = np.geomspace(1e-4, 50, 60)
        values = [phi_I(t) for t in thetas]
        assert np.all(np.diff(values) < 0)

    @pytest.mark.parametrize("func, threshold", [(phi_I, PHI_SERIES_BELOW), (phi_I_prime, PHI_PRIME_SERIES_BELOW),
                                                 (v_I, VARIANCE_SERIES_BELOW)])
    def test_series_continuity(self, func, threshold):
        below = func(threshold * (1 - 1e-12))
        at = func(threshold)
        assert below == pytest.approx(at, rel=1e-7)

    def test_invalid_rate(self):
        with pytest.raises(ParameterError):
            phi_I(0.0)
        with pytest.raises(ParameterError):
            v_I(-1.0)

    def test_empirical_inversions(self):
        drawn = [float(count_inversions(sample(DelayExp(1.0), 40, seed).permutation).frequency)
                 for seed in range(400)]
        assert np.mean(drawn) == pytest.approx(exp(-1.0), abs=4 * np.std(drawn) / np.sqrt(400))


class TestVariance:

    def test_small_rate_limit(self):
        assert v_I(1e-6) == pytest.approx(1 / 9, rel=1e-5)

    @pytest.mark.parametrize("theta", [0.01, 0.05, 0.2, 1.0, 5.0, 40.0])
    def test_matches_high_precision(self, theta):
        assert v_I(theta) == pytest.approx(float(mp_variance(theta)), rel=1e-8)

    def test_unit_rate(self):
        assert v_I(1.0) == pytest.approx(0.097331, abs=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
    def test_matches_shared_point_inversions(self, theta):
        joint = cS2_estimate(DelayExp(theta), P("21"), P("21"), reps=1_000_000, seed=int(100 * theta))
        assert 4 * (joint.estimate - phi_I(theta) ** 2) == pytest.approx(v_I(theta), abs=12 * joint.standard_error)

    @pytest.mark.slow
    def test_generic_delay_with_exponential_quantile(self):
        model = Delay(partial(exponential_quantile, 1.0), label='exp-1')
        joint = cS2_estimate(model, P("21"), P("21"), reps=1_000_000, seed=7)
        assert 4 * (joint.estimate - exp(-1) ** 2) == pytest.approx(v_I(1.0), abs=12 * joint.standard_error)


class TestEfficiency:

    @pytest.mark.parametrize("theta0", [0.05, 0.5, 1.0, 3.0, 20.0])
    def test_matches_high_precision(self, theta0):
        t = mpmath.mpf(theta0)
        expected = t ** 2 * mp_phi_prime(theta0) ** 2 / mp_variance(theta0)
        assert efficiency(theta0) == pytest.approx(float(expected), rel=1e-8)

    def test_unit_rate(self):
        assert efficiency(1.0) == pytest.approx(0.11035, abs=1e-4)

    def test_limits(self):
        assert efficiency(1e-3) < 1e-5
        assert efficiency(1e3) == pytest.approx(0.75, abs=0.005)

    def test_below_one(self):
        assert all(0 < efficiency(t) < 1 for t in np.geomspace(1e-2, 1e2, 30))

    def test_local_slopes_ratio(self):
        theta0 = 2.0
        theta = theta0 * (1 - 1e-4)
        ratio = bahadur_slope_i_local(theta, theta0).value / bahadur_slope_d(theta, theta0)
        assert ratio == pytest.approx(efficiency(theta0), rel=1e-3)


class TestBahadurSlopes:

    def test_mean_delay_slope(self):
        assert bahadur_slope_d(1.0, 2.0) == pytest.approx(1 - log(2))

    def test_quadratic_approximation(self):
        exact = bahadur_slope_d(0.95, 1.0)
        quadratic = 0.05 ** 2 / 2
        assert exact / quadratic == pytest.approx(1.07, abs=0.005)

    def test_cramer_rate(self):
        assert cramer_rate_d(0.5, 2.0) == 0.0
        assert cramer_rate_d(1.0, 2.0) == pytest.approx(bahadur_slope_d(1.0, 2.0))

    def test_alternatives_must_be_smaller(self):
        with pytest.raises(ParameterError):
            bahadur_slope_d(2.0, 1.0)
        with pytest.raises(ParameterError):
            bahadur_slope_i_local(1.0, 1.0)
        with pytest.raises(ParameterError):
            cramer_rate_d(0.0, 1.0)

    def test_local_slope_is_labelled(self):
        slope = bahadur_slope_i_local(0.9, 1.0)
        assert isinstance(slope, LocalSlope)
        assert slope.kind == 'local approximation'
        assert float(slope) == slope.value > 0


class TestGammaQuantile:

    @pytest.mark.parametrize("shape, rate, alpha", [(1, 1.0, 0.05), (10, 20.0, 0.05), (250, 250.0, 0.01),
                                                    (3, 0.5, 0.5), (5000, 10.0, 0.001)])
    def test_round_trip(self, shape, rate, alpha):
        x = gamma_upper_quantile(shape, rate, alpha)
        assert 1 - gamma_cdf(shape, rate, x) == pytest.approx(alpha, abs=1e-10)
        assert x == pytest.approx(stats.gamma.isf(alpha, a=shape, scale=1 / rate), rel=1e-9)

    def test_exponential(self):
        assert gamma_upper_quantile(1, 1.0, 0.05) == pytest.approx(-log(0.05), rel=1e-12)

    def test_invalid(self):
        with pytest.raises(ParameterError):
            gamma_upper_quantile(0, 1.0, 0.05)
        with pytest.raises(ValidationError):
            gamma_upper_quantile(2, 1.0, 0.0)
        assert gamma_cdf(2, 1.0, -1.0) == 0.0


class TestMeanDelayTest:

    def test_single_delay(self):
        result = d_test([1.0], 1.0, 0.05)
        assert result.critical_value == pytest.approx(2.9957, abs=1e-4)
        assert result.p_value == pytest.approx(exp(-1.0))
        assert not result.reject
        assert result.config['p_value_kind'] == 'exact'

    def test_long_delays_reject(self):
        delays = sample(DelayExp(0.2), 100, 1).delays
        assert d_test(delays, 5.0, 0.05).reject

    def test_null_does_not_reject(self):
        delays = sample(DelayExp(5.0), 200, 2).delays
        assert d_test(delays, 5.0, 0.001).p_value > 0.001

    def test_invalid_delays(self):
        with pytest.raises(DataError):
            d_test([1.0, -2.0], 1.0, 0.05)
        with pytest.raises(DataError):
            d_test([0.0, 1.0], 1.0, 0.05)
        with pytest.raises(SizeError):
            d_test([], 1.0, 0.05)
        with pytest.raises(ParameterError):
            d_test([1.0], 0.0, 0.05)

    def test_power(self):
        assert d_test_power(2.0, 2.0, 30, 0.05) == pytest.approx(0.05, abs=1e-9)
        powers = [d_test_power(theta, 2.0, 30, 0.05) for theta in (1.9, 1.5, 1.0)]
        assert powers == sorted(powers)

    def test_power_matches_simulation(self):
        rejections = [d_test(sample(DelayExp(1.5), 30, seed).delays, 2.0, 0.05).reject for seed in range(2000)]
        expected = d_test_power(1.5, 2.0, 30, 0.05)
        assert np.mean(rejections) == pytest.approx(expected, abs=4 * np.sqrt(expected * (1 - expected) / 2000))


class TestInversionTest:

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            DelayTestConfig(1.0, 0.05, 1)
        with pytest.raises(ParameterError):
            DelayTestConfig(0.0, 0.05, 10)

    def test_size_mismatch(self):
        with pytest.raises(SizeError):
            i_test(Permutation.identity(10), DelayTestConfig(1.0, 0.05, 20, reps=50))

    def test_long_delays_reject(self):
        pi = sample(DelayExp(0.2), 100, 3).permutation
        result = i_test(pi, DelayTestConfig(5.0, 0.05, 100, reps=99, seed=4))
        assert result.reject
        assert result.config['test'] == 'delay-i'

    def test_identity_does_not_reject(self):
        result = i_test(Permutation.identity(50), DelayTestConfig(1.0, 0.05, 50, reps=99, seed=4))
        assert not result.reject
        assert result.p_value == 1.0

    def test_null_table_metadata(self):
        table = inversion_null_table(DelayTestConfig(2.0, 0.05, 30, reps=60, seed=8))
        assert table.reps == 60
        assert table.metadata['statistic'] == 'inversions'
        assert np.all((table.values >= 0) & (table.values <= 1))

    @pytest.mark.slow
    def test_level_under_null_rate(self):
        n, alpha, trials = 50, 0.05, 2000
        config = DelayTestConfig(1.0, alpha, n, reps=4000, seed=31)
        critical = inversion_null_table(config).critical_value(alpha)
        assert i_test(Permutation.identity(n), config).critical_value == critical
        fresh = MonteCarloEngine().run(InversionReplicate(1.0, n), trials, seed=32)
        rate = float(np.mean(fresh > critical))
        assert abs(rate - alpha) <= 3 * sqrt(alpha * (1 - alpha) / trials) + 0.01

    @pytest.mark.slow
    def test_mean_delay_test_is_more_powerful(self):
        n, alpha, trials = 50, 0.05, 2000
        critical = inversion_null_table(DelayTestConfig(1.0, alpha, n, reps=4000, seed=33)).critical_value(alpha)
        alternative = MonteCarloEngine().run(InversionReplicate(0.8, n), trials, seed=34)
        power_i = float(np.mean(alternative > critical))
        power_d = d_test_power(0.8, 1.0, n, alpha)
        assert power_i > alpha
        assert power_d > power_i + 3 * sqrt(power_i * (1 - power_i) / trials)
