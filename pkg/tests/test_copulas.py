from math import factorial

import numpy as np
import pytest
from scipy import stats

from patternstat.copulas.clayton import Clayton
from patternstat.copulas.delay import Delay, DelayExp
from patternstat.copulas.fgm import FGM
from patternstat.copulas.independence import Independence
from patternstat.copulas.models import draw_pattern_indices, format_model, parse_model, sample, sample_permutation
from patternstat.copulas.permuton import PermutonMixture
from patternstat.permutations.counting import count_exact, count_inversions
from patternstat.permutations.permutation import Permutation, patterns_of_length, rank_permutation
from patternstat.utils.rng import replicate_rng
from patternstat.utils.validators import ParameterError, SizeError

P = Permutation.parse

MODELS = [
    Independence(),
    FGM(0.7),
    FGM(-1.0),
    Clayton(2.0),
    Clayton(-0.25),
    PermutonMixture.of(P("2413")),
    PermutonMixture(((P("12"), 0.3), (P("321"), 0.7))),
]


def empirical_cdf(u, v, a, b):
    inside = (u <= a) & (v <= b)
    p = inside.mean()
    return p, np.sqrt(p * (1.0 - p) / len(u))


class TestModels:

    def test_parameter_ranges(self):
        with pytest.raises(ParameterError):
            FGM(1.5)
        with pytest.raises(ParameterError):
            Clayton(0.0)
        with pytest.raises(ParameterError):
            Clayton(-1.5)
        with pytest.raises(ParameterError):
            DelayExp(0.0)

    def test_mixture_weights(self):
        with pytest.raises(ParameterError):
            PermutonMixture(((P("12"), 0.5), (P("21"), 0.4)))
        with pytest.raises(ParameterError):
            PermutonMixture(((P("12"), 1.5), (P("21"), -0.5)))
        with pytest.raises(ParameterError):
            PermutonMixture(())

    def test_describe(self):
        assert FGM(0.5).describe() == {'name': 'fgm', 'spec': 'fgm:0.5', 'parameters': {'theta': 0.5}}
        assert str(Clayton(-0.25)) == 'clayton:-0.25'
        assert PermutonMixture.of(P("21")).spec() == 'permuton:1*21'


class TestParseModel:

    @pytest.mark.parametrize("text, expected", [
        ("indep", Independence()),
        ("fgm:0.5", FGM(0.5)),
        ("FGM:-1", FGM(-1.0)),
        ("clayton:-0.25", Clayton(-0.25)),
        ("delay-exp:1.0", DelayExp(1.0)),
    ])
    def test_mini_language(self, text, expected):
        assert parse_model(text) == expected

    @pytest.mark.parametrize("text", ["gumbel:1", "fgm", "fgm:abc", "fgm:2", "indep:1", "clayton:0", "permuton:x"])
    def test_invalid(self, text):
        with pytest.raises(ParameterError):
            parse_model(text)

    def test_round_trip(self):
        for model in (FGM(0.25), Clayton(0.5), DelayExp(2.0), Independence()):
            assert parse_model(format_model(model)) == model

    def test_permuton_loader(self):
        mixture = PermutonMixture.of(P("21"))
        assert parse_model("permuton:mix.txt", permuton_loader=lambda path: mixture) is mixture


class TestSample:

    def test_sample_is_reproducible(self):
        first = sample(FGM(0.5), 50, 11)
        second = sample(FGM(0.5), 50, 11)
        assert np.array_equal(first.points, second.points)
        assert first.permutation == second.permutation

    def test_permutation_matches_points(self):
        drawn = sample(Clayton(1.0), 40, 3)
        assert drawn.n == 40
        assert drawn.permutation == rank_permutation(drawn.points[:, 0], drawn.points[:, 1])

    def test_fgm_zero_is_independence(self):
        assert np.array_equal(sample(FGM(0.0), 100, 5).points, sample(Independence(), 100, 5).points)

    def test_zero_delay_gives_identity(self):
        for seed in range(5):
            assert sample_permutation(Delay(), 25, seed) == Permutation.identity(25)

    def test_delay_samples_carry_delays(self):
        drawn = sample(DelayExp(2.0), 30, 1)
        assert np.allclose(drawn.points[:, 1] - drawn.points[:, 0], drawn.delays)
        assert np.all(drawn.delays > 0)

    def test_custom_delay_law(self):
        model = Delay(quantile=lambda p: -np.log1p(-p), label='exp1')
        drawn = sample(model, 20, 8)
        assert model.spec() == 'delay:exp1'
        assert np.all(drawn.delays >= 0)

    def test_mixture_labels(self):
        drawn = sample(PermutonMixture(((P("12"), 0.5), (P("21"), 0.5))), 200, 2)
        assert set(np.unique(drawn.labels)) <= {0, 1}

    def test_sample_size(self):
        with pytest.raises(SizeError):
            sample(Independence(), 0, 1)

    @pytest.mark.parametrize("model", MODELS, ids=str)
    def test_marginals_are_uniform(self, model):
        u, v = model.draw(100_000, replicate_rng(2024))
        assert stats.kstest(u, 'uniform').pvalue > 1e-4
        assert stats.kstest(v, 'uniform').pvalue > 1e-4

    @pytest.mark.parametrize("theta", [1.0, -0.6])
    def test_fgm_cdf_on_grid(self, theta):
        model = FGM(theta)
        u, v = model.draw(1_000_000, replicate_rng(7))
        for a in (0.25, 0.5, 0.75):
            for b in (0.25, 0.5, 0.75):
                p, se = empirical_cdf(u, v, a, b)
                assert abs(p - model.cdf(a, b)) <= 4 * se

    @pytest.mark.parametrize("kappa", [2.0, 0.5, -0.25])
    def test_clayton_cdf_on_grid(self, kappa):
        model = Clayton(kappa)
        u, v = model.draw(400_000, replicate_rng(8))
        for a in (0.2, 0.5, 0.8):
            for b in (0.3, 0.5, 0.9):
                p, se = empirical_cdf(u, v, a, b)
                assert abs(p - float(model.cdf(a, b))) <= 4 * se + 1e-12

    def test_permuton_support(self):
        sigma = P("2413")
        u, v = PermutonMixture.of(sigma).draw(40_000, replicate_rng(1))
        columns = np.floor(u * 4).astype(int)
        rows = np.floor(v * 4).astype(int)
        assert np.array_equal(rows, sigma.array[columns])
        shares = np.bincount(columns, minlength=4) / len(u)
        assert np.allclose(shares, 0.25, atol=0.01)

    def test_pattern_indices(self):
        indices = draw_pattern_indices(PermutonMixture.of(P("123")), 1000, 3, replicate_rng(0))
        assert indices.shape == (1000,)
        assert indices.min() >= 0 and indices.max() < factorial(3)

    def test_frequencies_are_unbiased(self):
        model = FGM(0.5)
        sigma = P("123")
        values = np.array([float(count_exact(sample(model, 8, replicate_rng(3, r)).permutation, sigma).frequency)
                           for r in range(3000)])
        expected = 1 / 6 + 0.5 / 12 + 0.25 / 100
        assert abs(values.mean() - expected) <= 4 * values.std(ddof=1) / np.sqrt(len(values))

    def test_large_permuton_samples_follow_the_permutation(self):
        sigma = Permutation(tuple(np.argsort(np.linspace(0, 1, 60) ** 2 - 0.3 * np.sin(np.arange(60))) + 1))
        drawn = sample(PermutonMixture.of(sigma), 3000, 4).permutation
        target = float(count_exact(sigma, P("21")).frequency)
        assert float(count_inversions(drawn).frequency) == pytest.approx(target, abs=0.03)


def test_all_patterns_reachable_from_independence():
    counts = np.bincount(draw_pattern_indices(Independence(), 24_000, 4, replicate_rng(6)), minlength=24)
    assert np.all(counts > 0)
    assert len(patterns_of_length(4)) == len(counts)
