from fractions import Fraction
from itertools import combinations
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternstat.permutations import counting
from patternstat.permutations.counting import (
    FrequencyProfile,
    SubsetSamplerPlan,
    _level3_counts_quadratic,
    _level_counts,
    auto_profile,
    classify,
    count_exact,
    count_inversions,
    count_monte_carlo,
    exact_work,
    profile,
)
from patternstat.permutations.permutation import Permutation, pattern_of, patterns_of_length, random_permutation
from patternstat.utils.validators import ResourceError, SizeError, ValidationError

P = Permutation.parse


def brute_force_count(pi, sigma):
    return sum(pattern_of([pi[i] for i in subset]) == sigma for subset in combinations(range(len(pi)), len(sigma)))


def small_permutations(n_min=1, n_max=8):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.permutations(list(range(1, n + 1))).map(lambda p: Permutation(tuple(p))))


class TestCountExact:

    def test_running_example(self, example_permutation):
        result = count_exact(example_permutation, P("231"))
        assert result.count == 3
        assert result.subsets == 20
        assert result.frequency == Fraction(3, 20)

    def test_singleton_pattern(self, example_permutation):
        assert count_exact(example_permutation, P("1")).frequency == 1

    def test_pattern_longer_than_permutation(self):
        result = count_exact(P("321"), P("4321"))
        assert result.frequency == 0
        assert result.subsets == 0

    @given(small_permutations(1, 7), st.integers(1, 4))
    @settings(max_examples=60)
    def test_matches_brute_force(self, pi, m):
        if m > len(pi):
            return
        for sigma in patterns_of_length(m):
            assert count_exact(pi, sigma).count == brute_force_count(pi, sigma)

    @given(small_permutations(1, 8), st.integers(1, 4))
    @settings(max_examples=40)
    def test_partition(self, pi, m):
        if m > len(pi):
            return
        assert sum(count_exact(pi, sigma).frequency for sigma in patterns_of_length(m)) == 1

    @given(small_permutations(3, 8))
    @settings(max_examples=40)
    def test_inverse_symmetry(self, pi):
        for sigma in patterns_of_length(3):
            assert count_exact(pi, sigma).frequency == count_exact(pi.inverse(), sigma.inverse()).frequency

    def test_long_patterns_use_rank_classification(self):
        pi = random_permutation(9, 4)
        sigma = pattern_of([pi[i] for i in range(7)])
        assert count_exact(pi, sigma).count == brute_force_count(pi, sigma)

    def test_budget(self):
        with pytest.raises(ResourceError):
            count_exact(random_permutation(40, 1), P("1234"), budget=1000)
        assert count_exact(random_permutation(40, 1), P("1234"), budget=comb(40, 4)).subsets == comb(40, 4)

    def test_long_pattern_on_short_permutation_is_free(self):
        result = count_exact(P("21"), Permutation.identity(9), budget=1)
        assert result.count == 0 and result.subsets == 0

    def test_streamed_blocks_match_cached_index(self, monkeypatch):
        pi = random_permutation(11, 8)
        sigma = P("2413")
        cached = _level_counts(pi.array, 4)
        monkeypatch.setattr(counting, "CACHED_INDEX_ROWS", 0)
        monkeypatch.setattr(counting, "CHUNK_ROWS", 7)
        assert _level_counts(pi.array, 4).tolist() == cached.tolist()
        assert _level_counts(pi.array, 4, workers=3).tolist() == cached.tolist()
        assert count_exact(pi, sigma).count == brute_force_count(pi, sigma)

class TestCountInversions:

    def test_identity(self):
        assert count_inversions(Permutation.identity(10)).frequency == 0

    def test_reversal(self):
        assert count_inversions(Permutation(tuple(range(10, 0, -1)))).frequency == 1

    def test_231(self):
        assert count_inversions(P("231")).frequency == Fraction(2, 3)

    def test_too_short(self):
        with pytest.raises(SizeError):
            count_inversions(P("1"))

    @given(small_permutations(2, 40))
    def test_agrees_with_exact_count(self, pi):
        assert count_inversions(pi).count == count_exact(pi, P("21")).count


class TestClassify:

    def test_lex_indices(self):
        block = np.array([[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]])
        assert classify(block).tolist() == [0, 1, 2, 3, 4, 5]

    def test_rank_keys_for_long_patterns(self):
        sigmas = [patterns_of_length(7)[i] for i in (0, 1000, 5039)]
        block = np.array([s.values for s in sigmas])
        assert classify(block).tolist() == [0, 1000, 5039]


class TestQuadraticLevel3:

    @pytest.mark.parametrize("n", [3, 5, 17, 61, 90])
    def test_agrees_with_enumeration(self, n):
        values = random_permutation(n, n).array
        expected = np.bincount(classify(values[np.array(list(combinations(range(n), 3)))]), minlength=6)
        assert _level3_counts_quadratic(values).tolist() == expected.tolist()

    def test_profile_path_above_threshold(self):
        pi = random_permutation(80, 11)
        counts = profile(pi, 3).counts[2]
        assert counts.sum() == comb(80, 3)
        assert counts[0] == brute_force_count(pi, P("123"))


class TestChapmanKolmogorov:

    @pytest.mark.parametrize("seed", [1, 2])
    def test_exact_identity(self, seed):
        pi = random_permutation(8, seed)
        direct = profile(pi, 5).entries
        for l in range(1, 6):
            level = patterns_of_length(l)
            inner = {rho: profile(rho, l).entries for rho in level}
            for sigma, expected in direct.items():
                if len(sigma) > l:
                    continue
                total = sum(direct[rho] * inner[rho][sigma] for rho in level if inner[rho][sigma])
                assert total == expected


class TestProfile:

    def test_two_element_example(self):
        result = profile(P("21"), 2)
        assert result.entries == {P("1"): 1, P("12"): 0, P("21"): 1}

    def test_running_example(self, example_permutation):
        assert profile(example_permutation, 3).frequency(P("231")) == Fraction(3, 20)

    def test_levels_sum_to_one(self, example_permutation):
        result = profile(example_permutation, 4)
        for m in range(1, 5):
            assert result.level(m).sum() == pytest.approx(1.0)

    def test_levels_beyond_n_are_zero(self):
        result = profile(P("21"), 4)
        assert np.all(result.level(3) == 0)
        assert np.all(result.level(4) == 0)
        assert result.frequency(P("1234")) == 0

    def test_vector_layout(self, example_permutation):
        result = profile(example_permutation, 3)
        assert len(result.vector()) == 1 + 2 + 6
        assert list(result.to_series().index[:3]) == ["1", "12", "21"]
        assert np.all(result.standard_errors() == 0)

    def test_budget(self):
        with pytest.raises(ResourceError):
            profile(random_permutation(40, 1), 4, budget=1000)

    def test_budget_checks_every_length(self):
        # C(12, 6) = 924 is the largest level, C(12, 8) = 495 the last
        assert exact_work(12, 8) == comb(12, 6)
        with pytest.raises(ResourceError):
            profile(random_permutation(12, 1), 8, budget=800)

    def test_pattern_length_limit(self):
        with pytest.raises(ResourceError):
            profile(random_permutation(12, 1), 9)
        with pytest.raises(ResourceError):
            auto_profile(random_permutation(12, 1), 9, seed=1)

    def test_invalid_arguments(self, example_permutation):
        with pytest.raises(ValidationError):
            profile(example_permutation, 0)
        with pytest.raises(ValidationError):
            profile(example_permutation, 3, mode="monte_carlo")
        with pytest.raises(ValidationError):
            profile(example_permutation, 3, mode="sampled")

    def test_threaded_enumeration_matches(self):
        pi = random_permutation(30, 5)
        serial = profile(pi, 4)
        threaded = profile(pi, 4, workers=3)
        for m in range(1, 5):
            assert serial.counts[m - 1].tolist() == threaded.counts[m - 1].tolist()

    def test_monte_carlo_profile(self):
        pi = random_permutation(50, 2)
        plan = SubsetSamplerPlan(draws=4000, seed=9)
        estimate = profile(pi, 3, "monte_carlo", plan)
        assert not estimate.is_exact
        assert estimate.mode_label == "monte_carlo(4000)"
        exact = profile(pi, 3).vector()
        errors = estimate.standard_errors()
        assert np.all(np.abs(estimate.vector() - exact) <= 5 * errors + 1e-12)
        assert profile(pi, 3, "monte_carlo", plan).vector().tolist() == estimate.vector().tolist()


class TestAutoProfile:

    def test_exact_when_within_budget(self, example_permutation):
        assert auto_profile(example_permutation, 4).is_exact

    def test_monte_carlo_beyond_budget(self):
        pi = random_permutation(60, 3)
        result = auto_profile(pi, 4, seed=1, budget=100)
        assert result.mode == "monte_carlo"
        assert result.draws == 10 * 60 * 4

    def test_needs_seed_beyond_budget(self):
        with pytest.raises(ValidationError):
            auto_profile(random_permutation(60, 3), 4, budget=100)


class TestCountMonteCarlo:

    def test_singleton_is_exact(self, example_permutation):
        estimate = count_monte_carlo(example_permutation, P("1"), SubsetSamplerPlan(5, 0))
        assert estimate.estimate == 1.0
        assert estimate.standard_error == 0.0

    def test_size_error(self):
        with pytest.raises(SizeError):
            count_monte_carlo(P("21"), P("123"), SubsetSamplerPlan(10, 0))

    def test_plan_validation(self):
        with pytest.raises(ValidationError):
            SubsetSamplerPlan(0, 1)
        assert SubsetSamplerPlan.default(30, 4, seed=2).draws == 1200

    def test_converges_on_running_example(self, example_permutation):
        estimate = count_monte_carlo(example_permutation, P("231"), SubsetSamplerPlan(200_000, 5))
        assert estimate.estimate == pytest.approx(0.15, abs=5 * estimate.standard_error)

    def test_reproducible(self, example_permutation):
        plan = SubsetSamplerPlan(500, 77)
        assert count_monte_carlo(example_permutation, P("21"), plan) == \
            count_monte_carlo(example_permutation, P("21"), plan)

    def test_coverage_against_exact(self):
        pi = random_permutation(30, 12)
        sigma = P("1234")
        exact = float(count_exact(pi, sigma).frequency)
        covered = 0
        trials = 1000
        for seed in range(trials):
            estimate = count_monte_carlo(pi, sigma, SubsetSamplerPlan(20_000, seed))
            covered += abs(estimate.estimate - exact) <= 3 * estimate.standard_error
        assert covered >= 0.99 * trials

    def test_unbiased_over_repetitions(self):
        pi = random_permutation(25, 8)
        sigma = P("132")
        exact = float(count_exact(pi, sigma).frequency)
        estimates = np.array([count_monte_carlo(pi, sigma, SubsetSamplerPlan(300, seed)).estimate
                              for seed in range(400)])
        spread = estimates.std(ddof=1)
        assert abs(estimates.mean() - exact) <= 4 * spread / np.sqrt(len(estimates))


def test_profile_is_frequency_profile(example_permutation):
    assert isinstance(profile(example_permutation, 2), FrequencyProfile)
    assert factorial(3) == len(_level_counts(example_permutation.array, 3))
