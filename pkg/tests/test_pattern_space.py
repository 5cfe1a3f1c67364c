from math import e, factorial, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from patternstat.inference.pattern_space import (
    SPACE,
    TruncatedVector,
    cvm_norm_sq,
    enumerate_patterns,
    ks_norm,
    pattern_lengths,
    weight,
)
from patternstat.permutations.counting import profile
from patternstat.permutations.permutation import Permutation
from patternstat.utils.validators import ResourceError, ValidationError

P = Permutation.parse
GAMMA = 1.0 / (sqrt(e) - 1.0)


def independence_diff(pi, k):
    expected = np.concatenate([np.full(factorial(m), 1.0 / factorial(m)) for m in range(1, k + 1)])
    return profile(pi, k).vector() - expected


class TestWeights:

    def test_gamma(self):
        assert SPACE.gamma == pytest.approx(1.5414940825, rel=1e-10)

    def test_length_one(self):
        assert weight(P("1")) == pytest.approx(0.770747, abs=1e-6)
        assert weight(P("1")) == pytest.approx(GAMMA / 2)

    def test_length_two(self):
        assert weight(P("21")) == pytest.approx(GAMMA / 16)
        assert SPACE.level_mass(2) == pytest.approx(GAMMA / 8)

    def test_level_masses_sum_to_one(self):
        assert sum(SPACE.level_mass(k) for k in range(1, 41)) == pytest.approx(1.0, abs=1e-12)

    def test_level_mass_is_sum_of_weights(self):
        weights = SPACE.weights(5)
        lengths = pattern_lengths(5)
        for k in range(1, 6):
            assert weights[lengths == k].sum() == pytest.approx(SPACE.level_mass(k))

    @pytest.mark.parametrize("k", range(1, 7))
    def test_tightness_bound_algebra(self, k):
        total = factorial(k) * SPACE.weight_of_length(k) * factorial(k) * 2 ** k / k ** 2
        assert total == pytest.approx(SPACE.gamma / k ** 2)


class TestEnumeratePatterns:

    def test_small(self):
        assert [str(s) for s in enumerate_patterns(1)] == ["1"]
        assert [str(s) for s in enumerate_patterns(2)] == ["1", "12", "21"]
        assert [str(s) for s in enumerate_patterns(3)[3:]] == ["123", "132", "213", "231", "312", "321"]

    def test_complete_and_unique(self):
        patterns = enumerate_patterns(5)
        assert len(patterns) == len(set(patterns)) == 1 + 2 + 6 + 24 + 120

    def test_bounds(self):
        with pytest.raises(ResourceError):
            enumerate_patterns(9)
        with pytest.raises(ValidationError):
            enumerate_patterns(0)


class TestNorms:

    def test_zero(self):
        zero = np.zeros(9)
        assert cvm_norm_sq(zero, 10) == 0.0
        assert ks_norm(zero, 10) == 0.0

    def test_two_point_example(self):
        diff = independence_diff(P("21"), 2)
        assert diff.tolist() == [0.0, -0.5, 0.5]
        assert cvm_norm_sq(diff, 2) == pytest.approx(GAMMA / 64)
        assert cvm_norm_sq(diff, 2) == pytest.approx(0.0240858, abs=1e-7)
        assert ks_norm(diff, 2) == pytest.approx(0.109742, abs=1e-6)

    @given(arrays(np.float64, 9, elements=st.floats(-1, 1)), st.integers(1, 1000))
    def test_cvm_is_linear_in_n(self, diff, n):
        assert cvm_norm_sq(diff, 4 * n) == pytest.approx(4 * cvm_norm_sq(diff, n), rel=1e-12, abs=1e-300)

    @given(arrays(np.float64, 33, elements=st.floats(-1, 1)))
    def test_ks_ignores_sign(self, diff):
        assert ks_norm(-diff, 7) == ks_norm(diff, 7)

    @given(arrays(np.float64, 33, elements=st.floats(-1, 1)))
    def test_cvm_matches_naive_sum(self, diff):
        patterns = enumerate_patterns(4)
        naive = 0.0
        for value, sigma in zip(diff, patterns):
            naive += weight(sigma) / len(sigma) ** 2 * value ** 2
        assert cvm_norm_sq(diff, 5) == pytest.approx(5 * naive, rel=1e-12, abs=1e-300)

    def test_length_one_entries_vanish_for_profiles(self, example_permutation):
        diff = profile(example_permutation, 3).vector() - profile(P("2413"), 3).vector()
        assert diff[0] == 0.0

    def test_incomplete_vector(self):
        with pytest.raises(ValidationError):
            cvm_norm_sq(np.zeros(5), 3)


class TestTruncatedVector:

    def test_from_mapping(self):
        vector = TruncatedVector.from_mapping({P("1"): 1.0, P("12"): 0.25, P("21"): 0.75}, 2)
        assert vector.values.tolist() == [1.0, 0.25, 0.75]
        assert vector.as_mapping()[P("21")] == 0.75

    def test_missing_pattern(self):
        with pytest.raises(ValidationError):
            TruncatedVector.from_mapping({P("1"): 1.0, P("12"): 0.25}, 2)

    def test_arithmetic(self):
        a = TruncatedVector(2, [1.0, 0.5, 0.5])
        b = TruncatedVector(2, [1.0, 0.0, 1.0])
        assert (a - b).values.tolist() == [0.0, 0.5, -0.5]
        assert cvm_norm_sq(a - b, 2) == cvm_norm_sq(-(a - b), 2)

    def test_shape_check(self):
        with pytest.raises(ValidationError):
            TruncatedVector(2, [1.0, 0.5])
        with pytest.raises(ValidationError):
            TruncatedVector(2, [1.0, 0.5, 0.5]) - TruncatedVector(1, [1.0])
