"""Tests for the exact overlap counting.

The ground truth throughout is brute-force enumeration of Pauli strings
at small N (see pauli_brute.py); the module under test must reproduce
those counts exactly, as integers.
"""
import math

import pytest

from opgrowth.combinatorics import (
    CouplingSpec,
    OverlapPattern,
    anticommute_total,
    binomial,
    coupling_variance,
    pattern_count,
    pauli_weight_count,
)
from pauli_brute import all_strings_of_weight, anticommute, count_anticommuting, fixed_weight_string


def pascal_binomial(a: int, b: int) -> int:
    """Pascal-rule recurrence, an independent check on math.comb."""
    if b < 0 or b > a:
        return 0
    row = [1]
    for _ in range(a):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return row[b]


class TestBinomial:
    def test_simple(self):
        assert binomial(5, 2) == 10

    def test_out_of_range_is_zero(self):
        assert binomial(3, 5) == 0
        assert binomial(3, -1) == 0

    def test_large_matches_pascal(self):
        assert binomial(100, 50) == pascal_binomial(100, 50)

    def test_negative_a_rejected(self):
        with pytest.raises(ValueError):
            binomial(-1, 0)


class TestPatternCount:
    def test_single_anticommuting_site(self):
        # Frozen from brute force: 18 weight-2 strings on 4 qubits
        # anticommute with a fixed weight-1 string via p=1, m=0.
        assert pattern_count(OverlapPattern(n=2, p=1, m=0, w=1, N=4)) == 18

    def test_impossible_match_is_zero(self):
        # m=1 needs a second non-identity site on the fixed string.
        assert pattern_count(OverlapPattern(n=2, p=1, m=1, w=1, N=4)) == 0

    def test_identity_reference_is_zero(self):
        for n in (2, 3):
            for p in range(1, n + 1, 2):
                for m in range(0, n - p + 1):
                    assert pattern_count(OverlapPattern(n=n, p=p, m=m, w=0, N=5)) == 0

    def test_even_p_rejected(self):
        with pytest.raises(ValueError):
            OverlapPattern(n=3, p=2, m=0, w=2, N=5)

    def test_p_plus_m_beyond_n_rejected(self):
        with pytest.raises(ValueError):
            OverlapPattern(n=2, p=1, m=2, w=3, N=5)

    def test_pattern_decomposition_covers_all_strings(self):
        # Summing the pattern formula over all p (any parity) and m must
        # count every weight-n string exactly once.
        for N in range(2, 6):
            for n in range(2, min(4, N) + 1):
                for w in range(0, N + 1):
                    total = sum(
                        2**p
                        * 3 ** (n - m - p)
                        * binomial(w, p)
                        * binomial(w - p, m)
                        * binomial(N - w, n - m - p)
                        for p in range(0, min(n, w) + 1)
                        for m in range(0, n - p + 1)
                    )
                    assert total == 3**n * binomial(N, n)


class TestAnticommuteTotal:
    def test_frozen_small_cases(self):
        assert anticommute_total(2, 1, 4) == 18
        assert anticommute_total(2, 0, 4) == 0
        # Frozen before implementation from brute-force enumeration of
        # all 3^3 * C(5,3) weight-3 strings on 5 qubits.
        assert anticommute_total(3, 2, 5) == 144

    def test_matches_brute_force(self):
        for N in range(2, 7):
            for n in range(2, min(4, N) + 1):
                for w in range(0, N + 1):
                    assert anticommute_total(n, w, N) == count_anticommuting(n, w, N), (n, w, N)

    def test_reference_string_choice_is_irrelevant(self):
        # The count only depends on the weight of the fixed string.
        strings = all_strings_of_weight(2, 4)
        counts = {
            sum(1 for s in all_strings_of_weight(2, 4) if anticommute(s, ref))
            for ref in strings[:12]
        }
        assert counts == {anticommute_total(2, 2, 4)}


class TestPauliWeightCount:
    def test_values(self):
        assert pauli_weight_count(1, 100) == 300
        assert pauli_weight_count(0, 57) == 1
        assert pauli_weight_count(2, 4) == 54

    def test_matches_enumeration(self):
        for N in range(1, 6):
            for w in range(0, N + 1):
                assert pauli_weight_count(w, N) == len(all_strings_of_weight(w, N))

    def test_total_operator_basis_size(self):
        for N in range(1, 7):
            assert sum(pauli_weight_count(w, N) for w in range(N + 1)) == 4**N


class TestCouplingVariance:
    def test_two_body(self):
        assert coupling_variance(2, 1.0, 100) == pytest.approx(1 / 1200, rel=1e-15)

    def test_three_body(self):
        assert coupling_variance(3, 1.0, 100) == pytest.approx(1 / 180000, rel=1e-15)

    def test_zero_strength(self):
        assert coupling_variance(2, 0.0, 31) == 0.0

    def test_matches_formula(self):
        for n in (2, 3, 4, 5):
            for N in (7, 50):
                expected = math.factorial(n - 1) / (4 * 3 ** (n - 1) * N ** (n - 1))
                assert coupling_variance(n, 1.0, N) == pytest.approx(expected, rel=1e-15)

    def test_coupling_spec_validation(self):
        with pytest.raises(ValueError):
            CouplingSpec(n=1, a_n=1.0)
        with pytest.raises(ValueError):
            CouplingSpec(n=2, a_n=-0.5)
        assert CouplingSpec(n=2, a_n=1.0).a_n == 1.0


def test_fixed_weight_string_has_requested_weight():
    x, z = fixed_weight_string(3, 6)
    assert bin(x | z).count("1") == 3
