"""Exact counting of Pauli-string overlaps and coupling normalization.

Everything here is integer combinatorics on Pauli strings over N qubits.
A string has a weight w (number of non-identity sites).  Transition rates
in the weight master equation are built from the number of weight-n
strings that anticommute with a fixed weight-w string, broken down by
overlap pattern: p sites where the two strings carry different
non-identity Paulis (anticommuting sites) and m sites where they carry
the same one.  Counts are kept as exact big integers and converted to
floats only when they enter a rate matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


def binomial(a: int, b: int) -> int:
    """C(a, b) as an exact integer, with C(a, b) = 0 for b < 0 or b > a.

    The out-of-range convention makes boundary terms of the master
    equation vanish without special-casing.  Negative a is a domain
    error rather than a zero: it always indicates a caller bug.
    """
    if a < 0:
        raise ValueError(f"binomial: a must be nonnegative, got {a}")
    if b < 0 or b > a:
        return 0
    return math.comb(a, b)


@dataclass(frozen=True)
class OverlapPattern:
    """One way a weight-n string can overlap a fixed weight-w string.

    n: weight of the moving string (body order of the interaction term)
    p: number of sites where the two strings anticommute (must be odd)
    m: number of sites carrying the same non-identity Pauli
    w: weight of the fixed string
    N: number of qubits
    """

    n: int
    p: int
    m: int
    w: int
    N: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"body order n must be >= 2, got {self.n}")
        if self.p < 1 or self.p % 2 == 0:
            raise ValueError(f"anticommuting-site count p must be odd and >= 1, got {self.p}")
        if self.m < 0:
            raise ValueError(f"matching-site count m must be >= 0, got {self.m}")
        if self.p + self.m > self.n:
            raise ValueError(f"p + m = {self.p + self.m} exceeds n = {self.n}")
        if self.N < 1:
            raise ValueError(f"qubit count N must be >= 1, got {self.N}")
        if not 0 <= self.w <= self.N:
            raise ValueError(f"weight w must satisfy 0 <= w <= N, got w={self.w}, N={self.N}")


def pattern_count(pat: OverlapPattern) -> int:
    """Number of weight-n strings realizing the given overlap pattern.

    Choose p of the w non-identity sites to anticommute (2 choices of
    Pauli each), m of the remaining w-p to match, and place the other
    n-m-p Paulis (3 choices each) on identity sites of the fixed string.
    """
    if pat.p > pat.w:
        # C(w, p) vanishes and w - p would be an invalid binomial argument.
        return 0
    return (
        2**pat.p
        * 3 ** (pat.n - pat.m - pat.p)
        * binomial(pat.w, pat.p)
        * binomial(pat.w - pat.p, pat.m)
        * binomial(pat.N - pat.w, pat.n - pat.m - pat.p)
    )


def anticommute_total(n: int, w: int, N: int) -> int:
    """Total number of weight-n strings anticommuting with a fixed weight-w string.

    Sums pattern_count over all odd p and all m with p + m <= n.
    """
    if n < 2:
        raise ValueError(f"body order n must be >= 2, got {n}")
    if not 0 <= w <= N:
        raise ValueError(f"weight w must satisfy 0 <= w <= N, got w={w}, N={N}")
    total = 0
    for p in range(1, n + 1, 2):
        for m in range(0, n - p + 1):
            total += pattern_count(OverlapPattern(n=n, p=p, m=m, w=w, N=N))
    return total


def pauli_weight_count(w: int, N: int) -> int:
    """Number of weight-w Pauli strings on N qubits: 3^w C(N, w)."""
    if not 0 <= w <= N:
        raise ValueError(f"weight w must satisfy 0 <= w <= N, got w={w}, N={N}")
    return 3**w * binomial(N, w)


@dataclass(frozen=True)
class CouplingSpec:
    """Strength a_n of the n-body interaction ensemble."""

    n: int
    a_n: float

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"body order n must be >= 2, got {self.n}")
        if self.a_n < 0:
            raise ValueError(f"coupling strength must be nonnegative, got {self.a_n}")


def coupling_variance(n: int, a_n: float, N: int) -> float:
    """Per-term coupling variance mu_n^2 = a_n (n-1)! / (4 * 3^(n-1) * N^(n-1)).

    This scaling makes every body order contribute an O(1) total
    transition rate per unit time at large N.
    """
    if n < 2:
        raise ValueError(f"body order n must be >= 2, got {n}")
    if N < 1:
        raise ValueError(f"qubit count N must be >= 1, got {N}")
    if a_n < 0:
        raise ValueError(f"coupling strength must be nonnegative, got {a_n}")
    return a_n * math.factorial(n - 1) / (4 * 3 ** (n - 1) * N ** (n - 1))
