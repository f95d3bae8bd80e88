"""Brute-force Pauli string enumeration used as an oracle in tests.

Strings are encoded as (x_mask, z_mask) bit pairs: site i carries
X if only bit i of x_mask is set, Z if only z_mask, Y if both, I if
neither.  Two strings anticommute iff their symplectic product
popcount(x1 & z2) + popcount(z1 & x2) is odd.
"""
from __future__ import annotations

from itertools import combinations, product


def weight(x: int, z: int) -> int:
    return bin(x | z).count("1")


def anticommute(a: tuple[int, int], b: tuple[int, int]) -> bool:
    sym = bin(a[0] & b[1]).count("1") + bin(a[1] & b[0]).count("1")
    return sym % 2 == 1


def all_strings_of_weight(n: int, N: int) -> list[tuple[int, int]]:
    """Every weight-n Pauli string on N qubits, as (x_mask, z_mask) pairs."""
    out = []
    for sites in combinations(range(N), n):
        for paulis in product((1, 2, 3), repeat=n):
            x = z = 0
            for site, p in zip(sites, paulis):
                if p & 1:
                    x |= 1 << site
                if p & 2:
                    z |= 1 << site
            out.append((x, z))
    return out


def fixed_weight_string(w: int, N: int) -> tuple[int, int]:
    """A canonical weight-w string: X on the first w sites."""
    if not 0 <= w <= N:
        raise ValueError(f"need 0 <= w <= N, got w={w}, N={N}")
    return ((1 << w) - 1, 0)


def count_anticommuting(n: int, w: int, N: int) -> int:
    """Brute-force count of weight-n strings anticommuting with one weight-w string."""
    ref = fixed_weight_string(w, N)
    return sum(1 for s in all_strings_of_weight(n, N) if anticommute(s, ref))
