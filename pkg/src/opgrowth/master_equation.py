"""Finite-N master equation for the operator-weight distribution.

The central object is the N x N transition generator M acting on the
weight distribution b_w (w = 1..N): db/dt = M b.  Column w' loses
probability at the total anticommutation rate of weight-w' strings with
the interaction terms (plus a weight-proportional decoherence drain),
and feeds the weights reachable by each overlap pattern, damped by the
forward/backward correlation r.

This module is the numerical ground truth that the generating-function
solver (gf.py) and the small-system Monte Carlo (mc/) are checked
against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from .combinatorics import (
    CouplingSpec,
    OverlapPattern,
    anticommute_total,
    coupling_variance,
    pattern_count,
)


class IntegrationError(RuntimeError):
    """Raised when the ODE integrator gives up before reaching the final time."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(message)
        self.t_reached = t_reached


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters: qubit count, decoherence, imperfection, couplings."""

    N: int
    kappa: float
    r: float
    couplings: tuple[CouplingSpec, ...]

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")
        if self.kappa < 0.0:
            raise ValueError(f"kappa must be nonnegative, got {self.kappa}")
        if not self.couplings:
            raise ValueError("at least one coupling is required")
        orders = [c.n for c in self.couplings]
        if len(set(orders)) != len(orders):
            raise ValueError(f"duplicate body orders in couplings: {orders}")

    @property
    def a_sum(self) -> float:
        return sum(c.a_n for c in self.couplings)

    @property
    def max_order(self) -> int:
        return max(c.n for c in self.couplings)

    def active_couplings(self) -> tuple[CouplingSpec, ...]:
        """Couplings with nonzero strength."""
        return tuple(c for c in self.couplings if c.a_n > 0)

    def mu_squared(self, n: int) -> float:
        for c in self.couplings:
            if c.n == n:
                return coupling_variance(n, c.a_n, self.N)
        raise KeyError(f"no coupling of body order {n}")


def two_body(N: int, kappa: float, r: float, a: float = 1.0) -> ModelParams:
    return ModelParams(N=N, kappa=kappa, r=r, couplings=(CouplingSpec(2, a),))


def three_body(N: int, kappa: float, r: float, a: float = 1.0) -> ModelParams:
    return ModelParams(N=N, kappa=kappa, r=r, couplings=(CouplingSpec(3, a),))


@dataclass(frozen=True)
class WeightDistribution:
    """b_w for w = 1..W_max, stored as b[w-1]."""

    b: np.ndarray
    W_max: int = field(default=0)

    def __post_init__(self) -> None:
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("b must be a nonempty 1-d array")
        if not np.all(np.isfinite(b)):
            raise ValueError("b must contain finite entries")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "W_max", b.size)

    @classmethod
    def delta(cls, w0: int, W_max: int) -> "WeightDistribution":
        if not 1 <= w0 <= W_max:
            raise ValueError(f"need 1 <= w0 <= W_max, got w0={w0}, W_max={W_max}")
        b = np.zeros(W_max)
        b[w0 - 1] = 1.0
        return cls(b=b)

    def norm(self) -> float:
        return float(self.b.sum())

    def mean_weight(self) -> float:
        total = self.b.sum()
        if total <= 0:
            raise ValueError("distribution has nonpositive norm")
        w = np.arange(1, self.W_max + 1)
        return float((w * self.b).sum() / total)


@dataclass(frozen=True)
class BandedGenerator:
    """Transition generator stored by diagonal.

    bands[s_max + s, c] holds M[w, w'] for the 0-based column c = w' - 1
    and row offset s = w - w'; slots falling outside the matrix are zero.
    """

    N: int
    s_max: int
    bands: np.ndarray

    def __post_init__(self) -> None:
        expected = (2 * self.s_max + 1, self.N)
        if self.bands.shape != expected:
            raise ValueError(f"bands shape {self.bands.shape} != {expected}")

    def entry(self, w: int, w_prime: int) -> float:
        """M[w, w'] with 1-based weights."""
        s = w - w_prime
        if abs(s) > self.s_max:
            return 0.0
        return float(self.bands[self.s_max + s, w_prime - 1])

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.N, self.N))
        for s in range(-self.s_max, self.s_max + 1):
            for c in range(self.N):
                rw = c + s
                if 0 <= rw < self.N:
                    m[rw, c] = self.bands[self.s_max + s, c]
        return m

    def matvec(self, b: np.ndarray) -> np.ndarray:
        out = np.zeros_like(b)
        for s in range(-self.s_max, self.s_max + 1):
            band = self.bands[self.s_max + s]
            if s >= 0:
                # rows s..N-1 receive column c = row - s
                out[s:] += band[: self.N - s] * b[: self.N - s]
            else:
                out[: self.N + s] += band[-s:] * b[-s:]
        return out

    def column_sums(self) -> np.ndarray:
        return self.bands.sum(axis=0)

    def triples(self):
        """Yield (row, col, value) for every stored nonzero slot, 1-based."""
        for c in range(self.N):
            for s in range(-self.s_max, self.s_max + 1):
                rw = c + s
                if 0 <= rw < self.N:
                    v = self.bands[self.s_max + s, c]
                    if v != 0.0:
                        yield rw + 1, c + 1, float(v)


def build_generator(params: ModelParams) -> BandedGenerator:
    """Exact finite-N generator from the overlap counts.

    Gains and losses for each column are accumulated as exact integers
    per weight shift and converted to float once, so that at r=1 and
    kappa=0 the column sums cancel to the last bit.
    """
    N = params.N
    for c in params.couplings:
        if c.n > N:
            raise ValueError(f"body order {c.n} exceeds qubit count {N}")
    s_max = max(params.max_order - 1, 1)
    bands = np.zeros((2 * s_max + 1, N))
    for coup in params.active_couplings():
        n = coup.n
        rate = 4.0 * params.mu_squared(n)
        for col in range(1, N + 1):
            shift_counts: dict[int, int] = {}
            total = 0
            for p in range(1, n + 1, 2):
                for m in range(0, n - p + 1):
                    cnt = pattern_count(OverlapPattern(n=n, p=p, m=m, w=col, N=N))
                    if cnt == 0:
                        continue
                    total += cnt
                    shift = n - 2 * m - p
                    shift_counts[shift] = shift_counts.get(shift, 0) + cnt
            bands[s_max + 0, col - 1] -= rate * total
            for shift, cnt in shift_counts.items():
                target = col + shift
                if 1 <= target <= N:
                    bands[s_max + shift, col - 1] += rate * params.r * cnt
    for col in range(1, N + 1):
        bands[s_max + 0, col - 1] -= 2.0 * params.kappa * col
    return BandedGenerator(N=N, s_max=s_max, bands=bands)


def build_reference_generator(params: ModelParams, which: str) -> BandedGenerator:
    """Hand-coded generator from the specialized closed-form rate equations.

    Used only to cross-check build_generator; `which` must be
    "two_body" or "three_body" and match the (single) active coupling.
    """
    active = params.active_couplings()
    if which == "two_body":
        if len(active) != 1 or active[0].n != 2:
            raise ValueError(f"couplings {params.couplings} are not pure two-body")
        return _reference_two_body(params, active[0].a_n)
    if which == "three_body":
        if len(active) != 1 or active[0].n != 3:
            raise ValueError(f"couplings {params.couplings} are not pure three-body")
        return _reference_three_body(params, active[0].a_n)
    raise ValueError(f"unknown reference kind {which!r}")


def _reference_two_body(params: ModelParams, a: float) -> BandedGenerator:
    N, kappa, r = params.N, params.kappa, params.r
    bands = np.zeros((3, N))
    for w in range(1, N + 1):
        bands[1, w - 1] = -a * 2 * w * ((w - 1) + 3 * (N - w)) / (3 * N) - 2 * kappa * w
    # gain into w from w-1 sits in column w-1 at offset +1
    for col in range(1, N):
        w = col + 1
        bands[2, col - 1] = a * r * 2 * (N - w + 1) * (w - 1) / N
    # gain into w from w+1 sits in column w+1 at offset -1
    for col in range(2, N + 1):
        w = col - 1
        bands[0, col - 1] = a * r * 2 * w * (w + 1) / (3 * N)
    return BandedGenerator(N=N, s_max=1, bands=bands)


def _reference_three_body(params: ModelParams, a: float) -> BandedGenerator:
    # Written down for a_3 = 1; general strength enters by scaling time
    # by a and the decoherence rate by 1/a, i.e. M(kappa) = a * M_unit(kappa/a).
    N, r = params.N, params.r
    ku = params.kappa / a
    bands = np.zeros((5, N))
    for w in range(1, N + 1):
        diag = (
            -2 * (ku + 1) * w
            + (2 / 3) * w * (2 * r * (w - 1) + 4 * w + 5) / N
            - (4 / 27) * w * (r * (7 * w**2 - 3 * w - 4) + 8 * w**2 + 12 * w + 7) / N**2
        )
        bands[2, w - 1] = a * diag
    for col in range(1, N - 1):
        w = col + 2
        up = (
            2 * r * (w - 2)
            - 2 * r * (2 * w**2 - 7 * w + 6) / N
            + 2 * r * (w - 1) * (w - 2) ** 2 / N**2
        )
        bands[4, col - 1] = a * up
    for col in range(3, N + 1):
        w = col - 2
        bands[0, col - 1] = a * (2 / 9) * r * w * (w**2 + 3 * w + 2) / N**2
    return BandedGenerator(N=N, s_max=2, bands=bands)


def evolve(
    gen: BandedGenerator,
    b0: WeightDistribution,
    t_grid: np.ndarray,
    tol: float = 1e-10,
) -> list[WeightDistribution]:
    """Integrate db/dt = M b on the given grid with adaptive RK45.

    The grid must start at 0; the first returned state is b0 itself.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a nonempty 1-d sequence")
    if t_grid[0] != 0.0:
        raise ValueError(f"t_grid must start at 0, got {t_grid[0]}")
    if np.any(np.diff(t_grid) <= 0) and t_grid.size > 1:
        raise ValueError("t_grid must be strictly increasing")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if b0.W_max != gen.N:
        raise ValueError(f"distribution length {b0.W_max} != generator size {gen.N}")
    if t_grid.size == 1:
        return [b0]

    sol = solve_ivp(
        lambda _t, y: gen.matvec(y),
        (0.0, float(t_grid[-1])),
        b0.b,
        method="RK45",
        t_eval=t_grid,
        rtol=tol,
        atol=tol * 1e-3,
    )
    if not sol.success:
        reached = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"integrator stopped at t={reached}: {sol.message}", reached)
    out = [b0]
    for i in range(1, t_grid.size):
        out.append(WeightDistribution(b=sol.y[:, i]))
    return out


def propagate_expm(gen: BandedGenerator, b0: WeightDistribution, t: float) -> WeightDistribution:
    """b(t) = expm(M t) b0 via the dense matrix exponential.

    Preferred over step-by-step integration for very large t (late-time
    plateau extraction), where adaptive stepping wastes work.
    """
    if b0.W_max != gen.N:
        raise ValueError(f"distribution length {b0.W_max} != generator size {gen.N}")
    prop = linalg.expm(gen.to_dense() * t)
    return WeightDistribution(b=prop @ b0.b)


def leading_eigenvalues(gen: BandedGenerator, k_max: int) -> np.ndarray:
    """The k_max eigenvalues with largest real parts, descending."""
    if k_max < 1 or k_max > gen.N:
        raise ValueError(f"need 1 <= k_max <= N, got {k_max}")
    vals = linalg.eigvals(gen.to_dense())
    order = np.lexsort((-vals.imag, -vals.real))
    return vals[order][:k_max]


def lo_left_right_eigvecs(
    params: ModelParams, k: int, W_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Left and right eigenvectors of the dilute-limit triangular generator.

    In the dilute limit the generator keeps only the dominant
    single-anticommuting-site pattern of each interaction, giving a
    lower-triangular matrix with diagonal -2w(a_sum + kappa) and gains
    2 r a_n (w - n + 1) from w - n + 1 into w.  The k-th right
    eigenvector is found by forward substitution (support j >= k), the
    left one by back substitution (support j <= k); both are normalized
    so component k equals 1.  Returned as (left, right), each indexed by
    j - 1 for j = 1..W_max.
    """
    if not 1 <= k <= W_max:
        raise ValueError(f"need 1 <= k <= W_max, got k={k}, W_max={W_max}")
    decay = params.a_sum + params.kappa
    if decay <= 0:
        raise ValueError("a_sum + kappa must be positive for distinct mode decay rates")
    couplings = params.active_couplings()

    right = np.zeros(W_max)
    right[k - 1] = 1.0
    for j in range(k + 1, W_max + 1):
        acc = 0.0
        for c in couplings:
            src = j - c.n + 1
            if src >= 1:
                acc += c.a_n * src * right[src - 1]
        right[j - 1] = params.r * acc / (decay * (j - k))

    left = np.zeros(W_max)
    left[k - 1] = 1.0
    for j in range(k - 1, 0, -1):
        acc = 0.0
        for c in couplings:
            src = j + c.n - 1
            if src <= W_max:
                acc += c.a_n * left[src - 1]
        left[j - 1] = params.r * j * acc / (decay * (j - k))
    return left, right


def fit_eigenvalue_coefficients(
    make_params,
    n_values: tuple[int, ...],
    k_max: int,
    fit_degree: int = 3,
) -> np.ndarray:
    """Fit the k-th leading eigenvalue as a polynomial in 1/N.

    make_params maps N to ModelParams; n_values supplies the system
    sizes.  Returns an array of shape (k_max, 3) with the fitted
    constant, 1/N, and 1/N^2 coefficients per k.  The default cubic fit
    absorbs the 1/N^3 tail so the quadratic coefficient is clean.
    """
    if len(n_values) < fit_degree + 1:
        raise ValueError(
            f"need at least {fit_degree + 1} system sizes for a degree-{fit_degree} fit"
        )
    spectra = np.zeros((len(n_values), k_max))
    for i, n_qubits in enumerate(n_values):
        gen = build_generator(make_params(n_qubits))
        vals = leading_eigenvalues(gen, k_max)
        if np.max(np.abs(vals.imag)) > 1e-8:
            raise RuntimeError(f"leading eigenvalues unexpectedly complex at N={n_qubits}")
        spectra[i] = vals.real
    u = 1.0 / np.asarray(n_values, dtype=float)
    out = np.zeros((k_max, 3))
    for k in range(k_max):
        coeffs = np.polynomial.polynomial.polyfit(u, spectra[:, k], deg=fit_degree)
        out[k] = coeffs[:3]
    return out


def write_generator_csv(gen: BandedGenerator, f) -> None:
    """(row, col, value) triples for every stored nonzero entry."""
    f.write("row,col,value\n")
    for row, col, value in gen.triples():
        f.write(f"{row},{col},{value!r}\n")


def write_distribution_csv(times: np.ndarray, states: list[WeightDistribution], f) -> None:
    """One row per grid time: t, then b_w for w = 1..W_max."""
    w_max = states[0].W_max
    header = "t," + ",".join(f"w{w}" for w in range(1, w_max + 1))
    f.write(header + "\n")
    for t, state in zip(times, states):
        f.write(f"{t!r}," + ",".join(repr(float(v)) for v in state.b) + "\n")
