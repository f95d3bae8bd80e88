"""Tests for the finite-N generator and its integration/spectral helpers."""
import numpy as np
import pytest

from opgrowth.combinatorics import CouplingSpec
from opgrowth.master_equation import (
    BandedGenerator,
    ModelParams,
    WeightDistribution,
    build_generator,
    build_reference_generator,
    evolve,
    fit_eigenvalue_coefficients,
    leading_eigenvalues,
    lo_left_right_eigvecs,
    propagate_expm,
    three_body,
    two_body,
)


def relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


class TestModelParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            ModelParams(N=0, kappa=0.0, r=1.0, couplings=(CouplingSpec(2, 1.0),))
        with pytest.raises(ValueError):
            ModelParams(N=10, kappa=0.0, r=1.5, couplings=(CouplingSpec(2, 1.0),))
        with pytest.raises(ValueError):
            ModelParams(N=10, kappa=-0.1, r=1.0, couplings=(CouplingSpec(2, 1.0),))
        with pytest.raises(ValueError):
            ModelParams(
                N=10, kappa=0.0, r=1.0, couplings=(CouplingSpec(2, 1.0), CouplingSpec(2, 2.0))
            )

    def test_helpers(self):
        p = ModelParams(N=10, kappa=0.5, r=1.0, couplings=(CouplingSpec(2, 1.0), CouplingSpec(3, 0.5)))
        assert p.a_sum == 1.5
        assert p.max_order == 3
        assert p.mu_squared(2) == pytest.approx(1 / 120)

    def test_body_order_above_n_rejected(self):
        with pytest.raises(ValueError):
            build_generator(three_body(N=2, kappa=0.0, r=1.0))


class TestWeightDistribution:
    def test_delta(self):
        d = WeightDistribution.delta(3, 8)
        assert d.b[2] == 1.0 and d.norm() == 1.0 and d.mean_weight() == 3.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            WeightDistribution(b=np.array([1.0, np.nan]))


class TestBandedGenerator:
    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(7)
        for s_max in (1, 2, 3):
            bands = rng.normal(size=(2 * s_max + 1, 9))
            gen = BandedGenerator(N=9, s_max=s_max, bands=bands)
            dense = gen.to_dense()
            v = rng.normal(size=9)
            assert np.allclose(gen.matvec(v), dense @ v, rtol=1e-13, atol=1e-13)

    def test_entry_accessor(self):
        gen = build_generator(two_body(N=10, kappa=0.5, r=1.0))
        dense = gen.to_dense()
        for w in range(1, 11):
            for wp in range(1, 11):
                assert gen.entry(w, wp) == dense[w - 1, wp - 1]


class TestBuildGenerator:
    def test_frozen_two_body_entries(self):
        # Evaluated by hand from the two-body rate equation at
        # N=100, kappa=0.5, r=1.
        gen = build_generator(two_body(N=100, kappa=0.5, r=1.0))
        assert gen.entry(1, 1) == pytest.approx(-2.98, abs=1e-12)
        assert gen.entry(2, 1) == pytest.approx(1.98, abs=1e-12)

    def test_r_zero_kills_off_diagonals(self):
        gen = build_generator(
            ModelParams(N=12, kappa=0.3, r=0.0, couplings=(CouplingSpec(2, 1.0), CouplingSpec(3, 0.7)))
        )
        off = gen.to_dense() - np.diag(np.diag(gen.to_dense()))
        assert np.all(off == 0.0)

    def test_unitary_column_sums_vanish(self):
        for params in (two_body(N=21, kappa=0.0, r=1.0), three_body(N=21, kappa=0.0, r=1.0)):
            gen = build_generator(params)
            scale = np.max(np.abs(gen.bands))
            assert np.max(np.abs(gen.column_sums())) <= 1e-12 * scale

    def test_diagonal_nonpositive(self):
        gen = build_generator(
            ModelParams(N=15, kappa=0.2, r=0.7, couplings=(CouplingSpec(2, 0.5), CouplingSpec(4, 1.2)))
        )
        assert np.all(np.diag(gen.to_dense()) <= 0.0)

    def test_matches_two_body_reference(self):
        for N in (10, 100):
            params = two_body(N=N, kappa=0.5, r=1.0)
            a = build_generator(params).to_dense()
            b = build_reference_generator(params, "two_body").to_dense()
            assert relative_gap(a, b) <= 1e-12

    def test_matches_three_body_reference(self):
        for N in (10, 100):
            params = three_body(N=N, kappa=0.5, r=0.8)
            a = build_generator(params).to_dense()
            b = build_reference_generator(params, "three_body").to_dense()
            assert relative_gap(a, b) <= 1e-12

    def test_reference_scaling_with_strength(self):
        params = three_body(N=40, kappa=0.5, r=0.9, a=1.7)
        a = build_generator(params).to_dense()
        b = build_reference_generator(params, "three_body").to_dense()
        assert relative_gap(a, b) <= 1e-12

    def test_three_body_parity_structure(self):
        gen = build_generator(three_body(N=30, kappa=0.5, r=1.0))
        assert np.all(gen.bands[gen.s_max + 1] == 0.0)
        assert np.all(gen.bands[gen.s_max - 1] == 0.0)

    def test_reference_kind_mismatch(self):
        with pytest.raises(ValueError):
            build_reference_generator(two_body(N=10, kappa=0.0, r=1.0), "three_body")
        with pytest.raises(ValueError):
            build_reference_generator(two_body(N=10, kappa=0.0, r=1.0), "anything")


class TestEvolve:
    def test_single_point_grid_returns_initial(self):
        gen = build_generator(two_body(N=10, kappa=0.5, r=1.0))
        b0 = WeightDistribution.delta(1, 10)
        out = evolve(gen, b0, np.array([0.0]))
        assert out == [b0]

    def test_grid_preconditions(self):
        gen = build_generator(two_body(N=10, kappa=0.5, r=1.0))
        b0 = WeightDistribution.delta(1, 10)
        with pytest.raises(ValueError):
            evolve(gen, b0, np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            evolve(gen, b0, np.array([0.0, 1.0]), tol=0.0)
        with pytest.raises(ValueError):
            evolve(gen, WeightDistribution.delta(1, 9), np.array([0.0, 1.0]))

    def test_norm_conserved_without_noise_mismatch(self):
        for params in (two_body(N=40, kappa=0.0, r=1.0), three_body(N=40, kappa=0.0, r=1.0)):
            gen = build_generator(params)
            b0 = WeightDistribution.delta(1 if params.max_order == 2 else 2, 40)
            states = evolve(gen, b0, np.linspace(0.0, 10.0, 11), tol=1e-11)
            for st in states:
                assert abs(st.norm() - 1.0) <= 1e-10

    def test_positivity(self):
        gen = build_generator(two_body(N=30, kappa=0.5, r=0.6))
        b0 = WeightDistribution.delta(2, 30)
        tol = 1e-10
        for st in evolve(gen, b0, np.linspace(0.0, 5.0, 6), tol=tol):
            assert np.all(st.b >= -tol)

    def test_two_body_plateau(self):
        params = two_body(N=100, kappa=0.5, r=1.0)
        gen = build_generator(params)
        final = propagate_expm(gen, WeightDistribution.delta(1, 100), 50.0)
        assert 2.8 <= final.mean_weight() <= 3.2

    def test_three_body_even_plateau(self):
        params = three_body(N=100, kappa=0.5, r=1.0)
        gen = build_generator(params)
        final = propagate_expm(gen, WeightDistribution.delta(2, 100), 50.0 / 1.5)
        assert final.mean_weight() == pytest.approx(6.0, abs=0.3)

    def test_expm_agrees_with_rk45(self):
        gen = build_generator(two_body(N=25, kappa=0.3, r=0.9))
        b0 = WeightDistribution.delta(3, 25)
        via_ode = evolve(gen, b0, np.array([0.0, 2.0]), tol=1e-11)[-1]
        via_expm = propagate_expm(gen, b0, 2.0)
        assert np.allclose(via_ode.b, via_expm.b, atol=1e-9)

    def test_parity_preserved_under_integration(self):
        gen = build_generator(three_body(N=24, kappa=0.5, r=1.0))
        b0 = WeightDistribution.delta(2, 24)
        for st in evolve(gen, b0, np.linspace(0.0, 4.0, 5), tol=1e-11):
            odd = st.b[0::2]  # w = 1, 3, 5, ...
            assert np.max(np.abs(odd)) <= 1e-12


class TestSpectra:
    def test_r_zero_spectrum_is_diagonal(self):
        gen = build_generator(two_body(N=14, kappa=0.4, r=0.0))
        vals = leading_eigenvalues(gen, 14)
        diag = np.sort(np.diag(gen.to_dense()))[::-1]
        assert np.allclose(np.sort(vals.real)[::-1], diag, atol=1e-10)
        assert np.max(np.abs(vals.imag)) <= 1e-12

    def test_top_eigenvalue_extrapolates_to_dilute_limit(self):
        fit = fit_eigenvalue_coefficients(
            lambda n: two_body(N=n, kappa=0.5, r=1.0), (60, 90, 140, 200), k_max=1
        )
        assert fit[0, 0] == pytest.approx(-3.0, abs=0.01)

    def test_first_order_shift_two_body(self):
        # k=1 coefficient of 1/N, from the closed-form first-order shift:
        # 13/4.5 at kappa=0.5, r=1.
        fit = fit_eigenvalue_coefficients(
            lambda n: two_body(N=n, kappa=0.5, r=1.0), (60, 90, 140, 200), k_max=1
        )
        assert fit[0, 1] == pytest.approx(13 / 4.5, rel=0.02)

    def test_fit_needs_enough_sizes(self):
        with pytest.raises(ValueError):
            fit_eigenvalue_coefficients(lambda n: two_body(N=n, kappa=0.5, r=1.0), (60, 90), k_max=1)


class TestDiluteEigvecs:
    def test_left_k1_is_indicator(self):
        left, right = lo_left_right_eigvecs(two_body(N=50, kappa=0.5, r=1.0), 1, 30)
        assert left[0] == 1.0
        assert np.all(left[1:] == 0.0)
        assert right[0] == 1.0

    def test_right_k1_two_body_geometric(self):
        params = two_body(N=50, kappa=0.5, r=1.0)
        r_eff = 1.0 / 1.5
        _, right = lo_left_right_eigvecs(params, 1, 20)
        expected = r_eff ** np.arange(20)
        assert np.allclose(right, expected, rtol=1e-12)

    def test_left_k3_two_body_closed_form(self):
        # Coefficients of x^3 (1 - r_eff/x)^2 = r_eff^2 x - 2 r_eff x^2 + x^3.
        params = two_body(N=50, kappa=0.5, r=1.0)
        r_eff = 1.0 / 1.5
        left, _ = lo_left_right_eigvecs(params, 3, 10)
        assert left[0] == pytest.approx(r_eff**2, rel=1e-12)
        assert left[1] == pytest.approx(-2 * r_eff, rel=1e-12)
        assert left[2] == 1.0
        assert np.all(left[3:] == 0.0)

    def test_pairing_is_biorthogonal(self):
        params = ModelParams(
            N=50, kappa=0.4, r=0.9, couplings=(CouplingSpec(2, 0.8), CouplingSpec(3, 0.6))
        )
        vecs = [lo_left_right_eigvecs(params, k, 40) for k in range(1, 7)]
        for j, (left_j, _) in enumerate(vecs):
            for k, (_, right_k) in enumerate(vecs):
                expected = 1.0 if j == k else 0.0
                assert float(left_j @ right_k) == pytest.approx(expected, abs=1e-10)

    def test_right_eigvec_satisfies_dilute_eigen_equation(self):
        params = three_body(N=64, kappa=0.5, r=1.0)
        k, wmax = 2, 30
        _, right = lo_left_right_eigvecs(params, k, wmax)
        decay = params.a_sum + params.kappa
        lam = -2 * k * decay
        # residual of the dilute-limit equation at every component
        for j in range(1, wmax - params.max_order + 2):
            gain = sum(
                2 * params.r * c.a_n * (j - c.n + 1) * right[j - c.n]
                for c in params.couplings
                if j - c.n + 1 >= 1
            )
            resid = -2 * j * decay * right[j - 1] + gain - lam * right[j - 1]
            assert abs(resid) <= 1e-10 * max(1.0, abs(right[j - 1]))
