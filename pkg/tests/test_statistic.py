import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regcheck.model import fit_least_squares, make_linear_model
from regcheck.statistic import (
    GAUSSIAN_KERNEL,
    WeightVector,
    alternative_drift,
    gauss_hermite,
    icm_statistic,
    kernel_from_density,
    m_phi_gaussian,
    plug_in_covariance,
    u_hat,
    wicm_statistic,
)

from conftest import dataset_from, linear_null_fit


def gh_integral_against_std_normal(f, nodes=64):
    """Oracle: integral of f(t) phi(t) dt via Gauss-Hermite, phi std normal."""
    x, w = gauss_hermite(nodes)
    return float(w @ f(np.sqrt(2.0) * x)) / np.sqrt(np.pi)


def quadrature_wicm(w: WeightVector, residuals, nodes=64):
    """Oracle: integral of |u_hat(t)|^2 phi(t) dt, independent of the closed form."""
    return gh_integral_against_std_normal(lambda t: u_hat(w, residuals, t) ** 2, nodes)


class TestMPhi:
    def test_at_zero(self):
        assert m_phi_gaussian(0.0) == pytest.approx(1.0)

    def test_matches_quadrature_oracle(self):
        u = 1.7
        oracle = gh_integral_against_std_normal(lambda t: np.cos(u * t))
        assert abs(m_phi_gaussian(u) - oracle) <= 1e-10

    @given(st.floats(-20, 20))
    def test_even(self, u):
        assert m_phi_gaussian(-u) == pytest.approx(m_phi_gaussian(u), abs=0)

    def test_kernel_from_density_recovers_gaussian(self):
        phi = lambda t: np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
        kern = kernel_from_density(phi)
        for u in (0.0, 0.3, 1.7, 4.0):
            assert kern.m_phi(u) == pytest.approx(m_phi_gaussian(u), abs=1e-10)


class TestUHat:
    def test_zero_at_t_zero(self, rng):
        w = WeightVector.from_values(rng.standard_normal(20))
        e = rng.standard_normal(20)
        assert u_hat(w, e, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_single_observation_is_zero(self):
        w = WeightVector.from_values([3.0])
        assert u_hat(w, np.array([0.4]), 1.3) == pytest.approx(0.0, abs=1e-14)

    def test_quadrature_equals_closed_form(self, rng):
        n = 17
        w = WeightVector.from_values(rng.standard_normal(n))
        e = rng.standard_normal(n)
        closed = wicm_statistic(w, e)
        quad = quadrature_wicm(w, e)
        assert abs(closed - quad) <= 1e-8 * (1.0 + closed)


class TestWicmStatistic:
    def test_constant_weights_vanish(self, rng):
        w = WeightVector.from_values(np.full(10, 4.2))
        assert wicm_statistic(w, rng.standard_normal(10)) == pytest.approx(0.0, abs=1e-12)

    def test_equal_residuals_vanish(self, rng):
        w = WeightVector.from_values(rng.standard_normal(10))
        assert wicm_statistic(w, np.full(10, 0.7)) == pytest.approx(0.0, abs=1e-12)

    def test_hand_evaluated_pair(self):
        # centered weights (-1, 1), residuals (0, 1):
        # (1/2)(2 - 2 e^{-1/2}) = 1 - e^{-0.5}
        w = WeightVector.from_values([0.0, 2.0])
        val = wicm_statistic(w, np.array([0.0, 1.0]))
        assert val == pytest.approx(1.0 - np.exp(-0.5), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(-5, 5), st.floats(0.1, 10))
    def test_shift_and_scale_laws(self, seed, shift, scale):
        r = np.random.default_rng(seed)
        g = r.standard_normal(12)
        e = r.standard_normal(12)
        base = wicm_statistic(WeightVector.from_values(g), e)
        shifted = wicm_statistic(WeightVector.from_values(g + shift), e)
        scaled = wicm_statistic(WeightVector.from_values(scale * g), e)
        assert abs(shifted - base) <= 1e-10 * (1.0 + abs(base))
        assert abs(scaled - scale**2 * base) <= 1e-10 * (1.0 + scale**2 * abs(base))
        assert base >= -1e-12

    def test_complex_exponential_equivalence(self, rng):
        # |sum c_j exp(i t e_j)|^2 integrated against phi equals the cos+sin form
        n = 15
        w = WeightVector.from_values(rng.standard_normal(n))
        e = rng.standard_normal(n)

        def modulus_sq(t):
            z = np.exp(1j * np.multiply.outer(t, e)) @ w.centered
            return np.abs(z) ** 2 / n

        quad = gh_integral_against_std_normal(modulus_sq)
        closed = wicm_statistic(w, e)
        assert abs(quad - closed) <= 1e-8 * (1.0 + closed)


class TestIcmStatistic:
    def test_single_observation(self):
        assert icm_statistic(np.array([[1.0, 2.0]]), np.array([0.7])) == pytest.approx(0.49)

    def test_identical_rows(self, rng):
        e = rng.standard_normal(6)
        X = np.tile([1.0, -2.0], (6, 1))
        assert icm_statistic(X, e) == pytest.approx(e.sum() ** 2 / 6.0, abs=1e-10)

    def test_monte_carlo_integral_oracle(self):
        r = np.random.default_rng(42)
        n, d = 4, 2
        X = r.standard_normal((n, d))
        e = r.standard_normal(n)
        closed = icm_statistic(X, e)
        draws = 1_000_000
        T = r.standard_normal((draws, d))
        proj = T @ X.T
        vals = ((np.cos(proj) @ e) ** 2 + (np.sin(proj) @ e) ** 2) / n
        mc = vals.mean()
        se = vals.std(ddof=1) / np.sqrt(draws)
        assert abs(closed - mc) <= 3.0 * se


@pytest.fixture(scope="module")
def fitted():
    data, spec, fit = linear_null_fit(n=80, p=3, seed=5)
    w = WeightVector.from_values(data.X[:, 0] ** 2)
    return data, spec, fit, w


class TestPlugInCovariance:
    def test_zero_at_origin(self, fitted):
        data, spec, fit, w = fitted
        assert plug_in_covariance(data, fit, spec, w, 0.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric(self, fitted, rng):
        data, spec, fit, w = fitted
        for _ in range(5):
            s, t = rng.uniform(-2, 2, size=2)
            k_st = plug_in_covariance(data, fit, spec, w, s, t)
            k_ts = plug_in_covariance(data, fit, spec, w, t, s)
            assert k_st == pytest.approx(k_ts, abs=1e-12)

    def test_gram_matrix_psd(self, fitted):
        data, spec, fit, w = fitted
        grid = [0.25, 0.5, 1.0, 2.0]
        gram = np.array(
            [[plug_in_covariance(data, fit, spec, w, s, t) for t in grid] for s in grid]
        )
        assert np.linalg.eigvalsh(gram).min() >= -1e-8


class TestAlternativeDrift:
    def test_zero_departure(self, rng):
        data, spec, fit = linear_null_fit(30, 2, seed=9)
        w = WeightVector.from_values(rng.standard_normal(30))
        S = np.zeros(30)
        for kind in ("fixed", "local"):
            val = alternative_drift(data, w, fit.residuals, S, t=1.1, kind=kind)
            assert val == pytest.approx(0.0, abs=1e-14)

    def test_local_at_t_zero_is_mean_product(self, rng):
        data, spec, fit = linear_null_fit(30, 2, seed=10)
        w = WeightVector.from_values(rng.standard_normal(30))
        S = rng.standard_normal(30)
        val = alternative_drift(data, w, fit.residuals, S, t=0.0, kind="local")
        assert val == pytest.approx(np.mean(w.centered * S), abs=1e-14)

    def test_fixed_matches_elementwise_recomputation(self):
        r = np.random.default_rng(77)
        data, spec, fit = linear_null_fit(25, 2, seed=11)
        g = r.standard_normal(25)
        S = r.standard_normal(25)
        t = 0.9
        w = WeightVector.from_values(g)
        eps = fit.residuals
        expected = 0.0
        for i in range(25):
            e_i = eps[i] + S[i]
            expected += (g[i] - g.mean()) * (
                np.cos(t * e_i) - np.cos(t * eps[i]) + np.sin(t * e_i) - np.sin(t * eps[i])
            )
        expected /= 25
        got = alternative_drift(data, w, eps, S, t=t, kind="fixed")
        assert got == pytest.approx(expected, abs=1e-12)
