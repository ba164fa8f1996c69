"""Filters, covariance propagation and signal simulation."""

import numpy as np
import pytest

from topoinfer.diffusion import (
    CovariancePair,
    exact_pairs,
    fir_filter,
    iir_filter,
    propagate_covariance,
    random_spd_covariance,
    sample_covariance,
    sampled_pairs,
    simulate_outputs,
)
from topoinfer.graph import erdos_renyi

from conftest import random_psd, random_symmetric

P2 = np.array([[0.0, 1.0], [1.0, 0.0]])


def offdiag_mass(M, V):
    D = V.T @ M @ V
    return np.linalg.norm(D - np.diag(np.diag(D)))


class TestFir:
    def test_identity(self, rng):
        np.testing.assert_array_equal(fir_filter(random_symmetric(rng, 4), [1.0]).matrix, np.eye(4))

    def test_shift_itself(self):
        np.testing.assert_array_equal(fir_filter(P2, [0.0, 1.0]).matrix, P2)

    def test_spectral_mapping(self, rng):
        S = random_symmetric(rng, 6)
        lam = np.linalg.eigvalsh(S)
        mu = np.linalg.eigvalsh(fir_filter(S, [1.0, 0.5, 0.25]).matrix)
        np.testing.assert_allclose(mu, np.sort(1 + 0.5 * lam + 0.25 * lam ** 2), atol=1e-12)

    def test_matches_power_sum(self, rng):
        S = random_symmetric(rng, 5)
        h = rng.uniform(size=4)
        expected = sum(c * np.linalg.matrix_power(S, k) for k, c in enumerate(h))
        H = fir_filter(S, h).matrix
        assert np.linalg.norm(H - expected) <= 1e-10 * np.linalg.norm(expected)

    def test_too_many_taps(self):
        with pytest.raises(ValueError, match="Cayley"):
            fir_filter(P2, [1.0, 1.0, 1.0])

    def test_commute(self, rng):
        S = erdos_renyi(12, 0.3, seed=2).matrix
        A = fir_filter(S, rng.uniform(size=3)).matrix
        B = fir_filter(S, rng.uniform(size=5)).matrix
        assert np.linalg.norm(A @ B - B @ A) < 1e-8


class TestIir:
    def test_zero(self, rng):
        np.testing.assert_allclose(iir_filter(random_symmetric(rng, 3), 0.0).matrix, np.eye(3))

    def test_k2(self):
        np.testing.assert_allclose(np.linalg.eigvalsh(iir_filter(P2, 0.5).matrix), [1 / 1.5, 1 / 0.5])

    def test_singular(self, rng):
        S = random_symmetric(rng, 4)
        with pytest.raises(ValueError, match="singular"):
            iir_filter(S, -1.0 / np.linalg.eigvalsh(S)[-1])


class TestPropagate:
    def test_white_input(self, rng):
        H = random_symmetric(rng, 4)
        np.testing.assert_allclose(propagate_covariance(H, np.eye(4)), H @ H, atol=1e-12)

    def test_identity_filter(self, rng):
        C = random_psd(rng, 4)
        np.testing.assert_allclose(propagate_covariance(np.eye(4), C), C)

    def test_psd(self, rng):
        for _ in range(20):
            Cy = propagate_covariance(random_symmetric(rng, 6), random_psd(rng, 6))
            assert np.linalg.eigvalsh(Cy)[0] >= -1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            propagate_covariance(np.eye(3), np.eye(2))


class TestSimulate:
    def test_law_of_large_numbers(self):
        Y = simulate_outputs(np.eye(4), np.eye(4), 10_000, seed=0)
        assert np.linalg.norm(sample_covariance(Y) - np.eye(4)) / 2 < 0.05

    def test_single_column(self):
        assert simulate_outputs(np.eye(3), np.eye(3), 1, seed=0).shape == (3, 1)

    def test_snr(self):
        H = fir_filter(erdos_renyi(8, 0.4, seed=1), [1.0, 0.5]).matrix
        C = random_spd_covariance(8, seed=2)
        clean = simulate_outputs(H, C, 10_000, seed=5)
        noisy = simulate_outputs(H, C, 10_000, noise_db=-10, seed=5)
        snr_db = 10 * np.log10(np.sum(clean ** 2) / np.sum((noisy - clean) ** 2))
        assert abs(snr_db - 10.0) < 1.0

    def test_converges_to_ensemble(self):
        H = fir_filter(erdos_renyi(8, 0.4, seed=1), [1.0, 0.5, 0.2]).matrix
        C = random_spd_covariance(8, seed=3)
        Cy = propagate_covariance(H, C)
        Cy_hat = sampled_pairs(H, [C], 100_000, seed=4)[0].c_y_hat
        assert np.linalg.norm(Cy_hat - Cy) / np.linalg.norm(Cy) < 0.05

    def test_bad_p(self):
        with pytest.raises(ValueError):
            simulate_outputs(np.eye(2), np.eye(2), 0)


class TestSampleCovariance:
    def test_rank_one(self):
        y = np.array([[1.0], [2.0], [3.0]])
        C = sample_covariance(y)
        np.testing.assert_array_equal(C, y @ y.T)
        assert np.linalg.matrix_rank(C) == 1

    def test_zero(self):
        np.testing.assert_array_equal(sample_covariance(np.zeros((3, 4))), np.zeros((3, 3)))

    def test_gaussian(self):
        Y = np.random.default_rng(0).standard_normal((5, 100_000))
        assert np.linalg.norm(sample_covariance(Y) - np.eye(5)) < 0.05


class TestRandomSpd:
    def test_cap_one(self):
        np.testing.assert_array_equal(random_spd_covariance(4, 1.0, seed=0), np.eye(4))

    def test_condition(self):
        for seed in range(10):
            w = np.linalg.eigvalsh(random_spd_covariance(6, 100.0, seed=seed))
            assert w[0] > 0
            assert w[-1] / w[0] <= 100.0 * (1 + 1e-10)

    def test_deterministic(self):
        np.testing.assert_array_equal(random_spd_covariance(6, seed=9), random_spd_covariance(6, seed=9))


class TestStationarity:
    def test_white_input_is_diagonalized(self):
        S = erdos_renyi(10, 0.3, seed=0).matrix
        V = np.linalg.eigh(S)[1]
        H = fir_filter(S, [0.3, 0.6, 0.2])
        Cy = exact_pairs(H, [np.eye(10)])[0].c_y_hat
        assert offdiag_mass(Cy, V) < 1e-8

    def test_colored_input_is_not(self):
        S = erdos_renyi(10, 0.3, seed=0).matrix
        V = np.linalg.eigh(S)[1]
        H = fir_filter(S, [0.3, 0.6, 0.2])
        Cy = exact_pairs(H, [random_spd_covariance(10, seed=1)])[0].c_y_hat
        assert offdiag_mass(Cy, V) > 0


class TestCovariancePair:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            CovariancePair(np.eye(2), np.eye(3))
