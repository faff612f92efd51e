#!/usr/bin/env python3
"""
Tests for the Bayesian linear SVM and the data augmentation Gibbs baseline
"""

import os
import sys

import numpy as np
import pytest
from scipy import integrate, sparse

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from data import Dataset
from diagnostics import mc_standard_error
from errors import ConfigurationError, ContractViolationError
from potential import EnergyModel, check_subgradient_validity, full_energy, numerical_gradient
from svm_model import (AugmentedState, LinearSVMModel, batch_reference_accuracy, da_gibbs_step,
                       init_augmented_state, predict, svm_datum_subgrad)


def hinge_energy(eta, x, y, c):
    return c * max(0.0, 1.0 - y * float(eta @ x))


class TestHingeSubgradient:
    def test_active_side(self):
        x = np.array([1.0, 2.0])
        np.testing.assert_array_equal(svm_datum_subgrad(np.zeros(2), x, 1, c=2.0), [-2.0, -4.0])

    def test_inactive_side_is_zero(self):
        x = np.array([1.0, 2.0])
        np.testing.assert_array_equal(svm_datum_subgrad(np.array([5.0, 5.0]), x, 1), [0.0, 0.0])

    def test_kink_counts_as_active(self):
        x = np.array([1.0, 0.0])
        np.testing.assert_array_equal(svm_datum_subgrad(np.array([-1.0, 3.0]), x, -1), [1.0, 0.0])

    def test_rejects_labels_other_than_plus_minus_one(self):
        with pytest.raises(ContractViolationError):
            svm_datum_subgrad(np.zeros(2), np.ones(2), 0)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        c = 1.7
        for _ in range(50):
            eta, x = rng.normal(size=3), rng.normal(size=3)
            y = rng.choice([-1, 1])
            if abs(1.0 - y * eta @ x) < 1e-3:
                continue
            g = svm_datum_subgrad(eta, x, y, c)
            fd = numerical_gradient(lambda e: hinge_energy(e, x, y, c), eta)
            np.testing.assert_allclose(fd, g, rtol=1e-4, atol=1e-8)

    def test_model_gradient_is_log_likelihood_side(self):
        model = LinearSVMModel(2, c=1.0)
        x = np.array([0.5, -1.0])
        np.testing.assert_array_equal(model.datum_subgrad(np.zeros(2), x, 1.0),
                                      -svm_datum_subgrad(np.zeros(2), x, 1.0))

    def test_vectorized_sum_matches_loop(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 4))
        y = rng.choice([-1.0, 1.0], size=40)
        model = LinearSVMModel(4, c=0.8)
        eta = rng.normal(size=4)
        np.testing.assert_allclose(model.likelihood_subgrad(eta, X, y),
                                   EnergyModel.likelihood_subgrad(model, eta, X, y))
        assert model.likelihood_logsum(eta, X, y) == pytest.approx(
            EnergyModel.likelihood_logsum(model, eta, X, y))
        np.testing.assert_allclose(model.likelihood_subgrad(eta, sparse.csr_matrix(X), y),
                                   model.likelihood_subgrad(eta, X, y))

    def test_convexity_inequality(self):
        model = LinearSVMModel(3, c=2.0)
        rng = np.random.default_rng(2)
        for _ in range(200):
            x = rng.normal(size=3)
            assert check_subgradient_validity(model, rng.normal(size=3), rng.normal(size=3), x,
                                              rng.choice([-1.0, 1.0]))

    def test_total_energy_midpoint_convexity(self):
        rng = np.random.default_rng(5)
        data = Dataset(rng.normal(size=(30, 3)), rng.choice([-1.0, 1.0], size=30))
        model = LinearSVMModel(3, c=1.5)
        for _ in range(100):
            a, b = rng.normal(scale=2.0, size=3), rng.normal(scale=2.0, size=3)
            mid = full_energy(model, 0.5 * (a + b), data)
            assert mid <= 0.5 * (full_energy(model, a, data) + full_energy(model, b, data)) + 1e-12

    def test_negative_c_rejected(self):
        with pytest.raises(ConfigurationError):
            LinearSVMModel(2, c=-1.0)


class TestPredict:
    def test_tie_goes_positive(self):
        assert predict(np.array([1.0, -1.0]), np.array([1.0, 1.0])) == 1

    def test_single_row_and_matrix(self):
        eta = np.array([1.0, 0.0])
        assert predict(eta, np.array([-2.0, 5.0])) == -1
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(predict(eta, X), [1, -1, 1])
        np.testing.assert_array_equal(predict(eta, sparse.csr_matrix(X)), [1, -1, 1])

    @pytest.mark.parametrize("alpha", [1e-3, 0.5, 7.0, 1e4])
    def test_positive_scaling_keeps_labels(self, alpha):
        rng = np.random.default_rng(6)
        eta, X = rng.normal(size=4), rng.normal(size=(50, 4))
        np.testing.assert_array_equal(predict(alpha * eta, X), predict(eta, X))
        assert predict(alpha * eta, X[0]) == predict(eta, X[0])


def one_datum_posterior_mean(x, y, c):
    """E[eta] for a 1-D N(0,1) prior times exp(-c max(0, 1 - y eta x)) by quadrature"""
    def density(e):
        return np.exp(-0.5 * e * e - c * max(0.0, 1.0 - y * e * x))

    kink = 1.0 / (y * x)
    mass = sum(integrate.quad(density, lo, hi)[0] for lo, hi in [(-np.inf, kink), (kink, np.inf)])
    moment = sum(integrate.quad(lambda e: e * density(e), lo, hi)[0]
                 for lo, hi in [(-np.inf, kink), (kink, np.inf)])
    return moment / mass


class TestDataAugmentationGibbs:
    @pytest.mark.parametrize("c", [1.0, 2.0])
    def test_one_datum_posterior_mean(self, c):
        data = Dataset(np.array([[1.5]]), np.array([1.0]))
        rng = np.random.default_rng(11)
        state = init_augmented_state(data)
        draws = np.empty(20000)
        for i in range(draws.size):
            state = da_gibbs_step(state, data, c, rng)
            draws[i] = state.eta[0]
        draws = draws[1000:]
        truth = one_datum_posterior_mean(1.5, 1.0, c)
        assert abs(draws.mean() - truth) < 4 * mc_standard_error(draws)

    def test_no_data_samples_the_prior(self):
        rng = np.random.default_rng(0)
        data = Dataset.empty(2)
        state = init_augmented_state(data)
        draws = np.empty((4000, 2))
        for i in range(4000):
            state = da_gibbs_step(state, data, 1.0, rng)
            draws[i] = state.eta
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.1)
        np.testing.assert_allclose(draws.var(axis=0), 1.0, atol=0.1)

    def test_lambda_stays_positive(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 2))
        data = Dataset(X, np.where(X[:, 0] > 0, 1.0, -1.0))
        state = init_augmented_state(data)
        for _ in range(50):
            state = da_gibbs_step(state, data, 1.0, rng)
            assert np.all(state.lam > 0)

    def test_nonpositive_lambda_rejected(self):
        with pytest.raises(ContractViolationError):
            AugmentedState(eta=np.zeros(1), lam=np.array([0.0]))

    def test_dimension_limit(self):
        X = sparse.csr_matrix(([1.0], ([0], [0])), shape=(1, 2001))
        data = Dataset(X, np.array([1.0]))
        with pytest.raises(ConfigurationError):
            da_gibbs_step(init_augmented_state(data), data, 1.0, np.random.default_rng(0))


def test_batch_reference_on_separable_data():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal([3.0, 3.0], 0.3, size=(50, 2)), rng.normal([-3.0, -3.0], 0.3, size=(50, 2))])
    y = np.concatenate([np.ones(50), -np.ones(50)])
    data = Dataset(X, y)
    assert batch_reference_accuracy(data, data, c=1.0) == 1.0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
