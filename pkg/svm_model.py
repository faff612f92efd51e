"""
Bayesian linear SVM: standard-normal prior, hinge pseudo-likelihood
exp(-c * max(0, 1 - y eta.x)), prediction, and the data augmentation Gibbs baseline.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from sklearn.svm import LinearSVC

import config
from errors import ConfigurationError, ContractViolationError, NumericalError
from potential import LOG_2PI, EnergyModel

logger = logging.getLogger(__name__)

# smallest |1 - y eta.x| fed to the inverse-Gaussian mean
_MARGIN_FLOOR = 1e-10
_LAMBDA_RANGE = (1e-12, 1e12)


def _check_label(y) -> None:
    if y not in (1, -1, 1.0, -1.0):
        raise ContractViolationError(f"Label {y} is not +1 or -1")


def svm_datum_subgrad(eta, x, y, c: float = config.DEFAULT_C) -> np.ndarray:
    """Subgradient of the hinge energy term c * max(0, 1 - y eta.x).

    Returns -c*y*x when the margin is violated or exactly met, zero otherwise.
    The log-likelihood subgradient is the negation.
    """
    _check_label(y)
    x = np.asarray(x, dtype=float)
    if 1.0 - y * float(np.dot(eta, x)) >= 0.0:
        return -c * y * x
    return np.zeros_like(x)


def hinge_loglik_subgrad_sum(X, y: np.ndarray, eta: np.ndarray, c: float, weights=None) -> np.ndarray:
    """sum_i w_i * G log phi(y_i | x_i, eta) for a block of rows"""
    margins = np.asarray(X @ eta).ravel()
    active = (1.0 - y * margins) >= 0.0
    coef = c * y * active
    if weights is not None:
        coef = coef * weights
    return np.asarray(X.T @ coef).ravel()


def hinge_loglik(X, y: np.ndarray, eta: np.ndarray, c: float) -> np.ndarray:
    """Per-row log phi = -c * max(0, 1 - y eta.x)"""
    margins = np.asarray(X @ eta).ravel()
    return -c * np.maximum(0.0, 1.0 - y * margins)


class LinearSVMModel(EnergyModel):
    """N(0, I) prior on eta with the hinge pseudo-likelihood"""

    def __init__(self, dim: int, c: float = config.DEFAULT_C):
        if c < 0:
            raise ConfigurationError(f"regularization constant c={c} must be >= 0")
        super().__init__(dim)
        self.feature_dim = self.dim
        self.c = float(c)

    def prior_logdensity(self, theta):
        return float(-0.5 * theta @ theta - 0.5 * self.dim * LOG_2PI)

    def prior_subgrad(self, theta):
        return -theta

    def datum_loglik(self, theta, x, y):
        _check_label(y)
        return -self.c * max(0.0, 1.0 - y * float(np.dot(theta, x)))

    def datum_subgrad(self, theta, x, y):
        return -svm_datum_subgrad(theta, x, y, self.c)

    def likelihood_subgrad(self, theta, X, y):
        return hinge_loglik_subgrad_sum(X, y, theta, self.c)

    def likelihood_logsum(self, theta, X, y):
        return float(np.sum(hinge_loglik(X, y, theta, self.c)))


def predict(eta, x):
    """sign(eta.x) with ties going to +1; accepts one row or a matrix of rows"""
    eta = np.asarray(eta, dtype=float)
    single = False
    if not sparse.issparse(x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
    labels = np.where(np.atleast_1d(np.asarray(x @ eta)).ravel() >= 0.0, 1, -1)
    if single:
        return int(labels[0])
    return labels


@dataclass
class AugmentedState:
    eta: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if np.any(self.lam <= 0):
            raise ContractViolationError("Augmentation variables must be strictly positive")


def init_augmented_state(data) -> AugmentedState:
    return AugmentedState(eta=np.zeros(data.d), lam=np.ones(data.n))


def _weighted_gram(X, w: np.ndarray) -> np.ndarray:
    if sparse.issparse(X):
        return np.asarray((X.T @ X.multiply(w[:, None])).toarray())
    return X.T @ (X * w[:, None])


def da_gibbs_step(state: AugmentedState, data, c: float, rng: np.random.Generator) -> AugmentedState:
    """Resample every lambda_i given eta, then eta from its Gaussian conditional.

    With a = c/2 the hinge factor is a scale mixture over lambda:
    1/lambda_i ~ InverseGaussian(1 / (a |1 - y_i eta.x_i|), 1) and
    eta | lambda ~ N(P^-1 b, P^-1), P = I + a^2 sum x x^T / lambda_i,
    b = sum a y_i x_i (1 + a / lambda_i).
    """
    if np.any(state.lam <= 0):
        raise ContractViolationError("Augmentation variables must be strictly positive")
    d = data.d
    if d > config.DENSE_FACTORIZATION_LIMIT:
        raise ConfigurationError(
            f"data augmentation Gibbs needs a dense {d}x{d} factorization; "
            f"limit is {config.DENSE_FACTORIZATION_LIMIT}")
    a = 0.5 * c
    precision = np.eye(d)
    b = np.zeros(d)
    lam = state.lam
    if data.n > 0 and a > 0:
        X, y = data.X, data.y
        u = 1.0 - y * np.asarray(X @ state.eta).ravel()
        ig_mean = 1.0 / (a * np.maximum(np.abs(u), _MARGIN_FLOOR))
        inv_lam = np.clip(rng.wald(ig_mean, 1.0), 1.0 / _LAMBDA_RANGE[1], 1.0 / _LAMBDA_RANGE[0])
        lam = 1.0 / inv_lam
        precision = precision + a * a * _weighted_gram(X, inv_lam)
        b = np.asarray(X.T @ (a * y * (1.0 + a * inv_lam))).ravel()

    try:
        chol = linalg.cholesky(precision, lower=True)
    except linalg.LinAlgError:
        worst = int(np.argmin(lam)) if lam.size else None
        raise NumericalError(f"eta conditional precision is not positive definite "
                             f"(smallest lambda at datum {worst})", index=worst)
    mean = linalg.cho_solve((chol, True), b)
    eta = mean + linalg.solve_triangular(chol, rng.standard_normal(d), lower=True, trans='T')
    return AugmentedState(eta=eta, lam=lam)


def batch_reference_accuracy(train, test, c: float = config.DEFAULT_C) -> float:
    """Test accuracy of a batch hinge-loss linear SVM without intercept"""
    svc = LinearSVC(C=c, loss='hinge', fit_intercept=False, dual=True, max_iter=20000)
    svc.fit(train.X, train.y)
    accuracy = float(np.mean(svc.predict(test.X) == test.y))
    logger.info(f"Batch linear SVM reference accuracy: {accuracy:.4f}")
    return accuracy
