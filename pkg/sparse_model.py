"""
Sparse Bayesian logistic regression with a Laplace prior, plus feature ranking.
"""

import logging
from typing import List, NamedTuple

import numpy as np
import pandas as pd
from scipy.special import expit

import config
from errors import ConfigurationError, ContractViolationError
from potential import EnergyModel

logger = logging.getLogger(__name__)


def logistic_datum_grad(eta, x, y) -> np.ndarray:
    """Derivative of log sigma(y eta.x): sigma(-y eta.x) * y * x"""
    if y not in (1, -1, 1.0, -1.0):
        raise ContractViolationError(f"Label {y} is not +1 or -1")
    x = np.asarray(x, dtype=float)
    return expit(-y * float(np.dot(eta, x))) * y * x


def laplace_prior_subgrad(eta, scale: float) -> np.ndarray:
    """-sign(eta) / scale, with sign(0) = 0"""
    if not scale > 0:
        raise ConfigurationError(f"Laplace scale λ={scale} must be > 0")
    return -np.sign(np.asarray(eta, dtype=float)) / scale


class SparseLogisticModel(EnergyModel):
    """Laplace prior exp(-|eta|_1 / scale) with a logistic likelihood"""

    def __init__(self, dim: int, scale: float = config.DEFAULT_LAPLACE_SCALE):
        if not scale > 0:
            raise ConfigurationError(f"Laplace scale λ={scale} must be > 0")
        super().__init__(dim)
        self.feature_dim = self.dim
        self.scale = float(scale)

    def prior_logdensity(self, theta):
        return float(-np.sum(np.abs(theta)) / self.scale - self.dim * np.log(2.0 * self.scale))

    def prior_subgrad(self, theta):
        return laplace_prior_subgrad(theta, self.scale)

    def datum_loglik(self, theta, x, y):
        return float(-np.logaddexp(0.0, -y * float(np.dot(theta, x))))

    def datum_subgrad(self, theta, x, y):
        return logistic_datum_grad(theta, x, y)

    def likelihood_subgrad(self, theta, X, y):
        margins = np.asarray(X @ theta).ravel()
        return np.asarray(X.T @ (expit(-y * margins) * y)).ravel()

    def likelihood_logsum(self, theta, X, y):
        margins = np.asarray(X @ theta).ravel()
        return float(-np.sum(np.logaddexp(0.0, -y * margins)))


class FeatureRanking(NamedTuple):
    indices: List[int]
    table: pd.DataFrame


def feature_rank(trace, k: int, tol: float = config.NONZERO_TOLERANCE) -> FeatureRanking:
    """Top-k features by |posterior mean weight| (1-based, descending) plus per-feature frequencies.

    nonzero_frequency is the fraction of samples whose |weight| exceeds tol.
    """
    samples = np.asarray(trace, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ContractViolationError("Feature ranking needs a nonempty (samples x d) trace")
    d = samples.shape[1]
    if k > d or k < 1:
        raise ContractViolationError(f"Cannot rank top {k} of {d} features")
    mean = samples.mean(axis=0)
    frequency = np.mean(np.abs(samples) > tol, axis=0)
    order = np.argsort(-np.abs(mean), kind='stable')
    table = pd.DataFrame({
        'rank': np.arange(1, d + 1),
        'feature_index': order + 1,
        'mean_weight': mean[order],
        'nonzero_frequency': frequency[order],
    })
    return FeatureRanking(indices=[int(j) + 1 for j in order[:k]], table=table)


def write_feature_ranking(ranking: FeatureRanking, path: str, config_hash: str = None) -> None:
    """CSV columns: rank, feature_index, mean_weight, nonzero_frequency"""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        if config_hash:
            f.write(f"# config_hash: {config_hash}\n")
        ranking.table.to_csv(f, index=False, float_format='%.17g')
    logger.info(f"Feature ranking written to {path}")
