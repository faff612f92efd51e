"""
Energy-model contract and the minibatch subgradient estimators the samplers consume.

The potential energy of a posterior is

    U(theta) = -log P0(theta) - sum_i log P(x_i, y_i | theta)

and every sampler in this package only ever asks a model for (sub)gradients of
log P0 and of the per-datum log-likelihood. Models plug in by subclassing
EnergyModel.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from errors import ContractViolationError, DatumUnderflowError

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class Minibatch:
    """Row indices of a uniformly drawn subset plus the unbiased scale N / N_batch"""
    indices: np.ndarray
    scale: float

    def __post_init__(self):
        if len(self.indices) == 0:
            raise ContractViolationError("Minibatch must contain at least one index")

    @classmethod
    def full(cls, n: int) -> "Minibatch":
        return cls(indices=np.arange(n), scale=1.0)

    @property
    def size(self) -> int:
        return len(self.indices)


def dense_row(X, i: int) -> np.ndarray:
    """Return row i of a dense or scipy sparse matrix as a flat float array"""
    row = X[i]
    if hasattr(row, "toarray"):
        return row.toarray().ravel()
    return np.asarray(row, dtype=float).ravel()


class EnergyModel(ABC):
    """Log-prior plus i.i.d. per-datum log-likelihood, with subgradients.

    Subclasses implement the per-datum hooks; the vectorized sums default to a
    loop over rows and should be overridden where numpy can do better.
    Implementations must not mutate theta or the data they are handed.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)

    @abstractmethod
    def prior_logdensity(self, theta: np.ndarray) -> float:
        ...

    @abstractmethod
    def prior_subgrad(self, theta: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def datum_loglik(self, theta: np.ndarray, x: np.ndarray, y: float) -> float:
        ...

    @abstractmethod
    def datum_subgrad(self, theta: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
        ...

    def likelihood_subgrad(self, theta: np.ndarray, X, y: np.ndarray) -> np.ndarray:
        """Sum of datum_subgrad over the rows of X"""
        total = np.zeros(self.dim)
        for i in range(len(y)):
            total += self.datum_subgrad(theta, dense_row(X, i), y[i])
        return total

    def likelihood_logsum(self, theta: np.ndarray, X, y: np.ndarray) -> float:
        """Sum of datum_loglik over the rows of X"""
        return float(sum(self.datum_loglik(theta, dense_row(X, i), y[i]) for i in range(len(y))))


class GaussianTargetModel(EnergyModel):
    """Diagonal Gaussian target with no likelihood term; used to verify samplers"""

    def __init__(self, mean, variances):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        variances = np.broadcast_to(np.asarray(variances, dtype=float), mean.shape).copy()
        if np.any(variances <= 0):
            raise ContractViolationError("Gaussian target variances must be positive")
        super().__init__(mean.size)
        self.mean = mean
        self.variances = variances

    def prior_logdensity(self, theta):
        r = theta - self.mean
        return float(-0.5 * np.sum(r * r / self.variances)
                     - 0.5 * np.sum(np.log(self.variances)) - 0.5 * self.dim * LOG_2PI)

    def prior_subgrad(self, theta):
        return -(theta - self.mean) / self.variances

    def datum_loglik(self, theta, x, y):
        return 0.0

    def datum_subgrad(self, theta, x, y):
        return np.zeros(self.dim)

    def likelihood_subgrad(self, theta, X, y):
        return np.zeros(self.dim)

    def likelihood_logsum(self, theta, X, y):
        return 0.0


class CallablePotential(EnergyModel):
    """Wrap a potential U(theta) and its subgradient as a prior-only EnergyModel"""

    def __init__(self, energy: Callable[[np.ndarray], float],
                 subgrad: Callable[[np.ndarray], np.ndarray], dim: int):
        super().__init__(dim)
        self._energy = energy
        self._subgrad = subgrad

    def prior_logdensity(self, theta):
        return -float(self._energy(theta))

    def prior_subgrad(self, theta):
        return -np.asarray(self._subgrad(theta), dtype=float).reshape(self.dim)

    def datum_loglik(self, theta, x, y):
        return 0.0

    def datum_subgrad(self, theta, x, y):
        return np.zeros(self.dim)

    def likelihood_subgrad(self, theta, X, y):
        return np.zeros(self.dim)

    def likelihood_logsum(self, theta, X, y):
        return 0.0


def check_theta(model: EnergyModel, theta) -> np.ndarray:
    """Coerce theta to a flat float array and verify its dimension"""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size != model.dim:
        raise ContractViolationError(
            f"Parameter vector has shape {theta.shape}, model expects ({model.dim},)")
    return theta


def _check_data(model: EnergyModel, data) -> None:
    if data is not None and data.n > 0 and data.d != getattr(model, "feature_dim", data.d):
        raise ContractViolationError(
            f"Dataset has {data.d} features, model expects {model.feature_dim}")


def stochastic_subgradient(model: EnergyModel, theta, batch: Minibatch, data) -> np.ndarray:
    """Unbiased minibatch estimate of the subgradient of U at theta"""
    theta = check_theta(model, theta)
    _check_data(model, data)
    if batch.indices.max() >= data.n or batch.indices.min() < 0:
        raise ContractViolationError(f"Minibatch indices out of range for {data.n} rows")
    X, y = data.rows(batch.indices)
    try:
        likelihood = model.likelihood_subgrad(theta, X, y)
    except DatumUnderflowError as e:
        # report the dataset row, not the position inside the minibatch
        raise DatumUnderflowError(int(batch.indices[e.index])) from e
    return -model.prior_subgrad(theta) - batch.scale * likelihood


def full_subgradient(model: EnergyModel, theta, data=None) -> np.ndarray:
    """Exact subgradient of U: prior term plus the sum over every datum"""
    theta = check_theta(model, theta)
    g = -model.prior_subgrad(theta)
    if data is None or data.n == 0:
        return g
    _check_data(model, data)
    return g - model.likelihood_subgrad(theta, data.X, data.y)


def full_energy(model: EnergyModel, theta, data=None) -> float:
    """U(theta) including the prior's normalization constant"""
    theta = check_theta(model, theta)
    if not np.all(np.isfinite(theta)):
        raise ContractViolationError("Energy requested at a non-finite parameter vector")
    energy = -model.prior_logdensity(theta)
    if data is not None and data.n > 0:
        _check_data(model, data)
        energy -= model.likelihood_logsum(theta, data.X, data.y)
    return float(energy)


def minibatch_loglik(model: EnergyModel, theta, batch: Minibatch, data) -> float:
    """Scaled minibatch estimate of the total log-likelihood"""
    theta = check_theta(model, theta)
    X, y = data.rows(batch.indices)
    return float(batch.scale * model.likelihood_logsum(theta, X, y))


def check_subgradient_validity(model: EnergyModel, theta1, theta2, x, y, tol: float = 1e-12) -> bool:
    """Convexity inequality e(theta2) >= e(theta1) + g.(theta2 - theta1) for one energy term

    e is the per-datum energy -log P(x, y | theta) and g its returned subgradient.
    """
    theta1 = check_theta(model, theta1)
    theta2 = check_theta(model, theta2)
    e1 = -model.datum_loglik(theta1, x, y)
    e2 = -model.datum_loglik(theta2, x, y)
    g = -model.datum_subgrad(theta1, x, y)
    return e2 >= e1 + float(g @ (theta2 - theta1)) - tol


def numerical_gradient(fn: Callable[[np.ndarray], float], theta, h: float = 1e-6,
                       indices: Optional[np.ndarray] = None) -> np.ndarray:
    """Central finite differences of a scalar function"""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    coords = range(theta.size) if indices is None else indices
    for j in coords:
        step = np.zeros_like(theta)
        step[j] = h
        grad[j] = (fn(theta + step) - fn(theta - step)) / (2.0 * h)
    return grad
