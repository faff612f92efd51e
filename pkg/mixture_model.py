"""
Parametric mixture of linear SVMs with Gaussian input components.

Each component k owns classifier weights eta_k and a Gaussian N(mu_k, L_k^T L_k)
over inputs. The joint for one datum is

    pi_k * N(x | mu_k, L_k^T L_k) * exp(-c * max(0, 1 - y eta_k.x))

and the component assignment is marginalized out, so the gradients of the
marginal log-density are responsibility-weighted per-component gradients.
Two samplers are provided: a doubly stochastic round (minibatch over data,
responsibilities in place of assignments) and HMC within Gibbs.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy import linalg, sparse
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

import config
from data import Dataset
from errors import ConfigurationError, ContractViolationError, DatumUnderflowError, NumericalError
from potential import LOG_2PI, EnergyModel, Minibatch
from samplers import (ChainState, SamplerConfig, hmc_draw, ssgld_step, ssgnht_step)
from svm_model import LinearSVMModel, hinge_loglik, hinge_loglik_subgrad_sum

logger = logging.getLogger(__name__)

INNER_STEPS = {
    'ssgld': ssgld_step,
    'ssgnht': ssgnht_step,
}


@dataclass
class MixtureParams:
    eta: np.ndarray          # (K, d)
    mu: np.ndarray           # (K, d)
    L: np.ndarray            # (K, d, d), Sigma_k = L_k^T L_k
    pi: np.ndarray = None    # (K,)

    def __post_init__(self):
        self.eta = np.atleast_2d(np.asarray(self.eta, dtype=float))
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        self.L = np.asarray(self.L, dtype=float)
        K, d = self.eta.shape
        if self.mu.shape != (K, d) or self.L.shape != (K, d, d):
            raise ContractViolationError(
                f"Inconsistent mixture shapes eta {self.eta.shape}, mu {self.mu.shape}, L {self.L.shape}")
        if self.pi is None:
            self.pi = np.full(K, 1.0 / K)
        self.pi = np.asarray(self.pi, dtype=float)
        if self.pi.shape != (K,) or np.any(self.pi < 0) or abs(self.pi.sum() - 1.0) > 1e-12:
            raise ContractViolationError("Mixing weights must lie on the simplex")
        if np.any(np.diagonal(self.L, axis1=1, axis2=2) == 0.0):
            raise ContractViolationError("Covariance factors need a nonzero diagonal")

    @property
    def K(self) -> int:
        return self.eta.shape[0]

    @property
    def d(self) -> int:
        return self.eta.shape[1]

    def covariance(self, k: int) -> np.ndarray:
        return self.L[k].T @ self.L[k]

    def copy(self) -> "MixtureParams":
        return MixtureParams(self.eta.copy(), self.mu.copy(), self.L.copy(), self.pi.copy())


class _GaussianFactor(NamedTuple):
    L_inv: np.ndarray
    logdet: float


def _factor(L: np.ndarray, k: int) -> _GaussianFactor:
    sign, logdet = np.linalg.slogdet(L)
    if sign == 0 or not np.isfinite(logdet):
        raise NumericalError(f"Covariance factor of component {k} is singular", index=k)
    try:
        L_inv = linalg.inv(L)
    except linalg.LinAlgError:
        raise NumericalError(f"Covariance factor of component {k} is singular", index=k)
    return _GaussianFactor(L_inv, float(logdet))


def _as_dense(X) -> np.ndarray:
    if sparse.issparse(X):
        return X.toarray()
    return np.atleast_2d(np.asarray(X, dtype=float))


def floor_diagonal(L: np.ndarray) -> np.ndarray:
    """Push |L_jj| up to the floor, keeping its sign (zero goes positive)"""
    L = np.array(L, dtype=float)
    diag = np.diagonal(L, axis1=-2, axis2=-1)
    floored = np.where(np.abs(diag) < config.L_DIAGONAL_FLOOR,
                       np.where(diag < 0, -config.L_DIAGONAL_FLOOR, config.L_DIAGONAL_FLOOR), diag)
    j = np.arange(L.shape[-1])
    L[..., j, j] = floored
    return L


def gaussian_logpdf(X, mu: np.ndarray, factor: _GaussianFactor) -> np.ndarray:
    """Row-wise log N(x | mu, L^T L)"""
    V = (_as_dense(X) - mu) @ factor.L_inv
    d = mu.size
    return -0.5 * np.sum(V * V, axis=1) - factor.logdet - 0.5 * d * LOG_2PI


def _log_weights(params: MixtureParams, X, y: Optional[np.ndarray], c: float, factors) -> np.ndarray:
    """N x K unnormalized log responsibilities; y=None drops the label factor"""
    Xd = _as_dense(X)
    columns = []
    for k in range(params.K):
        col = np.log(params.pi[k]) + gaussian_logpdf(Xd, params.mu[k], factors[k])
        if y is not None:
            col = col + hinge_loglik(X, y, params.eta[k], c)
        columns.append(col)
    return np.column_stack(columns)


def _normalize(log_w: np.ndarray, row_ids=None):
    norm = logsumexp(log_w, axis=1)
    bad = np.flatnonzero(~np.isfinite(norm))
    if bad.size:
        i = int(bad[0] if row_ids is None else row_ids[bad[0]])
        raise DatumUnderflowError(i)
    return np.exp(log_w - norm[:, None]), norm


def responsibility_matrix(params: MixtureParams, X, y: Optional[np.ndarray], c: float = config.DEFAULT_C,
                          row_ids=None) -> np.ndarray:
    """N x K posterior component probabilities, computed in log space"""
    factors = [_factor(params.L[k], k) for k in range(params.K)]
    n = X.shape[0]
    if params.K == 1:
        _normalize(_log_weights(params, X, y, c, factors), row_ids)
        return np.ones((n, 1))
    r, _ = _normalize(_log_weights(params, X, y, c, factors), row_ids)
    return r


def responsibilities(x, y, params: MixtureParams, c: float = config.DEFAULT_C) -> np.ndarray:
    """Component probabilities for one datum; y=None gives the label-free version"""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    labels = None if y is None else np.array([float(y)])
    return responsibility_matrix(params, x, labels, c)[0]


def _likelihood_gradients(params: MixtureParams, X, y: np.ndarray, c: float, row_ids=None):
    """Sums over rows of the marginal log-likelihood gradient, per component"""
    factors = [_factor(params.L[k], k) for k in range(params.K)]
    if params.K == 1:
        r = np.ones((X.shape[0], 1))
    else:
        r, _ = _normalize(_log_weights(params, X, y, c, factors), row_ids)
    Xd = _as_dense(X)
    d = params.d
    g_eta = np.zeros((params.K, d))
    g_mu = np.zeros((params.K, d))
    g_L = np.zeros((params.K, d, d))
    for k in range(params.K):
        w = r[:, k]
        g_eta[k] = hinge_loglik_subgrad_sum(X, y, params.eta[k], c, weights=None if params.K == 1 else w)
        V = (Xd - params.mu[k]) @ factors[k].L_inv
        g_mu[k] = factors[k].L_inv @ (V.T @ w)
        g_L[k] = ((V.T * w) @ V - w.sum() * np.eye(d)) @ factors[k].L_inv.T
    return g_eta, g_mu, g_L


def _batch_rows(batch: Optional[Minibatch], data: Dataset):
    if batch is None:
        return data.X, data.y, 1.0, None
    X, y = data.rows(batch.indices)
    return X, y, batch.scale, batch.indices


def ds_grad_eta(params: MixtureParams, k: int, batch: Optional[Minibatch], data: Dataset,
                c: float = config.DEFAULT_C) -> np.ndarray:
    """Doubly stochastic gradient of log q with respect to eta_k (prior included)"""
    X, y, scale, ids = _batch_rows(batch, data)
    g_eta, _, _ = _likelihood_gradients(params, X, y, c, ids)
    return -params.eta[k] + scale * g_eta[k]


def ds_grad_mu(params: MixtureParams, k: int, batch: Optional[Minibatch], data: Dataset,
               c: float = config.DEFAULT_C,
               mu_prior_variance: Optional[float] = config.MU_PRIOR_VARIANCE) -> np.ndarray:
    """sum_i r_ik Sigma_k^-1 (x_i - mu_k) scaled to the full data, plus the mu prior if configured"""
    X, y, scale, ids = _batch_rows(batch, data)
    _, g_mu, _ = _likelihood_gradients(params, X, y, c, ids)
    grad = scale * g_mu[k]
    if mu_prior_variance is not None:
        grad = grad - params.mu[k] / mu_prior_variance
    return grad


def ds_grad_L(params: MixtureParams, k: int, batch: Optional[Minibatch], data: Dataset,
              c: float = config.DEFAULT_C) -> np.ndarray:
    """sum_i r_ik (v_i v_i^T - I) L_k^-T with v_i = L_k^-T (x_i - mu_k); L has a flat prior"""
    X, y, scale, ids = _batch_rows(batch, data)
    _, _, g_L = _likelihood_gradients(params, X, y, c, ids)
    return scale * g_L[k]


def _prior_logdensity(params: MixtureParams, mu_prior_variance: float, include_gaussian: bool) -> float:
    value = -0.5 * float(np.sum(params.eta ** 2)) - 0.5 * params.eta.size * LOG_2PI
    if include_gaussian:
        value += (-0.5 * float(np.sum(params.mu ** 2)) / mu_prior_variance
                  - 0.5 * params.mu.size * (LOG_2PI + np.log(mu_prior_variance)))
    return value


def _marginal_loglik(params: MixtureParams, X, y, c: float) -> float:
    factors = [_factor(params.L[k], k) for k in range(params.K)]
    _, norm = _normalize(_log_weights(params, X, y, c, factors))
    return float(np.sum(norm))


def mixture_log_joint(params: MixtureParams, data: Dataset, c: float = config.DEFAULT_C,
                      mu_prior_variance: float = config.MU_PRIOR_VARIANCE) -> float:
    """log q(eta, mu, L): priors plus sum_i log sum_k of the per-component joint"""
    value = _prior_logdensity(params, mu_prior_variance, include_gaussian=True)
    if data.n == 0:
        return value
    return value + _marginal_loglik(params, data.X, data.y, c)


class MixtureSVMModel(EnergyModel):
    """The mixture posterior over the packed vector [eta | mu | L].

    With frozen_gaussian the vector holds eta only and (mu, L, pi) are taken
    from the frozen parameters.
    """

    def __init__(self, feature_dim: int, components: int, c: float = config.DEFAULT_C,
                 mu_prior_variance: float = config.MU_PRIOR_VARIANCE,
                 frozen_gaussian: Optional[MixtureParams] = None):
        if components < 1:
            raise ConfigurationError(f"mixture needs at least one component, got K={components}")
        if c < 0:
            raise ConfigurationError(f"regularization constant c={c} must be >= 0")
        d, K = int(feature_dim), int(components)
        if frozen_gaussian is not None and (frozen_gaussian.K, frozen_gaussian.d) != (K, d):
            raise ContractViolationError("Frozen Gaussian parameters do not match K and d")
        self.feature_dim = d
        self.components = K
        self.c = float(c)
        self.mu_prior_variance = float(mu_prior_variance)
        self.frozen_gaussian = frozen_gaussian
        super().__init__(K * d if frozen_gaussian is not None else K * d * (2 + d))

    def pack(self, params: MixtureParams) -> np.ndarray:
        if self.frozen_gaussian is not None:
            return params.eta.ravel().copy()
        return np.concatenate([params.eta.ravel(), params.mu.ravel(), params.L.ravel()])

    def unpack(self, theta) -> MixtureParams:
        theta = np.asarray(theta, dtype=float)
        K, d = self.components, self.feature_dim
        eta = theta[:K * d].reshape(K, d)
        if self.frozen_gaussian is not None:
            g = self.frozen_gaussian
            return MixtureParams(eta, g.mu, g.L, g.pi)
        mu = theta[K * d:2 * K * d].reshape(K, d)
        L = theta[2 * K * d:].reshape(K, d, d)
        return MixtureParams(eta, mu, L)

    def project(self, theta) -> np.ndarray:
        """Apply the covariance diagonal floor to a packed vector"""
        if self.frozen_gaussian is not None:
            return np.asarray(theta, dtype=float)
        theta = np.array(theta, dtype=float)
        K, d = self.components, self.feature_dim
        theta[2 * K * d:] = floor_diagonal(theta[2 * K * d:].reshape(K, d, d)).ravel()
        return theta

    def _pack_gradients(self, g_eta, g_mu, g_L) -> np.ndarray:
        if self.frozen_gaussian is not None:
            return g_eta.ravel()
        return np.concatenate([g_eta.ravel(), g_mu.ravel(), g_L.ravel()])

    def prior_logdensity(self, theta):
        return _prior_logdensity(self.unpack(theta), self.mu_prior_variance,
                                 include_gaussian=self.frozen_gaussian is None)

    def prior_subgrad(self, theta):
        params = self.unpack(theta)
        return self._pack_gradients(-params.eta, -params.mu / self.mu_prior_variance,
                                    np.zeros_like(params.L))

    def datum_loglik(self, theta, x, y):
        return self.likelihood_logsum(theta, np.asarray(x, dtype=float).reshape(1, -1), np.array([y]))

    def datum_subgrad(self, theta, x, y):
        return self.likelihood_subgrad(theta, np.asarray(x, dtype=float).reshape(1, -1), np.array([y]))

    def likelihood_subgrad(self, theta, X, y):
        return self._pack_gradients(*_likelihood_gradients(self.unpack(theta), X, y, self.c))

    def likelihood_logsum(self, theta, X, y):
        return _marginal_loglik(self.unpack(theta), X, y, self.c)


def init_mixture_params(data: Dataset, components: int, rng: np.random.Generator) -> MixtureParams:
    """k-means++ means from a random pool of max(10, 10 K) rows, L = I, eta = 0"""
    K, d = int(components), data.d
    if K < 1:
        raise ConfigurationError(f"mixture needs at least one component, got K={K}")
    if data.n < K:
        raise ContractViolationError(f"Cannot seed {K} components from {data.n} rows")
    pool_size = min(data.n, max(config.KMEANS_POOL_SIZE, config.KMEANS_POOL_SIZE * K))
    pool = np.sort(rng.choice(data.n, size=pool_size, replace=False))
    X_pool, _ = data.rows(pool)
    centers, _ = kmeans_plusplus(_as_dense(X_pool), n_clusters=K,
                                 random_state=int(rng.integers(np.iinfo(np.int32).max)))
    L = np.repeat(np.eye(d)[None, :, :], K, axis=0)
    return MixtureParams(eta=np.zeros((K, d)), mu=centers, L=L)


def doubly_stochastic_hmc_round(model: MixtureSVMModel, state: ChainState, sampler_config: SamplerConfig,
                                data: Dataset, rng: np.random.Generator, inner: str = 'ssgld') -> ChainState:
    """One minibatch, responsibilities for those rows only, one joint step on [eta | mu | L].

    The current MixtureParams are model.unpack(state.theta).
    """
    step = INNER_STEPS.get(inner)
    if step is None:
        raise ConfigurationError(f"unknown mixture inner sampler '{inner}'; "
                                 f"choose from {config.MIXTURE_INNER_SAMPLERS}")
    new_state = step(model, state, sampler_config, data, rng)
    new_state.theta = model.project(new_state.theta)
    return new_state


def gibbs_assignments(params: MixtureParams, data: Dataset, rng: np.random.Generator,
                      c: float = config.DEFAULT_C) -> np.ndarray:
    """z_i ~ Categorical(r_i) for every datum (0-based component indices)"""
    if params.K == 1:
        return np.zeros(data.n, dtype=int)
    r = responsibility_matrix(params, data.X, data.y, c)
    u = rng.uniform(size=data.n)
    z = np.sum(np.cumsum(r, axis=1) < u[:, None], axis=1)
    return np.minimum(z, params.K - 1)


class GaussianComponentModel(EnergyModel):
    """N(0, v I) prior on mu, flat on L, likelihood log N(x | mu, L^T L) over [mu | L]"""

    def __init__(self, feature_dim: int, mu_prior_variance: float = config.MU_PRIOR_VARIANCE):
        d = int(feature_dim)
        super().__init__(d + d * d)
        self.feature_dim = d
        self.mu_prior_variance = float(mu_prior_variance)

    def split(self, theta):
        d = self.feature_dim
        return theta[:d], theta[d:].reshape(d, d)

    def prior_logdensity(self, theta):
        mu, _ = self.split(theta)
        v = self.mu_prior_variance
        return float(-0.5 * mu @ mu / v - 0.5 * mu.size * (LOG_2PI + np.log(v)))

    def prior_subgrad(self, theta):
        mu, L = self.split(theta)
        return np.concatenate([-mu / self.mu_prior_variance, np.zeros(L.size)])

    def datum_loglik(self, theta, x, y):
        return self.likelihood_logsum(theta, np.asarray(x, dtype=float).reshape(1, -1), None)

    def datum_subgrad(self, theta, x, y):
        return self.likelihood_subgrad(theta, np.asarray(x, dtype=float).reshape(1, -1), None)

    def likelihood_subgrad(self, theta, X, y):
        mu, L = self.split(theta)
        factor = _factor(L, 0)
        V = (_as_dense(X) - mu) @ factor.L_inv
        g_mu = factor.L_inv @ V.sum(axis=0)
        g_L = (V.T @ V - V.shape[0] * np.eye(mu.size)) @ factor.L_inv.T
        return np.concatenate([g_mu, g_L.ravel()])

    def likelihood_logsum(self, theta, X, y):
        mu, L = self.split(theta)
        return float(np.sum(gaussian_logpdf(X, mu, _factor(L, 0))))


@dataclass
class WithinGibbsState:
    """Everything HMC-within-Gibbs carries between rounds"""
    params: MixtureParams
    eta_states: List[ChainState]
    gaussian_states: List[ChainState]
    z: Optional[np.ndarray] = None
    timings: Dict[str, float] = field(
        default_factory=lambda: {'assignment': 0.0, 'eta': 0.0, 'gaussian': 0.0})


def init_within_gibbs(params: MixtureParams, rng: np.random.Generator,
                      thermostat: bool = False, diffusion: float = config.DEFAULT_DIFFUSION) -> WithinGibbsState:
    """Per-component chain states for eta and for (mu, L)"""
    eta_states = [ChainState(theta=params.eta[k].copy(), p=rng.standard_normal(params.d))
                  for k in range(params.K)]
    gaussian_states = []
    for k in range(params.K):
        theta = np.concatenate([params.mu[k], params.L[k].ravel()])
        gaussian_states.append(ChainState(theta=theta, p=rng.standard_normal(theta.size),
                                          xi=float(diffusion) if thermostat else None))
    return WithinGibbsState(params=params.copy(), eta_states=eta_states, gaussian_states=gaussian_states)


def _clamped(sampler_config: SamplerConfig, n_rows: int) -> SamplerConfig:
    if sampler_config.batch_size is None or n_rows == 0:
        return replace(sampler_config, batch_size=None)
    return replace(sampler_config, batch_size=min(sampler_config.batch_size, n_rows))


def hmc_within_gibbs_round(state: WithinGibbsState, sampler_config: SamplerConfig, data: Dataset,
                           rng: np.random.Generator, c: float = config.DEFAULT_C,
                           inner: str = 'ssgld',
                           mu_prior_variance: float = config.MU_PRIOR_VARIANCE) -> WithinGibbsState:
    """Assignments for all N rows, then eta_k by subgradient HMC and (mu_k, L_k) by one
    inner-sampler step on the rows assigned to k.

    Empty components draw mu_k from its prior, reset L_k = I and move eta_k
    under the prior alone.
    """
    step = INNER_STEPS.get(inner)
    if step is None:
        raise ConfigurationError(f"unknown mixture inner sampler '{inner}'; "
                                 f"choose from {config.MIXTURE_INNER_SAMPLERS}")
    params = state.params.copy()
    timings = dict(state.timings)

    started = time.perf_counter()
    z = gibbs_assignments(params, data, rng, c)
    timings['assignment'] += time.perf_counter() - started

    started = time.perf_counter()
    eta_model = LinearSVMModel(params.d, c)
    eta_states = []
    members = [np.flatnonzero(z == k) for k in range(params.K)]
    for k in range(params.K):
        subset = data.subset(members[k]) if members[k].size else Dataset.empty(params.d)
        eta_state = hmc_draw(eta_model, state.eta_states[k], _clamped(sampler_config, subset.n), subset, rng)
        params.eta[k] = eta_state.theta
        eta_states.append(eta_state)
    timings['eta'] += time.perf_counter() - started

    started = time.perf_counter()
    gaussian_model = GaussianComponentModel(params.d, mu_prior_variance)
    gaussian_states = []
    for k in range(params.K):
        g_state = state.gaussian_states[k]
        if members[k].size == 0:
            logger.debug(f"Component {k} is empty; redrawing its Gaussian from the prior")
            g_state = g_state.copy()
            params.mu[k] = rng.normal(0.0, np.sqrt(mu_prior_variance), size=params.d)
            params.L[k] = np.eye(params.d)
            g_state.theta = np.concatenate([params.mu[k], params.L[k].ravel()])
        else:
            subset = data.subset(members[k])
            g_state = step(gaussian_model, g_state, _clamped(sampler_config, subset.n), subset, rng)
            mu, L = gaussian_model.split(g_state.theta)
            params.mu[k] = mu
            params.L[k] = floor_diagonal(L)
            g_state.theta = np.concatenate([params.mu[k], params.L[k].ravel()])
        gaussian_states.append(g_state)
    timings['gaussian'] += time.perf_counter() - started

    return WithinGibbsState(params=params, eta_states=eta_states, gaussian_states=gaussian_states,
                            z=z, timings=timings)


def _predict_component(params: MixtureParams, X) -> np.ndarray:
    factors = [_factor(params.L[k], k) for k in range(params.K)]
    return np.argmax(_log_weights(params, X, None, 0.0, factors), axis=1)


def mixture_predict(params: MixtureParams, X) -> np.ndarray:
    """Label-free prediction: most probable component for each row, then sign(eta_z.x)"""
    if not sparse.issparse(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
    z = _predict_component(params, X)
    Xd = _as_dense(X)
    scores = np.einsum('ij,ij->i', Xd, params.eta[z])
    return np.where(scores >= 0.0, 1, -1)


def gibbs_classifier_predict(params_samples, x, rng: np.random.Generator, votes: int = 1) -> int:
    """Majority over votes of sign(eta_z.x) with a drawn sample and z ~ label-free responsibilities"""
    if isinstance(params_samples, MixtureParams):
        params_samples = [params_samples]
    if len(params_samples) == 0:
        raise ContractViolationError("Gibbs classifier needs at least one posterior sample")
    if votes < 1:
        raise ContractViolationError(f"votes={votes} must be >= 1")
    x = np.asarray(x, dtype=float).ravel()
    total = 0
    for _ in range(votes):
        params = params_samples[int(rng.integers(len(params_samples)))]
        r = responsibilities(x, None, params)
        z = min(int(np.sum(np.cumsum(r) < rng.uniform())), params.K - 1)
        total += 1 if float(params.eta[z] @ x) >= 0.0 else -1
    return 1 if total >= 0 else -1
