"""
Trace bookkeeping, posterior summaries, accuracy curves and the kink-smoothing study
"""

import logging
import time
from dataclasses import replace
from typing import Callable, NamedTuple, Optional, Sequence

import arviz as az
import numpy as np
import pandas as pd
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

import config
from errors import ContractViolationError
from potential import CallablePotential
from samplers import SamplerConfig, acceptance_rate, hmc_draw, init_chain_state

logger = logging.getLogger(__name__)


class Trace:
    """Ordered parameter samples with iteration and wall-clock stamps"""

    def __init__(self, dim: int, burn_in_fraction: float = config.BURN_IN_FRACTION):
        if not 0.0 <= burn_in_fraction < 1.0:
            raise ContractViolationError(f"Burn-in fraction {burn_in_fraction} must lie in [0, 1)")
        self.dim = int(dim)
        self.burn_in_fraction = burn_in_fraction
        self._burn_in: Optional[int] = None
        self._samples = []
        self._iterations = []
        self._wall_ms = []
        self._start = time.perf_counter()

    def append(self, theta, iteration: int, wall_ms: Optional[float] = None) -> None:
        theta = np.array(theta, dtype=float).ravel()
        if theta.size != self.dim:
            raise ContractViolationError(f"Sample has {theta.size} coordinates, trace expects {self.dim}")
        if wall_ms is None:
            wall_ms = 1000.0 * (time.perf_counter() - self._start)
        if self._wall_ms and wall_ms < self._wall_ms[-1]:
            raise ContractViolationError("Trace timestamps must be nondecreasing")
        if self._iterations and iteration <= self._iterations[-1]:
            raise ContractViolationError("Trace iterations must be increasing")
        self._samples.append(theta)
        self._iterations.append(int(iteration))
        self._wall_ms.append(float(wall_ms))

    def __len__(self):
        return len(self._samples)

    @property
    def samples(self) -> np.ndarray:
        if not self._samples:
            return np.zeros((0, self.dim))
        return np.vstack(self._samples)

    @property
    def iterations(self) -> np.ndarray:
        return np.asarray(self._iterations, dtype=int)

    @property
    def wall_ms(self) -> np.ndarray:
        return np.asarray(self._wall_ms, dtype=float)

    @property
    def burn_in(self) -> int:
        if self._burn_in is not None:
            return self._burn_in
        return int(self.burn_in_fraction * len(self))

    def set_burn_in(self, n_samples: int) -> None:
        if not 0 <= n_samples < max(len(self), 1):
            raise ContractViolationError(f"Burn-in {n_samples} must be shorter than the trace ({len(self)})")
        self._burn_in = int(n_samples)

    def post_burn_in(self) -> np.ndarray:
        return self.samples[self.burn_in:]

    def to_frame(self, columns: Optional[Sequence[str]] = None, include_burn_in: bool = True) -> pd.DataFrame:
        """iteration plus one column per coordinate; no wall clock so reruns are byte-identical"""
        columns = list(columns) if columns is not None else [f"theta_{j}" for j in range(self.dim)]
        start = 0 if include_burn_in else self.burn_in
        frame = pd.DataFrame(self.samples[start:], columns=columns)
        frame.insert(0, 'iteration', self.iterations[start:])
        return frame


class TraceMoments(NamedTuple):
    mean: np.ndarray
    covariance: np.ndarray
    directions: np.ndarray      # columns, by eigenvalue descending
    eigenvalues: np.ndarray


def _samples_of(trace) -> np.ndarray:
    if isinstance(trace, Trace):
        return trace.post_burn_in()
    return np.atleast_2d(np.asarray(trace, dtype=float))


def trace_moments(trace) -> TraceMoments:
    """Sample mean, unbiased covariance and its eigenvectors (post burn-in for a Trace)"""
    samples = _samples_of(trace)
    if samples.shape[0] < 2:
        raise ContractViolationError(f"Need at least 2 samples for moments, got {samples.shape[0]}")
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / (samples.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    eigenvalues, vectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    return TraceMoments(mean, cov, vectors[:, order], eigenvalues[order])


def principal_angle_degrees(u, v) -> float:
    """Angle between two directions, ignoring sign"""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cosine = abs(float(u @ v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.degrees(np.arccos(np.clip(cosine, 0.0, 1.0))))


def mc_standard_error(samples) -> np.ndarray:
    """Monte Carlo standard error of the sample mean, per coordinate.

    Each coordinate is treated as one chain; the error is sd / sqrt(ESS) with
    the autocorrelation-based effective sample size from arviz.
    """
    samples = np.asarray(samples, dtype=float)
    scalar = samples.ndim == 1
    if scalar:
        samples = samples[:, None]
    n = samples.shape[0]
    if n < config.MIN_MCSE_DRAWS:
        raise ContractViolationError(
            f"Need at least {config.MIN_MCSE_DRAWS} samples for a standard error, got {n}")
    se = np.array([float(az.mcse(samples[:, j][None, :], method="mean")) for j in range(samples.shape[1])])
    return float(se[0]) if scalar else se


def accuracy_curve(trace: Trace, test_set, predictor: Callable, every: int = 1) -> pd.DataFrame:
    """Test accuracy of the running posterior mean at every `every`-th sample.

    The mean at a checkpoint drops the leading burn-in fraction of the samples
    seen so far. predictor(theta, X) must return +/-1 labels.
    """
    if test_set.n == 0:
        raise ContractViolationError("Accuracy curve needs a nonempty test set")
    if len(trace) == 0:
        raise ContractViolationError("Accuracy curve needs a nonempty trace")
    samples = trace.samples
    cumulative = np.vstack([np.zeros(trace.dim), np.cumsum(samples, axis=0)])
    checkpoints = list(range(every - 1, len(trace), every))
    if not checkpoints or checkpoints[-1] != len(trace) - 1:
        checkpoints.append(len(trace) - 1)
    rows = []
    for j in checkpoints:
        seen = j + 1
        start = int(trace.burn_in_fraction * seen)
        mean = (cumulative[seen] - cumulative[start]) / (seen - start)
        labels = np.asarray(predictor(mean, test_set.X)).ravel()
        rows.append((int(trace.iterations[j]), float(trace.wall_ms[j]), float(np.mean(labels == test_set.y))))
    return pd.DataFrame(rows, columns=['iteration', 'wall_ms', 'accuracy'])


class SmoothedPotential:
    """U outside [q0 - eps, q0 + eps], a cubic Hermite bridge inside"""

    def __init__(self, energy_fn: Callable, grad_fn: Callable, q0: float, eps: float):
        self.q0 = float(q0)
        self.eps = float(eps)
        self._energy_fn = energy_fn
        self._grad_fn = grad_fn
        ends = np.array([self.q0 - self.eps, self.q0 + self.eps])
        self._spline = CubicHermiteSpline(ends, [float(energy_fn(q)) for q in ends],
                                          [float(grad_fn(q)) for q in ends])

    def _inside(self, q: np.ndarray) -> np.ndarray:
        return np.abs(q - self.q0) <= self.eps

    def energy(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim == 0:
            return float(self._spline(q)) if self._inside(q) else float(self._energy_fn(float(q)))
        return np.array([self.energy(v) for v in q.ravel()]).reshape(q.shape)

    def grad(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim == 0:
            return float(self._spline(q, 1)) if self._inside(q) else float(self._grad_fn(float(q)))
        return np.array([self.grad(v) for v in q.ravel()]).reshape(q.shape)


def smooth_poly_1d(U: Callable, q0: float, eps: float, grad: Callable,
                   kinks: Sequence[float] = ()) -> SmoothedPotential:
    """Replace U on [q0 - eps, q0 + eps] by the cubic matching value and slope at both ends"""
    if not eps > 0:
        raise ContractViolationError(f"Smoothing width eps={eps} must be > 0")
    others = [k for k in kinks if k != q0 and abs(k - q0) <= eps]
    if others:
        raise ContractViolationError(f"Kinks {others} besides q0={q0} fall inside the smoothing window")
    return SmoothedPotential(U, grad, q0, eps)


class StudyReport(NamedTuple):
    frame: pd.DataFrame
    truth: float
    reference_mean: float
    reference_se: float
    nonincreasing: bool


def quadrature_mean(U: Callable, split_points: Sequence[float] = (0.0,)) -> float:
    """E[q] under exp(-U(q)) by adaptive quadrature over the real line"""
    edges = [-np.inf] + sorted(split_points) + [np.inf]
    mass = moment = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mass += integrate.quad(lambda q: np.exp(-U(q)), lo, hi)[0]
        moment += integrate.quad(lambda q: q * np.exp(-U(q)), lo, hi)[0]
    return moment / mass


def _run_1d_chain(energy: Callable, grad: Callable, sampler_config: SamplerConfig, draws: int,
                  seed: int, q_init: float):
    model = CallablePotential(lambda q: energy(float(q[0])), lambda q: [grad(float(q[0]))], dim=1)
    rng = np.random.default_rng(seed)
    state = init_chain_state([q_init], sampler_config, rng)
    samples = np.empty(draws)
    for i in range(draws):
        state = hmc_draw(model, state, sampler_config, None, rng)
        samples[i] = state.theta[0]
    return samples[int(config.BURN_IN_FRACTION * draws):], acceptance_rate(state)


def smoothing_convergence_study(eps_list: Sequence[float], sampler_config: SamplerConfig, U: Callable,
                                grad: Callable, q0: float = 0.0, draws: int = 5000, seed: int = 0,
                                q_init: float = 0.0, kinks: Sequence[float] = ()) -> StudyReport:
    """MH-corrected HMC on each smoothed U_eps against subgradient HMC on U itself.

    Every chain shares the seed, so the discrepancies measure the smoothing
    rather than independent Monte Carlo noise.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ContractViolationError(f"Smoothing widths must be decreasing, got {eps_list}")
    truth = quadrature_mean(U, [q0, *kinks])
    reference, ref_accept = _run_1d_chain(U, grad, sampler_config, draws, seed, q_init)
    ref_mean = float(reference.mean())
    ref_se = mc_standard_error(reference)
    logger.info(f"Subgradient HMC mean {ref_mean:.4f} (se {ref_se:.4f}), quadrature {truth:.4f}")

    smoothed_config = replace(sampler_config, mh_correction=True)
    rows = []
    for eps in eps_list:
        smoothed = smooth_poly_1d(U, q0, eps, grad, kinks)
        samples, accept = _run_1d_chain(smoothed.energy, smoothed.grad, smoothed_config, draws, seed, q_init)
        mean = float(samples.mean())
        se = mc_standard_error(samples)
        rows.append({'eps': eps, 'mean': mean, 'mc_se': se, 'reference_mean': ref_mean,
                     'discrepancy': abs(mean - ref_mean), 'acceptance_rate': accept})
        logger.info(f"eps={eps}: mean {mean:.4f}, discrepancy {abs(mean - ref_mean):.2e}")
    frame = pd.DataFrame(rows)

    slack = 3.0 * np.hypot(frame['mc_se'].to_numpy(), ref_se)
    disc = frame['discrepancy'].to_numpy()
    nonincreasing = bool(np.all(disc[1:] <= disc[:-1] + slack[1:]))
    if not nonincreasing:
        logger.warning("Smoothing discrepancies grow as eps shrinks beyond Monte Carlo error")
    return StudyReport(frame, truth, ref_mean, ref_se, nonincreasing)
