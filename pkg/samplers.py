"""
Stochastic subgradient samplers: leapfrog HMC, SSGLD, SSGNHT and the random-walk baseline.

Every step function takes the chain's own numpy Generator and returns a new
ChainState; the state passed in is left untouched. A batch size of None (or
equal to N) means full-batch subgradients.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

import config
from data import draw_minibatch
from errors import ChainDivergenceError, ConfigurationError, ContractViolationError
from potential import (EnergyModel, Minibatch, check_theta, full_energy, full_subgradient,
                       stochastic_subgradient)

logger = logging.getLogger(__name__)


@dataclass
class StepsizeSchedule:
    """constant: eps0 | polynomial: a * t^-gamma | adaptive: eps0 / (sqrt(accum) + delta)"""
    kind: str = 'constant'
    eps0: float = 1e-3
    a: float = 1e-4
    gamma: float = 0.0
    delta: float = config.ADAPTIVE_DELTA

    @classmethod
    def constant(cls, eps: float) -> "StepsizeSchedule":
        return cls(kind='constant', eps0=eps)

    @classmethod
    def polynomial(cls, a: float, gamma: float) -> "StepsizeSchedule":
        return cls(kind='polynomial', a=a, gamma=gamma)

    @classmethod
    def adaptive(cls, eps0: float, delta: float = config.ADAPTIVE_DELTA) -> "StepsizeSchedule":
        return cls(kind='adaptive', eps0=eps0, delta=delta)

    def validate(self) -> List[str]:
        problems = []
        if self.kind not in config.SCHEDULE_KINDS:
            problems.append(f"unknown stepsize schedule '{self.kind}'")
        elif self.kind == 'polynomial':
            if not self.a > 0:
                problems.append(f"polynomial stepsize a={self.a} must be > 0")
            if not 0.0 <= self.gamma <= 1.0:
                problems.append(f"γ outside [0,1] (gamma={self.gamma})")
        else:
            if not self.eps0 > 0:
                problems.append(f"stepsize eps0={self.eps0} must be > 0")
            if self.kind == 'adaptive' and not self.delta > 0:
                problems.append(f"adaptive delta={self.delta} must be > 0")
        return problems


@dataclass
class ChainState:
    theta: np.ndarray
    p: np.ndarray
    xi: Optional[float] = None
    t: int = 1
    adapt_accum: np.ndarray = None
    n_proposed: int = 0
    n_accepted: int = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.p.shape != self.theta.shape:
            raise ContractViolationError(
                f"Momentum shape {self.p.shape} differs from position shape {self.theta.shape}")
        if self.adapt_accum is None:
            self.adapt_accum = np.zeros_like(self.theta)

    def copy(self) -> "ChainState":
        return replace(self, theta=self.theta.copy(), p=self.p.copy(),
                       adapt_accum=self.adapt_accum.copy())


@dataclass
class SamplerConfig:
    schedule: StepsizeSchedule = field(default_factory=StepsizeSchedule)
    leapfrog_steps: int = config.DEFAULT_LEAPFROG_STEPS
    diffusion: float = config.DEFAULT_DIFFUSION
    mass: Optional[np.ndarray] = None
    batch_size: Optional[int] = None
    mh_correction: bool = False
    proposal_sd: float = config.DEFAULT_PROPOSAL_SD
    rng_seed: int = 0

    def validate(self, n_rows: Optional[int] = None, thermostat: bool = False) -> List[str]:
        problems = list(self.schedule.validate())
        if self.leapfrog_steps < 1:
            problems.append(f"leapfrog steps m={self.leapfrog_steps} must be >= 1")
        if thermostat and not self.diffusion > 0:
            problems.append(f"diffusion A={self.diffusion} must be > 0")
        if self.mass is not None and np.any(np.asarray(self.mass) <= 0):
            problems.append("mass matrix diagonal must be positive")
        if self.batch_size is not None:
            if self.batch_size < 1:
                problems.append(f"batch size {self.batch_size} must be >= 1")
            elif n_rows is not None and self.batch_size > n_rows:
                problems.append(f"batch size {self.batch_size} exceeds dataset size N={n_rows}")
        if not self.proposal_sd > 0:
            problems.append(f"proposal sd {self.proposal_sd} must be > 0")
        return problems

    def mass_vector(self, dim: int) -> np.ndarray:
        if self.mass is None:
            return np.ones(dim)
        return np.broadcast_to(np.asarray(self.mass, dtype=float), (dim,)).copy()


def next_stepsize(schedule: StepsizeSchedule, state: ChainState, g) -> np.ndarray:
    """Per-dimension stepsize for step state.t; the adaptive kind updates state.adapt_accum"""
    problems = schedule.validate()
    if problems:
        raise ConfigurationError(problems)
    if state.t < 1:
        raise ContractViolationError(f"Step counter t={state.t} must be >= 1")
    dim = state.theta.size
    if schedule.kind == 'constant':
        return np.full(dim, schedule.eps0)
    if schedule.kind == 'polynomial':
        return np.full(dim, schedule.a * float(state.t) ** (-schedule.gamma))
    g = np.asarray(g, dtype=float)
    state.adapt_accum = state.adapt_accum + g * g
    return schedule.eps0 / (np.sqrt(state.adapt_accum) + schedule.delta)


def check_divergence(theta: np.ndarray, step: int) -> None:
    """Abort on non-finite or runaway coordinates"""
    finite = np.isfinite(theta)
    if not np.all(finite):
        j = int(np.flatnonzero(~finite)[0])
        raise ChainDivergenceError(step, f"non-finite value {theta[j]}", coordinate=j)
    runaway = np.abs(theta) > config.DIVERGENCE_LIMIT
    if np.any(runaway):
        j = int(np.flatnonzero(runaway)[0])
        raise ChainDivergenceError(step, f"|theta| = {abs(theta[j]):.3g} exceeds "
                                         f"{config.DIVERGENCE_LIMIT:.0e}; stepsize likely too large",
                                   coordinate=j)


def init_chain_state(theta0, sampler_config: SamplerConfig, rng: np.random.Generator,
                     thermostat: bool = False) -> ChainState:
    """p0 ~ N(0, M), xi0 = A for thermostat chains, t = 1"""
    theta0 = np.array(theta0, dtype=float).ravel()
    mass = sampler_config.mass_vector(theta0.size)
    p0 = rng.standard_normal(theta0.size) * np.sqrt(mass)
    xi = float(sampler_config.diffusion) if thermostat else None
    return ChainState(theta=theta0, p=p0, xi=xi, t=1)


def uses_minibatches(sampler_config: SamplerConfig, data) -> bool:
    return (data is not None and data.n > 0 and sampler_config.batch_size is not None
            and sampler_config.batch_size < data.n)


def _draw_batch(sampler_config: SamplerConfig, data, rng) -> Optional[Minibatch]:
    if data is not None and sampler_config.batch_size is not None and sampler_config.batch_size > data.n:
        raise ConfigurationError(f"batch size {sampler_config.batch_size} exceeds dataset size N={data.n}")
    if not uses_minibatches(sampler_config, data):
        return None
    return draw_minibatch(data, sampler_config.batch_size, rng)


def subgradient(model: EnergyModel, theta, data, batch: Optional[Minibatch]) -> np.ndarray:
    """Stochastic subgradient of U for a minibatch, exact one for batch=None"""
    if batch is None:
        return full_subgradient(model, theta, data)
    return stochastic_subgradient(model, theta, batch, data)


def hamiltonian(model: EnergyModel, theta, p, data, mass: np.ndarray) -> float:
    return full_energy(model, theta, data) + 0.5 * float(np.sum(p * p / mass))


def leapfrog_step(model: EnergyModel, state: ChainState, eps, data, batch: Optional[Minibatch],
                  mass: Optional[np.ndarray] = None) -> ChainState:
    """Half momentum step, full position step, half momentum step on one fixed batch"""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ContractViolationError(f"Leapfrog stepsize must be positive, got {eps}")
    mass = np.ones(state.theta.size) if mass is None else mass
    p_half = state.p - 0.5 * eps * subgradient(model, state.theta, data, batch)
    theta = state.theta + eps * p_half / mass
    check_divergence(theta, state.t)
    p = p_half - 0.5 * eps * subgradient(model, theta, data, batch)
    if not np.all(np.isfinite(p)):
        raise ChainDivergenceError(state.t, "non-finite momentum")
    new_state = state.copy()
    new_state.theta = theta
    new_state.p = p
    return new_state


def _schedule_gradient(model, sampler_config, state, data, rng):
    """Gradient fed to the adaptive accumulator; other schedules ignore it"""
    if sampler_config.schedule.kind != 'adaptive':
        return None
    return subgradient(model, state.theta, data, _draw_batch(sampler_config, data, rng))


def hmc_draw(model: EnergyModel, state: ChainState, sampler_config: SamplerConfig, data,
             rng: np.random.Generator) -> ChainState:
    """Fresh momentum, m leapfrog steps, optional Metropolis-Hastings correction"""
    check_theta(model, state.theta)
    if sampler_config.mh_correction and uses_minibatches(sampler_config, data):
        raise ConfigurationError("MH correction needs full-batch energies; unset batch_size or disable it")
    mass = sampler_config.mass_vector(model.dim)
    new_state = state.copy()
    eps = next_stepsize(sampler_config.schedule, new_state,
                        _schedule_gradient(model, sampler_config, state, data, rng))
    p0 = rng.standard_normal(model.dim) * np.sqrt(mass)
    current = replace(new_state, p=p0)
    for _ in range(sampler_config.leapfrog_steps):
        batch = _draw_batch(sampler_config, data, rng)
        current = leapfrog_step(model, current, eps, data, batch, mass)

    accept = True
    if sampler_config.mh_correction:
        h_old = hamiltonian(model, state.theta, p0, data, mass)
        h_new = hamiltonian(model, current.theta, current.p, data, mass)
        log_ratio = h_old - h_new
        accept = bool(rng.uniform() < np.exp(min(0.0, log_ratio))) if np.isfinite(log_ratio) else False

    new_state.n_proposed += 1
    if accept:
        new_state.theta = current.theta
        new_state.p = current.p
        new_state.n_accepted += 1
    else:
        new_state.p = p0
    new_state.t += 1
    return new_state


def ssgld_step(model: EnergyModel, state: ChainState, sampler_config: SamplerConfig, data,
               rng: np.random.Generator) -> ChainState:
    """theta' = theta - (eps^2 / 2) G~U(theta) + eps * N(0, I), no MH correction"""
    check_theta(model, state.theta)
    new_state = state.copy()
    batch = _draw_batch(sampler_config, data, rng)
    g = subgradient(model, state.theta, data, batch)
    eps = next_stepsize(sampler_config.schedule, new_state, g)
    noise = rng.standard_normal(model.dim)
    theta = state.theta - 0.5 * eps * eps * g + eps * noise
    check_divergence(theta, state.t)
    new_state.theta = theta
    new_state.t += 1
    return new_state


def ssgld_draw(model, state, sampler_config, data, rng) -> ChainState:
    """m SSGLD steps per recorded sample"""
    for _ in range(sampler_config.leapfrog_steps):
        state = ssgld_step(model, state, sampler_config, data, rng)
    return state


def thermostat_update(xi: float, p: np.ndarray, eps: float) -> float:
    """xi + eps * (p.p / n - 1)"""
    return float(xi + eps * (float(p @ p) / p.size - 1.0))


def ssgnht_step(model: EnergyModel, state: ChainState, sampler_config: SamplerConfig, data,
                rng: np.random.Generator) -> ChainState:
    """One thermostat iteration; xi is fed the updated momentum"""
    check_theta(model, state.theta)
    if state.xi is None:
        raise ContractViolationError("SSGNHT needs a thermostat; create the chain with thermostat=True")
    new_state = state.copy()
    batch = _draw_batch(sampler_config, data, rng)
    g = subgradient(model, state.theta, data, batch)
    eps = next_stepsize(sampler_config.schedule, new_state, g)
    A = sampler_config.diffusion
    noise = np.sqrt(2.0 * A * eps) * rng.standard_normal(model.dim)
    p = state.p - eps * state.xi * state.p - eps * g + noise
    theta = state.theta + eps * p
    check_divergence(theta, state.t)
    new_state.theta = theta
    new_state.p = p
    new_state.xi = thermostat_update(state.xi, p, float(np.mean(eps)))
    new_state.t += 1
    return new_state


def ssgnht_draw(model, state, sampler_config, data, rng) -> ChainState:
    """m thermostat iterations per recorded sample; the thermostat carries over between draws"""
    for _ in range(sampler_config.leapfrog_steps):
        state = ssgnht_step(model, state, sampler_config, data, rng)
    return state


def _log_target(model, theta, data, batch) -> float:
    value = model.prior_logdensity(theta)
    if data is None or data.n == 0:
        return value
    if batch is None:
        return value + model.likelihood_logsum(theta, data.X, data.y)
    X, y = data.rows(batch.indices)
    return value + batch.scale * model.likelihood_logsum(theta, X, y)


def srwm_step(model: EnergyModel, state: ChainState, sampler_config: SamplerConfig, data,
              rng: np.random.Generator) -> ChainState:
    """Random-walk proposal accepted on a single-minibatch energy difference"""
    check_theta(model, state.theta)
    new_state = state.copy()
    batch = _draw_batch(sampler_config, data, rng)
    proposal = state.theta + sampler_config.proposal_sd * rng.standard_normal(model.dim)
    check_divergence(proposal, state.t)
    log_ratio = _log_target(model, proposal, data, batch) - _log_target(model, state.theta, data, batch)
    new_state.n_proposed += 1
    if np.isnan(log_ratio):
        log_ratio = -np.inf
    if rng.uniform() < np.exp(min(0.0, log_ratio)):
        new_state.theta = proposal
        new_state.n_accepted += 1
    new_state.t += 1
    return new_state


def acceptance_rate(state: ChainState) -> float:
    if state.n_proposed == 0:
        return float('nan')
    return state.n_accepted / state.n_proposed
