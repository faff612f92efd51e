"""
Run engine: configuration files, validation and the (model, sampler) dispatch
"""

import configparser
import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

import config
import utils
from data import Dataset, gen_synthetic_sparse, gen_synthetic_svm2d, read_libsvm, train_test_split
from diagnostics import Trace, accuracy_curve
from errors import ConfigurationError, NumericalError
from mixture_model import (MixtureSVMModel, doubly_stochastic_hmc_round, hmc_within_gibbs_round,
                           init_mixture_params, init_within_gibbs, mixture_predict)
from samplers import (SamplerConfig, StepsizeSchedule, acceptance_rate, hmc_draw, init_chain_state,
                      srwm_step, ssgld_draw, ssgnht_draw)
from sparse_model import SparseLogisticModel, feature_rank, write_feature_ranking
from svm_model import LinearSVMModel, da_gibbs_step, init_augmented_state, predict

logger = logging.getLogger(__name__)

SECTIONS = ['run', 'data', 'model', 'sampler']

CHAIN_STEPS = {
    'hmc': hmc_draw,
    'ssgld': ssgld_draw,
    'ssgnht': ssgnht_draw,
    'srwm': srwm_step,
}


def _option(default, section: str):
    return field(default=default, metadata={'section': section})


@dataclass
class RunConfig:
    # [run]
    model: str = _option('linear_svm', 'run')
    sampler: str = _option('ssgld', 'run')
    iterations: int = _option(1000, 'run')
    burn_in: Optional[int] = _option(None, 'run')
    checkpoint_every: int = _option(100, 'run')
    output_dir: str = _option(config.DEFAULT_OUTPUT_DIR, 'run')
    seed: int = _option(0, 'run')
    chains: int = _option(1, 'run')
    # [data]
    dataset: Optional[str] = _option(None, 'data')
    test_dataset: Optional[str] = _option(None, 'data')
    synthetic: Optional[str] = _option(None, 'data')
    synthetic_n: int = _option(1000, 'data')
    synthetic_d: int = _option(50, 'data')
    synthetic_support: int = _option(5, 'data')
    test_fraction: float = _option(0.2, 'data')
    # [model]
    c: float = _option(config.DEFAULT_C, 'model')
    laplace_scale: float = _option(config.DEFAULT_LAPLACE_SCALE, 'model')
    components: int = _option(config.DEFAULT_COMPONENTS, 'model')
    top_features: int = _option(10, 'model')
    # [sampler]
    inner_sampler: str = _option('ssgld', 'sampler')
    schedule: str = _option('constant', 'sampler')
    eps0: float = _option(1e-3, 'sampler')
    schedule_a: float = _option(1e-4, 'sampler')
    schedule_gamma: float = _option(0.0, 'sampler')
    schedule_delta: float = _option(config.ADAPTIVE_DELTA, 'sampler')
    leapfrog_steps: int = _option(config.DEFAULT_LEAPFROG_STEPS, 'sampler')
    diffusion: float = _option(config.DEFAULT_DIFFUSION, 'sampler')
    batch_size: Optional[int] = _option(None, 'sampler')
    mh_correction: bool = _option(False, 'sampler')
    proposal_sd: float = _option(config.DEFAULT_PROPOSAL_SD, 'sampler')

    def stepsize_schedule(self) -> StepsizeSchedule:
        return StepsizeSchedule(kind=self.schedule, eps0=self.eps0, a=self.schedule_a,
                                gamma=self.schedule_gamma, delta=self.schedule_delta)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(schedule=self.stepsize_schedule(), leapfrog_steps=self.leapfrog_steps,
                             diffusion=self.diffusion, batch_size=self.batch_size,
                             mh_correction=self.mh_correction, proposal_sd=self.proposal_sd,
                             rng_seed=self.seed)


_INT_FIELDS = {'iterations', 'burn_in', 'checkpoint_every', 'seed', 'chains', 'synthetic_n', 'synthetic_d',
               'synthetic_support', 'components', 'top_features', 'leapfrog_steps', 'batch_size'}
_FLOAT_FIELDS = {'test_fraction', 'c', 'laplace_scale', 'eps0', 'schedule_a', 'schedule_gamma',
                 'schedule_delta', 'diffusion', 'proposal_sd'}
_OPTIONAL_FIELDS = {'burn_in', 'dataset', 'test_dataset', 'synthetic', 'batch_size'}
_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(name: str, text: str):
    text = text.strip()
    if name in _OPTIONAL_FIELDS and text.lower() in ('', 'none'):
        return None
    if name in _INT_FIELDS:
        return int(text)
    if name in _FLOAT_FIELDS:
        return float(text)
    if name == 'mh_correction':
        if text.lower() in ('1', 'true', 'yes', 'on'):
            return True
        if text.lower() in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(f"not a boolean: '{text}'")
    return text


def _format_value(value) -> str:
    if value is None:
        return 'none'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def load_run_config(path: str) -> RunConfig:
    """Read an INI run configuration; unknown keys and unparsable values are all reported"""
    if not os.path.exists(path):
        raise ConfigurationError(f"configuration file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as e:
        raise ConfigurationError(f"cannot parse {path}: {e}")
    values, problems = {}, []
    for section in parser.sections():
        if section not in SECTIONS:
            problems.append(f"unknown section [{section}]")
            continue
        for key, text in parser.items(section):
            spec = _FIELDS.get(key)
            if spec is None or spec.metadata['section'] != section:
                problems.append(f"unknown key '{key}' in [{section}]")
                continue
            try:
                values[key] = _parse_value(key, text)
            except ValueError as e:
                problems.append(f"[{section}] {key}: {e}")
    if problems:
        raise ConfigurationError(problems)
    return RunConfig(**values)


def resolved_config_text(run_config: RunConfig, include_output_dir: bool = True) -> str:
    """Every key in INI form, defaults included, in declaration order"""
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for f in dataclasses.fields(RunConfig):
            if f.metadata['section'] != section:
                continue
            if f.name == 'output_dir' and not include_output_dir:
                continue
            lines.append(f"{f.name} = {_format_value(getattr(run_config, f.name))}")
        lines.append("")
    return "\n".join(lines)


def write_resolved_config(run_config: RunConfig, path: str, run_hash: Optional[str] = None) -> None:
    """Resolved INI file; with run_hash the first line is a `# config_hash:` comment"""
    with open(path, 'w', encoding='utf-8') as f:
        if run_hash is not None:
            f.write(f"# config_hash: {run_hash}\n")
        f.write(resolved_config_text(run_config))


def config_hash(run_config: RunConfig, data_fingerprint: str = "") -> str:
    """sha256 over the resolved configuration (output_dir excluded) and the data fingerprint"""
    return utils.hash_text(resolved_config_text(run_config, include_output_dir=False) + data_fingerprint)


def synthetic_train_size(run_config: RunConfig) -> Optional[int]:
    if run_config.synthetic is None:
        return None
    n = run_config.synthetic_n
    if run_config.test_dataset is not None:
        return n
    return n - max(1, int(round(run_config.test_fraction * n)))


def validate_config(run_config: RunConfig, n_rows: Optional[int] = None) -> List[str]:
    """Every violation in the configuration; an empty list means it is runnable"""
    cfg = run_config
    problems = []
    if cfg.model not in config.SUPPORTED_MODELS:
        problems.append(f"unknown model '{cfg.model}'")
    if cfg.sampler not in config.SUPPORTED_SAMPLERS:
        problems.append(f"unknown sampler '{cfg.sampler}'")
    elif cfg.model in config.COMPATIBILITY_MATRIX and cfg.sampler not in config.COMPATIBILITY_MATRIX[cfg.model]:
        problems.append(f"sampler '{cfg.sampler}' cannot run model '{cfg.model}' "
                        f"(compatible: {', '.join(config.COMPATIBILITY_MATRIX[cfg.model])})")
    if cfg.model == 'mixture_svm' and cfg.inner_sampler not in config.MIXTURE_INNER_SAMPLERS:
        problems.append(f"unknown mixture inner sampler '{cfg.inner_sampler}'")

    if cfg.dataset is None and cfg.synthetic is None:
        problems.append("no data source: set [data] dataset or [data] synthetic")
    if cfg.dataset is not None and cfg.synthetic is not None:
        problems.append("set only one of [data] dataset and [data] synthetic")
    if cfg.synthetic is not None:
        if cfg.synthetic not in config.SYNTHETIC_KINDS:
            problems.append(f"unknown synthetic data kind '{cfg.synthetic}'")
        if cfg.synthetic_n < 2:
            problems.append(f"synthetic_n={cfg.synthetic_n} must be >= 2")
        if cfg.synthetic == 'sparse' and not 0 <= cfg.synthetic_support <= cfg.synthetic_d:
            problems.append(f"synthetic_support={cfg.synthetic_support} must lie in [0, {cfg.synthetic_d}]")
        if n_rows is None:
            n_rows = synthetic_train_size(cfg)
    if not 0.0 < cfg.test_fraction < 1.0:
        problems.append(f"test_fraction={cfg.test_fraction} must lie in (0, 1)")

    if cfg.c < 0:
        problems.append(f"regularization constant c={cfg.c} must be >= 0")
    if not cfg.laplace_scale > 0:
        problems.append(f"Laplace scale λ={cfg.laplace_scale} must be > 0")
    if cfg.components < 1:
        problems.append(f"components={cfg.components} must be >= 1")
    if cfg.top_features < 1:
        problems.append(f"top_features={cfg.top_features} must be >= 1")

    if cfg.iterations < 1:
        problems.append(f"iterations={cfg.iterations} must be >= 1")
    if cfg.burn_in is not None and not 0 <= cfg.burn_in < cfg.iterations:
        problems.append(f"burn_in={cfg.burn_in} must lie in [0, iterations)")
    if cfg.checkpoint_every < 1:
        problems.append(f"checkpoint_every={cfg.checkpoint_every} must be >= 1")
    if cfg.chains < 1:
        problems.append(f"chains={cfg.chains} must be >= 1")

    thermostat = cfg.sampler == 'ssgnht' or (cfg.model == 'mixture_svm' and cfg.inner_sampler == 'ssgnht')
    problems.extend(cfg.sampler_config().validate(n_rows=n_rows, thermostat=thermostat))
    if cfg.mh_correction and cfg.batch_size is not None and n_rows is not None and cfg.batch_size < n_rows:
        problems.append("MH correction needs full-batch energies; unset batch_size or disable it")
    if cfg.sampler == 'da_gibbs' and cfg.synthetic == 'sparse' and cfg.synthetic_d > config.DENSE_FACTORIZATION_LIMIT:
        problems.append(f"data augmentation Gibbs is limited to d <= {config.DENSE_FACTORIZATION_LIMIT}")
    return problems


class ChainResult(NamedTuple):
    trace: pd.DataFrame
    accuracy: pd.DataFrame
    phase_seconds: Dict[str, float]
    acceptance_rate: Optional[float]
    posterior_mean: np.ndarray
    feature_ranking: Optional[object] = None


class RunResult(NamedTuple):
    run_dir: str
    summary: dict
    curves: Optional[List[pd.DataFrame]] = None


class SweepResult(NamedTuple):
    sweep_dir: str
    runs: Dict[int, RunResult]
    curves: pd.DataFrame


class ExperimentRunner:
    """Binds a RunConfig to data, a model and a sampler, and writes the run artifacts"""

    def __init__(self, run_config: RunConfig, verbose: bool = False):
        self.config = run_config
        self.verbose = verbose
        self.chain_runners = {
            ('linear_svm', 'hmc'): self._run_energy_chain,
            ('linear_svm', 'ssgld'): self._run_energy_chain,
            ('linear_svm', 'ssgnht'): self._run_energy_chain,
            ('linear_svm', 'srwm'): self._run_energy_chain,
            ('linear_svm', 'da_gibbs'): self._run_da_gibbs_chain,
            ('sparse_logistic', 'hmc'): self._run_energy_chain,
            ('sparse_logistic', 'ssgld'): self._run_energy_chain,
            ('sparse_logistic', 'ssgnht'): self._run_energy_chain,
            ('sparse_logistic', 'srwm'): self._run_energy_chain,
            ('mixture_svm', 'ds_hmc'): self._run_ds_hmc_chain,
            ('mixture_svm', 'hmc_gibbs'): self._run_hmc_gibbs_chain,
        }

    def load_data(self):
        """Training and test sets from a libsvm file pair or a synthetic generator"""
        cfg = self.config
        if cfg.synthetic == 'svm2d':
            data, _ = gen_synthetic_svm2d(cfg.synthetic_n, c=cfg.c, seed=cfg.seed)
        elif cfg.synthetic == 'sparse':
            data, _ = gen_synthetic_sparse(cfg.synthetic_n, cfg.synthetic_d, cfg.synthetic_support, seed=cfg.seed)
        else:
            data = read_libsvm(utils.resolve_data_path(cfg.dataset))
        if cfg.test_dataset is not None:
            test = read_libsvm(utils.resolve_data_path(cfg.test_dataset), expected_dim=data.d)
            return data, test
        return train_test_split(data, cfg.test_fraction, seed=cfg.seed)

    def run(self, data: Optional[Tuple[Dataset, Dataset]] = None) -> RunResult:
        """Run every chain; `data` is an already loaded (train, test) pair"""
        cfg = self.config
        problems = validate_config(cfg)
        if problems:
            raise ConfigurationError(problems)
        train, test = self.load_data() if data is None else data
        problems = validate_config(cfg, n_rows=train.n)
        if problems:
            raise ConfigurationError(problems)

        run_hash = config_hash(cfg, train.content_hash() + test.content_hash())
        run_dir = utils.create_run_directory(cfg.output_dir, run_hash)
        logger.info(f"Run {cfg.model}/{cfg.sampler} on {train.n} rows x {train.d} features -> {run_dir}")
        write_resolved_config(cfg, os.path.join(run_dir, 'resolved_config.ini'), run_hash)

        chain_runner = self.chain_runners[(cfg.model, cfg.sampler)]
        seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
        started = time.perf_counter()
        try:
            if cfg.chains == 1:
                results = [chain_runner(0, seeds[0], train, test)]
            else:
                results = Parallel(n_jobs=min(cfg.chains, os.cpu_count() or 1))(
                    delayed(chain_runner)(i, seeds[i], train, test) for i in range(cfg.chains))
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Linear algebra failed while sampling: {e}") from e
        elapsed = time.perf_counter() - started

        for i, result in enumerate(results):
            utils.write_csv_with_header(result.trace, utils.chain_filename(run_dir, 'trace', i, cfg.chains), run_hash)
            utils.write_csv_with_header(result.accuracy, utils.chain_filename(run_dir, 'accuracy', i, cfg.chains),
                                        run_hash)
            if result.feature_ranking is not None:
                write_feature_ranking(result.feature_ranking,
                                      utils.chain_filename(run_dir, 'feature_ranking', i, cfg.chains), run_hash)

        summary = self._summary(run_hash, results, elapsed, train, test)
        with open(os.path.join(run_dir, 'summary.json'), 'w', encoding='utf-8') as f:
            json.dump(summary, f, indent=2, sort_keys=True)
        logger.info(f"Final accuracy {summary['accuracy']:.4f} after {elapsed:.1f}s")
        return RunResult(run_dir, summary, [r.accuracy for r in results])

    def _summary(self, run_hash: str, results: List[ChainResult], elapsed: float, train: Dataset,
                 test: Dataset) -> dict:
        final = [float(r.accuracy['accuracy'].iloc[-1]) for r in results]
        phases = {}
        for r in results:
            for name, seconds in r.phase_seconds.items():
                phases[name] = phases.get(name, 0.0) + seconds
        rates = [r.acceptance_rate for r in results if r.acceptance_rate is not None]
        summary = {
            'config_hash': run_hash,
            'model': self.config.model,
            'sampler': self.config.sampler,
            'n_train': train.n,
            'n_test': test.n,
            'dim': train.d,
            'chains': self.config.chains,
            'n_samples': int(len(results[0].trace)),
            'accuracy': float(np.mean(final)),
            'chain_accuracy': final,
            'training_time_seconds': elapsed,
            'phase_seconds': phases,
            'acceptance_rate': float(np.mean(rates)) if rates else None,
        }
        if results[0].feature_ranking is not None:
            summary['top_features'] = results[0].feature_ranking.indices
        return summary

    def _sample(self, draw, chain: int) -> Trace:
        """Run `draw(iteration)` for every iteration, collecting what it returns"""
        cfg = self.config
        trace = None
        iterations = tqdm(range(1, cfg.iterations + 1), desc=f"chain {chain}", disable=not self.verbose)
        for it in iterations:
            theta = draw(it)
            if trace is None:
                trace = Trace(theta.size)
            trace.append(theta, it)
        if cfg.burn_in is not None:
            trace.set_burn_in(cfg.burn_in)
        return trace

    def _finish(self, trace: Trace, test: Dataset, predictor, sampling_seconds: float,
                acceptance=None, phases=None, columns=None, ranking=False) -> ChainResult:
        started = time.perf_counter()
        curve = accuracy_curve(trace, test, predictor, every=self.config.checkpoint_every)
        phase_seconds = dict(phases) if phases else {'sampling': sampling_seconds}
        phase_seconds['evaluation'] = time.perf_counter() - started
        post = trace.post_burn_in()
        feature_ranking = None
        if ranking:
            feature_ranking = feature_rank(post, k=min(self.config.top_features, trace.dim))
        return ChainResult(trace.to_frame(columns, include_burn_in=False), curve, phase_seconds, acceptance,
                           post.mean(axis=0), feature_ranking)

    def _build_energy_model(self, d: int):
        if self.config.model == 'sparse_logistic':
            return SparseLogisticModel(d, self.config.laplace_scale)
        return LinearSVMModel(d, self.config.c)

    def _run_energy_chain(self, chain: int, seed, train: Dataset, test: Dataset) -> ChainResult:
        cfg = self.config
        rng = np.random.default_rng(seed)
        model = self._build_energy_model(train.d)
        sampler_config = cfg.sampler_config()
        step = CHAIN_STEPS[cfg.sampler]
        state = init_chain_state(np.zeros(model.dim), sampler_config, rng, thermostat=cfg.sampler == 'ssgnht')

        def draw(_):
            nonlocal state
            state = step(model, state, sampler_config, train, rng)
            return state.theta

        started = time.perf_counter()
        trace = self._sample(draw, chain)
        sampling = time.perf_counter() - started
        acceptance = acceptance_rate(state) if state.n_proposed else None
        return self._finish(trace, test, predict, sampling, acceptance,
                            ranking=cfg.model == 'sparse_logistic')

    def _run_da_gibbs_chain(self, chain: int, seed, train: Dataset, test: Dataset) -> ChainResult:
        rng = np.random.default_rng(seed)
        state = init_augmented_state(train)

        def draw(_):
            nonlocal state
            state = da_gibbs_step(state, train, self.config.c, rng)
            return state.eta

        started = time.perf_counter()
        trace = self._sample(draw, chain)
        return self._finish(trace, test, predict, time.perf_counter() - started)

    @staticmethod
    def _mixture_columns(K: int, d: int) -> List[str]:
        columns = [f"eta_{k}_{j}" for k in range(K) for j in range(d)]
        columns += [f"mu_{k}_{j}" for k in range(K) for j in range(d)]
        columns += [f"L_{k}_{i}_{j}" for k in range(K) for i in range(d) for j in range(d)]
        return columns

    def _mixture_predictor(self, model: MixtureSVMModel):
        return lambda theta, X: mixture_predict(model.unpack(model.project(theta)), X)

    def _run_ds_hmc_chain(self, chain: int, seed, train: Dataset, test: Dataset) -> ChainResult:
        cfg = self.config
        rng = np.random.default_rng(seed)
        params = init_mixture_params(train, cfg.components, rng)
        model = MixtureSVMModel(train.d, cfg.components, cfg.c)
        sampler_config = cfg.sampler_config()
        state = init_chain_state(model.pack(params), sampler_config, rng, thermostat=cfg.inner_sampler == 'ssgnht')

        def draw(_):
            nonlocal state
            state = doubly_stochastic_hmc_round(model, state, sampler_config, train, rng, inner=cfg.inner_sampler)
            return state.theta

        started = time.perf_counter()
        trace = self._sample(draw, chain)
        sampling = time.perf_counter() - started
        return self._finish(trace, test, self._mixture_predictor(model), sampling,
                            columns=self._mixture_columns(cfg.components, train.d))

    def _run_hmc_gibbs_chain(self, chain: int, seed, train: Dataset, test: Dataset) -> ChainResult:
        cfg = self.config
        rng = np.random.default_rng(seed)
        params = init_mixture_params(train, cfg.components, rng)
        model = MixtureSVMModel(train.d, cfg.components, cfg.c)
        sampler_config = cfg.sampler_config()
        state = init_within_gibbs(params, rng, thermostat=cfg.inner_sampler == 'ssgnht', diffusion=cfg.diffusion)

        def draw(_):
            nonlocal state
            state = hmc_within_gibbs_round(state, sampler_config, train, rng, cfg.c, inner=cfg.inner_sampler)
            return model.pack(state.params)

        started = time.perf_counter()
        trace = self._sample(draw, chain)
        sampling = time.perf_counter() - started
        logger.info(f"Chain {chain} phase seconds: " +
                    ", ".join(f"{k}={v:.2f}" for k, v in state.timings.items()))
        return self._finish(trace, test, self._mixture_predictor(model), sampling, phases=state.timings,
                            columns=self._mixture_columns(cfg.components, train.d))


def run_experiment(run_config: RunConfig, verbose: bool = False) -> RunResult:
    """Validate, run every chain and write the artifacts into a fresh run directory"""
    return ExperimentRunner(run_config, verbose).run()


def validate_sweep(run_config: RunConfig, batch_sizes: Sequence[int], n_rows: Optional[int] = None) -> List[str]:
    """Every violation of a batch-size sweep, prefixed with the batch size it concerns"""
    problems = []
    if len(batch_sizes) == 0:
        problems.append("batch-size sweep needs at least one batch size")
    if len(set(batch_sizes)) != len(batch_sizes):
        problems.append("batch sizes in a sweep must be distinct")
    if run_config.sampler in config.FULL_DATA_SAMPLERS:
        problems.append(f"sampler '{run_config.sampler}' always uses the full dataset; nothing to sweep")
    if n_rows is None:
        n_rows = synthetic_train_size(run_config)
    for size in batch_sizes:
        for problem in validate_config(dataclasses.replace(run_config, batch_size=size), n_rows=n_rows):
            problems.append(f"batch_size={size}: {problem}")
    return problems


def run_batch_size_sweep(run_config: RunConfig, batch_sizes: Sequence[int] = tuple(config.DEFAULT_SWEEP_BATCH_SIZES),
                         verbose: bool = False) -> SweepResult:
    """One run per minibatch size on the same data, seed and schedule.

    Writes a `sweep-<hash12>` directory holding one run directory per batch
    size, `batch_sweep.csv` (every accuracy curve, keyed by batch_size and
    chain) and `sweep.json`.
    """
    batch_sizes = [int(b) for b in batch_sizes]
    problems = validate_sweep(run_config, batch_sizes)
    if problems:
        raise ConfigurationError(problems)
    train, test = ExperimentRunner(run_config, verbose).load_data()
    problems = validate_sweep(run_config, batch_sizes, n_rows=train.n)
    if problems:
        raise ConfigurationError(problems)

    base = dataclasses.replace(run_config, batch_size=None)
    sweep_hash = config_hash(base, train.content_hash() + test.content_hash() +
                             "batch_sizes=" + ",".join(str(b) for b in batch_sizes))
    sweep_dir = utils.create_run_directory(run_config.output_dir, sweep_hash, prefix='sweep')
    logger.info(f"Batch-size sweep over {batch_sizes} with {run_config.sampler} -> {sweep_dir}")

    runs, frames = {}, []
    for size in batch_sizes:
        sized = dataclasses.replace(run_config, batch_size=size, output_dir=sweep_dir)
        result = ExperimentRunner(sized, verbose).run(data=(train, test))
        runs[size] = result
        for chain, curve in enumerate(result.curves):
            frames.append(curve.assign(batch_size=size, chain=chain))
        logger.info(f"✓ batch_size={size}: accuracy {result.summary['accuracy']:.4f} "
                    f"in {result.summary['training_time_seconds']:.1f}s")

    curves = pd.concat(frames, ignore_index=True)[['batch_size', 'chain', 'iteration', 'wall_ms', 'accuracy']]
    utils.write_csv_with_header(curves, os.path.join(sweep_dir, 'batch_sweep.csv'), sweep_hash)
    summary = {
        'config_hash': sweep_hash,
        'sampler': run_config.sampler,
        'batch_sizes': batch_sizes,
        'runs': {str(size): {'run_dir': os.path.basename(r.run_dir),
                             'config_hash': r.summary['config_hash'],
                             'accuracy': r.summary['accuracy'],
                             'training_time_seconds': r.summary['training_time_seconds']}
                 for size, r in runs.items()},
    }
    with open(os.path.join(sweep_dir, 'sweep.json'), 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    return SweepResult(sweep_dir, runs, curves)
