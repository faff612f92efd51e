#!/usr/bin/env python3
"""
Command Line Interface for the Subgradient MCMC experiment runner
"""

import argparse
import dataclasses
import logging
import sys

import numpy as np

import config
import utils
from errors import ConfigurationError, SamplerError
from experiment_core import (load_run_config, run_batch_size_sweep, run_experiment, synthetic_train_size,
                             validate_config)


def setup_cli_logging(verbose=False):
    """Setup logging for CLI"""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(levelname)s: %(message)s',
        handlers=[logging.StreamHandler()]
    )


def list_models():
    """List models and the samplers that can drive them"""
    print("Models and compatible samplers:")
    for model, description in config.SUPPORTED_MODELS.items():
        print(f"  {model}: {description}")
        for sampler in config.COMPATIBILITY_MATRIX[model]:
            print(f"    - {sampler}: {config.SUPPORTED_SAMPLERS[sampler]}")


def _apply_overrides(run_config, args):
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.chains is not None:
        overrides['chains'] = args.chains
    if args.output_dir is not None:
        overrides['output_dir'] = args.output_dir
    return dataclasses.replace(run_config, **overrides)


def validate_command(config_path, args):
    """Report every problem in a run configuration"""
    logger = logging.getLogger(__name__)
    run_config = _apply_overrides(load_run_config(config_path), args)
    problems = validate_config(run_config, n_rows=synthetic_train_size(run_config))
    if problems:
        for problem in problems:
            logger.error(f"✗ {problem}")
        return config.EXIT_CONFIG_ERROR
    logger.info(f"✓ {config_path} is valid ({run_config.model} with {run_config.sampler})")
    return config.EXIT_OK


def run_command(config_path, args):
    """Run one experiment and report where its artifacts went"""
    logger = logging.getLogger(__name__)
    run_config = _apply_overrides(load_run_config(config_path), args)
    logger.info(f"Running {run_config.model} with {run_config.sampler} "
                f"({run_config.iterations} iterations, {run_config.chains} chain(s), seed {run_config.seed})")
    result = run_experiment(run_config, verbose=args.verbose)
    logger.info("✓ Run completed successfully!")
    logger.info(f"Artifacts saved to: {result.run_dir}")
    logger.info(f"Test accuracy: {result.summary['accuracy']:.4f}")
    return config.EXIT_OK


def parse_batch_sizes(text):
    """Comma-separated positive integers, e.g. 10,100,1000"""
    try:
        sizes = [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: '{text}'")
    if not sizes or any(size < 1 for size in sizes):
        raise argparse.ArgumentTypeError(f"batch sizes must be positive integers: '{text}'")
    return sizes


def sweep_command(config_path, args):
    """Repeat one experiment for several minibatch sizes"""
    logger = logging.getLogger(__name__)
    run_config = _apply_overrides(load_run_config(config_path), args)
    result = run_batch_size_sweep(run_config, args.batch_sizes, verbose=args.verbose)
    logger.info("✓ Sweep completed successfully!")
    for size, run in result.runs.items():
        logger.info(f"  batch_size={size}: test accuracy {run.summary['accuracy']:.4f}")
    logger.info(f"Artifacts saved to: {result.sweep_dir}")
    return config.EXIT_OK


def main(argv=None):
    """Main CLI function"""
    parser = argparse.ArgumentParser(
        description="Subgradient MCMC - Bayesian SVMs and sparse models with stochastic subgradient samplers",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s run experiment.ini                      # Run the configured experiment
  %(prog)s run experiment.ini --seed 7 --chains 4  # Four seeded chains in parallel
  %(prog)s validate experiment.ini                 # List every problem in a config
  %(prog)s sweep experiment.ini --batch-sizes 10,100,1000  # One run per minibatch size
  %(prog)s --list-models                           # Models and compatible samplers

Relative dataset paths are resolved against $%(env)s.
        """ % {'prog': 'cli_sampler.py', 'env': config.DATA_ROOT_ENV}
    )

    parser.add_argument('command', nargs='?', choices=['run', 'validate', 'sweep'], help='Action to perform')
    parser.add_argument('config', nargs='?', help='Run configuration file (INI)')
    parser.add_argument('--seed', type=int, help='Override the configured seed')
    parser.add_argument('--chains', type=int, help='Number of independent seeded chains')
    parser.add_argument('--batch-sizes', type=parse_batch_sizes, default=list(config.DEFAULT_SWEEP_BATCH_SIZES),
                        help='Minibatch sizes for the sweep command (default: 10,100,1000)')
    parser.add_argument('--output-dir', help='Directory that receives the run directory')
    parser.add_argument('--log-file', help='Also write the log to this file')
    parser.add_argument('-v', '--verbose', action='store_true', help='Verbose output with progress bars')
    parser.add_argument('--list-models', action='store_true', help='List models and samplers')
    parser.add_argument('--version', action='version', version=f'%(prog)s {config.APP_VERSION}')

    args = parser.parse_args(argv)

    if args.list_models:
        list_models()
        return config.EXIT_OK

    if not args.command or not args.config:
        parser.error("A command (run, validate or sweep) and a configuration file are required")

    if args.log_file:
        utils.setup_logging(args.log_file)
    else:
        setup_cli_logging(args.verbose)
    logger = logging.getLogger(__name__)

    try:
        if args.command == 'validate':
            return validate_command(args.config, args)
        if args.command == 'sweep':
            return sweep_command(args.config, args)
        return run_command(args.config, args)

    except ConfigurationError as e:
        for problem in e.problems:
            logger.error(f"Configuration error: {problem}")
        return config.EXIT_CONFIG_ERROR
    except KeyboardInterrupt:
        print("\nRun interrupted by user")
        return config.EXIT_RUNTIME_ERROR
    except (SamplerError, OSError, np.linalg.LinAlgError, ArithmeticError) as e:
        logger.error(f"✗ Run failed: {e}")
        return config.EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
