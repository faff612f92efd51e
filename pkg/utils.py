"""
Utility functions for the Subgradient MCMC application
"""

import hashlib
import logging
import os
from typing import Optional

import config


def setup_logging(log_file: Optional[str] = None):
    """Setup logging configuration"""
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL),
        format=config.LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_file or config.LOG_FILE),
            logging.StreamHandler()
        ]
    )


def resolve_data_path(path: str) -> str:
    """Resolve a dataset path against the dataset root environment variable"""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    root = os.environ.get(config.DATA_ROOT_ENV)
    if root:
        return os.path.join(root, path)
    return path


def create_output_directory(output_dir: str = None) -> str:
    """Create output directory if it doesn't exist"""
    if output_dir is None:
        output_dir = config.DEFAULT_OUTPUT_DIR

    os.makedirs(output_dir, exist_ok=True)
    return output_dir


def create_run_directory(output_dir: str, config_hash: str, prefix: str = 'run') -> str:
    """Create a fresh run directory named after the config hash; never reuses one"""
    create_output_directory(output_dir)
    base_name = f"{prefix}-{config_hash[:12]}"
    run_dir = os.path.join(output_dir, base_name)
    suffix = 2
    while os.path.exists(run_dir):
        run_dir = os.path.join(output_dir, f"{base_name}-{suffix}")
        suffix += 1
    os.makedirs(run_dir)
    return run_dir


def chain_filename(run_dir: str, stem: str, chain: int, n_chains: int) -> str:
    """<stem>.csv for a single chain, <stem>_chain<i>.csv otherwise"""
    if n_chains == 1:
        return os.path.join(run_dir, f"{stem}.csv")
    return os.path.join(run_dir, f"{stem}_chain{chain}.csv")


def hash_text(text: str) -> str:
    """sha256 hex digest of a text blob"""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def write_csv_with_header(frame, path: str, config_hash: str, float_format: str = '%.17g'):
    """Write a DataFrame to CSV, preceded by a config-hash comment line"""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# config_hash: {config_hash}\n")
        frame.to_csv(f, index=False, float_format=float_format)
