"""Neural Bloom Filters and classical approximate membership baselines."""

import json

from ._core import (
    BloomFilter,
    ConfigError,
    CuckooFilter,
    DataError,
    Error,
    Model,
    __version__,
    analytical_fpr,
    bloom_size_for,
    config_hash,
    cuckoo_size_for,
    default_config_json,
    load_checkpoint,
    optimal_space_bound,
)
from ._core import make_model as _make_model
from ._core import run_command as _run_command


def default_config():
    """The full run configuration with every default filled in."""
    return json.loads(default_config_json())


def make_model(config=None, seed=0):
    """Builds an untrained model from a model config dict (or JSON text)."""
    if config is None:
        config = {}
    if not isinstance(config, str):
        config = json.dumps(config)
    return _make_model(config, seed)


def run(command, config=None, out=None, overrides=(), seed=None, workers=1):
    """Runs a CLI command in-process; returns (exit_code, stdout, stderr)."""
    return _run_command(command, config or "", out or "", list(overrides), seed, workers)


__all__ = [
    "BloomFilter",
    "ConfigError",
    "CuckooFilter",
    "DataError",
    "Error",
    "Model",
    "__version__",
    "analytical_fpr",
    "bloom_size_for",
    "config_hash",
    "cuckoo_size_for",
    "default_config",
    "load_checkpoint",
    "make_model",
    "optimal_space_bound",
    "run",
]
