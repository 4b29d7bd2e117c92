"""Python access to the null-space continual learning core."""

import json

from ._adns import (
    ConfigError,
    Error,
    acc,
    alpha_at,
    bwt,
    extract_null_space,
    la,
    merge_random,
    merge_shared_low_rank,
    normalize_config,
    project_gradient,
    quadratic_testbed,
    rank_k_truncate,
    sym_eig,
    thin_svd,
)
from ._adns import run_config as _run_config
from ._adns import standard_suite_config as _standard_suite_config


def run(config):
    """Train every seed of `config` (a dict or JSON text); returns the list of run records."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_run_config(text))["runs"]


def standard_suite_config():
    """The benchmark used by the direction and trend checks, as a dict."""
    return json.loads(_standard_suite_config())


__all__ = [
    "ConfigError",
    "Error",
    "acc",
    "alpha_at",
    "bwt",
    "extract_null_space",
    "la",
    "merge_random",
    "merge_shared_low_rank",
    "normalize_config",
    "project_gradient",
    "quadratic_testbed",
    "rank_k_truncate",
    "run",
    "standard_suite_config",
    "sym_eig",
    "thin_svd",
]
