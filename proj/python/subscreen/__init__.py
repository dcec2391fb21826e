"""Source screening for shared subspace learning.

Thin wrappers over the compiled core. Configs are plain dicts with the same
fields as the JSON config files; absent fields take their defaults.
"""

import json

from . import _core
from ._core import (
    ConfigError,
    DomainError,
    RateInputs,
    Unsupported,
    ValidationError,
    column_norm,
    diversity_matrix,
    genie_balanced_upper,
    gram_condition_number,
    grothendieck_factorize,
    inf_to_one_norm,
    principal_angle_distance,
    sota_lower_general,
    sota_upper_general,
    spectral_norm,
    stable_rank,
    theoretical_c,
    well_represented,
)

__all__ = [
    "ConfigError", "DomainError", "RateInputs", "Unsupported", "ValidationError",
    "column_norm", "default_config", "diversity_matrix", "empirical_search", "estimate",
    "genie_balanced_upper", "genie_search", "gram_condition_number", "grothendieck_factorize",
    "inf_to_one_norm", "is_admissible", "principal_angle_distance", "run_experiment",
    "sample_population", "sota_lower_general", "sota_upper_general", "spectral_norm",
    "stable_rank", "theoretical_c", "well_represented",
]


def _dump(cfg):
    return "" if cfg is None else json.dumps(cfg)


def default_config():
    return json.loads(_core.default_config())


def sample_population(config=None):
    pop = _core.sample_population(_dump(config))
    pop["config"] = json.loads(pop["config"])
    return pop


def estimate(kind, covariates, responses, k):
    """Returns (basis, spectrum) for kind in {"split_averaging", "mom"}."""
    return _core.estimate(kind, covariates, responses, k)


def genie_search(heads, seed=0, config=None):
    return json.loads(_core.genie_search(heads, seed, _dump(config)))


def empirical_search(covariates, responses, k, seed=0, config=None):
    return json.loads(_core.empirical_search(covariates, responses, k, seed, _dump(config)))


def is_admissible(selected, heads, config=None):
    """Returns (admissible, kappa, size_floor)."""
    return _core.is_admissible(list(selected), heads, _dump(config))


def run_experiment(config=None, workers=1, seed_offset=0):
    """List of per-record dicts, one per (sweep point, seed, method, estimator)."""
    return json.loads(_core.run_experiment(_dump(config), workers, seed_offset))
