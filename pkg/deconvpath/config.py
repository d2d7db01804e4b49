"""Configuration utilities for deconvpath."""
import os
import json
import copy
import appdirs

from deconvpath.errors import UsageError

CONFIG_PATH = os.path.join(appdirs.user_config_dir("deconvpath"), "config.json")

DEFAULT_CONFIG = {
    "bins": 250,
    "order": 1,
    "penalty": "l2",
    "tau_grid": [1e-3, 1e7, 50],
    "split_frac": 0.75,
    "solver": {
        "max_outer_iters": 500,
        "grad_tol": 1e-8,
        "primal_tol": 1e-6,
        "dual_tol": 1e-6,
        "rel_tol": 1e-4,
        "rho": None,
        "rho_floor": 1e-8,
        "rho_ceiling": None,
        "bfgs_max_iters": 200,
        "reseed_every": 10,
        "wolfe_c1": 1e-4,
        "wolfe_c2": 0.9,
    },
}


def config_path():
    """Return the config file location; DECONV_CONFIG wins over the user config dir."""
    return os.environ.get("DECONV_CONFIG") or CONFIG_PATH


def _merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path=None):
    """Load the user's JSON config merged over DEFAULT_CONFIG.

    A missing file is not an error: the defaults are returned unchanged.
    """
    path = path or config_path()
    if not os.path.exists(path):
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            user_config = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config file '{path}': {e}") from e
    if not isinstance(user_config, dict):
        raise UsageError(f"config file '{path}' must contain a JSON object")
    unknown = set(user_config.get("solver", {})) - set(DEFAULT_CONFIG["solver"])
    if unknown:
        raise UsageError(f"unknown solver keys in config: {', '.join(sorted(unknown))}")
    return _merge(DEFAULT_CONFIG, user_config)


def solver_config(config=None):
    """Build a validated SolverConfig from the ``solver`` section of a config dict."""
    from deconvpath.solvers import SolverConfig

    config = config if config is not None else load_config()
    return SolverConfig(**config["solver"])
