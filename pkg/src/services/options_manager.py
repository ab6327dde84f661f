import os
import pathlib
from typing import Any

DATA_DIR_VARIABLE = "TGP_DATA_DIR"

DEFAULT_OPTIONS = {
    "data_dir": "datasets",
    "out_dir": "runs",
    "seed": 0,
    "quiet": False,
}

# Recipe sections, every key a recipe may set with its default
DEFAULT_DATA = {
    "kind": "",
    "path": "",
    "locations": "",
    "split": "u1",
    "covariates": "",
    "target": "",
    "transforms": "",
    "delimiter": ",",
    "train_ratio": 0.5,
    "train_size": 0,
    "subsample": 0,
    "grid": "",
}
DEFAULT_MODEL = {
    "rank": 5,
    "noise_var": 1.0,
    "prior_u_var": None,
    "prior_w_var": 1.0,
    "learn_w": True,
    "full_rank": False,
}
DEFAULT_SGD = {
    "step_u": 1e-6,
    "step_w": 1e-6,
    "minibatch": 100,
    "epochs": 10,
    "eval_every": 1,
    "decay": 0.0,
}
DEFAULT_HMC = {
    "leapfrog_steps": 10,
    "step_w": 1e-3,
    "step_u": None,
    "iterations": 600,
    "warmup": 300,
    "chains": 4,
    "adapt": False,
    "target_accept": 0.65,
    "workers": 1,
    "trace_every": 10,
}
DEFAULT_CF = {
    "variants": "",
    "use_side": False,
    "a": 1.0,
    "b": 0.0,
    "c": 0.0,
    "center": True,
    "clip": False,
    "tune": False,
    "shared": False,
    "workers": 1,
}
DEFAULT_OUTPUT = {
    "directory": "",
    "formats": "csv,pgm",
}
SECTION_DEFAULTS = {
    "data": DEFAULT_DATA,
    "model": DEFAULT_MODEL,
    "sgd": DEFAULT_SGD,
    "hmc": DEFAULT_HMC,
    "cf": DEFAULT_CF,
    "output": DEFAULT_OUTPUT,
}


def load_options() -> dict[str, Any]:
    """
    Load the runtime options: the defaults, with the data directory taken from
    the TGP_DATA_DIR environment variable when it is set.

    Returns:
    Dictionary containing options
    """
    loaded = dict(DEFAULT_OPTIONS)
    if os.environ.get(DATA_DIR_VARIABLE):
        loaded["data_dir"] = os.environ[DATA_DIR_VARIABLE]
    return loaded


options = load_options()


def get_option(option_name: str):
    """
    Get the value of a specific option.

    Arguments:
    option_name -- Name of the option to retrieve

    Returns:
    Value of the specified option
    """
    return options[option_name]


def set_option(option_name: str, value: Any) -> None:
    """
    Set the value of a specific option.

    Arguments:
    option_name -- Name of the option to set
    value -- New value for the option
    """
    options[option_name] = value


def data_path(path: str | os.PathLike) -> pathlib.Path:
    """
    Resolve a dataset path: absolute paths are kept, relative ones are read under the data directory.
    """
    path = pathlib.Path(path)
    if path.is_absolute():
        return path
    return pathlib.Path(get_option("data_dir")) / path
