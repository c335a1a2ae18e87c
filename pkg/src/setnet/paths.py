"""
Global path definitions.

Resolution is as follows:
1. Load from environment variables if defined (a .env file in the working directory or
   above is loaded into the environment first, existing variables win)
2. Use the defaults defined here

Usage in python:
    print(get_data_dir())

Usage in a .env file:
    SETNET_DATA_DIR=/data/datasets
    SETNET_OUTPUT_DIR=/data/setnet_runs
"""

import os
from pathlib import Path

from dotenv import find_dotenv, load_dotenv

from setnet.consts import Const


class EnvKeys(Const):
    SETNET_DATA_DIR = "SETNET_DATA_DIR"
    SETNET_OUTPUT_DIR = "SETNET_OUTPUT_DIR"
    SETNET_CACHE_DIR = "SETNET_CACHE_DIR"


ENV_DEFAULTS = {
    EnvKeys.SETNET_DATA_DIR: "data",  # datasets base directory, relative dir 'data' by default
    EnvKeys.SETNET_OUTPUT_DIR: "outputs",
    EnvKeys.SETNET_CACHE_DIR: (Path.home() / ".cache" / "setnet").as_posix(),
}

_dotenv_loaded = False


def _load_dotenv_once() -> None:
    global _dotenv_loaded  # pylint: disable=global-statement
    if not _dotenv_loaded:
        load_dotenv(find_dotenv(usecwd=True), override=False)
        _dotenv_loaded = True


def get_data_dir() -> Path:
    return get_path_from_env(EnvKeys.SETNET_DATA_DIR)


def get_output_dir() -> Path:
    return get_path_from_env(EnvKeys.SETNET_OUTPUT_DIR)


def get_cache_dir() -> Path:
    return get_path_from_env(EnvKeys.SETNET_CACHE_DIR)


def get_path_from_env(env_k: str) -> Path:
    return Path(get_from_environ(env_k))


def get_from_environ(env_k: str, use_default: bool = True) -> str:
    _load_dotenv_once()
    value = os.environ.get(env_k)
    if value is not None:
        return value
    if not use_default:
        raise ValueError(f"Environment variable {env_k} is undefined")
    value = ENV_DEFAULTS.get(env_k)
    if value is not None:
        return value
    raise ValueError(
        f"Environment variable {env_k} is undefined and does not have a default value set. "
        f"Default values exist for: {tuple(ENV_DEFAULTS.keys())}"
    )


def resolve_data_path(path: str) -> Path:
    """Absolute paths are kept, relative paths are taken relative to the data dir."""
    path = Path(path)
    if path.is_absolute():
        return path
    return get_data_dir() / path


def resolve_output_path(path: str) -> Path:
    """Absolute paths are kept, relative paths are taken relative to the output dir."""
    path = Path(path)
    if path.is_absolute():
        return path
    return get_output_dir() / path


def print_all_environment_variables(print_fn=print) -> None:
    print_fn("Path definitions:")
    for env_k in EnvKeys.values():
        print_fn(f"    {env_k}={get_from_environ(env_k)}")
