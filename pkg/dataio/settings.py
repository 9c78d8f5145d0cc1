# dataio/settings.py
"""
Runtime settings for the HBC gym pipeline.

This module exposes a handful of getters:

    get_threads(), get_data_dir(), get_out_dir(), get_seed()

They read the project's .env file, which is expected to be located in the
project root (one level above this 'dataio' package). Command-line flags
override whatever is found here.
"""

import os
from pathlib import Path

from dotenv import load_dotenv


# --- Load environment variables ------------------------------------------------

# Try to load .env from the project root (../.env relative to this file)
PROJECT_ROOT = Path(__file__).resolve().parents[1]
ENV_PATH = PROJECT_ROOT / ".env"

if ENV_PATH.exists():
    load_dotenv(ENV_PATH)
else:
    # Fallback: load from current working directory if .env is there
    load_dotenv()


# --- Internal helpers ----------------------------------------------------------


def _int_env(name: str, default: int, minimum: int | None = None) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"Environment variable {name}={raw!r} is not an integer.") from exc
    if minimum is not None and value < minimum:
        raise ValueError(f"Environment variable {name}={value} must be >= {minimum}.")
    return value


# --- Public API ----------------------------------------------------------------


def get_threads() -> int:
    """Parallelism cap (WS_THREADS). Used for fold workers, torch threads and grid search."""
    return _int_env("WS_THREADS", 1, minimum=1)


def get_data_dir() -> Path:
    return Path(os.getenv("HBCGYM_DATA", "data/synthetic"))


def get_out_dir() -> Path:
    return Path(os.getenv("HBCGYM_OUT", "results"))


def get_seed() -> int:
    return _int_env("HBCGYM_SEED", 0, minimum=0)
