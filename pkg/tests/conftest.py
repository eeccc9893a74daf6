"""Session-wide fixtures.

Every test session gets a throwaway propagator cache directory so tests
never read or pollute the user's real store, and repeated runs inside one
session still exercise the hit path.
"""

import os
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session", autouse=True)
def session_cache_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("propagator-cache")
    old = os.environ.get("SBPROP_CACHE_DIR")
    os.environ["SBPROP_CACHE_DIR"] = str(root)
    yield root
    if old is None:
        os.environ.pop("SBPROP_CACHE_DIR", None)
    else:
        os.environ["SBPROP_CACHE_DIR"] = old


@pytest.fixture(scope="session")
def config_dir() -> Path:
    assert CONFIG_DIR.is_dir(), f"missing {CONFIG_DIR}"
    return CONFIG_DIR
