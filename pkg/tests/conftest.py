import os
import sys

import pytest
from loguru import logger

# Allow running the tests without installing the package
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sqglab.corpus import make_rng, single_mode  # noqa: E402
from sqglab.dyadic import build_family  # noqa: E402
from sqglab.spectral import Grid, forward  # noqa: E402


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid32():
    return Grid(32)


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def fam32(grid32):
    return build_family(grid32)


@pytest.fixture
def fam64(grid64):
    return build_family(grid64)


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def sin_y(grid32):
    """theta = sin(y)."""
    return forward(single_mode(grid32, (0, 1)))


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    d = tmp_path / "out"
    monkeypatch.setenv("SQGLAB_OUT_DIR", str(d))
    return d


@pytest.fixture
def log_records():
    """Loguru records emitted while the test runs."""
    records = []
    handler = logger.add(lambda message: records.append(message.record), level="DEBUG")
    yield records
    logger.remove(handler)
