"""Global test fixtures and configuration."""

import json
import os
import sys

import numpy as np
import pytest

# Set test environment
os.environ["ENV"] = "test"
os.environ.setdefault("LOG_LEVEL", "warning")
os.environ.setdefault("DEIG_SAVE_LOGS", "false")
os.environ.pop("DEIG_SEED", None)

# Add the project root to the Python path to allow imports to work correctly
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from deig.config.constants import CONFIGS_PATH  # noqa: E402
from deig.config.settings import RunConfig, build_config  # noqa: E402
from deig.core.condition import BoundingBox, GenerationCondition  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="Run desk-scale experiments")


# Add pytest marks for test categorization
def pytest_configure(config):
    """Configure custom pytest markers."""
    config.addinivalue_line("markers", "unit: mark a test as a unit test")
    config.addinivalue_line("markers", "integration: mark a test as an integration test")
    config.addinivalue_line("markers", "e2e: mark a test as an end-to-end test")
    config.addinivalue_line("markers", "kernel: tensor kernel tests")
    config.addinivalue_line("markers", "model: ide, dfm and diffusion model tests")
    config.addinivalue_line("markers", "service: service layer tests")
    config.addinivalue_line("markers", "slow: desk-scale experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_config_path():
    return CONFIGS_PATH / "tiny.json"


@pytest.fixture
def tiny_config(tiny_config_path, tmp_path) -> RunConfig:
    """configs/tiny.json with its output directory moved under tmp_path."""
    data = json.loads(tiny_config_path.read_text())
    data["output_dir"] = str(tmp_path / "out")
    return build_config(data)


@pytest.fixture
def two_box_condition() -> GenerationCondition:
    """Left and right halves of the canvas with distinct captions."""
    return GenerationCondition.build(
        "a red cup, a blue vase",
        [
            (BoundingBox(0.0, 0.0, 0.5, 1.0), "a red cup"),
            (BoundingBox(0.5, 0.0, 1.0, 1.0), "a blue vase"),
        ],
    )
