"""Shared fixtures for timebin-ghz tests."""

from pathlib import Path

import numpy as np
import pytest

from timebin_ghz.channels import ScenarioConfig, get_preset

DATA_DIR = Path(__file__).parent / "data"


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="Run Monte Carlo tests at full shot counts",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a freshly seeded generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def ideal() -> ScenarioConfig:
    """Every error source switched off."""
    return get_preset("ideal")


@pytest.fixture
def inas_current() -> ScenarioConfig:
    """Current InAs device parameters."""
    return get_preset("inas-current")


@pytest.fixture
def loss_budget_file() -> Path:
    """Path to the twelve-stage loss budget used as a golden input."""
    return DATA_DIR / "loss_budget.csv"
