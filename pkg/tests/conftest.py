"""Shared pytest configuration, markers and fixtures."""

import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow", action="store_true", default=False, help="run timing and large-bank tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: timing-sensitive or large test (requires --run-slow)")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--run-slow"):
        skip_slow = pytest.mark.skip(reason="need --run-slow option to run")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip_slow)


def random_spd(n: int, seed: int = 0) -> np.ndarray:
    """G^T G + I for a random G; condition number stays moderate."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n)) / np.sqrt(n)
    return G.T @ G + np.eye(n)


def assert_close(actual, expected, rtol=1e-8):
    """Elementwise rtol with an absolute floor scaled to the largest entry."""
    expected = np.asarray(expected)
    scale = float(np.abs(expected).max()) if expected.size else 0.0
    np.testing.assert_allclose(actual, expected, rtol=rtol, atol=rtol * scale)
