"""Shared pytest configuration."""

import os

import pytest

SLOW_ENV = "SECN_SLOW_TESTS"


def pytest_configure(config):
    config.addinivalue_line("markers", f"slow: full-size training runs; set {SLOW_ENV}=1 to enable")


def pytest_collection_modifyitems(config, items):
    if os.getenv(SLOW_ENV):
        return
    skip_slow = pytest.mark.skip(reason=f"slow; set {SLOW_ENV}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
