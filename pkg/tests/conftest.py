"""Shared fixtures: bundled data paths, the shipped registry, demo loaders."""

import os

import numpy as np
import pytest

from predress.episodes import load_config
from predress.io import read_demo, read_pair_demo
from predress.primitives import load_registry

PKG_DATA = os.path.join(os.path.dirname(__file__), "..", "src", "predress", "data")


def data_path(*parts):
    return os.path.normpath(os.path.join(PKG_DATA, *parts))


@pytest.fixture(scope="session")
def demos_dir():
    return data_path("demos")


@pytest.fixture(scope="session")
def registry_dir():
    return data_path("registry")


@pytest.fixture(scope="session")
def registry(registry_dir):
    return load_registry(registry_dir)


@pytest.fixture(scope="session")
def tables():
    return [data_path("tables", "table1.csv"), data_path("tables", "table2.csv")]


@pytest.fixture(scope="session")
def experiments_config_path():
    return data_path("configs", "experiments.json")


@pytest.fixture()
def experiments_config(experiments_config_path):
    # fresh object per test: tests mutate n_episodes/seed/etc.
    return load_config(experiments_config_path)


@pytest.fixture(scope="session")
def minjerk_demo(demos_dir):
    return read_demo(os.path.join(demos_dir, "minjerk.ndjson"))


@pytest.fixture(scope="session")
def sine_demo(demos_dir):
    return read_demo(os.path.join(demos_dir, "sine.ndjson"))


@pytest.fixture(scope="session")
def constant_demo(demos_dir):
    return read_demo(os.path.join(demos_dir, "constant.ndjson"))


@pytest.fixture(scope="session")
def fling_pair(demos_dir):
    return read_pair_demo(os.path.join(demos_dir, "fling.ndjson"))


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
