import numpy as np
import pytest

from trafficlens.datamodel import AccidentRecord
from trafficlens.datasynth import gen_accidents


def make_blobs(n=300, k=3, d=2, spread=1.0, distance=10.0, seed=0):
    """k Gaussian blobs with centers ``distance * spread`` apart on a circle."""
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(k) / k
    radius = distance * spread / (2 * np.sin(np.pi / k))
    centers = np.zeros((k, d))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    y = np.arange(n) % k
    X = centers[y] + rng.normal(0, spread, (n, d))
    return X, y


def make_checkerboard(n=400, seed=0):
    """Two features on a 2x2 grid; label 1 on the off-diagonal cells (XOR)."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 2))
    keep = (np.abs(X) > 0.05).all(axis=1)
    X = X[keep]
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int) * 2  # Low=0 / High=2
    return X, y


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture
def checkerboard():
    return make_checkerboard()


@pytest.fixture(scope="session")
def accidents_small():
    return gen_accidents(n=1500, seed=7)


@pytest.fixture
def toy_records():
    rows = [("rain", 20.0, "High"), ("clear", 40.0, "Low"), ("rain", 60.0, "Medium"), ("clear", 80.0, "Low")]
    return [AccidentRecord({"weather": w, "age": a}, s) for w, a, s in rows]


ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
