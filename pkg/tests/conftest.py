import json
import os
from fractions import Fraction

import numpy as np
import pytest

from source.model import validate_model

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
M1_PATH = os.path.join(ROOT, "config", "models", "m1.json")
UNIFORM_PATH = os.path.join(ROOT, "config", "models", "uniform.json")

M1_CELLS = ["1/16", "3/16", "1/16", "3/16", "1/10", "3/40", "1/40", "3/10"]


def rational_table(cells, shape=(2, 2, 2)):
    table = np.empty(len(cells), dtype=object)
    table[:] = [Fraction(cell) for cell in cells]
    return table.reshape(shape)


def random_rational_model(seed, shape=(2, 2, 2), high=9):
    """Positive rational model from integer weights in [1, high]."""
    weights = np.random.default_rng(seed).integers(1, high + 1, size=shape)
    total = int(weights.sum())
    table = np.empty(shape, dtype=object)
    for index, weight in np.ndenumerate(weights):
        table[index] = Fraction(int(weight), total)
    return validate_model(table)


def write_model(path, x_labels, y_labels, z_labels, probs):
    with open(path, "w", encoding="utf-8") as model_file:
        json.dump({"x_labels": x_labels, "y_labels": y_labels, "z_labels": z_labels, "probs": probs}, model_file)
    return str(path)


@pytest.fixture
def m1():
    return validate_model(rational_table(M1_CELLS))


@pytest.fixture
def uniform_model():
    return validate_model(rational_table(["1/8"] * 8))


@pytest.fixture
def float_model():
    return validate_model(np.array([[[0.1, 0.15], [0.05, 0.2]], [[0.2, 0.05], [0.1, 0.15]]]))


@pytest.fixture
def m1_path():
    return M1_PATH


@pytest.fixture
def uniform_path():
    return UNIFORM_PATH


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv("CAUSAL_ECONF_SEED", raising=False)
