import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_rational_model, rational_table
from source.errors import EmptyAxis, InexactModel, IndexOutOfRange, NonPositiveEntry, NotNormalized, ValidationError
from source.model import (
    choose_adjustment_set,
    conditional_y_given_xz,
    flatten_adjustment_set,
    interventional_py,
    marginal_z,
    p_yz,
    validate_model,
)


def test_validate_model_keeps_rational_table(m1):
    assert m1.is_exact
    assert m1.sizes == (2, 2, 2)
    assert m1.rational[1, 1, 1] == Fraction(3, 10)
    assert m1.probs[1, 1, 1] == pytest.approx(0.3)


def test_validate_model_float_table_is_not_exact(float_model):
    assert not float_model.is_exact
    with pytest.raises(InexactModel):
        float_model.table(exact=True)


def test_model_arrays_are_read_only(m1):
    with pytest.raises(ValueError):
        m1.probs[0, 0, 0] = 0.5


@pytest.mark.parametrize("table, error", [
    (np.zeros((2, 0, 2)), EmptyAxis),
    (np.full((2, 2), 0.25), ValidationError),
    ([[[0.5, 0.5], [0.0, 0.0]]], NonPositiveEntry),
    ([[[0.5, -0.1], [0.3, 0.3]]], NonPositiveEntry),
    ([[[0.25, 0.25], [0.25, 0.3]]], NotNormalized),
    ([[["a", 0.5]]], ValidationError),
])
def test_validate_model_rejects(table, error):
    with pytest.raises(error):
        validate_model(table)


def test_validate_model_rational_sum_must_be_exactly_one():
    cells = ["1/8"] * 7 + ["1/9"]
    with pytest.raises(NotNormalized):
        validate_model(rational_table(cells))


def test_validate_model_never_repairs_normalization():
    table = np.full((1, 2, 2), 0.25 + 1e-11)
    model = validate_model(table)
    assert model.probs.sum() != 1.0


def test_marginal_z_m1(m1):
    assert list(marginal_z(m1, exact=True)) == [Fraction(1, 4), Fraction(3, 4)]


def test_conditional_y_given_xz_m1(m1):
    assert list(conditional_y_given_xz(m1, 1, 0, exact=True)) == [Fraction(4, 5), Fraction(1, 5)]
    assert list(conditional_y_given_xz(m1, 1, 1, exact=True)) == [Fraction(1, 5), Fraction(4, 5)]


def test_interventional_py_m1(m1):
    assert list(interventional_py(m1, 1, exact=True).p) == [Fraction(7, 20), Fraction(13, 20)]
    assert interventional_py(m1, 1).p == pytest.approx([0.35, 0.65])
    assert list(interventional_py(m1, 0, exact=True).p) == [Fraction(1, 2), Fraction(1, 2)]


def test_interventional_py_is_sum_of_p_yz(m1):
    p = interventional_py(m1, 1, exact=True)
    for y in range(2):
        assert p[y] == sum(p_yz(m1, 1, y, z, exact=True) for z in range(2))


def test_interventional_py_out_of_range(m1):
    with pytest.raises(IndexOutOfRange):
        interventional_py(m1, 2)


def test_interventional_py_sums_to_one():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        shape = tuple(int(s) for s in rng.integers(1, 5, size=3))
        table = rng.random(shape) + 1e-3
        model = validate_model(table / table.sum())
        for x in range(model.x_size):
            assert math.fsum(interventional_py(model, x).p) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_interventional_py_exact_sums_to_one(seed):
    model = random_rational_model(seed)
    for x in range(2):
        assert sum(interventional_py(model, x, exact=True).p) == 1


def test_flatten_adjustment_set():
    probs = np.full((2, 2, 2, 3), Fraction(1, 24), dtype=object)
    flat, labels = flatten_adjustment_set(probs, [["a", "b"], ["u", "v", "w"]])
    assert flat.shape == (2, 2, 6)
    assert labels == ["a|u", "a|v", "a|w", "b|u", "b|v", "b|w"]
    assert validate_model(flat).is_exact


def test_flatten_adjustment_set_shape_mismatch():
    with pytest.raises(ValidationError):
        flatten_adjustment_set(np.ones((2, 2, 3)), [["a", "b"]])


def test_choose_adjustment_set():
    assert choose_adjustment_set({"age,sex": (5, 2), "region": (4,), "income": (12,)}) == "region"
    with pytest.raises(ValidationError):
        choose_adjustment_set({})
