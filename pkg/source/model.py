"""
Finite positive joint distributions on X x Y x Z.

A JointModel is the ground truth used by the samplers and the exact oracle.
Categories are dense 0-based indices; labels only exist in the model file (see source.utils).
Every operation takes an `exact` flag: when True, the computation runs in Fraction arithmetic
on the model's rational table instead of on the float table.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from source.errors import (
    EmptyAxis,
    InexactModel,
    NonPositiveEntry,
    NotNormalized,
    ValidationError,
    check_index,
)

POSITIVITY_FLOOR = 1e-12
NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class JointModel:
    probs: np.ndarray
    rational: np.ndarray = None

    @property
    def x_size(self):
        return self.probs.shape[0]

    @property
    def y_size(self):
        return self.probs.shape[1]

    @property
    def z_size(self):
        return self.probs.shape[2]

    @property
    def sizes(self):
        return self.probs.shape

    @property
    def is_exact(self):
        return self.rational is not None

    def table(self, exact=False):
        if not exact:
            return self.probs
        if self.rational is None:
            raise InexactModel("Exact arithmetic requires a model specified with rational entries (e.g. \"1/16\").")
        return self.rational


@dataclass(frozen=True, eq=False)
class InterventionalDist:
    x: int
    p: np.ndarray

    def __post_init__(self):
        values = [float(v) for v in self.p]
        if any(not 0.0 < v <= 1.0 for v in values):
            raise ValidationError(f"Interventional probabilities must lie in (0, 1], got {values}")
        if abs(math.fsum(values) - 1.0) > NORMALIZATION_TOLERANCE:
            raise NotNormalized(f"Interventional probabilities sum to {math.fsum(values)}, expected 1")

    def __getitem__(self, y):
        return self.p[y]

    def __len__(self):
        return len(self.p)


def _rational_table(arr):
    if arr.size == 0:
        return None
    for value in arr.flat:
        if isinstance(value, bool) or not isinstance(value, (Fraction, int)):
            return None
    exact = np.empty(arr.shape, dtype=object)
    for index, value in np.ndenumerate(arr):
        exact[index] = Fraction(value)
    return exact


def validate_model(probs_table):
    """
    Build a JointModel from a (x_size, y_size, z_size) table.
    Tables made only of Fraction/int entries also keep an exact rational copy.
    Normalization is checked, never repaired.
    """
    try:
        raw = np.asarray(probs_table, dtype=object)
    except ValueError as e:
        raise ValidationError(f"Probability table is not rectangular: {e}")
    if raw.ndim != 3:
        raise ValidationError(f"Probability table must have 3 axes (x, y, z), got shape {raw.shape}")
    if 0 in raw.shape:
        raise EmptyAxis(f"Every axis needs at least one category, got shape {raw.shape}")

    rational = _rational_table(raw)
    try:
        probs = raw.astype(float)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Probability table contains a non-numeric entry: {e}")

    if np.any(~np.isfinite(probs)) or probs.min() < POSITIVITY_FLOOR:
        cell = np.unravel_index(int(np.argmin(probs)), probs.shape)
        raise NonPositiveEntry(f"Cell (x, y, z)={tuple(int(i) for i in cell)} has probability {probs[cell]}, every cell must be >= {POSITIVITY_FLOOR}")

    if rational is not None:
        total = sum(rational.flat, Fraction(0))
        if total != 1:
            raise NotNormalized(f"Rational probabilities sum to {total}, expected exactly 1")
    elif abs(probs.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise NotNormalized(f"Probabilities sum to {probs.sum()!r}, expected 1 within {NORMALIZATION_TOLERANCE}")

    probs.setflags(write=False)
    if rational is not None:
        rational.setflags(write=False)
    return JointModel(probs=probs, rational=rational)


def marginal_z(model, exact=False):
    return model.table(exact).sum(axis=(0, 1))


def conditional_y_given_xz(model, x, z, exact=False):
    check_index("x", x, model.x_size)
    check_index("z", z, model.z_size)
    column = model.table(exact)[x, :, z]
    return column / column.sum()


def p_yz(model, x, y, z, exact=False):
    """P(Z=z) * P(Y=y | X=x, Z=z): the z-th summand of the interventional probability of y."""
    check_index("y", y, model.y_size)
    return marginal_z(model, exact)[z] * conditional_y_given_xz(model, x, z, exact)[y]


def interventional_py(model, x, exact=False):
    """
    Distribution of Y after setting X to x (back-door adjustment over Z):
    p_y = sum_z P(Z=z) P(Y=y | X=x, Z=z), summed in ascending z.
    """
    check_index("x", x, model.x_size)
    p = np.empty(model.y_size, dtype=object if exact else float)
    for y in range(model.y_size):
        total = Fraction(0) if exact else 0.0
        for z in range(model.z_size):
            total += p_yz(model, x, y, z, exact)
        p[y] = total
    p.setflags(write=False)
    return InterventionalDist(x=x, p=p)


def flatten_adjustment_set(probs, z_labels):
    """
    Collapse a table of shape (x, y, z_1, ..., z_k) into (x, y, z_1*...*z_k).
    Flattened labels are the component labels joined with '|', last variable varying fastest.
    """
    arr = np.asarray(probs, dtype=object)
    expected = tuple(len(labels) for labels in z_labels)
    if arr.shape[2:] != expected:
        raise ValidationError(f"Adjustment variables have sizes {expected} but the table has shape {arr.shape}")
    flat = arr.reshape(arr.shape[0], arr.shape[1], math.prod(expected))
    labels = ["|".join(str(label) for label in combo) for combo in itertools.product(*z_labels)]
    return flat, labels


def choose_adjustment_set(candidates):
    """Pick the adjustment set with the smallest product of domain sizes."""
    if not candidates:
        raise ValidationError("No candidate adjustment set given")
    return min(candidates, key=lambda name: math.prod(candidates[name]))
