"""
File formats.

Model file (JSON):
    {"x_labels": [...], "y_labels": [...], "z_labels": [...], "probs": [...]}
    `probs` is flat, row-major in (x, y, z) order with x varying slowest. Entries are numbers or rational
    strings such as "1/16"; a table made only of rational strings is kept exact. `probs` may be omitted,
    in which case the file only declares the label sets. `z_labels` may be a list of label lists, one per
    adjustment variable; the variables are then flattened into a single Z axis.

Dataset file (CSV): header `x,y,z`, one observation per row, each value an index or a label.
"""

import csv
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from source.configuration import logging
from source.errors import IndexOutOfRange, MissingField, ValidationError
from source.model import flatten_adjustment_set, validate_model
from source.sampling import Dataset

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class ModelLabels:
    x_labels: tuple
    y_labels: tuple
    z_labels: tuple

    @property
    def sizes(self):
        return len(self.x_labels), len(self.y_labels), len(self.z_labels)

    def labels(self, axis):
        return getattr(self, f"{axis}_labels")

    def resolve(self, axis, value, error=IndexOutOfRange):
        """Index of `value` on `axis`: labels win over indices, so a label "1" means that label."""
        labels = self.labels(axis)
        if isinstance(value, str) and value in labels:
            return labels.index(value)
        try:
            index = int(value)
        except (TypeError, ValueError):
            raise error(f"Unknown {axis} label {value!r}. Known labels: {list(labels)}")
        if isinstance(value, float) or not 0 <= index < len(labels):
            raise error(f"{axis}={value!r} is not a valid index, expected 0 <= {axis} < {len(labels)}")
        return index

    def name(self, axis, index):
        return self.labels(axis)[index]


def _parse_probability(value):
    if isinstance(value, bool):
        raise ValidationError(f"Invalid probability {value!r}")
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise ValidationError(f"Invalid probability {value!r}. Expected a number or a rational like \"1/16\"")
    if isinstance(value, (int, float)):
        return value
    raise ValidationError(f"Invalid probability {value!r}")


def read_model_file(path):
    """Return (ModelLabels, JointModel or None when the file has no probabilities)."""
    with open(path, encoding="utf-8") as model_file:
        try:
            data = json.load(model_file)
        except json.JSONDecodeError as e:
            raise ValidationError(f"Model file {path} is not valid JSON: {e}")

    for key in ("x_labels", "y_labels", "z_labels"):
        if key not in data:
            raise MissingField(f"Model file {path} has no {key}")

    z_labels = data["z_labels"]
    adjustment_set = bool(z_labels) and all(isinstance(labels, list) for labels in z_labels)
    z_shape = tuple(len(labels) for labels in z_labels) if adjustment_set else (len(z_labels),)
    if adjustment_set:
        z_labels = ["|".join(str(label) for label in combo) for combo in itertools.product(*z_labels)]

    labels = ModelLabels(tuple(str(v) for v in data["x_labels"]),
                         tuple(str(v) for v in data["y_labels"]),
                         tuple(str(v) for v in z_labels))
    if "probs" not in data or data["probs"] is None:
        logging.info(f"Model file {path} declares labels only, no probabilities.")
        return labels, None

    values = [_parse_probability(v) for v in data["probs"]]
    shape = (len(labels.x_labels), len(labels.y_labels)) + z_shape
    if len(values) != math.prod(shape):
        raise ValidationError(f"Model file {path} has {len(values)} probabilities, expected {math.prod(shape)} for shape {shape}")
    table = np.empty(len(values), dtype=object)
    table[:] = values
    table = table.reshape(shape)
    if adjustment_set:
        table, _ = flatten_adjustment_set(table, data["z_labels"])
    model = validate_model(table)
    logging.debug(f"Model {path} loaded with sizes {model.sizes}, exact={model.is_exact}")
    return labels, model


def read_dataset_csv(path, labels):
    rows = []
    with open(path, newline="", encoding="utf-8") as dataset_file:
        reader = csv.DictReader(dataset_file)
        if reader.fieldnames is None or any(axis not in reader.fieldnames for axis in AXES):
            raise MissingField(f"Dataset {path} must have the header x,y,z, got {reader.fieldnames}")
        for line, record in enumerate(reader, start=2):
            missing = [axis for axis in AXES if record[axis] is None]
            if missing:
                raise MissingField(f"{path}:{line}: row has no value for {','.join(missing)}")
            try:
                rows.append(tuple(labels.resolve(axis, record[axis].strip()) for axis in AXES))
            except ValidationError as e:
                raise type(e)(f"{path}:{line}: {e}")
    logging.debug(f"Dataset {path} loaded with {len(rows)} rows")
    return Dataset.from_rows(rows)


def write_dataset_csv(path, dataset):
    with open(path, "w", newline="", encoding="utf-8") as dataset_file:
        writer = csv.writer(dataset_file, lineterminator="\n")
        writer.writerow(AXES)
        writer.writerows(dataset)
    return path
