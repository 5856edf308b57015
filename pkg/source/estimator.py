"""
Sufficient statistics of a dataset and the regularized estimate F_y of the interventional probability p_y:

    F_y = sum_z [(n_z + c) / (N + c)] * [(n_xyz + c) / (n_xz + c)]

c replaces every "+1" of the unregularized-by-default estimator (c=1). The sum runs over ascending z
with plain left-to-right addition, so F_y equals the sum of its per-z terms bit for bit.

The estimators are generic over the type of c: a Fraction c gives exact Fraction results
(integer counts stay integers), a float or int c gives doubles.
"""

import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from source.errors import IndexOutOfRange, NonPositiveC, ValidationError, check_index


@dataclass(frozen=True, eq=False)
class CountTable:
    N: int
    n_z: np.ndarray
    n_xz: np.ndarray
    n_xyz: np.ndarray

    @classmethod
    def from_cell_counts(cls, n_xyz):
        cells = np.asarray(n_xyz, dtype=np.int64)
        if cells.ndim != 3:
            raise ValidationError(f"Cell counts need shape (x, y, z), got {cells.shape}")
        if cells.size and cells.min() < 0:
            raise ValidationError("Counts must be >= 0")
        n_xz = cells.sum(axis=1)
        n_z = n_xz.sum(axis=0)
        for arr in (cells, n_xz, n_z):
            arr.setflags(write=False)
        return cls(N=int(n_z.sum()), n_z=n_z, n_xz=n_xz, n_xyz=cells)

    @property
    def sizes(self):
        return self.n_xyz.shape

    def n_x(self, x):
        return int(self.n_xz[x].sum())

    def y_counts(self, x):
        """Counts of each y among rows with X_n = x, pooled over z."""
        return self.n_xyz[x].sum(axis=1)


@dataclass(frozen=True)
class Regularization:
    c: numbers.Real = 1

    def __post_init__(self):
        if isinstance(self.c, bool) or not isinstance(self.c, numbers.Real) or not self.c > 0:
            raise NonPositiveC(f"The regularization constant c must be a real number > 0, got {self.c!r}")

    def exact(self):
        """The same c as a Fraction; floats go through their shortest decimal form, so 0.1 becomes 1/10."""
        if isinstance(self.c, float):
            return Regularization(Fraction(str(self.c)))
        return Regularization(Fraction(self.c))


def fit_counts(dataset, sizes):
    sizes = tuple(int(s) for s in sizes)
    rows = dataset.rows
    for axis, name in enumerate(("x", "y", "z")):
        if rows.shape[0] and (rows[:, axis].min() < 0 or rows[:, axis].max() >= sizes[axis]):
            raise IndexOutOfRange(f"Dataset column {name} has values outside [0, {sizes[axis]})")
    flat = np.ravel_multi_index(tuple(rows.T.astype(np.intp)), sizes)
    cells = np.bincount(flat, minlength=int(np.prod(sizes))).reshape(sizes)
    return CountTable.from_cell_counts(cells)


def _check(counts, x, y=None, z=None):
    x_size, y_size, z_size = counts.sizes
    check_index("x", x, x_size)
    if y is not None:
        check_index("y", y, y_size)
    if z is not None:
        check_index("z", z, z_size)


def smoothed_z_weight(counts, z, reg=Regularization()):
    return (int(counts.n_z[z]) + reg.c) / (counts.N + reg.c)


def smoothed_conditional(counts, x, y, z, reg=Regularization()):
    return (int(counts.n_xyz[x, y, z]) + reg.c) / (int(counts.n_xz[x, z]) + reg.c)


def estimate_F_z(counts, x, y, z, reg=Regularization()):
    """The z-th summand F_{y,z} of F_y."""
    _check(counts, x, y, z)
    return smoothed_z_weight(counts, z, reg) * smoothed_conditional(counts, x, y, z, reg)


def estimate_F(counts, x, y, reg=Regularization()):
    _check(counts, x, y)
    total = 0
    for z in range(counts.sizes[2]):
        total += estimate_F_z(counts, x, y, z, reg)
    return total


def estimate_F_vector(counts, x, reg=Regularization()):
    _check(counts, x)
    return np.array([estimate_F(counts, x, y, reg) for y in range(counts.sizes[1])])
