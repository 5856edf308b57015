"""
E-values and e-prediction regions for the label Y after setting X to x.

Given an alternative Q on the labels and estimates F_y, the e-value of label y is Q(y)/F_y and
the region at level alpha keeps every label whose e-value is strictly below alpha.
Labels with Q(y)=0 therefore belong to every region.

Also exposes the two conformal e-predictors the causal one is assembled from:
the simple one (p_hat) and the object-conditional one.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from source.errors import (
    ConfigError,
    CountMismatch,
    NonPositiveAlpha,
    NonPositiveF,
    ValidationError,
    check_index,
)
from source.model import NORMALIZATION_TOLERANCE


@dataclass(frozen=True, eq=False)
class AlternativeQ:
    q: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.q, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError(f"Q must be a non-empty vector, got {self.q!r}")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValidationError(f"Q entries must be finite and >= 0, got {values.tolist()}")
        if abs(values.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValidationError(f"Q must sum to 1, got {values.sum()!r}")

    def __getitem__(self, y):
        return self.q[y]

    def __len__(self):
        return len(self.q)

    @classmethod
    def uniform(cls, y_size):
        return cls(np.full(y_size, 1.0 / y_size))

    @classmethod
    def point_mass(cls, y_size, y):
        check_index("y", y, y_size)
        q = np.zeros(y_size)
        q[y] = 1.0
        return cls(q)

    @classmethod
    def parse(cls, spec, y_labels):
        """Parse `uniform`, `point:<label or index>` or an explicit vector (list or comma-separated string)."""
        y_size = len(y_labels)
        if isinstance(spec, (list, tuple)):
            values = spec
        elif spec == "uniform":
            return cls.uniform(y_size)
        elif isinstance(spec, str) and spec.startswith("point:"):
            target = spec.split(":", 1)[1]
            if target in y_labels:
                return cls.point_mass(y_size, y_labels.index(target))
            try:
                return cls.point_mass(y_size, int(target))
            except ValueError:
                raise ConfigError(f"Unknown label {target!r} in alternative {spec!r}. Known labels: {y_labels}")
        elif isinstance(spec, str):
            values = spec.split(",")
        else:
            raise ConfigError(f"Invalid alternative {spec!r}. Expected uniform, point:<label> or a vector")
        try:
            q = np.array([float(v) for v in values])
        except ValueError:
            raise ConfigError(f"Invalid alternative vector {spec!r}")
        if q.size != y_size:
            raise ConfigError(f"Alternative vector has {q.size} entries, the model has {y_size} labels")
        return cls(q)


@dataclass(frozen=True)
class ERegion:
    alpha: float
    members: frozenset
    ratios: tuple

    def __contains__(self, y):
        return y in self.members

    def __len__(self):
        return len(self.members)


def _check_F(F):
    if any(not v > 0 for v in F):
        raise NonPositiveF(f"Every F entry must be > 0, got {list(F)}")


def evariable(q, F, y):
    _check_F(F)
    check_index("y", y, len(F))
    return q[y] / F[y]


def region(q, F, alpha):
    """{y : q[y] / F[y] < alpha}, strict inequality."""
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha!r}")
    _check_F(F)
    ratios = tuple(q[y] / F[y] for y in range(len(F)))
    return ERegion(alpha=alpha, members=frozenset(y for y, ratio in enumerate(ratios) if ratio < alpha), ratios=ratios)


def oracle_region(q, p, alpha):
    """The region computed with the true interventional probabilities in place of F."""
    return region(q, p.p, alpha)


def region_size_ratio(estimated, oracle):
    if len(oracle) == 0:
        return 1.0 if len(estimated) == 0 else float("inf")
    return len(estimated) / len(oracle)


def simple_conformal_phat(y_counts, N, exact=False):
    """p_hat(y) = (count_y + 1) / (N + 1), a super-probability: it sums to (N + |Y|) / (N + 1)."""
    counts = [int(k) for k in y_counts]
    if sum(counts) != N:
        raise CountMismatch(f"Label counts sum to {sum(counts)}, expected N={N}")
    if exact:
        return np.array([Fraction(k + 1, N + 1) for k in counts], dtype=object)
    return np.array([(k + 1) / (N + 1) for k in counts])


def simple_conformal_region(q, y_counts, N, alpha):
    return region(q, simple_conformal_phat(y_counts, N), alpha)


def object_pair_counts(counts):
    """Pair table with (X, Z) as the object: row x * z_size + z, one column per label."""
    x_size, y_size, z_size = counts.sizes
    return np.transpose(counts.n_xyz, (0, 2, 1)).reshape(x_size * z_size, y_size)


def conditional_conformal_ratio(pair_counts, x, y, exact=False):
    """(|{n: X_n=x}| + 1) / (|{n: (X_n, Y_n)=(x, y)}| + 1); equals 1 when object x was never seen."""
    pair_counts = np.asarray(pair_counts)
    check_index("x", x, pair_counts.shape[0])
    check_index("y", y, pair_counts.shape[1])
    n_x = int(pair_counts[x].sum())
    n_xy = int(pair_counts[x, y])
    if exact:
        return Fraction(n_x + 1, n_xy + 1)
    return (n_x + 1) / (n_xy + 1)
