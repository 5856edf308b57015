"""
Random generation of datasets.

- sample_iid: IID rows from the joint model.
- sample_oblivious: rows generated one by one; Z and Y come from the model's stable mechanisms,
  X is chosen by a strategy that sees past (X, Z) pairs and the current Z but never any Y.
- sample_mutilated_y: one draw of Y after setting X to x.

Randomness: numpy's PCG64 bit generator seeded with SeedSequence(seed, spawn_key=(stream, lane)).
Trial t of an experiment uses stream=t; lane 0 generates the dataset, lane 1 the test label.
"""

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from source.errors import ConfigError, StrategyRangeError, ValidationError, check_index
from source.model import interventional_py, marginal_z

UINT64_LIMIT = 2 ** 64
DATASET_LANE = 0
LABEL_LANE = 1


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0
    lane: int = DATASET_LANE

    def __post_init__(self):
        for name in ("seed", "stream", "lane"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value < UINT64_LIMIT:
                raise ValidationError(f"RngSpec.{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self):
        sequence = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), int(self.lane)))
        return np.random.Generator(np.random.PCG64(sequence))

    def for_labels(self):
        return RngSpec(self.seed, self.stream, LABEL_LANE)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered (x, y, z) category-index triples, stored as a read-only (N, 3) integer array."""

    rows: np.ndarray

    @classmethod
    def from_rows(cls, rows):
        arr = np.asarray(list(rows), dtype=np.int64).reshape(-1, 3)
        arr.setflags(write=False)
        return cls(rows=arr)

    @property
    def N(self):
        return self.rows.shape[0]

    def __len__(self):
        return self.N

    def __iter__(self):
        for x, y, z in self.rows:
            yield int(x), int(y), int(z)


def _categorical(weights, uniforms):
    cdf = np.cumsum(weights)
    index = np.searchsorted(cdf, np.asarray(uniforms) * cdf[-1], side="right")
    return np.minimum(index, len(cdf) - 1)


def sample_iid(model, N, rng):
    """N independent rows drawn by inverse CDF over the flattened (x, y, z) table."""
    if N < 0:
        raise ValidationError(f"Sample size must be >= 0, got {N}")
    generator = rng.generator()
    flat = _categorical(model.probs.ravel(), generator.random(N))
    x, y, z = np.unravel_index(flat, model.sizes)
    rows = np.stack([x, y, z], axis=1).astype(np.int64)
    rows.setflags(write=False)
    return Dataset(rows=rows)


class History(Sequence):
    """Read-only view of the completed (x, z) pairs handed to a strategy."""

    __slots__ = ("_pairs",)

    def __init__(self, pairs):
        self._pairs = pairs

    def __getitem__(self, index):
        if isinstance(index, slice):
            return tuple(self._pairs[index])
        return self._pairs[index]

    def __len__(self):
        return len(self._pairs)

    def __repr__(self):
        return f"History({self._pairs!r})"


# Strategies choosing X_n. Each is called as strategy(history, current_z, generator) where history
# is a History of completed (x, z) pairs and current_z is None under strict past.

@dataclass(frozen=True)
class ConstantStrategy:
    value: int

    def __call__(self, history, current_z, generator):
        return self.value


@dataclass(frozen=True)
class UniformStrategy:
    x_size: int

    def __call__(self, history, current_z, generator):
        return int(generator.integers(self.x_size))


@dataclass(frozen=True)
class CopyZStrategy:
    """X_n is the previous Z (modulo x_size); 0 on the first step."""

    x_size: int

    def __call__(self, history, current_z, generator):
        if not history:
            return 0
        return history[-1][1] % self.x_size


@dataclass(frozen=True)
class MajorityZStrategy:
    """X_n is the most frequent past Z (modulo x_size); 0 on ties and on the first step."""

    x_size: int

    def __call__(self, history, current_z, generator):
        counts = Counter(z for _, z in history).most_common(2)
        if not counts or (len(counts) == 2 and counts[0][1] == counts[1][1]):
            return 0
        return counts[0][0] % self.x_size


STRATEGY_NAMES = ("constant:<k>", "uniform", "copy-z", "majority-z")


def strategy_from_name(name, x_size, x_labels=None):
    """Build a registry strategy. `constant:<k>` accepts an index or, when x_labels is given, a label."""
    if name.startswith("constant:"):
        value = name.split(":", 1)[1]
        if x_labels is not None and value in x_labels:
            return ConstantStrategy(x_labels.index(value))
        try:
            return ConstantStrategy(int(value))
        except ValueError:
            raise ConfigError(f"Invalid constant strategy {name!r}. Expected constant:<index or label>")
    if name == "uniform":
        return UniformStrategy(x_size)
    if name == "copy-z":
        return CopyZStrategy(x_size)
    if name == "majority-z":
        return MajorityZStrategy(x_size)
    raise ConfigError(f"Unknown strategy {name!r}. Available strategies: {', '.join(STRATEGY_NAMES)}")


def sample_oblivious(model, strategy, N, rng, strict_past=False):
    """
    Sequential rows: Z_n from the Z marginal, X_n = strategy(history, Z_n, generator),
    Y_n from P(Y | X_n, Z_n). The strategy never observes a Y value.
    With strict_past the strategy does not see the current Z_n either.
    """
    if N < 0:
        raise ValidationError(f"Sample size must be >= 0, got {N}")
    generator = rng.generator()
    z_draws = _categorical(marginal_z(model), generator.random(N))
    y_uniforms = generator.random(N)
    conditional_cdf = np.cumsum(model.probs, axis=1)

    pairs = []
    history = History(pairs)
    rows = np.empty((N, 3), dtype=np.int64)
    for n in range(N):
        z = int(z_draws[n])
        x = strategy(history, None if strict_past else z, generator)
        if isinstance(x, bool) or not isinstance(x, (int, np.integer)) or not 0 <= x < model.x_size:
            raise StrategyRangeError(f"Strategy {strategy!r} returned {x!r} at step {n}, expected an index below {model.x_size}")
        x = int(x)
        cdf = conditional_cdf[x, :, z]
        y = min(int(np.searchsorted(cdf, y_uniforms[n] * cdf[-1], side="right")), model.y_size - 1)
        pairs.append((x, z))
        rows[n] = (x, y, z)
    rows.setflags(write=False)
    return Dataset(rows=rows)


def sample_mutilated_y(model, x, rng):
    """Draw Y with the interventional probabilities p_y; uses its own stream, independent of any dataset."""
    check_index("x", x, model.x_size)
    p = interventional_py(model, x).p
    return int(_categorical(p, rng.generator().random()))
