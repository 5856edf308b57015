"""
Exceptions raised by causal-econf.
Each family carries the process exit code main.py uses when the error reaches the top level.
"""


class CausalEConfError(Exception):
    exit_code = 1


class ConfigError(CausalEConfError):
    exit_code = 2


class ValidationError(CausalEConfError):
    exit_code = 4


class BudgetExceeded(CausalEConfError):
    exit_code = 5


class NonPositiveEntry(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class EmptyAxis(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class StrategyRangeError(ValidationError):
    pass


class NonPositiveC(ValidationError):
    pass


class NonPositiveF(ValidationError):
    pass


class NonPositiveAlpha(ValidationError):
    pass


class CountMismatch(ValidationError):
    pass


class NotDegenerate(ValidationError):
    pass


class MissingField(ValidationError):
    pass


class InexactModel(ValidationError):
    """Exact arithmetic was requested on a model without a rational table."""


class InsufficientTrials(ValidationError):
    pass


def check_index(name, value, size):
    if not 0 <= value < size:
        raise IndexOutOfRange(f"{name}={value} is out of range, expected 0 <= {name} < {size}")
