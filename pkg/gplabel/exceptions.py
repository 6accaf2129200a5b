"""gplabel exception hierarchy.

All gplabel exceptions inherit from GPLabelError and support cause chaining.
"""


class GPLabelError(Exception):
    """Base exception for all gplabel errors.

    Wraps original errors as __cause__ for proper exception chaining.
    """

    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message)
        if cause is not None:
            self.__cause__ = cause


# -- linear algebra ----------------------------------------------------------


class LinalgError(GPLabelError):
    """Raised when a dense factorization or inverse update cannot proceed."""

    pass


class NotPositiveDefinite(LinalgError):
    """Raised when a Cholesky pivot is not strictly positive.

    Usually means sigma is too small or the kernel matrix is corrupted.
    """

    pass


class SchurNotPositiveDefinite(NotPositiveDefinite):
    """Raised when D - C^T A^-1 C is not SPD during a block assemble.

    Signals degenerate new samples, e.g. duplicates of bank rows with no noise.
    """

    pass


class SingularSubBlock(LinalgError):
    """Raised when the removed x removed block of an inverse is numerically singular."""

    def __init__(self, message: str, *, condition: float = float("inf"), cause=None):
        super().__init__(message, cause=cause)
        self.condition = condition


class DimensionMismatch(GPLabelError):
    """Raised when array shapes do not conform."""

    def __init__(self, message: str, *, expected=None, got=None, cause=None):
        super().__init__(message, cause=cause)
        self.expected = expected
        self.got = got


# -- memory bank -------------------------------------------------------------


class BankError(GPLabelError):
    """Raised for invalid memory bank construction or insertion."""

    pass


class InvalidCapacity(BankError):
    """Raised when a bank capacity is < 1 or not divisible by C in balanced mode."""

    pass


class ClassOverflow(BankError):
    """Raised when a class receives more samples than its quota during warmup."""

    def __init__(self, message: str, *, class_id: int = -1, quota: int = 0, cause=None):
        super().__init__(message, cause=cause)
        self.class_id = class_id
        self.quota = quota


class EmptyBank(BankError):
    """Raised when reading from a bank with no occupied slot."""

    pass


class StaleStateError(GPLabelError):
    """Raised when a GP state no longer matches the bank it was built from."""

    def __init__(self, message: str, *, state_version: int = -1, bank_version: int = -1):
        super().__init__(message)
        self.state_version = state_version
        self.bank_version = bank_version


# -- refinement / training ---------------------------------------------------


class MissingAggregate(GPLabelError):
    """Raised when a smoothing policy is applied without aggregate logits."""

    pass


class DegenerateData(GPLabelError):
    """Raised when training data cannot support the requested model."""

    pass


class InvalidDistribution(GPLabelError):
    """Raised when a soft label is not a probability vector."""

    pass


# -- file formats and configuration ------------------------------------------


class FormatError(GPLabelError):
    """Raised when a file cannot be read back into its domain type."""

    def __init__(self, message: str, *, line: int = 0, cause: Exception | None = None):
        super().__init__(message, cause=cause)
        self.line = line


class ParseError(FormatError):
    """Raised when a line of a text file is malformed."""

    pass


class InvalidLabel(FormatError):
    """Raised when a class id falls outside {-1} U [0, C)."""

    def __init__(self, message: str, *, line: int = 0, label: int = 0, cause=None):
        super().__init__(message, line=line, cause=cause)
        self.label = label


class ConfigError(GPLabelError):
    """Raised when an experiment config cannot be loaded."""

    def __init__(self, message: str, *, key: str = "", cause: Exception | None = None):
        super().__init__(message, cause=cause)
        self.key = key


class UnknownKey(ConfigError):
    """Raised for a config key outside the documented set."""

    pass


class InvalidValue(ConfigError):
    """Raised when a config value violates its type invariant."""

    pass


# -- resources ---------------------------------------------------------------


class OutOfMemory(GPLabelError):
    """Raised when the benchmark matrices do not fit in memory."""

    def __init__(self, message: str, *, required_bytes: int = 0, cause=None):
        super().__init__(message, cause=cause)
        self.required_bytes = required_bytes
