"""Exception types shared across the package."""


class WidthMismatchError(ValueError):
    """Input width does not match the network's expected input width."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected input width {expected}, got {actual}")


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class DataError(ValueError):
    """Malformed input data (CLI exit code 3)."""


class NumericalError(RuntimeError):
    """Numerical failure: divergence or non-convergence (CLI exit code 4)."""


class TrainingDivergedError(NumericalError):
    def __init__(self, k: int, epoch: int):
        self.k = k
        self.epoch = epoch
        super().__init__(f"non-finite loss while training component k={k} at epoch {epoch}")


class ConvergenceError(NumericalError):
    """Iterative solver failed to converge within its sweep budget."""


class CorruptModelError(DataError):
    """Model file failed its magic/version/checksum validation."""
