"""Error hierarchy.

Every error carries an ``error_type`` tag and the process exit code the CLI
reports for it (1 configuration, 2 data, 3 numeric).
"""


class LssdmError(Exception):
    """Base exception for all pipeline errors."""

    exit_code: int = 1

    def __init__(self, message: str, error_type: str = "unknown") -> None:
        """Initialize the error.

        Args:
            message: Human-readable error message.
            error_type: Short machine-readable category.

        """
        super().__init__(message)
        self.error_type = error_type


class ConfigurationError(LssdmError):
    """Invalid or inconsistent configuration."""

    exit_code = 1

    def __init__(self, message: str = "Invalid configuration") -> None:
        """Initialize configuration error."""
        super().__init__(message, error_type="config")


class CheckpointError(LssdmError):
    """Checkpoint missing, unreadable or incompatible with the configured architecture."""

    exit_code = 1

    def __init__(self, message: str, field: str | None = None) -> None:
        """Initialize checkpoint error.

        Args:
            message: Human-readable error message.
            field: Manifest field that differs, when the error is a mismatch.

        """
        super().__init__(message, error_type="checkpoint")
        self.field = field


class DataError(LssdmError):
    """Input data could not be read or is unusable."""

    exit_code = 2

    def __init__(self, message: str, error_type: str = "data") -> None:
        """Initialize data error."""
        super().__init__(message, error_type=error_type)


class ParseError(DataError):
    """Malformed CSV input."""

    def __init__(self, message: str, line: int | None = None) -> None:
        """Initialize parse error.

        Args:
            message: Human-readable error message.
            line: 1-based line number in the source file, header included.

        """
        super().__init__(message, error_type="parse")
        self.line = line


class NormalizationError(DataError):
    """A sensor cannot be min-max normalized."""

    def __init__(self, sensor: str) -> None:
        """Initialize normalization error for ``sensor``."""
        super().__init__(f"Sensor '{sensor}' has max == min; cannot normalize", error_type="normalization")
        self.sensor = sensor


class SplitError(DataError):
    """Too few windows for a train/valid/test split."""

    def __init__(self, message: str) -> None:
        """Initialize split error."""
        super().__init__(message, error_type="split")


class MaskSpecError(DataError):
    """Invalid missing-value simulation spec."""

    def __init__(self, message: str) -> None:
        """Initialize mask spec error."""
        super().__init__(message, error_type="mask_spec")


class GeneratorSpecError(DataError):
    """Invalid synthetic generator parameters."""

    def __init__(self, message: str) -> None:
        """Initialize generator spec error."""
        super().__init__(message, error_type="generator_spec")


class GraphError(DataError):
    """Adjacency matrix violates the Laplacian preconditions."""

    def __init__(self, message: str, node: int | None = None) -> None:
        """Initialize graph error.

        Args:
            message: Human-readable error message.
            node: Offending node index, when one is identifiable.

        """
        super().__init__(message, error_type="graph")
        self.node = node


class NumericError(LssdmError):
    """A computation produced a non-finite value."""

    exit_code = 3

    def __init__(self, message: str, path: str | None = None) -> None:
        """Initialize numeric error.

        Args:
            message: Human-readable error message.
            path: Parameter or module path of the first offending node.

        """
        super().__init__(message, error_type="numeric")
        self.path = path


class ShapeError(LssdmError):
    """Contract violation: operand shapes are incompatible."""

    exit_code = 3

    def __init__(self, message: str) -> None:
        """Initialize shape error."""
        super().__init__(message, error_type="shape")


class InvalidShapeError(ShapeError):
    """A requested shape has a zero or negative extent."""


class MetricError(LssdmError):
    """A metric is undefined for its inputs (e.g. an empty mask)."""

    exit_code = 3

    def __init__(self, message: str) -> None:
        """Initialize metric error."""
        super().__init__(message)
        self.error_type = "metric"
