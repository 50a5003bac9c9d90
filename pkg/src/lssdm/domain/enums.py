"""Domain enumerations."""

from enum import StrEnum


class MaskKind(StrEnum):
    """Simulated-missing patterns."""

    POINT = "point"
    BLOCK = "block"


class LaplacianKind(StrEnum):
    """Propagation operator used by the graph encoder."""

    LITERAL = "literal"
    GCN_CLASSIC = "gcn-classic"


class HeadActivation(StrEnum):
    """Output activation of the encoder's mean / log-variance heads."""

    FAITHFUL = "faithful"
    LINEAR_HEADS = "linear-heads"


class Activation(StrEnum):
    """Activation applied after a graph convolution."""

    RELU = "relu"
    SIGMOID = "sigmoid"
    NONE = "none"


class ScheduleKind(StrEnum):
    """Shape of the beta schedule."""

    QUADRATIC = "quadratic"
    LINEAR = "linear"


class PointEstimate(StrEnum):
    """How a sample set is collapsed into a point prediction."""

    MEAN = "mean"
    MEDIAN = "median"
