"""Exception hierarchy shared by every module."""


class CovGeomError(Exception):
    """Base class for all library errors."""


class InvalidInput(CovGeomError, ValueError):
    """A precondition on an argument was violated."""


class RankExceeded(CovGeomError):
    """Requested truncation order exceeds the numerical rank."""

    def __init__(self, alpha, rank, center=None):
        self.alpha = alpha
        self.rank = rank
        self.center = center
        where = "" if center is None else f" at point {center}"
        super().__init__(f"truncation order {alpha} exceeds rank {rank}{where}")


class NoConvergence(CovGeomError):
    """Iterative eigensolver stopped before reaching the residual target."""

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class FormatError(CovGeomError):
    def __init__(self, message, line=None):
        self.line = line
        loc = "" if line is None else f"line {line}: "
        super().__init__(f"{loc}{message}")


class ParseError(CovGeomError):
    def __init__(self, line, column, text=""):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: cannot parse {text!r} as a number")


class EmptyNeighborhood(CovGeomError):
    def __init__(self, center):
        self.center = center
        super().__init__(f"point {center} has no neighbors at the requested scale")


class IsolatedPoint(EmptyNeighborhood):
    def __init__(self, index):
        self.index = index
        super().__init__(index)


class DegenerateDistance(CovGeomError):
    """The two points coincide, so a distance ratio is undefined."""


class SingularWeights(CovGeomError):
    def __init__(self, center, denominator):
        self.center = center
        self.denominator = denominator
        super().__init__(
            f"barycentric weights at point {center} are singular "
            f"(denominator {denominator:.3e})"
        )


class ConfigError(CovGeomError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DegenerateFrameWarning(UserWarning):
    """Covariance rank is below the requested intrinsic dimension."""
