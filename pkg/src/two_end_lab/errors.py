"""Exception hierarchy shared by all modules."""


class TwoEndLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TwoEndLabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ChartDomainError(DomainError):
    """A point lies outside the validity region of a Fermi chart."""


class AccuracyError(TwoEndLabError):
    """A quadrature or integrator could not certify the requested accuracy."""


class ExtractionError(TwoEndLabError):
    """Nodal-curve extraction failed; ``columns`` lists offending grid columns."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class ConstructionError(TwoEndLabError):
    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = tuple(nodes)


class DecompositionError(TwoEndLabError):
    def __init__(self, message, r1=None):
        super().__init__(message)
        self.r1 = r1


class BlowUpError(TwoEndLabError):
    """The reduced flux reached the vertical-tangent limit mu >= r."""

    def __init__(self, message, r):
        super().__init__(message)
        self.r = r


class StiffnessError(TwoEndLabError):
    def __init__(self, message, r):
        super().__init__(message)
        self.r = r


class NonConvergenceError(TwoEndLabError):
    """Newton did not reach tolerance; ``history`` holds the residual norms."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = tuple(history)


class DivergenceError(NonConvergenceError):
    pass


class ContinuationError(TwoEndLabError):
    pass


class ConfigError(TwoEndLabError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
