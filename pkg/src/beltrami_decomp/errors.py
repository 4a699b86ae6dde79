"""Exception hierarchy used across the package."""


class BeltramiError(Exception):
    """Base class for all package errors."""


class DimensionError(BeltramiError, ValueError):
    pass


class SingularityError(BeltramiError, ValueError):
    """A face of the domain (or its image) is degenerate."""

    def __init__(self, message, face=None):
        super().__init__(message)
        self.face = face


class ConformalitySingularityError(SingularityError):
    """The Beltrami coefficient is undefined on a face (f_z vanishes)."""

    def __init__(self, message, face=None, frame=None):
        super().__init__(message, face=face)
        self.frame = frame


class InadmissibleError(BeltramiError, ValueError):
    """A Beltrami value or field has modulus >= 1."""


class BoundaryMismatchError(BeltramiError, ValueError):
    pass


class ReconstructionError(BeltramiError, RuntimeError):
    def __init__(self, message, column=None, residual=None):
        super().__init__(message)
        self.column = column
        self.residual = residual


class DegenerateInputError(BeltramiError, ValueError):
    pass


class NumericalFailureError(BeltramiError, FloatingPointError):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class AmplitudeTooLargeError(BeltramiError, ValueError):
    def __init__(self, message, face=None, frame=None):
        super().__init__(message)
        self.face = face
        self.frame = frame


class FormatError(BeltramiError, ValueError):
    """Malformed CMX1 / PGM payload."""


class StageError(BeltramiError, RuntimeError):
    """A pipeline stage failed; carries the stage name and frame/column index."""

    def __init__(self, stage, index, cause):
        where = f" (index {index})" if index is not None else ""
        super().__init__(f"pipeline stage '{stage}' failed{where}: {cause}")
        self.stage = stage
        self.index = index
        self.cause = cause
