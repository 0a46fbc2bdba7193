"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A dense linear-algebra kernel (SVD, linear solve) failed."""


class DataError(ValueError):
    """A dataset or data file is unusable (exit code 2 at the CLI)."""


class MatrixFormatError(DataError):
    """A matrix file is malformed; carries the byte offset of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
