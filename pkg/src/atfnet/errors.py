"""Exception types shared across the package."""


class AtfnetError(Exception):
    """Base class for all library errors."""


class InvalidInput(AtfnetError):
    """Input violates a documented precondition (non-finite, empty, bad range)."""


class ShapeMismatch(AtfnetError):
    """Operands disagree on a required dimension."""


class ImaginaryResidueTooLarge(AtfnetError):
    """Inverse transform of a spectrum that is not conjugate-symmetric."""


class NoDominantFrequency(AtfnetError):
    """All non-DC bins are zero; pitch detection is meaningless (constant input)."""


class PatchTooLong(AtfnetError):
    """Patch length exceeds the series length."""


class GradcheckFailure(AtfnetError):
    """Analytic and numeric gradients disagree beyond tolerance."""

    def __init__(self, message, name=None, index=None, rel_error=None):
        super().__init__(message)
        self.name = name
        self.index = index
        self.rel_error = rel_error


class CorruptCheckpoint(AtfnetError):
    """Checkpoint bytes are malformed, truncated, or carry a bad magic/version."""


class ConfigMismatch(AtfnetError):
    """Checkpoint parameters do not match the model implied by its config."""


class ParseError(AtfnetError):
    """CSV cell could not be parsed as a finite number."""

    def __init__(self, row, col, message=None):
        super().__init__(message or f"unparseable value at row {row}, column {col}")
        self.row = row
        self.col = col


class ConstantChannel(AtfnetError):
    """A channel has (near-)zero variance on the training slice."""

    def __init__(self, name):
        super().__init__(f"channel {name!r} is constant on the training slice")
        self.channel = name


class TooShort(AtfnetError):
    """Dataset has too few rows to form the requested splits."""


class EmptySplit(AtfnetError):
    """Requested split part contains no complete windows."""


class NonFiniteLoss(AtfnetError):
    """Training loss became NaN or infinite."""

    def __init__(self, epoch, batch_index):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch_index}")
        self.epoch = epoch
        self.batch_index = batch_index


class SingularDesign(AtfnetError):
    """Least-squares design matrix is numerically singular."""
