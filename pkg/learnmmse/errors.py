import numpy as np

__all__ = (
    "LearnMMSEError",
    "InvalidArgumentError",
    "SingularMatrixError",
    "DegenerateFilterError",
    "DecompositionError",
    "ChannelFileError",
    "BadMagicError",
    "VersionMismatchError",
    "TruncatedPayloadError",
    "ZeroPowerError",
    "InsufficientDataError",
    "TrainingDivergedError",
    "ConfigurationError",
)


class LearnMMSEError(Exception):
    """
    Base class for every error raised by learnmmse.
    """


class InvalidArgumentError(LearnMMSEError, ValueError):
    """
    An argument falls outside of the documented domain of an operation.
    """


class SingularMatrixError(LearnMMSEError, np.linalg.LinAlgError):
    """
    A Hermitian system could not be solved.
    """


class DegenerateFilterError(LearnMMSEError, ArithmeticError):
    """
    ``I - S^T W`` has a vanishing determinant, so the filter has no finite bias.
    """


class DecompositionError(LearnMMSEError, ArithmeticError):
    """
    A filter could not be fitted by the diagonal DFT family.
    """

    def __init__(self, message: str, sample_index: int = None):
        if sample_index is not None:
            message = f"grid sample {sample_index}: {message}"

        super().__init__(message)
        self.sample_index = sample_index


class ChannelFileError(LearnMMSEError, ValueError):
    """
    A binary file could not be decoded. ``offset`` is the byte offset of the problem.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class BadMagicError(ChannelFileError):
    """
    The leading magic bytes do not identify the expected format.
    """


class VersionMismatchError(ChannelFileError):
    """
    The format version recorded in the header is not one we can read.
    """


class TruncatedPayloadError(ChannelFileError):
    """
    The payload is shorter or longer than the header promises.
    """


class ZeroPowerError(LearnMMSEError, ArithmeticError):
    """
    A dataset with zero average power cannot be normalized.
    """


class InsufficientDataError(LearnMMSEError, ValueError):
    """
    There are not enough items to fill the requested batches.
    """


class TrainingDivergedError(LearnMMSEError, ArithmeticError):
    """
    An optimizer step produced non-finite parameters.
    """


class ConfigurationError(LearnMMSEError, ValueError):
    """
    An experiment configuration could not be loaded or failed validation.
    """
