"""Exception hierarchy for the dialectid toolkit.

Every error raised on purpose by this package derives from DialectIdError so
callers can catch toolkit failures with a single except clause while tests
can still pin down the exact failure class.
"""


class DialectIdError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(DialectIdError):
    """A config value or combination of values violates an invariant."""


class AudioFormatError(DialectIdError):
    """The file is not a readable RIFF/WAVE container."""


class UnsupportedEncodingError(DialectIdError):
    """The WAV file uses a codec other than PCM16 or IEEE float32."""


class TooShortError(DialectIdError):
    """The waveform is shorter than one analysis window."""


class DegenerateSignalError(DialectIdError):
    """The signal has zero power where nonzero power is required."""


class DegenerateNoiseError(DialectIdError):
    """The noise source has zero power and cannot be scaled to a target SNR."""


class DegenerateBatchError(DialectIdError):
    """Batch statistics were requested for a batch of fewer than two items."""


class DimensionError(DialectIdError):
    """Tensor or vector shapes are incompatible with the operation."""


class NormalizationError(DialectIdError):
    """A zero-norm vector cannot be length-normalized."""


class ManifestError(DialectIdError):
    """A manifest file is malformed or references missing data."""


class FileFormatError(DialectIdError):
    """Base class for binary container parse errors."""


class BadMagicError(FileFormatError):
    """The file does not start with the expected magic bytes."""


class VersionError(FileFormatError):
    """The container version is not supported by this reader."""


class TruncatedFileError(FileFormatError):
    """The payload ends before the length implied by the header."""


class KindMismatchError(DialectIdError):
    """A checkpoint was loaded into a model of a different architecture."""
