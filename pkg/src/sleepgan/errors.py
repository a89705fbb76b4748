"""Exception hierarchy shared by every stage of the pipeline."""


class SleepGanError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(SleepGanError):
    pass


class IngestError(SleepGanError):
    """A located problem in an event CSV.

    ``errors`` holds every problem found in the file (this error included),
    so callers can report all of them at once.
    """

    def __init__(self, message, line=None):
        self.line = line
        self.errors = [self]
        text = message if line is None else f"line {line}: {message}"
        super().__init__(text)


class MalformedRow(IngestError):
    pass


class CovariateConflict(IngestError):
    pass


class DuplicateEvent(CovariateConflict):
    pass


class DomainError(IngestError):
    """A value outside its allowed range (also used by the codec, without a line)."""


class ShapeMismatch(SleepGanError):
    pass


class NonFiniteGradient(SleepGanError):
    def __init__(self, message, iteration=None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class LengthMismatch(SleepGanError):
    pass


class EmptyBatch(SleepGanError):
    pass


class InsufficientData(SleepGanError):
    pass


class CodecMismatch(SleepGanError):
    pass


class CheckpointError(SleepGanError):
    pass


class BadMagic(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass


class ChecksumMismatch(CheckpointError):
    pass


class SchemaMismatch(SleepGanError):
    pass


class EmptyGroup(SleepGanError):
    pass


class ConfigError(SleepGanError):
    pass
