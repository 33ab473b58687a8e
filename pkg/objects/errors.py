"""Exception types raised by the medcap library.

Every error carries the process exit code the CLI reports for it.
"""


class MedcapError(Exception):
    exit_code: int = 1


class ConfigError(MedcapError, ValueError):
    exit_code = 2


class ConfigurationWarning(UserWarning):
    """A configuration that is valid but almost certainly not what was meant."""


class DataError(MedcapError):
    exit_code = 3


class SpecError(DataError, ValueError):
    pass


class ProvenanceError(DataError):
    pass


class PreprocessingError(DataError, ValueError):
    pass


class EmptyCorpusError(DataError, ValueError):
    pass


class EmptyTargetError(DataError, ValueError):
    pass


class NumericError(MedcapError, ArithmeticError):
    exit_code = 4


class DimensionError(MedcapError, ValueError):
    pass


class DegenerateRowError(MedcapError, ValueError):
    pass


class VocabularyError(MedcapError, IndexError):
    pass


class TapeError(MedcapError, RuntimeError):
    pass


class LengthError(MedcapError, ValueError):
    pass


class DecodingError(MedcapError, RuntimeError):
    pass
