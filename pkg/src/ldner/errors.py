"""Exception hierarchy shared by every ldner module."""


class LdnerError(Exception):
    """Base class for all errors raised by ldner."""


class CorpusFormatError(LdnerError, ValueError):
    pass


class EmbeddingFormatError(LdnerError, ValueError):
    pass


class ConfigError(LdnerError, ValueError):
    pass


class EmptyIndexError(LdnerError):
    """No training token survived preprocessing and embedding lookup."""


class IndexFormatError(LdnerError, ValueError):
    pass


class DivergenceError(LdnerError, ArithmeticError):
    pass


class AlignmentError(LdnerError, ValueError):
    pass


class ChecksumMismatchError(LdnerError):
    """The embedding file differs from the one the model was trained with."""


class ModelFormatError(LdnerError, ValueError):
    pass


class NotAModelFileError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass
