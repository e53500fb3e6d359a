"""Exception types raised across the package."""


class FamGLMError(Exception):
    """Base class for all package errors."""


class NonSymmetric(FamGLMError, ValueError):
    pass


class NonFinite(FamGLMError, ValueError):
    pass


class NotPositiveDefinite(FamGLMError, ValueError):
    pass


class ShapeMismatch(FamGLMError, ValueError):
    pass


class EmptyCorpus(FamGLMError, ValueError):
    pass


class DegenerateSpectrum(FamGLMError, ValueError):
    pass


class RankTooLarge(FamGLMError, ValueError):
    pass


class SingularDesign(FamGLMError, ArithmeticError):
    pass


class InvalidResponse(FamGLMError, ValueError):
    pass


class WrongFamily(FamGLMError, ValueError):
    pass


class EmptyInput(FamGLMError, ValueError):
    pass


class CutoffOutOfRange(FamGLMError, ValueError):
    pass


class OneClassOnly(FamGLMError, ValueError):
    pass


class ZeroVarianceTruth(UserWarning):
    """Warned (not raised) when NMSE is undefined because the truth is constant."""


class ConfigMismatch(FamGLMError, ValueError):
    pass


class FoldTooSmall(FamGLMError, ValueError):
    pass


class UnsupportedFormat(FamGLMError, ValueError):
    pass


class MalformedFile(FamGLMError, ValueError):
    pass


class OutOfRange(FamGLMError, ValueError):
    pass


class InvalidTarget(FamGLMError, ValueError):
    pass


class CorpusLoadError(FamGLMError):
    """A manifest entry could not be loaded; carries the entry index and path."""

    def __init__(self, index, path, cause):
        self.index = index
        self.path = path
        self.cause = cause
        super().__init__(f"entry {index} ({path}): {cause}")


class BundleFormatError(FamGLMError, ValueError):
    pass
