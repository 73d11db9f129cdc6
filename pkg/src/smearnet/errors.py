"""Exception types shared across the pipeline."""


class SmearNetError(Exception):
    """Base class for every error raised by this package."""


class UnsupportedFormat(SmearNetError):
    pass


class CorruptImage(SmearNetError):
    pass


class IoFailure(SmearNetError, OSError):
    pass


class EmptyClass(SmearNetError):
    """A class directory or split has no usable images."""


class ShapeMismatch(SmearNetError, ValueError):
    pass


class SingularTransform(SmearNetError, ValueError):
    pass


class GradientMismatch(SmearNetError, AssertionError):
    pass


class Diverged(SmearNetError, ArithmeticError):
    """Training produced a NaN or infinite loss."""


class VersionMismatch(SmearNetError):
    pass


class ManifestCorrupt(SmearNetError):
    pass


class LengthMismatch(SmearNetError, ValueError):
    pass


class EmptyInput(SmearNetError, ValueError):
    pass
