""" Exception types shared by the MTL toolchain and the adoption pipeline """


class MtlError(Exception):
    """Base class for every error raised by this project."""


class LexError(MtlError):
    """Raised by the lexer; carries the (line, col) where scanning stopped."""

    def __init__(self, message, span):
        super().__init__(f"{message} at line {span[0]}, column {span[1]}")
        self.span = span
        self.line = span[0]


class ParseError(MtlError):
    """Raised by the parser at the first offending token."""

    def __init__(self, message, span):
        super().__init__(f"{message} at line {span[0]}, column {span[1]}")
        self.span = span
        self.line = span[0]


class ExtractionError(MtlError):
    """The test case does not encode a usable two-invocation MR."""


class SkeletonMismatchError(MtlError):
    """A transformation does not match the derived skeleton."""


class ResolutionError(MtlError):
    """Callee names in a transformation could not be resolved."""

    def __init__(self, names):
        self.names = sorted(set(names))
        super().__init__(f"unresolved names: {', '.join(self.names)}")


class BackendError(MtlError):
    """A generation backend failed (transport, missing fixtures, prompt drift)."""


class ConfigError(MtlError):
    """Invalid or unknown configuration."""


class EvaluationError(MtlError):
    """An evaluation precondition failed, e.g. a suite fails on the unmutated SUT."""


class SliceError(MtlError):
    """A slicing target is never defined in the block."""
