# lrgmp - Exception hierarchy
# AGPL-3.0-or-later
#
# Every error raised by the library derives from LrgmpError and from
# ValueError, so callers may catch either. The CLI maps them to exit code 2.


class LrgmpError(Exception):
    """Base class for all lrgmp errors."""


class ShapeError(LrgmpError, ValueError):
    """Dimension mismatch between matrices, messages or prompts."""


class ParameterError(LrgmpError, ValueError):
    """Scalar parameter outside its valid range."""


class GraphError(LrgmpError, ValueError):
    """Edge list / CSR contract violation."""


class ParseError(LrgmpError, ValueError):
    """JSON document does not match its schema.

    The message starts with the JSON pointer of the offending value.
    """

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


class UnsupportedSpecError(LrgmpError, ValueError):
    """Prompt family not applicable to the given graph (e.g. d_E == 0)."""


class ConfigError(LrgmpError, ValueError):
    """Invalid training or experiment configuration."""
