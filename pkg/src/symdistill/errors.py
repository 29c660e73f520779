"""Exception types shared across the package."""


class SymDistillError(Exception):
    """Base class for all errors raised by this package."""


class ExpressionError(SymDistillError):
    """Structural problem with an expression tree or operator set."""


class ParseError(ExpressionError):
    """Expression text does not conform to the grammar.

    Carries the byte offset of the offending token.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ConfigError(SymDistillError):
    """Invalid configuration value or flag combination."""


class DataError(SymDistillError):
    """Invalid dataset contents, shapes, or on-disk payloads."""
