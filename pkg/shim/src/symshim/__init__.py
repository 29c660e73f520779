"""Torch capture shim: record a wrapped component's inputs/outputs to the
exchange format and optionally evaluate fitted expressions in its place."""

__version__ = "0.1.0"

from .compile import BankParseError, compile_expression
from .io import read_table, write_table
from .wrapper import WrappedBlock, wrap

__all__ = [
    "__version__",
    "BankParseError",
    "WrappedBlock",
    "compile_expression",
    "read_table",
    "wrap",
    "write_table",
]
