"""Security-annotated value-passing CCS: parsing, transition systems,
bisimulation checks, non-interference properties and two type systems."""
from __future__ import annotations

from .core import Program, SecurityLattice
from .parser import ParseError, format_process, parse, parse_process, pretty_print

__version__ = "0.1.0"

__all__ = [
    "ParseError",
    "Program",
    "SecurityLattice",
    "format_process",
    "parse",
    "parse_process",
    "pretty_print",
    "__version__",
]
