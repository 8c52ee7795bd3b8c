"""Grounding of disjunctive logic programs with function symbols.

The pipeline is parse -> rewrite (aggregate extraction, flattening of function
terms into id-linked function atoms) -> body reordering -> grounding over
interned term tables.  :mod:`flatground.oracle` holds brute-force references.
"""

from .errors import (
    GroundingError,
    NestingExceeded,
    OracleTooLarge,
    ParseError,
    ProgramError,
    RewriteError,
    StratificationError,
)
from .grounder import GroundProgram, GroundRule, Grounder, ground_program
from .parser import parse_program
from .pipeline import flatten, ground
from .rewriter import FlatProgram, FlatRule, FunctionAtom, Provenance, flatten_rule, rewrite_program
from .syntax import print_program
from .terms import TermStore

__version__ = "0.1.0"
