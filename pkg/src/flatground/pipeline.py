"""End-to-end helpers: text or AST in, flat or ground program out."""

from __future__ import annotations

from typing import Optional, Union

from .grounder import GroundProgram, Grounder
from .parser import parse_program
from .reorder import reorder_program
from .rewriter import FlatProgram, rewrite_program
from .syntax import Program
from .terms import TermStore


def _as_program(source: Union[str, Program]) -> Program:
    return parse_program(source) if isinstance(source, str) else source


def flatten(source: Union[str, Program], max_nesting: Optional[int] = None, reorder: bool = False) -> FlatProgram:
    fp = rewrite_program(_as_program(source), TermStore(), max_nesting)
    return reorder_program(fp) if reorder else fp


def ground(
    source: Union[str, Program],
    max_nesting: Optional[int] = None,
    backjump: bool = True,
    promote: bool = True,
) -> GroundProgram:
    """Parse, rewrite, reorder and ground ``source``."""
    fp = reorder_program(rewrite_program(_as_program(source), TermStore(), max_nesting), promote=promote)
    return Grounder(fp.store, max_nesting=max_nesting, backjump=backjump).ground(fp)
