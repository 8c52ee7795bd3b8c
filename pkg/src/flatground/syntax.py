"""Surface syntax: terms, atoms, literals, aggregates, rules and programs.

All nodes are frozen dataclasses, so structural equality and hashing come for
free.  ``format_*`` helpers render nodes back to the concrete syntax accepted by
:mod:`flatground.parser`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union


@dataclass(frozen=True)
class Constant:
    value: Union[str, int]

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FunctionApp:
    symbol: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.symbol}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class IdRef:
    """A reference to an interned function term, written ``@k``."""

    label: int

    def __str__(self) -> str:
        return f"@{self.label}"


Term = Union[Constant, Variable, FunctionApp, IdRef]


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple = ()

    @property
    def key(self) -> tuple[str, int]:
        return (self.predicate, len(self.args))

    @property
    def is_function_predicate(self) -> bool:
        return self.predicate.startswith("#")

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.args))})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negative: bool = False

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negative else str(self.atom)


@dataclass(frozen=True)
class Aggregate:
    """``Var = #count(Locals : Conjunction)``."""

    bound_var: Variable
    local_vars: tuple
    conjunction: tuple

    def __str__(self) -> str:
        locals_ = ",".join(map(str, self.local_vars))
        conj = ", ".join(map(str, self.conjunction))
        return f"{self.bound_var} = #count({locals_}: {conj})"


@dataclass(frozen=True)
class Rule:
    head: tuple = ()
    body: tuple = ()
    line: int = field(default=0, compare=False, hash=False)

    @property
    def is_fact(self) -> bool:
        return len(self.head) == 1 and not self.body

    def __str__(self) -> str:
        head = " v ".join(map(str, self.head))
        if not self.body:
            return f"{head}."
        body = ", ".join(map(str, self.body))
        return f"{head} :- {body}." if head else f":- {body}."


@dataclass(frozen=True)
class Program:
    rules: tuple = ()

    def __str__(self) -> str:
        return print_program(self)


def print_program(program: Program) -> str:
    return "".join(f"{rule}\n" for rule in program.rules)


def term_variables(term) -> Iterator[Variable]:
    if isinstance(term, Variable):
        yield term
    elif isinstance(term, FunctionApp):
        for arg in term.args:
            yield from term_variables(arg)


def atom_variables(atom: Atom) -> Iterator[Variable]:
    for arg in atom.args:
        yield from term_variables(arg)


def is_ground(term) -> bool:
    return next(term_variables(term), None) is None


def subterms(term) -> Iterator[FunctionApp]:
    """Function applications inside ``term``, innermost first."""
    if isinstance(term, FunctionApp):
        for arg in term.args:
            yield from subterms(arg)
        yield term


def nesting_level(term) -> int:
    if isinstance(term, FunctionApp):
        return 1 + max(nesting_level(arg) for arg in term.args)
    return 0


def substitute(term, binding: dict):
    if isinstance(term, Variable):
        return binding.get(term, term)
    if isinstance(term, FunctionApp):
        return FunctionApp(term.symbol, tuple(substitute(a, binding) for a in term.args))
    return term


def substitute_atom(atom: Atom, binding: dict) -> Atom:
    return Atom(atom.predicate, tuple(substitute(a, binding) for a in atom.args))
