"""Recursive-descent parser for the rule language.

Grammar (``v`` and ``|`` both denote disjunction, ``%`` starts a comment)::

    program   ::= statement*
    statement ::= head [":-" body] "." | ":-" body "."
    head      ::= atom (("v" | "|") atom)*
    body      ::= item ("," item)*
    item      ::= ["not"] atom | Var "=" "#count" "(" Vars ":" atom ("," atom)* ")"
    atom      ::= pred ["(" term ("," term)* ")"]
    term      ::= Var | integer | @integer | const ["(" term ("," term)* ")"]

Predicates starting with ``#`` name function predicates of flattened programs.
Function terms are kept as :class:`~flatground.syntax.FunctionApp`; flattening
is the rewriter's job.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .syntax import Aggregate, Atom, Constant, FunctionApp, IdRef, Literal, Program, Rule, Variable

_TOKEN_SPEC = [
    ("SKIP", r"[ \t\r\n]+|%[^\n]*"),
    ("IF", r":-"),
    ("FPRED", r"#[a-z][A-Za-z0-9_]*"),
    ("IDREF", r"@[0-9]+"),
    ("VAR", r"[A-Z][A-Za-z0-9_]*"),
    ("IDENT", r"[a-z][A-Za-z0-9_]*"),
    ("INT", r"[0-9]+"),
    ("PUNCT", r"[(),.:=|]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        if kind != "SKIP":
            if kind == "PUNCT" or kind == "IF":
                kind = value
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = match.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def fail(self, message: str, expected=()):
        tok = self.tok
        where = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ParseError(f"{message} at {where}", tok.line, tok.column, expected)

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.fail("unexpected token", [kind])
        tok = self.tok
        self.pos += 1
        return tok

    def accept(self, kind: str) -> bool:
        if self.tok.kind == kind:
            self.pos += 1
            return True
        return False

    def program(self) -> Program:
        rules = []
        while self.tok.kind != "EOF":
            rules.append(self.statement())
        return Program(tuple(rules))

    def statement(self) -> Rule:
        line = self.tok.line
        head: list = []
        if self.tok.kind != ":-":
            head = self.head()
        body: list = []
        if self.accept(":-"):
            body = self.body()
        elif not head:
            self.fail("empty statement", ["IDENT", ":-"])
        self.expect(".")
        return Rule(tuple(head), tuple(body), line=line)

    def head(self) -> list:
        atoms = [self.atom()]
        while self.tok.kind == "|" or (self.tok.kind == "IDENT" and self.tok.text == "v"):
            self.pos += 1
            atoms.append(self.atom())
        return atoms

    def body(self) -> list:
        items = [self.body_item()]
        while self.accept(","):
            items.append(self.body_item())
        return items

    def body_item(self):
        tok = self.tok
        if tok.kind == "IDENT" and tok.text == "not" and self.peek().kind in ("IDENT", "FPRED"):
            self.pos += 1
            return Literal(self.atom(), negative=True)
        if tok.kind == "VAR":
            return self.aggregate()
        return Literal(self.atom())

    def aggregate(self) -> Aggregate:
        bound = Variable(self.expect("VAR").text)
        self.expect("=")
        if self.tok.kind != "FPRED" or self.tok.text != "#count":
            self.fail("unexpected token", ["#count"])
        self.pos += 1
        self.expect("(")
        local_vars = [Variable(self.expect("VAR").text)]
        while self.accept(","):
            local_vars.append(Variable(self.expect("VAR").text))
        self.expect(":")
        conj = [self.conjunct()]
        while self.accept(","):
            conj.append(self.conjunct())
        self.expect(")")
        if bound in local_vars:
            raise ParseError(f"aggregate variable {bound} is also a local variable", self.tok.line, self.tok.column)
        return Aggregate(bound, tuple(local_vars), tuple(conj))

    def conjunct(self) -> Literal:
        if self.tok.kind == "IDENT" and self.tok.text == "not" and self.peek().kind == "IDENT":
            self.fail("negation is not supported inside #count")
        return Literal(self.atom())

    def atom(self) -> Atom:
        tok = self.tok
        if tok.kind not in ("IDENT", "FPRED"):
            self.fail("expected an atom", ["IDENT", "FPRED"])
        self.pos += 1
        args: tuple = ()
        if self.accept("("):
            args = self.terms()
            self.expect(")")
            if tok.kind == "FPRED" and len(args) < 2:
                self.fail(f"function predicate {tok.text} needs an id and at least one argument")
        elif tok.kind == "FPRED":
            self.fail("function predicate without arguments", ["("])
        return Atom(tok.text, args)

    def terms(self) -> tuple:
        terms = [self.term()]
        while self.accept(","):
            terms.append(self.term())
        return tuple(terms)

    def term(self):
        tok = self.tok
        if tok.kind == "VAR":
            self.pos += 1
            return Variable(tok.text)
        if tok.kind == "INT":
            self.pos += 1
            return Constant(int(tok.text))
        if tok.kind == "IDREF":
            self.pos += 1
            return IdRef(int(tok.text[1:]))
        if tok.kind == "IDENT":
            self.pos += 1
            if self.accept("("):
                args = self.terms()
                self.expect(")")
                return FunctionApp(tok.text, args)
            return Constant(tok.text)
        self.fail("expected a term", ["VAR", "INT", "IDENT", "IDREF"])


def parse_program(text: str) -> Program:
    """Parse ``text`` into a :class:`Program`; raises :class:`ParseError`."""
    return _Parser(text).program()


def parse_rule(text: str) -> Rule:
    program = parse_program(text)
    if len(program.rules) != 1:
        raise ParseError(f"expected exactly one rule, found {len(program.rules)}", 1, 1)
    return program.rules[0]
