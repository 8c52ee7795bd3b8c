"""Aggregate extraction and flattening of function terms.

Every function application ``f(t1..tn)`` in a rule is replaced by a fresh id
variable ``FN_k`` and a body atom ``#f(FN_k, t1'..tn')`` (a *function atom*),
innermost applications first.  Syntactically identical applications share one
id variable.  Ground facts are not flattened: their terms are interned straight
into the term store.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import NestingExceeded, RewriteError
from .syntax import (
    Aggregate,
    Atom,
    Constant,
    FunctionApp,
    IdRef,
    Literal,
    Program,
    Rule,
    Variable,
    atom_variables,
    subterms,
    term_variables,
)
from .terms import TermStore

_AUX_NAME = re.compile(r"aux[0-9]+")


class Provenance(enum.Enum):
    """Where the application behind a function atom occurs in its source rule.

    ``HEAD``: in the head (or negative literals) but in no positive body
    literal; the only kind that may mint new ids.  ``BODY``: in some positive
    body literal; lookup only.  ``NEGATIVE``: only under negation; an unknown
    term simply makes the negative literal true.
    """

    HEAD = "head"
    BODY = "body"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class FunctionAtom:
    symbol: str
    id_arg: object
    args: tuple
    provenance: Provenance = Provenance.BODY

    @property
    def predicate(self) -> str:
        return f"#{self.symbol}"

    def variables(self) -> set:
        found = set(term_variables(self.id_arg))
        for arg in self.args:
            found.update(term_variables(arg))
        return found

    def __str__(self) -> str:
        return f"#{self.symbol}({','.join(map(str, (self.id_arg, *self.args)))})"


@dataclass(frozen=True)
class FlatRule:
    head: tuple
    body: tuple
    origin: Optional[Rule] = field(default=None, compare=False, hash=False)

    @property
    def function_atoms(self) -> list[FunctionAtom]:
        return [item for item in self.body if isinstance(item, FunctionAtom)]

    def __str__(self) -> str:
        return str(Rule(self.head, self.body))


@dataclass
class FlatProgram:
    rules: list
    facts: list
    store: TermStore
    aux_predicates: frozenset = frozenset()

    def __str__(self) -> str:
        return format_flat_program(self)


def item_variables(item) -> set:
    if isinstance(item, Literal):
        return set(atom_variables(item.atom))
    if isinstance(item, FunctionAtom):
        return item.variables()
    if isinstance(item, Aggregate):
        found = {item.bound_var}
        for lit in item.conjunction:
            found.update(atom_variables(lit.atom))
        return found
    if isinstance(item, Atom):
        return set(atom_variables(item))
    raise TypeError(item)


def aggregate_globals(agg: Aggregate) -> list[Variable]:
    """Variables of the aggregate's conjunction that are not local to it."""
    seen: list[Variable] = []
    for lit in agg.conjunction:
        for var in atom_variables(lit.atom):
            if var not in agg.local_vars and var not in seen:
                seen.append(var)
    return seen


# -- aggregates ---------------------------------------------------------------


def rewrite_aggregates(program: Program) -> tuple[Program, frozenset]:
    """Move every ``#count`` conjunction into a fresh auxiliary rule.

    Returns the rewritten program and the set of auxiliary predicate keys.
    """
    used = {atom.predicate for rule in program.rules for atom in _rule_atoms(rule)}
    defined = {atom.key for rule in program.rules if rule.body for atom in rule.head}
    counter = itertools.count(1)
    aux_keys = set()
    rules = []
    for rule in program.rules:
        extra = []
        body = []
        for item in rule.body:
            if not isinstance(item, Aggregate):
                body.append(item)
                continue
            # output of an earlier rewrite: keep it, so rewriting is idempotent
            key = _extracted_key(rule, item)
            if key in defined:
                aux_keys.add(key)
                body.append(item)
                continue
            name = next(f"aux{i}" for i in counter if f"aux{i}" not in used)
            used.add(name)
            new_agg, aux_rule = _extract(rule, item, name)
            aux_keys.add(aux_rule.head[0].key)
            body.append(new_agg)
            extra.append(aux_rule)
        rules.append(Rule(rule.head, tuple(body), line=rule.line) if extra else rule)
        rules.extend(extra)
    return Program(tuple(rules)), frozenset(aux_keys)


def _rule_atoms(rule: Rule):
    yield from rule.head
    for item in rule.body:
        if isinstance(item, Literal):
            yield item.atom
        elif isinstance(item, Aggregate):
            for lit in item.conjunction:
                yield lit.atom


def _extracted_key(rule: Rule, agg: Aggregate):
    if len(agg.conjunction) != 1 or agg.conjunction[0].negative:
        return None
    atom = agg.conjunction[0].atom
    if not _AUX_NAME.fullmatch(atom.predicate):
        return None
    if atom.args != tuple(agg.local_vars) + tuple(_shared_globals(rule, agg)):
        return None
    return atom.key


def _shared_globals(rule: Rule, agg: Aggregate) -> list:
    outside = set()
    for atom in rule.head:
        outside.update(atom_variables(atom))
    for other in rule.body:
        if isinstance(other, Literal):
            outside.update(atom_variables(other.atom))
        elif isinstance(other, Aggregate):
            outside.add(other.bound_var)
    return [var for var in aggregate_globals(agg) if var in outside]


def _extract(rule: Rule, agg: Aggregate, name: str) -> tuple[Aggregate, Rule]:
    conj_vars = set()
    for lit in agg.conjunction:
        if lit.negative:
            raise RewriteError(f"line {rule.line}: negation inside #count is not supported")
        conj_vars.update(atom_variables(lit.atom))
    for var in agg.local_vars:
        if var not in conj_vars:
            raise RewriteError(f"line {rule.line}: local variable {var} of #count does not occur in its conjunction")
    if agg.bound_var in conj_vars:
        raise RewriteError(f"line {rule.line}: aggregate variable {agg.bound_var} occurs inside its conjunction")
    aux_atom = Atom(name, tuple(agg.local_vars) + tuple(_shared_globals(rule, agg)))
    aux_rule = Rule((aux_atom,), agg.conjunction, line=rule.line)
    return Aggregate(agg.bound_var, agg.local_vars, (Literal(aux_atom),)), aux_rule


# -- flattening ---------------------------------------------------------------


def _fresh_names(taken: set):
    for k in itertools.count(1):
        name = f"FN_{k}"
        if name not in taken:
            yield Variable(name)


def _as_function_atom(atom: Atom, line: int) -> FunctionAtom:
    if len(atom.args) < 2:
        raise RewriteError(f"line {line}: function predicate {atom.predicate} needs an id and arguments")
    if any(isinstance(arg, FunctionApp) for arg in atom.args):
        raise RewriteError(f"line {line}: function predicate {atom.predicate} must have flat arguments")
    return FunctionAtom(atom.predicate[1:], atom.args[0], tuple(atom.args[1:]))


def flatten_rule(rule: Rule) -> FlatRule:
    """Flatten all function applications of ``rule`` into function atoms."""
    for atom in rule.head:
        if atom.is_function_predicate:
            raise RewriteError(f"line {rule.line}: function predicate {atom.predicate} cannot occur in a head")
    for item in rule.body:
        if isinstance(item, Aggregate):
            conj = item.conjunction
            if len(conj) != 1 or any(isinstance(t, FunctionApp) for t in conj[0].atom.args):
                raise RewriteError(f"line {rule.line}: aggregates must be extracted before flattening")

    taken = {v.name for atom in rule.head for v in atom_variables(atom)}
    for item in rule.body:
        taken.update(v.name for v in item_variables(item))
    fresh = _fresh_names(taken)
    ids: dict[FunctionApp, Variable] = {}
    new_atoms: list[FunctionAtom] = []

    def flat(term):
        if not isinstance(term, FunctionApp):
            return term
        args = tuple(flat(arg) for arg in term.args)
        var = ids.get(term)
        if var is None:
            var = ids[term] = next(fresh)
            new_atoms.append(FunctionAtom(term.symbol, var, args))
        return var

    def flat_atom(atom: Atom) -> Atom:
        return Atom(atom.predicate, tuple(flat(arg) for arg in atom.args))

    body = []
    for item in rule.body:
        if isinstance(item, Literal):
            if item.atom.is_function_predicate:
                if item.negative:
                    raise RewriteError(f"line {rule.line}: function predicates cannot be negated")
                body.append(_as_function_atom(item.atom, rule.line))
            else:
                body.append(Literal(flat_atom(item.atom), item.negative))
        else:
            body.append(item)
    head = tuple(flat_atom(atom) for atom in rule.head)

    last_positive = max(
        (i for i, item in enumerate(body) if isinstance(item, Literal) and not item.negative),
        default=-1,
    )
    body[last_positive + 1:last_positive + 1] = new_atoms
    return FlatRule(head, classify_provenance(head, tuple(body)), origin=rule)


def classify_provenance(head: tuple, body: tuple) -> tuple:
    """Return ``body`` with the provenance of every function atom recomputed."""
    atoms = {fa.id_arg: fa for fa in body if isinstance(fa, FunctionAtom) and isinstance(fa.id_arg, Variable)}
    positive = set()
    for item in body:
        if isinstance(item, Literal) and not item.negative:
            positive.update(atom_variables(item.atom))
    body_ids = {var for var in atoms if var in positive}
    _close_over_args(body_ids, atoms)
    head_vars = {var for atom in head for var in atom_variables(atom)}
    head_ids = {var for var in atoms if var in head_vars and var not in body_ids}
    _close_over_args(head_ids, atoms, exclude=body_ids)

    def tagged(item):
        if not isinstance(item, FunctionAtom):
            return item
        if not isinstance(item.id_arg, Variable) or item.id_arg in body_ids:
            kind = Provenance.BODY
        elif item.id_arg in head_ids:
            kind = Provenance.HEAD
        else:
            kind = Provenance.NEGATIVE
        return FunctionAtom(item.symbol, item.id_arg, item.args, kind)

    return tuple(tagged(item) for item in body)


def _close_over_args(ids: set, atoms: dict, exclude=frozenset()) -> None:
    pending = list(ids)
    while pending:
        for arg in atoms[pending.pop()].args:
            if arg in atoms and arg not in ids and arg not in exclude:
                ids.add(arg)
                pending.append(arg)


def bindable_variables(fr: FlatRule) -> set:
    """Variables a left-to-right matcher can bind, in any admissible order."""
    bound = set()
    for item in fr.body:
        if isinstance(item, Literal) and not item.negative:
            bound.update(atom_variables(item.atom))
    changed = True
    while changed:
        changed = False
        for item in fr.body:
            if isinstance(item, FunctionAtom):
                id_vars = set(term_variables(item.id_arg))
                arg_vars = item.variables() - id_vars
                if id_vars <= bound and not arg_vars <= bound:
                    bound |= arg_vars
                    changed = True
                elif arg_vars <= bound and not id_vars <= bound:
                    bound |= id_vars
                    changed = True
            elif isinstance(item, Aggregate) and item.bound_var not in bound:
                if set(aggregate_globals(item)) <= bound:
                    bound.add(item.bound_var)
                    changed = True
    return bound


def check_safety(fr: FlatRule) -> None:
    unsafe = set()
    for atom in fr.head:
        unsafe.update(atom_variables(atom))
    for item in fr.body:
        if isinstance(item, Aggregate):
            unsafe.add(item.bound_var)
            unsafe.update(aggregate_globals(item))
        else:
            unsafe.update(item_variables(item))
    unsafe -= bindable_variables(fr)
    if unsafe:
        names = ", ".join(sorted(v.name for v in unsafe))
        where = f"line {fr.origin.line}: " if fr.origin is not None and fr.origin.line else ""
        raise RewriteError(f"{where}unsafe variables {names} in rule {fr.origin or fr}")


def unflatten_rule(fr: FlatRule) -> Rule:
    """Substitute function atoms back into nested terms."""
    atoms = {fa.id_arg: fa for fa in fr.function_atoms}
    used = set()
    for atom in fr.head:
        used.update(atom_variables(atom))
    for item in fr.body:
        if not isinstance(item, FunctionAtom):
            used.update(item_variables(item))
        else:
            used.update(item.args)

    def build(term, depth=0):
        fa = atoms.get(term)
        if fa is None:
            return term
        if depth > len(atoms):
            raise ValueError(f"cyclic function atoms around {term}")
        return FunctionApp(fa.symbol, tuple(build(arg, depth + 1) for arg in fa.args))

    for var in atoms:
        if var not in used:
            raise ValueError(f"dangling id variable {var} in {fr}")

    def unflat_atom(atom: Atom) -> Atom:
        return Atom(atom.predicate, tuple(build(arg) for arg in atom.args))

    body = []
    for item in fr.body:
        if isinstance(item, Literal):
            body.append(Literal(unflat_atom(item.atom), item.negative))
        elif not isinstance(item, FunctionAtom):
            body.append(item)
    return Rule(tuple(unflat_atom(atom) for atom in fr.head), tuple(body))


# -- facts --------------------------------------------------------------------


def _intern_fact_term(term, store: TermStore, max_nesting, labels: dict):
    if isinstance(term, Constant):
        return store.intern_constant(term.value)
    if isinstance(term, IdRef):
        try:
            return labels[term.label]
        except KeyError:
            raise RewriteError(f"undefined id {term}") from None
    if isinstance(term, FunctionApp):
        args = tuple(_intern_fact_term(arg, store, max_nesting, labels) for arg in term.args)
        return store.insert_function(term.symbol, args, max_nesting)
    raise RewriteError(f"fact contains non-ground term {term}")


def flatten_fact(atom: Atom, store: TermStore, max_nesting: Optional[int] = None, labels=None) -> tuple:
    """Intern a ground fact's terms; returns ``(predicate, id tuple)``."""
    labels = {} if labels is None else labels
    try:
        args = tuple(_intern_fact_term(arg, store, max_nesting, labels) for arg in atom.args)
    except NestingExceeded as exc:
        raise NestingExceeded(exc.symbol, exc.level, exc.bound, context=f"fact {atom}") from None
    return (atom.predicate, args)


def _define_label(atom: Atom, store: TermStore, max_nesting, labels: dict) -> None:
    fa = _as_function_atom(atom, 0)
    if not isinstance(fa.id_arg, IdRef):
        raise RewriteError(f"function table fact {atom} needs an @id as first argument")
    ids = flatten_fact(Atom(atom.predicate, fa.args), store, max_nesting, labels)[1]
    labels[fa.id_arg.label] = store.insert_function(fa.symbol, ids, max_nesting)


def _define_labels(atoms: list, store: TermStore, max_nesting, labels: dict) -> None:
    """Define ``@k`` table facts in any order; each may use ids defined by others."""
    pending = list(atoms)
    while pending:
        stuck = []
        for atom in pending:
            try:
                _define_label(atom, store, max_nesting, labels)
            except RewriteError:
                stuck.append(atom)
        if len(stuck) == len(pending):
            _define_label(stuck[0], store, max_nesting, labels)
        pending = stuck


def _check_function_arities(program: Program) -> None:
    arity: dict[str, int] = {}

    def visit(term, line):
        for app in subterms(term):
            known = arity.setdefault(app.symbol, len(app.args))
            if known != len(app.args):
                raise RewriteError(f"line {line}: function {app.symbol} used with arities {known} and {len(app.args)}")

    for rule in program.rules:
        for atom in _rule_atoms(rule):
            if atom.is_function_predicate:
                known = arity.setdefault(atom.predicate[1:], len(atom.args) - 1)
                if known != len(atom.args) - 1:
                    raise RewriteError(f"line {rule.line}: function predicate {atom.predicate} has wrong arity")
            for arg in atom.args:
                visit(arg, rule.line)


def _relabel(term, store: TermStore, labels: dict):
    if isinstance(term, IdRef):
        try:
            return IdRef(store.label(labels[term.label]))
        except KeyError:
            raise RewriteError(f"undefined id {term}") from None
    return term


def _relabel_item(item, store, labels):
    if isinstance(item, Literal):
        atom = item.atom
        return Literal(Atom(atom.predicate, tuple(_relabel(t, store, labels) for t in atom.args)), item.negative)
    if isinstance(item, FunctionAtom):
        return FunctionAtom(
            item.symbol,
            _relabel(item.id_arg, store, labels),
            tuple(_relabel(t, store, labels) for t in item.args),
            item.provenance,
        )
    if isinstance(item, Atom):
        return Atom(item.predicate, tuple(_relabel(t, store, labels) for t in item.args))
    return item


def rewrite_program(
    program: Program,
    store: Optional[TermStore] = None,
    max_nesting: Optional[int] = None,
) -> FlatProgram:
    """Aggregate extraction, then flattening of rules and interning of facts."""
    store = TermStore() if store is None else store
    _check_function_arities(program)
    program, aux = rewrite_aggregates(program)
    labels: dict[int, int] = {}
    tables, ground, others = [], [], []
    for rule in program.rules:
        if rule.is_fact and not any(True for _ in atom_variables(rule.head[0])):
            (tables if rule.head[0].is_function_predicate else ground).append(rule.head[0])
        else:
            others.append(rule)
    _define_labels(tables, store, max_nesting, labels)
    facts = [flatten_fact(atom, store, max_nesting, labels) for atom in ground]
    rules = []
    for rule in others:
        fr = flatten_rule(rule)
        if labels or any(isinstance(t, IdRef) for a in _rule_atoms(rule) for t in a.args):
            fr = FlatRule(
                tuple(_relabel_item(a, store, labels) for a in fr.head),
                tuple(_relabel_item(i, store, labels) for i in fr.body),
                origin=rule,
            )
        check_safety(fr)
        rules.append(fr)
    return FlatProgram(rules, facts, store, aux)


def format_ground_atom(atom: tuple, store: TermStore) -> str:
    predicate, args = atom
    if not args:
        return predicate
    return f"{predicate}({','.join(store.show(a) for a in args)})"


def format_flat_program(fp: FlatProgram) -> str:
    store = fp.store
    lines = []
    for tid in store.function_ids():
        symbol, args = store.function_of(tid)
        shown = ",".join(store.show(a) for a in (tid, *args))
        lines.append(f"#{symbol}({shown}).")
    lines.extend(f"{format_ground_atom(fact, store)}." for fact in fp.facts)
    lines.extend(str(rule) for rule in fp.rules)
    return "".join(f"{line}\n" for line in lines)
