"""Bottom-up instantiation of flat programs.

Components of the dependency graph are grounded in topological order; inside a
component, rules are re-matched until no positive body table grows.  Matching
is depth-first and left to right over the reordered body:

* standard atoms enumerate tuples of their predicate table;
* function atoms are functional, so they are matched exactly once through the
  term store; on backtracking they are skipped rather than retried;
* a function atom of head provenance whose arguments are bound but whose term
  is unknown mints a tentative id, committed only when the whole body matches;
* negative literals and aggregates are evaluated against earlier components.

Ground instances are simplified on the fly: established facts leave positive
bodies, function atoms never reach the output, and an instance whose negative
literal is a fact is dropped.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .depgraph import build_dependency_graph, evaluation_order, rule_component
from .errors import GroundingError, NestingExceeded
from .rewriter import FlatProgram, FlatRule, FunctionAtom, Provenance, format_ground_atom
from .syntax import Aggregate, Atom, Constant, IdRef, Literal, Variable
from .terms import ABSENT, TermId, TermStore

log = logging.getLogger(__name__)

GroundAtom = tuple  # (predicate, tuple of TermIds)


@dataclass(frozen=True)
class GroundRule:
    head: tuple
    body_pos: tuple = ()
    body_neg: tuple = ()

    @property
    def is_fact(self) -> bool:
        return len(self.head) == 1 and not self.body_pos and not self.body_neg

    def canonical(self) -> "GroundRule":
        """Same rule with each literal group sorted; for set comparison."""

        def norm(atoms):
            return tuple(sorted(set(atoms), key=str))

        return GroundRule(norm(self.head), norm(self.body_pos), norm(self.body_neg))

    def format(self, show: Callable) -> str:
        head = " v ".join(show(a) for a in self.head)
        body = [show(a) for a in self.body_pos] + [f"not {show(a)}" for a in self.body_neg]
        if not body:
            return f"{head}." if head else ":- ."
        return f"{head} :- {', '.join(body)}." if head else f":- {', '.join(body)}."


class MatchOutcome(enum.Enum):
    MATCHED = "matched"
    MATCHED_NEW = "matched-new"
    FAILED = "failed"


class Binding:
    """Variable assignment with an undo trail."""

    def __init__(self):
        self.values: dict = {}
        self._trail: list = []

    def value(self, term) -> Optional[TermId]:
        if isinstance(term, Variable):
            return self.values.get(term)
        return term

    def bind(self, var: Variable, value: TermId) -> None:
        self.values[var] = value
        self._trail.append(var)

    def mark(self) -> int:
        return len(self._trail)

    def undo(self, mark: int) -> None:
        while len(self._trail) > mark:
            del self.values[self._trail.pop()]


class PredicateTable:
    """Ordered tuple set with lazily built per-position indexes."""

    def __init__(self):
        self.tuples: dict = {}
        self._rows: list = []
        self._index: dict = {}

    def __len__(self) -> int:
        return len(self._rows)

    def __contains__(self, tup) -> bool:
        return tup in self.tuples

    def __iter__(self):
        return iter(self._rows)

    def add(self, tup: tuple) -> bool:
        if tup in self.tuples:
            return False
        self.tuples[tup] = None
        self._rows.append(tup)
        for pos, index in self._index.items():
            index.setdefault(tup[pos], []).append(tup)
        return True

    def candidates(self, pattern: list) -> list:
        for pos, value in enumerate(pattern):
            if value is not None:
                index = self._index.get(pos)
                if index is None:
                    index = self._index[pos] = {}
                    for row in self._rows:
                        index.setdefault(row[pos], []).append(row)
                rows = index.get(value, ())
                return rows[:]
        return self._rows[:]


def simplify_ground_rule(head, body_pos, body_neg, facts, possible=None) -> Optional[GroundRule]:
    """Simplify one instantiation; ``None`` means the instance is dropped."""
    if any(atom in facts for atom in body_neg):
        return None
    pos = tuple(dict.fromkeys(a for a in body_pos if a not in facts))
    neg = tuple(dict.fromkeys(a for a in body_neg if possible is None or possible(a)))
    return GroundRule(tuple(dict.fromkeys(head)), pos, neg)


def match_function_atom(fa: FunctionAtom, binding: Binding, store: TermStore, max_nesting=None) -> MatchOutcome:
    """Match one function atom under ``binding`` (mutated on success).

    With the id bound the atom is checked against the stored term and binds the
    remaining arguments.  With only the arguments bound it looks the term up;
    an unknown term is minted tentatively for head provenance, marked absent
    for negative provenance, and fails otherwise.
    """
    id_value = binding.value(fa.id_arg)
    if id_value is not None and id_value != ABSENT:
        record = store.function_of(id_value)
        if record is None or record[0] != fa.symbol or len(record[1]) != len(fa.args):
            return MatchOutcome.FAILED
        for term, actual in zip(fa.args, record[1]):
            current = binding.value(term)
            if current is None:
                binding.bind(term, actual)
            elif current != actual:
                return MatchOutcome.FAILED
        return MatchOutcome.MATCHED
    args = tuple(binding.value(arg) for arg in fa.args)
    if None in args:
        raise GroundingError(f"function atom {fa} reached with neither id nor arguments bound")
    if ABSENT in args:
        if fa.provenance is not Provenance.NEGATIVE:
            return MatchOutcome.FAILED
        return _bind_id(fa, binding, ABSENT, MatchOutcome.MATCHED)
    found = store.lookup_function(fa.symbol, args)
    if found is not None:
        return _bind_id(fa, binding, found, MatchOutcome.MATCHED)
    if fa.provenance is Provenance.HEAD:
        try:
            fresh = store.insert_function(fa.symbol, args, max_nesting, tentative=True)
        except NestingExceeded:
            return MatchOutcome.FAILED
        return _bind_id(fa, binding, fresh, MatchOutcome.MATCHED_NEW)
    if fa.provenance is Provenance.NEGATIVE:
        return _bind_id(fa, binding, ABSENT, MatchOutcome.MATCHED)
    return MatchOutcome.FAILED


def _bind_id(fa, binding, value, outcome):
    current = binding.value(fa.id_arg)
    if current is None:
        binding.bind(fa.id_arg, value)
    elif current != value:
        return MatchOutcome.FAILED
    return outcome


@dataclass
class GroundProgram:
    facts: list
    rules: list
    store: TermStore
    aux_predicates: frozenset = frozenset()
    stats: dict = field(default_factory=dict)

    def show_atom(self, atom, ids: bool = False) -> str:
        if ids:
            return format_ground_atom(atom, self.store)
        return str(self.readback_atom(atom))

    def readback_atom(self, atom) -> Atom:
        predicate, args = atom
        return Atom(predicate, tuple(self.store.to_term(a) for a in args))

    def readback(self, hide_aux: bool = True) -> "ReadbackProgram":
        aux = self.aux_predicates if hide_aux else frozenset()

        def visible(atom):
            return (atom[0], len(atom[1])) not in aux

        facts = frozenset(self.readback_atom(a) for a in self.facts if visible(a))
        rules = frozenset(
            GroundRule(
                tuple(self.readback_atom(a) for a in rule.head),
                tuple(self.readback_atom(a) for a in rule.body_pos),
                tuple(self.readback_atom(a) for a in rule.body_neg),
            )
            for rule in self.rules
            if all(visible(a) for a in rule.head)
        )
        return ReadbackProgram.of(facts, rules)

    def format(self, show_ids: bool = False) -> str:
        def show(atom):
            return self.show_atom(atom, show_ids)

        lines = [f"{show(fact)}." for fact in self.facts]
        lines.extend(rule.format(show) for rule in self.rules)
        if show_ids:
            for symbol in self.store.symbols():
                for args, tid in self.store.table(symbol):
                    shown = ",".join(self.store.show(a) for a in args)
                    lines.append(f"{symbol}: <{shown}> -> {self.store.show(tid)}")
        return "".join(f"{line}\n" for line in lines)


@dataclass(frozen=True)
class ReadbackProgram:
    """A ground program over nested terms; comparable across grounders."""

    facts: frozenset
    rules: frozenset

    @classmethod
    def of(cls, facts, rules) -> "ReadbackProgram":
        return cls(frozenset(facts), frozenset(rule.canonical() for rule in rules))


class _CompiledRule:
    def __init__(self, rule: FlatRule, store: TermStore):
        self.source = rule
        self.head = [self._atom(a, store) for a in rule.head]
        self.body = []
        for item in rule.body:
            if isinstance(item, Literal):
                self.body.append(Literal(self._atom(item.atom, store), item.negative))
            elif isinstance(item, FunctionAtom):
                self.body.append(
                    FunctionAtom(
                        item.symbol,
                        _compile_term(item.id_arg, store),
                        tuple(_compile_term(t, store) for t in item.args),
                        item.provenance,
                    )
                )
            elif isinstance(item, Aggregate):
                (lit,) = item.conjunction
                self.body.append(Aggregate(item.bound_var, item.local_vars, (Literal(self._atom(lit.atom, store)),)))
            else:
                raise TypeError(item)
        self.positive_keys = [
            i.atom.key for i in self.body if isinstance(i, Literal) and not i.negative
        ]

    @staticmethod
    def _atom(atom: Atom, store: TermStore) -> Atom:
        return Atom(atom.predicate, tuple(_compile_term(t, store) for t in atom.args))


def _compile_term(term, store: TermStore):
    if isinstance(term, Variable):
        return term
    if isinstance(term, Constant):
        return store.intern_constant(term.value)
    if isinstance(term, IdRef):
        return store.resolve_label(term.label)
    raise GroundingError(f"unexpected term {term} in a flat rule")


class Grounder:
    """Instantiates one flat program.

    ``backjump=False`` switches function atoms to plain backtracking: they
    are then enumerated like ordinary relations over their function table.
    """

    def __init__(self, store: TermStore, max_nesting: Optional[int] = None, backjump: bool = True):
        self.store = store
        self.max_nesting = max_nesting
        self.backjump = backjump
        self.tables: dict = {}
        self.facts: dict = {}
        self.rules: dict = {}
        self.instantiations = 0
        self.backjumps = 0

    def table(self, key) -> PredicateTable:
        table = self.tables.get(key)
        if table is None:
            table = self.tables[key] = PredicateTable()
        return table

    def possible(self, atom) -> bool:
        table = self.tables.get((atom[0], len(atom[1])))
        return table is not None and atom[1] in table

    def add_fact(self, atom) -> None:
        self.facts[atom] = None
        self.table((atom[0], len(atom[1]))).add(atom[1])

    # -- driver ---------------------------------------------------------

    def ground(self, fp: FlatProgram) -> GroundProgram:
        for fact in fp.facts:
            self.add_fact(fact)
        graph = build_dependency_graph(fp.rules, fp.facts)
        order = evaluation_order(graph)
        position = {key: i for i, component in enumerate(order) for key in component}
        by_component: dict[int, list] = {}
        constraints = []
        for rule in fp.rules:
            compiled = _CompiledRule(rule, self.store)
            if rule.head:
                by_component.setdefault(rule_component(rule, position), []).append(compiled)
            else:
                constraints.append(compiled)
        for index in range(len(order)):
            rules = by_component.get(index)
            if rules:
                self._ground_component(rules)
        if constraints:
            self._ground_component(constraints)
        return GroundProgram(
            facts=list(self.facts),
            rules=list(self.rules),
            store=self.store,
            aux_predicates=fp.aux_predicates,
            stats=self.statistics(),
        )

    def _ground_component(self, rules: list) -> None:
        seen: dict = {}
        start = len(self.rules)
        while True:
            progressed = False
            for i, rule in enumerate(rules):
                signature = tuple(len(self.table(key)) for key in rule.positive_keys)
                if seen.get(i) == signature:
                    continue
                seen[i] = signature
                progressed = True
                self.match_rule(rule, self._emit)
            if not progressed:
                break
        self._resimplify(list(self.rules)[start:])

    def _resimplify(self, candidates: list) -> None:
        changed = True
        while changed:
            changed = False
            for rule in candidates:
                if rule not in self.rules:
                    continue
                new = simplify_ground_rule(rule.head, rule.body_pos, rule.body_neg, self.facts)
                if new == rule:
                    continue
                changed = True
                del self.rules[rule]
                if new is None:
                    continue
                if new.is_fact:
                    self.add_fact(new.head[0])
                elif new not in self.rules:
                    self.rules[new] = None
                    candidates.append(new)

    def _emit(self, head, pos, neg) -> None:
        self.instantiations += 1
        rule = simplify_ground_rule(head, pos, neg, self.facts, self.possible)
        if rule is None:
            return
        for atom in rule.head:
            self.table((atom[0], len(atom[1]))).add(atom[1])
        if rule.is_fact:
            self.add_fact(rule.head[0])
        else:
            self.rules.setdefault(rule, None)

    # -- matching -------------------------------------------------------

    def match_rule(self, rule: _CompiledRule, emit: Callable) -> None:
        """Enumerate all instantiations of ``rule``, calling ``emit`` for each."""
        binding = Binding()
        pos: list = []
        neg: list = []
        body = rule.body
        store = self.store

        def ground_atom(atom: Atom):
            return (atom.predicate, tuple(binding.value(t) for t in atom.args))

        def step(i: int) -> None:
            if i == len(body):
                store.commit_pending()
                emit(tuple(ground_atom(a) for a in rule.head), tuple(pos), tuple(neg))
                return
            item = body[i]
            if isinstance(item, Literal):
                if item.negative:
                    self._match_negative(item, ground_atom, neg, step, i)
                else:
                    self._match_positive(item, binding, pos, step, i)
            elif isinstance(item, FunctionAtom):
                if self.backjump:
                    self._match_function(item, binding, step, i)
                else:
                    self._scan_function(item, binding, step, i)
            else:
                self._match_aggregate(item, binding, step, i)

        step(0)

    def _match_positive(self, lit: Literal, binding: Binding, pos: list, step, i: int) -> None:
        args = lit.atom.args
        table = self.tables.get(lit.atom.key)
        if table is None:
            return
        pattern = [binding.value(t) for t in args]
        for row in table.candidates(pattern):
            mark = binding.mark()
            if _unify(args, row, binding):
                pos.append((lit.atom.predicate, row))
                step(i + 1)
                pos.pop()
            binding.undo(mark)

    def _match_negative(self, lit: Literal, ground_atom, neg: list, step, i: int) -> None:
        atom = ground_atom(lit.atom)
        if None in atom[1]:
            raise GroundingError(f"negative literal {lit} reached with unbound variables")
        if ABSENT in atom[1] or not self.possible(atom):
            step(i + 1)
        elif atom not in self.facts:
            neg.append(atom)
            step(i + 1)
            neg.pop()

    def _match_function(self, fa: FunctionAtom, binding: Binding, step, i: int) -> None:
        mark = binding.mark()
        trail = self.store.mark_trail()
        if match_function_atom(fa, binding, self.store, self.max_nesting) is not MatchOutcome.FAILED:
            step(i + 1)
            # a functional atom admits no second match: jump back past it
            self.backjumps += 1
        self.store.rollback(trail)
        binding.undo(mark)

    def _scan_function(self, fa: FunctionAtom, binding: Binding, step, i: int) -> None:
        """Plain backtracking: treat the function table as an ordinary relation."""
        terms = (fa.id_arg, *fa.args)
        matched = False
        for args, tid in self.store.table(fa.symbol):
            mark = binding.mark()
            if _unify(terms, (tid, *args), binding):
                matched = True
                step(i + 1)
            binding.undo(mark)
        if matched or binding.value(fa.id_arg) is not None:
            return
        # no stored tuple: invent or mark absent as the functional path would
        mark = binding.mark()
        trail = self.store.mark_trail()
        if match_function_atom(fa, binding, self.store, self.max_nesting) is not MatchOutcome.FAILED:
            step(i + 1)
        self.store.rollback(trail)
        binding.undo(mark)

    def _match_aggregate(self, agg: Aggregate, binding: Binding, step, i: int) -> None:
        (lit,) = agg.conjunction
        table = self.tables.get(lit.atom.key)
        local = set(agg.local_vars)
        pattern = [None if t in local else binding.value(t) for t in lit.atom.args]
        if None in (p for t, p in zip(lit.atom.args, pattern) if t not in local):
            raise GroundingError(f"aggregate {agg} reached with unbound global variables")
        count = 0
        for row in table.candidates(pattern) if table is not None else ():
            if all(p is None or p == v for p, v in zip(pattern, row)):
                if (lit.atom.predicate, row) not in self.facts:
                    raise GroundingError(f"#count over undetermined atom {lit.atom.predicate}{row}")
                count += 1
        value = self.store.intern_constant(count)
        mark = binding.mark()
        current = binding.value(agg.bound_var)
        if current is None:
            binding.bind(agg.bound_var, value)
        if binding.value(agg.bound_var) == value:
            step(i + 1)
        binding.undo(mark)

    def statistics(self) -> dict:
        stats = self.store.stats
        return {
            "tables": {symbol: len(self.store.table(symbol)) for symbol in self.store.symbols()},
            "invented": stats.invented,
            "committed": stats.committed,
            "rolled_back": stats.rolled_back,
            "nesting_pruned": stats.nesting_pruned,
            "instantiations": self.instantiations,
            "ground_rules": len(self.rules),
            "facts": len(self.facts),
        }


def _unify(terms: Iterable, row: tuple, binding: Binding) -> bool:
    for term, value in zip(terms, row):
        current = binding.value(term)
        if current is None:
            binding.bind(term, value)
        elif current != value:
            return False
    return True


def ground_program(
    fp: FlatProgram,
    max_nesting: Optional[int] = None,
    backjump: bool = True,
) -> GroundProgram:
    """Ground a reordered flat program (see :func:`flatground.pipeline.ground`)."""
    return Grounder(fp.store, max_nesting=max_nesting, backjump=backjump).ground(fp)

