"""Brute-force reference machinery used to check the grounder.

:func:`naive_ground` instantiates the *source* program directly on nested
terms, without flattening, term tables, reordering or backjumping.
:func:`answer_sets` enumerates the stable models of a small ground program.
"""

from __future__ import annotations

import itertools
from typing import Iterator, Optional

from .errors import GroundingError, NestingExceeded, OracleTooLarge, RewriteError, StratificationError
from .grounder import GroundProgram, GroundRule, ReadbackProgram
from .syntax import (
    Aggregate,
    Atom,
    Constant,
    FunctionApp,
    IdRef,
    Literal,
    Program,
    Variable,
    atom_variables,
    nesting_level,
    substitute_atom,
    subterms,
)

MAX_TERMS = 10**6
MAX_ATOMS = 24


# -- term universe ------------------------------------------------------------


def _signature(program: Program):
    constants, functions = set(), {}

    def visit(term):
        if isinstance(term, Constant):
            constants.add(term.value)
        elif isinstance(term, FunctionApp):
            functions[term.symbol] = len(term.args)
            for arg in term.args:
                visit(arg)

    for rule in program.rules:
        for atom in _atoms(rule):
            for arg in atom.args:
                visit(arg)
    return constants, functions


def _atoms(rule):
    yield from rule.head
    for item in rule.body:
        if isinstance(item, Literal):
            yield item.atom
        else:
            for lit in item.conjunction:
                yield lit.atom


def term_universe(program: Program, k: int, cap: int = MAX_TERMS) -> list:
    """All ground terms over the program's signature with nesting at most ``k``."""
    constants, functions = _signature(program)
    universe = [Constant(c) for c in sorted(constants, key=lambda v: (isinstance(v, str), v))]
    if not universe:
        return universe
    previous = list(universe)
    for _ in range(k):
        layer = []
        for symbol, arity in sorted(functions.items()):
            for args in itertools.product(universe, repeat=arity):
                if any(arg in previous for arg in args):
                    layer.append(FunctionApp(symbol, args))
                    if len(universe) + len(layer) > cap:
                        raise OracleTooLarge(f"term universe exceeds {cap} terms")
        universe.extend(layer)
        previous = set(layer)
    return universe


# -- naive grounding ----------------------------------------------------------


def _match_term(pattern, term, binding: dict) -> bool:
    if isinstance(pattern, Variable):
        if pattern in binding:
            return binding[pattern] == term
        binding[pattern] = term
        return True
    if isinstance(pattern, FunctionApp):
        if not isinstance(term, FunctionApp) or term.symbol != pattern.symbol or len(term.args) != len(pattern.args):
            return False
        return all(_match_term(p, t, binding) for p, t in zip(pattern.args, term.args))
    return pattern == term


def _matches(literals, index: dict, binding: dict) -> Iterator[dict]:
    if not literals:
        yield binding
        return
    atom = literals[0].atom
    for candidate in index.get(atom.key, ()):
        trial = dict(binding)
        if all(_match_term(p, t, trial) for p, t in zip(atom.args, candidate.args)):
            yield from _matches(literals[1:], index, trial)


def _strata(program: Program) -> dict:
    level: dict = {}
    for rule in program.rules:
        for atom in _atoms(rule):
            level.setdefault(atom.key, 0)
    limit = len(level) + 1
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            for head in rule.head:
                for item in rule.body:
                    if isinstance(item, Literal):
                        deps = [(item.atom.key, 1 if item.negative else 0)]
                    else:
                        deps = [(lit.atom.key, 1) for lit in item.conjunction]
                    for key, gap in deps:
                        if level[head.key] < level[key] + gap:
                            level[head.key] = level[key] + gap
                            changed = True
                            if level[head.key] > limit:
                                raise StratificationError([head.key, key])
    return level


def _check_safe(rule) -> None:
    positive = set()
    for item in rule.body:
        if isinstance(item, Literal) and not item.negative:
            positive.update(atom_variables(item.atom))
    needed = set()
    for atom in rule.head:
        needed.update(atom_variables(atom))
    outside = set(needed)
    for item in rule.body:
        if isinstance(item, Literal):
            outside.update(atom_variables(item.atom))
            if item.negative:
                needed.update(atom_variables(item.atom))
        else:
            outside.add(item.bound_var)
    for item in rule.body:
        if isinstance(item, Aggregate):
            for lit in item.conjunction:
                needed.update(v for v in atom_variables(lit.atom) if v not in item.local_vars and v in outside)
    bound = set(positive)
    bound.update(item.bound_var for item in rule.body if isinstance(item, Aggregate))
    if not needed <= bound:
        names = ", ".join(sorted(v.name for v in needed - bound))
        raise RewriteError(f"unsafe variables {names} in rule {rule}")


class _NaiveGrounder:
    def __init__(self, program: Program, k: Optional[int], exhaustive: bool, cap: int):
        for rule in program.rules:
            for atom in _atoms(rule):
                if atom.is_function_predicate or any(isinstance(t, IdRef) for t in atom.args):
                    raise RewriteError("the oracle only accepts unflattened programs")
            _check_safe(rule)
        self.program = program
        self.k = k
        self.universe = term_universe(program, k, cap) if exhaustive else None
        self.possible: dict = {}
        self.facts: dict = {}
        self.rules: dict = {}

    def add_possible(self, atom: Atom) -> bool:
        bucket = self.possible.setdefault(atom.key, {})
        if atom in bucket:
            return False
        bucket[atom] = None
        return True

    def is_possible(self, atom: Atom) -> bool:
        return atom in self.possible.get(atom.key, ())

    def run(self) -> ReadbackProgram:
        level = _strata(self.program)
        by_stratum: dict = {}
        constraints = []
        for rule in self.program.rules:
            if rule.head:
                by_stratum.setdefault(min(level[a.key] for a in rule.head), []).append(rule)
            else:
                constraints.append(rule)
        for stratum in sorted(by_stratum):
            self._fixpoint(by_stratum[stratum])
        if constraints:
            self._fixpoint(constraints)
        return ReadbackProgram.of(self.facts, self.rules)

    def _fixpoint(self, rules) -> None:
        while True:
            grew = False
            for rule in rules:
                for instance in list(self._instances(rule)):
                    grew |= self._emit(rule, *instance)
            if not grew:
                break
        self._simplify()

    def _substitutions(self, rule) -> Iterator[dict]:
        positive = [i for i in rule.body if isinstance(i, Literal) and not i.negative]
        if self.universe is None:
            yield from _matches(positive, self.possible, {})
            return
        variables = sorted({v for lit in positive for v in atom_variables(lit.atom)}, key=lambda v: v.name)
        for values in itertools.product(self.universe, repeat=len(variables)):
            binding = dict(zip(variables, values))
            if all(self.is_possible(substitute_atom(lit.atom, binding)) for lit in positive):
                yield binding

    def _instances(self, rule):
        positive = [i for i in rule.body if isinstance(i, Literal) and not i.negative]
        for binding in self._substitutions(rule):
            binding = self._aggregates(rule, binding)
            if binding is None:
                continue
            pos = [substitute_atom(lit.atom, binding) for lit in positive]
            neg = []
            dropped = False
            for item in rule.body:
                if isinstance(item, Literal) and item.negative:
                    atom = substitute_atom(item.atom, binding)
                    if atom in self.facts:
                        dropped = True
                        break
                    if self.is_possible(atom):
                        neg.append(atom)
            if dropped:
                continue
            head = [substitute_atom(atom, binding) for atom in rule.head]
            if self.k is not None and not self._within_bound(rule, head):
                continue
            yield head, pos, neg

    def _within_bound(self, rule, head) -> bool:
        for atom in head:
            for arg in atom.args:
                level = nesting_level(arg)
                if level > self.k:
                    if rule.is_fact:
                        app = next(t for t in subterms(arg) if nesting_level(t) > self.k)
                        raise NestingExceeded(app.symbol, nesting_level(app), self.k, context=f"fact {atom}")
                    return False
        return True

    def _aggregates(self, rule, binding: dict) -> Optional[dict]:
        pending = [item for item in rule.body if isinstance(item, Aggregate)]
        binding = dict(binding)
        while pending:
            item = pending.pop(0)
            conj_vars = {v for lit in item.conjunction for v in atom_variables(lit.atom)}
            # globals must be known before counting
            outside_unbound = [
                v for v in conj_vars
                if v not in item.local_vars and v not in binding and any(v == a.bound_var for a in pending)
            ]
            if outside_unbound:
                pending.append(item)
                continue
            facts_index: dict = {}
            for atom in self.facts:
                facts_index.setdefault(atom.key, []).append(atom)
            conj = list(item.conjunction)
            possible = {tuple(b[v] for v in item.local_vars) for b in _matches(conj, self.possible, binding)}
            certain = {tuple(b[v] for v in item.local_vars) for b in _matches(conj, facts_index, binding)}
            if possible != certain:
                raise GroundingError(f"#count over undetermined atoms in {rule}")
            value = Constant(len(certain))
            if item.bound_var in binding:
                if binding[item.bound_var] != value:
                    return None
            else:
                binding[item.bound_var] = value
        return binding

    def _emit(self, rule, head, pos, neg) -> bool:
        ground = GroundRule(
            tuple(dict.fromkeys(head)),
            tuple(dict.fromkeys(a for a in pos if a not in self.facts)),
            tuple(dict.fromkeys(neg)),
        )
        grew = False
        for atom in ground.head:
            grew |= self.add_possible(atom)
        if ground.is_fact:
            if ground.head[0] not in self.facts:
                self.facts[ground.head[0]] = None
                grew = True
        elif ground not in self.rules:
            self.rules[ground] = None
            grew = True
        return grew

    def _simplify(self) -> None:
        changed = True
        while changed:
            changed = False
            for rule in list(self.rules):
                pos = tuple(a for a in rule.body_pos if a not in self.facts)
                if any(a in self.facts for a in rule.body_neg):
                    del self.rules[rule]
                    changed = True
                    continue
                if pos == rule.body_pos:
                    continue
                del self.rules[rule]
                changed = True
                new = GroundRule(rule.head, pos, rule.body_neg)
                if new.is_fact:
                    self.facts[new.head[0]] = None
                else:
                    self.rules[new] = None


def naive_ground(
    program: Program,
    k: Optional[int] = None,
    exhaustive: bool = False,
    cap: int = MAX_TERMS,
) -> ReadbackProgram:
    """Ground ``program`` on nested terms, keeping head terms of nesting <= ``k``.

    By default substitutions come from matching positive body literals against
    the atoms derived so far; ``exhaustive=True`` instead tries every
    assignment of rule variables to the bounded term universe.
    """
    if exhaustive and k is None:
        raise ValueError("exhaustive grounding needs a nesting bound")
    return _NaiveGrounder(program, k, exhaustive, cap).run()


# -- answer sets --------------------------------------------------------------


def answer_sets(program, max_atoms: int = MAX_ATOMS) -> set:
    """Stable models of a ground disjunctive program, by exhaustive search.

    Accepts a :class:`GroundProgram` (read back to nested terms, auxiliary
    predicates hidden) or a :class:`ReadbackProgram`.
    """
    if isinstance(program, GroundProgram):
        program = program.readback()
    facts = frozenset(program.facts)
    candidates = []
    for rule in program.rules:
        for atom in rule.head:
            if atom not in facts and atom not in candidates:
                candidates.append(atom)
    if len(candidates) > max_atoms:
        raise OracleTooLarge(f"{len(candidates)} undetermined atoms exceed the limit of {max_atoms}")
    bit = {atom: 1 << i for i, atom in enumerate(candidates)}

    rules = []
    for rule in program.rules:
        if any(a in facts for a in rule.head) or any(a in facts for a in rule.body_neg):
            continue
        if any(a not in facts and a not in bit for a in rule.body_pos):
            continue
        head = sum(bit[a] for a in rule.head)
        pos = sum(bit[a] for a in rule.body_pos if a in bit)
        neg = sum(bit[a] for a in rule.body_neg if a in bit)
        rules.append((head, pos, neg))

    n = len(candidates)
    by_depth: list = [[] for _ in range(n + 1)]
    for head, pos, neg in rules:
        by_depth[(head | pos | neg).bit_length()].append((head, pos, neg))

    # An atom of a stable model needs a rule whose body holds and whose head
    # meets the model in that atom alone; check it once the rules are decided.
    support: list = [[] for _ in range(n + 1)]
    for i in range(n):
        mine = [(h, p, g) for h, p, g in rules if h >> i & 1]
        decided = max([(h | p | g).bit_length() for h, p, g in mine] + [i + 1])
        support[decided].append((1 << i, mine))

    def violated(model, group) -> bool:
        return any(pos & model == pos and not neg & model and not head & model for head, pos, neg in group)

    def unsupported(model, group) -> bool:
        for atom, mine in group:
            if model & atom and not any(
                pos & model == pos and not neg & model and head & model == atom for head, pos, neg in mine
            ):
                return True
        return False

    models = []

    def search(depth: int, model: int) -> None:
        if violated(model, by_depth[depth]) or unsupported(model, support[depth]):
            return
        if depth == n:
            models.append(model)
            return
        search(depth + 1, model)
        search(depth + 1, model | (1 << depth))

    search(0, 0)
    result = set()
    for model in models:
        if _minimal(model, n, [(h, p) for h, p, neg in rules if not neg & model]):
            result.add(facts | {atom for atom in candidates if bit[atom] & model})
    return result


def _minimal(model: int, n: int, reduct: list) -> bool:
    """True iff no proper subset of ``model`` satisfies the positive ``reduct``."""
    restricted = [(head & model, pos) for head, pos in reduct if pos & model == pos]
    if all(bin(head).count("1") <= 1 for head, _ in restricted):
        least = 0
        changed = True
        while changed:
            changed = False
            for head, pos in restricted:
                if head and pos & least == pos and not head & least:
                    least |= head
                    changed = True
        return least == model
    by_depth: list = [[] for _ in range(n + 1)]
    for head, pos in restricted:
        by_depth[(head | pos).bit_length()].append((head, pos))

    def smaller(depth: int, sub: int) -> bool:
        if any(pos & sub == pos and not head & sub for head, pos in by_depth[depth]):
            return False
        if depth == n:
            return sub != model
        if smaller(depth + 1, sub):
            return True
        return bool(model >> depth & 1) and smaller(depth + 1, sub | (1 << depth))

    return not smaller(0, 0)


def format_answer_set(atoms) -> str:
    return "{" + ", ".join(sorted(map(str, atoms))) + "}"

