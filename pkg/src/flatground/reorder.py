"""Body reordering for flat rules.

Standard positive atoms are placed one at a time by a greedy heuristic.  After
each placement every pending function atom whose id is bound (condition a) or
whose other arguments are all bound (condition b) is promoted right there, and
negative literals and aggregates are placed as soon as their variables are
bound.  Function atoms of head provenance mint ids and are kept at the very
end, followed by whatever negative literals need their ids.
"""

from __future__ import annotations

import sys
from typing import Optional

from .errors import RewriteError
from .rewriter import FlatProgram, FlatRule, FunctionAtom, Provenance, aggregate_globals
from .syntax import Aggregate, Literal, atom_variables, term_variables

MAXWEIGHT = sys.maxsize
_SCALE = 1 << 32


def is_bound(term, bound: set) -> bool:
    return all(var in bound for var in term_variables(term))


def function_atom_ready(fa: FunctionAtom, bound: set) -> bool:
    """Condition a (id bound) or condition b (all other arguments bound)."""
    return is_bound(fa.id_arg, bound) or all(is_bound(arg, bound) for arg in fa.args)


def atom_weight(item, bound: set, table_sizes: Optional[dict] = None) -> int:
    """Placement weight; lower is placed earlier."""
    if isinstance(item, FunctionAtom):
        return -MAXWEIGHT if function_atom_ready(item, bound) else MAXWEIGHT
    atom = item.atom if isinstance(item, Literal) else item
    n_bound = sum(1 for arg in atom.args if is_bound(arg, bound))
    size = (table_sizes or {}).get(atom.key, 0)
    return -n_bound * _SCALE + min(size, _SCALE - 1)


def _ready(item, bound: set) -> bool:
    if isinstance(item, Aggregate):
        return all(var in bound for var in aggregate_globals(item))
    return all(var in bound for var in atom_variables(item.atom))


def _binds(item) -> set:
    if isinstance(item, Aggregate):
        return {item.bound_var}
    if isinstance(item, FunctionAtom):
        return item.variables()
    if isinstance(item, Literal) and not item.negative:
        return set(atom_variables(item.atom))
    return set()


def reorder_body(fr: FlatRule, table_sizes: Optional[dict] = None, promote: bool = True) -> FlatRule:
    """Return ``fr`` with its body permuted for left-to-right matching.

    With ``promote=False`` function atoms wait until every standard atom is
    placed (the reference order used to check that promotion changes nothing).
    """
    standard, functions, tail, others = [], [], [], []
    for item in fr.body:
        if isinstance(item, FunctionAtom):
            (tail if item.provenance is Provenance.HEAD else functions).append(item)
        elif isinstance(item, Literal) and not item.negative:
            standard.append(item)
        else:
            others.append(item)

    bound: set = set()
    order: list = []

    def place(item):
        order.append(item)
        bound.update(_binds(item))

    def settle(allow_functions: bool):
        progress = True
        while progress:
            progress = False
            # function atoms chain (one binds what the next needs), so they
            # reach their fixpoint before any negative literal is placed
            promoted = allow_functions
            while promoted:
                promoted = False
                for fa in list(functions):
                    if function_atom_ready(fa, bound):
                        functions.remove(fa)
                        place(fa)
                        promoted = True
            for item in list(others):
                if _ready(item, bound):
                    others.remove(item)
                    place(item)
                    progress = True

    settle(promote)
    while standard:
        best = min(standard, key=lambda lit: atom_weight(lit, bound, table_sizes))
        standard.remove(best)
        place(best)
        settle(promote)
    settle(True)
    for fa in tail:
        if not all(is_bound(arg, bound) for arg in fa.args):
            raise RewriteError(f"cannot place {fa} in rule {fr}: arguments never bound")
        place(fa)
    settle(True)
    if functions or others:
        stuck = ", ".join(map(str, functions + others))
        raise RewriteError(f"cannot place {stuck} in rule {fr}: unsafe variables")
    return FlatRule(fr.head, tuple(order), origin=fr.origin)


def reorder_program(fp: FlatProgram, promote: bool = True) -> FlatProgram:
    sizes: dict = {}
    for predicate, args in fp.facts:
        key = (predicate, len(args))
        sizes[key] = sizes.get(key, 0) + 1
    rules = [reorder_body(rule, sizes, promote) for rule in fp.rules]
    return FlatProgram(rules, list(fp.facts), fp.store, fp.aux_predicates)


def first_fit_violations(fr: FlatRule) -> list[str]:
    """Check every non-head function atom sits at the first admissible position."""
    problems = []
    bound: set = set()
    prefixes = []
    for item in fr.body:
        prefixes.append(set(bound))
        bound |= _binds(item)
    for i, item in enumerate(fr.body):
        if not isinstance(item, FunctionAtom) or item.provenance is Provenance.HEAD:
            continue
        if not function_atom_ready(item, prefixes[i]):
            problems.append(f"{item} at position {i}: neither id nor arguments bound")
        # atoms promoted together after one placement share that position
        for j in range(i):
            if function_atom_ready(item, prefixes[j]) and not all(
                isinstance(x, FunctionAtom) and x.provenance is not Provenance.HEAD for x in fr.body[j:i]
            ):
                problems.append(f"{item} at position {i} could already be placed at {j}")
                break
    return problems

