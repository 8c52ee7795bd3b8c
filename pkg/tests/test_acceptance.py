"""Acceptance checks, one per criterion.

Each check prints a ``PASS``/``FAIL`` line.  Run with ``pytest -s`` to see the
lines inline, or ``python tests/test_acceptance.py`` for the bare summary.
"""

import io
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flatground.cli import RunConfig, run
from flatground.errors import OracleTooLarge
from flatground.oracle import answer_sets, naive_ground
from flatground.parser import parse_program, parse_rule
from flatground.pipeline import flatten, ground
from flatground.reorder import first_fit_violations, reorder_body
from flatground.rewriter import flatten_rule, rewrite_program, unflatten_rule
from flatground.syntax import Aggregate, Constant, FunctionApp, nesting_level, subterms
from flatground.terms import TermStore

from randprog import random_program, random_rule

GOLDENS = Path(__file__).parent / "goldens"
RANDOM_SEEDS = range(400)


def _rewrite(text):
    status, out = run(RunConfig(mode="rewrite"), text, io.StringIO())
    assert status == 0
    return out


def check_golden_rewrites():
    names = sorted(p.stem for p in GOLDENS.glob("*.lp"))
    assert {"two_symbols", "distinct_ids", "negated_term", "aggregate"} <= set(names)
    for name in names:
        expected = (GOLDENS / f"{name}.flat").read_text()
        assert _rewrite((GOLDENS / f"{name}.lp").read_text()) == expected, name


def check_reordering_conditions():
    (rule,) = flatten("m(X,Y) :- #s(S,X,Y), k(S,T), p(W,Z,T).").rules
    assert [str(item) for item in reorder_body(rule).body] == ["k(S,T)", "#s(S,X,Y)", "p(W,Z,T)"]
    checked = 0
    sources = [(GOLDENS / f).read_text() for f in sorted(p.name for p in GOLDENS.glob("*.lp"))]
    sources += [random_program(seed)[0] for seed in range(200)]
    sources += [random_rule(seed) for seed in range(200)]
    for source in sources:
        for rule in flatten(source, reorder=True).rules:
            assert first_fit_violations(rule) == [], rule
            checked += len(rule.function_atoms)
    assert checked > 500


def parse_term(text):
    return parse_rule(f"t({text}).").head[0].args[0]


def check_nesting_levels():
    cases = {"a": 0, "s(a,b)": 1, "f(s(t,w(a)),f(b,c))": 3}
    for text, level in cases.items():
        assert nesting_level(parse_term(text)) == level
        store = TermStore()
        assert store.nesting_level(store.intern_term(parse_term(text))) == level


def check_fact_interning():
    gp = ground("p(s(1)). q(s(1)).")
    assert gp.store.symbols() == ["s"]
    (entry,) = gp.store.table("s")
    args, tid = entry
    assert args == (gp.store.intern_constant(1),)
    assert sorted(gp.facts) == [("p", (tid,)), ("q", (tid,))]


def check_head_invention_and_body_restriction():
    gp = ground("q(1). q(2). p(s(X)) :- q(X).")
    assert len(gp.store.table("s")) == 2
    assert sorted(str(a) for a in gp.readback().facts) == ["p(s(1))", "p(s(2))", "q(1)", "q(2)"]
    program = "t(b). p(X) :- q(X, s(Y)), t(Y)."
    gp = ground(program)
    assert gp.store.table("s") == [] and gp.stats["invented"] == 0
    assert [str(a) for a in gp.readback().facts] == ["t(b)"] and gp.rules == []


def check_termination_bound():
    source = "p(0). p(s(X)) :- p(X)."
    gp = ground(source, max_nesting=3)
    assert len(gp.facts) == 4 and len(gp.store.table("s")) == 3
    status, out = run(RunConfig(max_nesting=3), source, io.StringIO())
    assert status == 0 and out.splitlines() == ["p(0).", "p(s(0)).", "p(s(s(0))).", "p(s(s(s(0))))."]
    for k in range(7):
        assert len(ground(source, max_nesting=k).facts) == k + 1


def _within_caps(text, k):
    program = parse_program(text)
    symbols, constants = {}, set()
    for rule in program.rules:
        atoms = list(rule.head)
        for item in rule.body:
            atoms += [lit.atom for lit in item.conjunction] if isinstance(item, Aggregate) else [item.atom]
        for atom in atoms:
            for arg in atom.args:
                for term in subterms(arg):
                    symbols[term.symbol] = len(term.args)
                stack = [arg]
                while stack:
                    term = stack.pop()
                    if isinstance(term, Constant):
                        constants.add(term.value)
                    elif isinstance(term, FunctionApp):
                        stack.extend(term.args)
    rules = [r for r in program.rules if not r.is_fact]
    return len(symbols) <= 3 and all(a <= 2 for a in symbols.values()) and len(constants) <= 4 and len(rules) <= 6 and k <= 3


def check_oracle_differential():
    start = time.perf_counter()
    compared = 0
    for seed in RANDOM_SEEDS:
        text, k = random_program(seed)
        assert _within_caps(text, k), text
        gp = ground(text, k)
        try:
            reference = answer_sets(naive_ground(parse_program(text), k))
            found = answer_sets(gp)
        except OracleTooLarge:
            continue
        assert found == reference, text
        compared += 1
    assert compared >= 200, compared
    assert time.perf_counter() - start < 60


def check_backjump_equivalence():
    for seed in RANDOM_SEEDS:
        text, k = random_program(seed)
        jumping, plain = ground(text, k), ground(text, k, backjump=False)
        assert jumping.format(show_ids=True) == plain.format(show_ids=True), text
        assert jumping.readback(hide_aux=False) == plain.readback(hide_aux=False), text


def check_property_suites():
    import test_parser
    import test_terms

    for seed in range(1000):
        rule = parse_rule(random_rule(seed))
        assert unflatten_rule(flatten_rule(rule)) == rule
    test_parser.test_print_parse_roundtrip()
    test_terms.test_tables_stay_bijective()
    test_terms.test_trail_transactionality()
    for seed in range(100):
        text, k = random_program(seed)
        store = ground(text, k).store
        store.check_invariants()
        assert store.pending == 0
        again = rewrite_program(parse_program(str(flatten(text))), TermStore())
        assert str(again) == str(flatten(text))


CRITERIA = [
    ("golden rewrites", check_golden_rewrites, 1.0),
    ("reordering conditions", check_reordering_conditions, 1.0),
    ("nesting levels", check_nesting_levels, 1.0),
    ("fact interning", check_fact_interning, None),
    ("head invention and body restriction", check_head_invention_and_body_restriction, None),
    ("termination bound", check_termination_bound, 1.0),
    ("oracle differential", check_oracle_differential, 60.0),
    ("backjump equivalence", check_backjump_equivalence, None),
    ("property suites", check_property_suites, None),
]


def evaluate(check, limit):
    start = time.perf_counter()
    try:
        check()
    except AssertionError as exc:
        return False, f"{exc!r}"[:200]
    elapsed = time.perf_counter() - start
    if limit is not None and elapsed >= limit:
        return False, f"took {elapsed:.2f}s, limit {limit}s"
    return True, f"{elapsed:.2f}s"


@pytest.mark.parametrize("name, check, limit", CRITERIA, ids=[c[0].replace(" ", "_") for c in CRITERIA])
def test_criterion(name, check, limit, capsys):
    ok, detail = evaluate(check, limit)
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for name, check, limit in CRITERIA:
        ok, detail = evaluate(check, limit)
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    sys.exit(1 if failures else 0)
