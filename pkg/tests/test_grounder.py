import pytest

from flatground.errors import GroundingError
from flatground.grounder import (
    Binding,
    Grounder,
    GroundRule,
    MatchOutcome,
    _CompiledRule,
    match_function_atom,
    simplify_ground_rule,
)
from flatground.parser import parse_program
from flatground.pipeline import ground
from flatground.rewriter import FlatRule, FunctionAtom, Provenance, rewrite_program
from flatground.syntax import Atom, FunctionApp, Literal, Variable, subterms
from flatground.terms import TermStore

from randprog import random_program

S, X, Y = Variable("S"), Variable("X"), Variable("Y")


def facts_of(gp):
    return sorted(str(a) for a in gp.readback().facts)


def test_head_term_invention():
    gp = ground("q(1). q(2). p(s(X)) :- q(X).")
    assert facts_of(gp) == ["p(s(1))", "p(s(2))", "q(1)", "q(2)"]
    assert len(gp.store.table("s")) == 2
    assert gp.stats["committed"] == 2 and gp.stats["rolled_back"] == 0


def test_body_terms_never_invent():
    gp = ground("t(b). p(X) :- q(X, s(Y)), t(Y).")
    assert facts_of(gp) == ["t(b)"]
    assert gp.rules == []
    assert gp.store.table("s") == []


def test_body_terms_match_existing_entries():
    gp = ground("t(b). q(1, s(b)). p(X) :- q(X, s(Y)), t(Y).")
    assert "p(1)" in facts_of(gp)


def test_empty_program():
    gp = ground("")
    assert gp.facts == [] and gp.rules == [] and gp.store.symbols() == []


def test_fact_terms_share_one_id():
    gp = ground("p(s(1)). q(s(1)).")
    (entry,) = gp.store.table("s")
    assert gp.facts == [("p", (entry[1],)), ("q", (entry[1],))]


def store_with(*terms):
    store = TermStore()
    ids = [store.intern_constant(t) for t in terms]
    return store, ids


def test_match_function_atom_existing_tuple():
    store, (one,) = store_with(1)
    existing = store.insert_function("s", (one,))
    binding = Binding()
    binding.bind(X, one)
    fa = FunctionAtom("s", S, (X,), Provenance.HEAD)
    assert match_function_atom(fa, binding, store) is MatchOutcome.MATCHED
    assert binding.value(S) == existing
    assert len(store.table("s")) == 1


def test_match_function_atom_body_provenance_fails():
    store, (b,) = store_with("b")
    binding = Binding()
    binding.bind(Y, b)
    fa = FunctionAtom("s", S, (Y,), Provenance.BODY)
    assert match_function_atom(fa, binding, store) is MatchOutcome.FAILED
    assert binding.value(S) is None


def test_match_function_atom_head_provenance_mints():
    store, (b,) = store_with("b")
    binding = Binding()
    binding.bind(X, b)
    fa = FunctionAtom("s", S, (X,), Provenance.HEAD)
    assert match_function_atom(fa, binding, store) is MatchOutcome.MATCHED_NEW
    assert store.function_of(binding.value(S)) == ("s", (b,))
    assert store.pending == 1


def test_match_function_atom_respects_bound():
    store, (b,) = store_with("b")
    binding = Binding()
    binding.bind(X, b)
    fa = FunctionAtom("s", S, (X,), Provenance.HEAD)
    assert match_function_atom(fa, binding, store, max_nesting=0) is MatchOutcome.FAILED
    assert store.table("s") == []


def test_match_function_atom_id_bound_binds_arguments():
    store, (b,) = store_with("b")
    tid = store.insert_function("s", (b,))
    binding = Binding()
    binding.bind(S, tid)
    fa = FunctionAtom("s", S, (X,), Provenance.BODY)
    assert match_function_atom(fa, binding, store) is MatchOutcome.MATCHED
    assert binding.value(X) == b
    binding.bind(Y, b)
    other = FunctionAtom("g", S, (Y,), Provenance.BODY)
    assert match_function_atom(other, binding, store) is MatchOutcome.FAILED


def _grounder_for(program_text, store=None):
    store = store or TermStore()
    fp = rewrite_program(parse_program(program_text), store)
    grounder = Grounder(store)
    for fact in fp.facts:
        grounder.add_fact(fact)
    return grounder


def _run(grounder, flat_rule):
    emitted = []
    grounder.match_rule(_CompiledRule(flat_rule, grounder.store), lambda *args: emitted.append(args))
    return emitted


def test_head_invention_rolled_back_when_later_atom_fails():
    # p(S) :- t(X), #s(S,X), q(S,Y) with the invention placed mid-body
    grounder = _grounder_for("t(b). r(z).")
    rule = FlatRule(
        (Atom("p", (S,)),),
        (
            Literal(Atom("t", (X,))),
            FunctionAtom("s", S, (X,), Provenance.HEAD),
            Literal(Atom("q", (S, Y))),
        ),
    )
    before = grounder.store.snapshot()
    assert _run(grounder, rule) == []
    assert grounder.store.snapshot() == before
    stats = grounder.store.stats
    assert stats.invented == 1 and stats.rolled_back == 1 and stats.committed == 0
    assert grounder.backjumps == 1


def test_alternative_order_gives_same_outcome():
    grounder = _grounder_for("t(b). r(z).")
    rule = FlatRule(
        (Atom("p", (S,)),),
        (
            Literal(Atom("q", (S, Y))),
            FunctionAtom("s", S, (X,), Provenance.BODY),
            Literal(Atom("t", (Y,))),
        ),
    )
    before = grounder.store.snapshot()
    assert _run(grounder, rule) == []
    assert grounder.store.snapshot() == before


def test_backjump_skips_function_atom_on_retry():
    # one t tuple has a match in q, the other does not
    store = TermStore()
    grounder = _grounder_for("t(a). t(b). q(s(a), 1).", store)
    rule = FlatRule(
        (Atom("p", (S,)),),
        (
            Literal(Atom("t", (X,))),
            FunctionAtom("s", S, (X,), Provenance.HEAD),
            Literal(Atom("q", (S, Y))),
        ),
    )
    emitted = _run(grounder, rule)
    assert len(emitted) == 1
    assert [args for args, _ in store.table("s")] == [(store.intern_constant("a"),)]


def test_fact_rule_instantiates_once():
    grounder = _grounder_for("")
    emitted = _run(grounder, FlatRule((Atom("p", ()),), ()))
    assert emitted == [((("p", ()),), (), ())]


def test_simplify_removes_true_atoms():
    store, (one,) = store_with(1)
    s1 = store.insert_function("s", (one,))
    facts = {("q", (one,))}
    rule = simplify_ground_rule((("p", (s1,)),), (("q", (one,)),), (), facts)
    assert rule.is_fact


def test_simplify_drops_rule_with_false_negative():
    facts = {("r", (0,))}
    assert simplify_ground_rule((("p", (0,)),), (), (("r", (0,)),), facts) is None


def test_simplify_keeps_disjunctive_heads():
    facts = {("q", (0,))}
    rule = simplify_ground_rule((("a", ()), ("b", ())), (("q", (0,)),), (), facts)
    assert rule == GroundRule((("a", ()), ("b", ())), (), ())


def test_rules_not_deleted_for_true_head():
    gp = ground("a. b :- c. c v d. a :- d.")
    assert any(str(r.format(gp.show_atom)) == "a :- d." for r in gp.rules)


def test_count_aggregate():
    gp = ground("p(1). p(2). p(s(1)). q(N) :- N = #count(X: p(X)).")
    assert "q(3)" in facts_of(gp)
    assert not any(a[0].startswith("aux") for a in [(x.predicate,) for x in gp.readback().facts])


def test_count_with_shared_variable():
    gp = ground("e(a,b). e(a,c). e(b,c). n(a). n(b). n(c). d(X,N) :- n(X), N = #count(Y: e(X,Y)).")
    assert {"d(a,2)", "d(b,1)", "d(c,0)"} <= set(facts_of(gp))


def test_count_over_undetermined_atoms_rejected():
    with pytest.raises(GroundingError):
        ground("p(1) v p(2). q(N) :- N = #count(X: p(X)).")


def test_negated_unknown_term_is_true():
    gp = ground("p(1). a(X) :- p(X), not ab(s(X)).")
    assert "a(1)" in facts_of(gp)
    assert gp.store.table("s") == []


def test_negated_known_term_blocks():
    gp = ground("p(1). ab(s(1)). a(X) :- p(X), not ab(s(X)).")
    assert "a(1)" not in facts_of(gp)


def test_show_ids_dump():
    text = ground("p(s(1)). r(X) :- p(X).").format(show_ids=True)
    assert text.splitlines() == ["p(@1).", "r(@1).", "s: <1> -> @1"]


@pytest.mark.parametrize("k", range(7))
def test_nesting_bound_gives_k_plus_one_facts(k):
    gp = ground("p(0). p(s(X)) :- p(X).", max_nesting=k)
    assert len(gp.facts) == k + 1
    assert len(gp.store.table("s")) == k
    assert gp.stats["nesting_pruned"] == 1


def test_random_programs_invariants():
    for seed in range(150):
        text, k = random_program(seed)
        gp = ground(text, k)
        store = gp.store
        store.check_invariants()
        assert store.pending == 0
        reachable = set()
        atoms = list(gp.facts) + [a for r in gp.rules for a in r.head]
        for _, args in atoms:
            for tid in args:
                reachable.update(subterm_ids(store, tid))
        for symbol in store.symbols():
            for _, tid in store.table(symbol):
                assert tid in reachable, (seed, symbol)
                assert store.nesting_level(tid) <= k
        # the run is deterministic, ids included
        assert ground(text, k).format(show_ids=True) == gp.format(show_ids=True)


def subterm_ids(store, tid):
    term = store.to_term(tid)
    out = {store.intern_term(t) for t in subterms(term)} if isinstance(term, FunctionApp) else set()
    return out
