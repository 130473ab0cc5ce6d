import pytest
from hypothesis import given, strategies as st

from streamcra import automata as fa
from streamcra import fixtures as F
from streamcra import transduction as T
from streamcra.automata import regex as rx
from streamcra.cra import Cra, Evaluator, eval_stream, normalize, rate, validate
from streamcra.errors import MalformedDag, NotWellFormed
from streamcra.expr import parse_expr

from conftest import data_words, tag_words
from oracles import member

AB = ("A", "B")
P = lambda s: rx.parse_regex(s, AB)


@pytest.fixture(scope="module")
def sum_of_a():
    return T.rules_from_json(F.sum_of_a_rules())


def test_dag_oracle_examples(sum_of_a):
    assert T.dag_oracle_eval(sum_of_a, [("A", 1), ("B", 2), ("A", 3)]) == 4
    assert T.dag_oracle_eval(sum_of_a, []) == 0
    assert T.dag_oracle_eval(sum_of_a, [("B", 7)]) == 0
    dag = T.build_dag(sum_of_a, "")
    assert dag.sink == ("S", 0) and dag.labels == {("S", 0): "0"}


def test_dag_oracle_matches_filter_and_sum(sum_of_a):
    for w in data_words(AB, 4):
        assert T.dag_oracle_eval(sum_of_a, w) == F.sum_of_a_oracle(w)


def test_regex_matcher_agrees_with_re():
    for text in ("B*A", "(eps|.*A)B*A", ".*", "empty", "A+B?", "(AB|A)*"):
        r = P(text)
        for w in tag_words(AB, 5):
            assert T.matches(r, w) == member(r, w)


def test_wellformed_sum_of_a(sum_of_a):
    report = T.check_wellformed(sum_of_a)
    assert report.ok and report.failed() == [] and not report.overlapping_rules


def test_label_clash_witness_is_empty_word():
    doc, cond = F.RULE_MUTANTS["label_clash_S"]
    c = T.check_wellformed(T.rules_from_json(doc)).conditions[1]
    assert not c.ok and c.witness == ()


def test_edge_into_inactive_copy_has_witness():
    doc, _ = F.RULE_MUTANTS["edge_into_inactive"]
    c = T.check_wellformed(T.rules_from_json(doc)).conditions[2]
    assert not c.ok and c.witness is not None
    with pytest.raises(MalformedDag):
        T.dag_oracle_eval(T.rules_from_json(doc), [(a, 1) for a in c.witness])


@pytest.mark.parametrize("name", sorted(F.RULE_MUTANTS))
def test_mutants_break_exactly_their_condition(name):
    doc, cond = F.RULE_MUTANTS[name]
    report = T.check_wellformed(T.rules_from_json(doc))
    assert report.failed() == [cond]
    with pytest.raises(NotWellFormed):
        T.compile_to_ucra(T.rules_from_json(doc))


@pytest.mark.parametrize("name", sorted(F.RULE_MUTANTS))
def test_mutant_witnesses_are_genuine(name):
    """On the reported witness the direct DAG semantics breaks down (or, for
    the domain condition, disagrees with the domain)."""
    doc, cond = F.RULE_MUTANTS[name]
    t = T.rules_from_json(doc)
    w = T.check_wellformed(t).conditions[cond].witness
    assert w is not None
    if cond == 3:
        active = any(member(r.r1, w[:x]) and member(r.r2, w[x:])
                     for r in t.vertex_rules for x in range(len(w) + 1))
        assert active != member(t.domain, w)
    else:
        with pytest.raises(MalformedDag):
            T.dag_oracle_eval(t, [(a, 1) for a in w])


def test_is_tree(sum_of_a):
    assert T.is_tree(sum_of_a)
    broken = T.rules_from_json(F.tree_breaking_rules())
    assert not T.is_tree(broken)
    assert T.tree_witness(broken) == (("A",), "V")
    empty = T.RuleTransduction.build(AB, [], rx.EMPTY, [], [], sum_of_a.registry)
    assert T.is_tree(empty)


def test_single_step(sum_of_a):
    s = T.single_step(sum_of_a)
    assert len(s.copies) == 4 and set(s.copies) >= {"V", "S"}
    assert T.is_single_step(s)
    assert T.single_step(s) is s
    for w in data_words(AB, 5):
        assert T.dag_oracle_eval(s, w) == T.dag_oracle_eval(sum_of_a, w)


def test_future_automaton_atoms(sum_of_a):
    fut = T.future_automaton(T.single_step(sum_of_a))
    got = [fut.atoms.atom_dfa(k) for k in range(len(fut.atoms))]
    expected = [fa.regex_to_dfa(P(s), AB) for s in ("A.*", "B+A.*", "B*")]
    assert len(got) == 3
    assert all(sum(fa.language_equal(e, g) for g in got) == 1 for e in expected)
    assert fa.is_unambiguous(fut.nfa)


def test_future_automaton_membership_table(sum_of_a):
    s = T.single_step(sum_of_a)
    fut = T.future_automaton(s)
    for w in tag_words(AB, 5):
        atom = fut.atoms.atom_of(w)
        for i, r in enumerate(fut.tests):
            assert fut.holds(atom, i) == member(r, w)


def test_trivial_past_and_future():
    reg = F.nat_registry("0")
    t = T.RuleTransduction.build(AB, ["S"], P(".*"), [T.VertexRule("S", "0", P(".*"), P(".*"))], [], reg)
    assert T.past_automaton(t).dfa.n == 1
    assert len(T.future_automaton(t).atoms) == 1


def test_past_automaton(sum_of_a):
    past = T.past_automaton(T.single_step(sum_of_a))
    # prefix classes: the empty word, words ending in A, nonempty words ending in B
    classes = [fa.regex_to_dfa(P(s), AB) for s in ("eps", ".*A", ".*B")]
    labels = [fa.regex_to_dfa(past.label(q), AB) for q in past.dfa.states]
    assert len(labels) == 3
    assert all(sum(fa.language_equal(c, l) for l in labels) == 1 for c in classes)
    merged = fa.union(classes[0], classes[2])
    assert fa.language_equal(merged, fa.regex_to_dfa(P("eps|.*B"), AB))
    for w in tag_words(AB, 5):
        q = past.dfa.run(w)
        for i, r in enumerate(past.tests):
            assert past.holds(q, i) == member(r, w)


def test_compile_sum_of_a(sum_of_a):
    m = T.compile_to_ucra(sum_of_a)
    d = validate(m)
    assert d.is_unambiguous and d.is_copyless and d.is_trim
    ev = Evaluator(m)
    for w in data_words(AB, 4):
        ev.reset()
        ev.feed_all(w)
        assert ev.result() == T.dag_oracle_eval(sum_of_a, w)


def test_compile_empty_domain(sum_of_a):
    t = sum_of_a.replace(domain=rx.EMPTY, vertex_rules=(), edge_rules=())
    assert fa.is_empty(rate(T.compile_to_ucra(t)))


def _identity_machine():
    reg = F.nat_registry("0")
    p = lambda s: parse_expr(s, ["x"], reg)
    return Cra.build("ab", ["x"], ["q"], [("q", "a", {"x": p("x")}, "q"), ("q", "b", {"x": p("x")}, "q")],
                     {"q": {"x": p("0")}}, {"q": p("x")}, reg)


def test_identity_machine_gives_one_copy():
    t = T.cra_to_rules(_identity_machine())
    assert t.copies == ("x",)


@pytest.mark.parametrize("make", [F.block_max_dcra, F.sum_dcra, F.drawdown_ucra])
def test_cra_to_rules_round_trip(make):
    m = make()
    t = T.cra_to_rules(m)
    assert T.check_wellformed(t).ok
    assert T.is_tree(t) or not validate(m).is_copyless
    back = T.compile_to_ucra(t)
    e1, e2 = Evaluator(normalize(m)), Evaluator(back)
    for w in data_words(m.alphabet, 4):
        e1.reset(); e1.feed_all(w); e2.reset(); e2.feed_all(w)
        assert e1.result() == e2.result() == T.dag_oracle_eval(t, w)


@pytest.mark.parametrize("make", [F.sum_dcra, F.end_letter_ucra, F.block_max_dcra, F.fstar_ucra])
def test_copyless_machines_give_trees(make):
    m = make()
    assert validate(normalize(m)).is_copyless
    t = T.cra_to_rules(m)
    assert T.is_tree(t)
    assert validate(T.compile_to_ucra(t)).is_copyless


@given(st.lists(st.tuples(st.sampled_from("a#"), st.integers(0, 9)), max_size=7))
def test_rules_of_block_max_follow_the_machine(word):
    m = F.block_max_dcra()
    t = _block_rules()
    assert T.dag_oracle_eval(t, word) == eval_stream(m, word)[0]


_cache = {}


def _block_rules():
    if "block" not in _cache:
        _cache["block"] = T.cra_to_rules(F.block_max_dcra())
    return _cache["block"]


def test_json_round_trip_and_dot(sum_of_a):
    again = T.rules_from_json(T.rules_to_json(sum_of_a))
    assert T.rules_to_json(again) == T.rules_to_json(sum_of_a)
    assert "doublecircle" in T.dag_to_dot(sum_of_a, "ABA")
    assert T.future_past(T.single_step(sum_of_a)).to_dot().startswith("digraph")
