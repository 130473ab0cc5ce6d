import pytest
from hypothesis import given, strategies as st

from streamcra import automata as fa
from streamcra import fixtures as F
from streamcra.automata import regex as rx
from streamcra.cra import (Cra, Evaluator, cra_from_json, cra_to_dot, cra_to_json, eliminate_epsilon,
                           eval_paths_oracle, eval_stream, is_deterministic, normalize, product_with_dfa,
                           rate, trim, ucra_to_dcra, unary_to_copyless, validate)
from streamcra.errors import AmbiguityDetected, NotUnambiguous, PreconditionError, TagOutOfAlphabet
from streamcra.expr import parse_expr

from conftest import data_words, tag_words


def build(alphabet, registers, states, transitions, init, final, registry):
    p = lambda s: parse_expr(s, registers, registry)
    return Cra.build(alphabet, registers, states,
                     [(a, t, {x: p(e) for x, e in u.items()}, b) for a, t, u, b in transitions],
                     {q: {x: p(e) for x, e in row.items()} for q, row in init.items()},
                     {q: p(e) for q, e in final.items()}, registry)


# reference semantics of the fixtures

def last_tag_sum(word):
    if not word:
        return None
    last = word[-1][0]
    return sum(v for a, v in word if a == last)


def block_max(word):
    tags = "".join(a for a, _ in word)
    if not fa.regex_to_dfa(rx.parse_regex("(a+#)*", "a#"), "a#").accepts(tags):
        return None
    best, cur = 0, 0
    for a, v in word:
        if a == "a":
            cur += v
        else:
            best, cur = max(best, cur), 0
    return best


def drawdown(word):
    tags = [a for a, _ in word]
    if "b" not in tags:
        return None
    last_b = max(i for i, a in enumerate(tags) if a == "b")
    vals = [v for _, v in word[last_b + 1:]]
    return max([0] + [vals[i] - vals[j] for i in range(len(vals)) for j in range(i, len(vals))])


def unique(outs):
    assert len(outs) <= 1
    return outs[0] if outs else None


# ---------------------------------------------------------------------------

def test_validate_fixtures():
    d = validate(F.sum_dcra())
    assert d.is_deterministic and d.is_copyless and d.is_trim
    d = validate(F.drawdown_ucra())
    assert d.is_unambiguous and not d.is_copyless and not d.is_deterministic
    assert any("x" in v for v in d.copy_violations)
    assert not validate(F.ambiguous_pair()).is_unambiguous


def test_unreachable_state_is_untrim():
    m = F.sum_dcra()
    extra = Cra.build(m.alphabet, m.registers, m.states + ("lost",), m.transitions, m.init, m.final,
                      m.registry)
    assert not validate(extra).is_trim
    t = trim(extra)
    assert "lost" not in t.states
    e1, e2 = Evaluator(t), Evaluator(m)
    for w in data_words("ab", 5):
        e1.reset(); e1.feed_all(w); e2.reset(); e2.feed_all(w)
        assert e1.result() == e2.result()


def test_trim_is_identity_on_trim_machine():
    m = F.block_max_dcra()
    assert trim(m) == m


def test_trim_removes_states_leading_only_to_dead_branch():
    reg = F.nat_registry("0", "+")
    m = build("a", ["x"], ["p", "q", "dead", "f"],
              [("p", "a", {"x": "x + val"}, "f"), ("p", "a", {"x": "x"}, "q"), ("q", "a", {"x": "x"}, "dead")],
              {"p": {"x": "0"}}, {"f": "x"}, reg)
    assert set(trim(m).states) == {"p", "f"}


def test_rates():
    assert fa.language_equal(rate(F.sum_dcra()), fa.regex_to_dfa(rx.parse_regex(".+", "ab"), "ab"))
    assert fa.language_equal(rate(F.block_max_dcra()), fa.regex_to_dfa(rx.parse_regex("(a+#)*", "a#"), "a#"))
    m = F.sum_dcra()
    no_init = Cra.build(m.alphabet, m.registers, m.states, m.transitions, {}, m.final, m.registry)
    assert fa.is_empty(rate(no_init))


def test_eval_examples():
    assert eval_stream(F.sum_dcra(), [("a", 1), ("b", 2), ("a", 3)])[0] == last_tag_sum([("a", 1), ("b", 2), ("a", 3)]) == 4
    assert eval_stream(F.sum_dcra(), [])[0] is None
    w = [("a", 2), ("a", 3), ("#", 0), ("a", 4), ("#", 0)]
    assert eval_stream(F.block_max_dcra(), w)[0] == block_max(w) == 5
    w = [("b", 0), ("a", 5), ("a", 3), ("a", 4), ("a", 1)]
    assert eval_stream(F.drawdown_ucra(), w)[0] == drawdown(w) == 4


@pytest.mark.parametrize("make, oracle, alphabet", [
    (F.sum_dcra, last_tag_sum, "ab"),
    (F.end_letter_ucra_eps_free, last_tag_sum, "ab"),
    (F.block_max_dcra, block_max, "a#"),
    (F.drawdown_ucra, drawdown, "ab")])
def test_fixture_sweeps(make, oracle, alphabet):
    m = make()
    ev = Evaluator(m)
    for w in data_words(alphabet, 5):
        ev.reset()
        ev.feed_all(w)
        assert ev.result() == oracle(w) == unique(eval_paths_oracle(m, w))
        assert ev.stats.max_live_tokens <= len(m.states)
        assert ev.stats.max_stored_values <= len(m.states) * len(m.registers)


def test_evaluator_rejects_bad_input():
    with pytest.raises(PreconditionError):
        Evaluator(F.end_letter_ucra())
    with pytest.raises(PreconditionError):
        Evaluator(F.ambiguous_pair())
    ev = Evaluator(F.ambiguous_pair(), check=False)
    with pytest.raises(AmbiguityDetected):
        ev.feed("a", 1)
    with pytest.raises(TagOutOfAlphabet):
        Evaluator(F.sum_dcra()).feed("z", 1)


def test_paths_oracle():
    assert sorted(eval_paths_oracle(F.ambiguous_pair(), [("a", 4)])) == [4, 5]
    reg = F.nat_registry("0", "1", "+")
    m = build("a", ["x"], ["q"], [], {"q": {"x": "1"}}, {"q": "x + 1"}, reg)
    assert eval_paths_oracle(m, []) == [2]


def test_epsilon_elimination_preserves_transduction():
    m = F.end_letter_ucra()
    e = eliminate_epsilon(m)
    assert not e.has_epsilon
    for w in data_words("ab", 4):
        assert unique(eval_paths_oracle(e, w)) == unique(eval_paths_oracle(m, w)) == last_tag_sum(w)


@pytest.mark.parametrize("make", [F.end_letter_ucra, F.end_letter_ucra_eps_free, F.drawdown_ucra, F.fstar_ucra])
def test_ucra_to_dcra(make):
    m = make()
    d = ucra_to_dcra(m)
    n = normalize(m)
    assert is_deterministic(d)
    assert len(d.registers) == len(n.states) * len(n.registers)
    values = (0, 1, 2) if m.registry.kind != "monoid-unary" else (None,)
    ev = Evaluator(d)
    for w in data_words(m.alphabet, 5 if len(m.alphabet) == 2 else 4, values):
        ev.reset()
        ev.feed_all(w)
        assert ev.result() == unique(eval_paths_oracle(m, w))


def test_determinizing_copyless_machine_can_copy():
    assert validate(F.end_letter_ucra()).is_copyless
    assert not validate(ucra_to_dcra(F.end_letter_ucra())).is_copyless


def test_dcra_subsets_are_singletons():
    m = F.sum_dcra()
    d = ucra_to_dcra(m)
    assert len(d.states) == len(m.states)
    for w in data_words("ab", 4):
        assert eval_stream(d, w)[0] == eval_stream(m, w)[0]


def test_ucra_to_dcra_rejects_ambiguity():
    with pytest.raises(NotUnambiguous):
        ucra_to_dcra(F.ambiguous_pair())


def test_unary_to_copyless():
    m = F.fstar_copyful_dcra()
    u = unary_to_copyless(m)
    d = validate(u)
    assert len(u.registers) == 1 and d.is_copyless and d.is_unambiguous
    ev = Evaluator(u)
    for w in tag_words("ab#", 6):
        ev.reset()
        ev.feed_all([(a, None) for a in w])
        assert ev.result() == F.fstar_oracle(w)


def test_unary_to_copyless_on_one_register_machine():
    m = F.fstar_ucra()
    u = unary_to_copyless(m)
    assert len(u.states) <= 2 * len(m.states)
    for w in tag_words("ab#", 5):
        assert eval_stream(u, [(a, None) for a in w])[0] == F.fstar_oracle(w)


def test_product_with_dfa():
    m = F.block_max_dcra()
    same = product_with_dfa(m, fa.sigma_star(m.alphabet))
    for w in data_words("a#", 4):
        assert eval_stream(normalize(same), w)[0] == eval_stream(m, w)[0]
    two = fa.regex_to_dfa(rx.parse_regex("(a+#)(a+#)", "a#"), "a#")
    p = product_with_dfa(m, two)
    assert fa.language_equal(rate(p), two)


def test_product_with_concat_dfa_removes_ambiguity():
    reg = F.nat_registry("0", "+")
    guess = build("ab", ["x"], ["p", "q"],
                  [("p", "a", {"x": "x"}, "p"), ("p", "b", {"x": "x"}, "p"), ("p", "a", {"x": "val"}, "q"),
                   ("q", "a", {"x": "x"}, "q"), ("q", "b", {"x": "x"}, "q")],
                  {"p": {"x": "0"}}, {"q": "x"}, reg)
    assert not validate(guess).is_unambiguous
    cut = fa.unamb_concat_dfa(fa.regex_to_dfa(rx.parse_regex(".*a", "ab"), "ab"), fa.sigma_star("ab"))
    p = normalize(product_with_dfa(guess, cut))
    assert validate(p).is_unambiguous
    for w in data_words("ab", 4):
        outs = eval_paths_oracle(guess, w)
        assert eval_stream(p, w)[0] == (outs[0] if len(outs) == 1 else None)


def test_json_round_trip_and_dot():
    for make in (F.sum_dcra, F.drawdown_ucra, F.fstar_ucra, F.end_letter_ucra):
        m = make()
        again = cra_from_json(cra_to_json(m))
        assert cra_to_json(again) == cra_to_json(m)
        assert cra_to_dot(m).startswith("digraph")


@given(st.lists(st.tuples(st.sampled_from("ab"), st.integers(0, 30)), max_size=25))
def test_streaming_matches_run_enumeration(word):
    for m in (F.sum_dcra(), F.end_letter_ucra_eps_free(), F.drawdown_ucra()):
        assert eval_stream(m, word)[0] == unique(eval_paths_oracle(m, word, bound=len(word)))
