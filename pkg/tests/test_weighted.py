import itertools
import random

import pytest
from hypothesis import given, strategies as st

from streamcra import fixtures as F
from streamcra import weighted as W
from streamcra.cra import Cra, Evaluator, eval_stream, validate
from streamcra.errors import NonLinearizableExpression, PartialRate
from streamcra.expr import parse_expr
from streamcra.values import INF, make_monoid, make_semiring

from conftest import tag_words


def path_sum(w, word):
    """Semiring weight by enumerating state sequences (independent of the library)."""
    s = w.algebra
    total = s.zero
    for seq in itertools.product(w.states, repeat=len(word) + 1):
        if seq[0] not in w.init or seq[-1] not in w.final:
            continue
        weight = w.init[seq[0]]
        for i, a in enumerate(word):
            e = (seq[i], a, seq[i + 1])
            if e not in w.weights:
                weight = s.zero
                break
            weight = s.times(weight, w.weights[e])
        total = s.plus(total, s.times(weight, w.final[seq[-1]]))
    return total


SEMIRING_FIXTURES = [F.ab_factor_wa, F.weighted_count_wa, F.tropical_wa]


def test_zero_initial_vector():
    w = W.WeightedAutomaton.build(make_semiring("nat-arith"), "ab", [0], {(0, "a", 0): 2}, {0: 0}, {0: 1})
    for word in tag_words("ab", 3):
        assert W.wa_eval(w, word) == 0


def test_factor_count():
    assert W.wa_eval(F.ab_factor_wa(), "abab") == path_sum(F.ab_factor_wa(), "abab") == 2


def test_tropical_two_letters():
    w = F.tropical_wa()
    costs = [w.init[p] + w.weights[(p, "a", q)] + w.weights[(q, "a", r)] + w.final[r]
             for p, q, r in itertools.product([0, 1], repeat=3)]
    assert W.wa_eval(w, "aa") == min(costs) == path_sum(w, "aa")


@pytest.mark.parametrize("make", SEMIRING_FIXTURES)
def test_eval_matches_path_oracles(make):
    w = make()
    for word in tag_words("ab", 4):
        assert W.wa_eval(w, word) == W.wa_path_oracle(w, word) == path_sum(w, word)


def test_path_oracle_cases():
    nat = make_semiring("nat-arith")
    line = W.WeightedAutomaton.build(nat, "ab", [0, 1, 2], {(0, "a", 1): 3, (1, "b", 2): 5}, {0: 2}, {2: 7})
    assert W.wa_path_oracle(line, "ab") == 2 * 3 * 5 * 7
    assert W.wa_path_oracle(line, "a") == 0          # the only path ends in a non-final state
    trop = W.WeightedAutomaton.build(make_semiring("tropical"), "a", [0, 1], {(0, "a", 1): 1}, {0: 0}, {})
    assert W.wa_path_oracle(trop, "a") is INF


def test_unambiguity():
    assert W.is_unambiguous_wa(F.ab_factor_wa()) is False
    nat = make_semiring("nat-arith")
    det = W.WeightedAutomaton.build(nat, "a", [0], {(0, "a", 0): 2}, {0: 1}, {0: 1})
    assert W.is_unambiguous_wa(det)
    two = W.WeightedAutomaton.build(nat, "a", [0, 1, 2], {(0, "a", 1): 1, (0, "a", 2): 1}, {0: 1}, {1: 1, 2: 1})
    assert not W.is_unambiguous_wa(two)
    zero_dup = W.WeightedAutomaton.build(nat, "a", [0, 1, 2], {(0, "a", 1): 1, (0, "a", 2): 0}, {0: 1},
                                         {1: 1, 2: 1})
    assert W.is_unambiguous_wa(zero_dup)


@pytest.mark.parametrize("make", SEMIRING_FIXTURES)
def test_wa_to_cra(make):
    w = make()
    m = W.wa_to_cra(w)
    assert len(m.states) == 1
    ev = Evaluator(m)
    for word in tag_words("ab", 5):
        ev.reset()
        ev.feed_all([(a, None) for a in word])
        assert ev.result() == W.wa_eval(w, word)


def test_zero_wa_to_cra():
    w = W.WeightedAutomaton.build(make_semiring("nat-arith"), "ab", [0], {}, {}, {})
    m = W.wa_to_cra(w)
    for word in tag_words("ab", 3):
        assert eval_stream(m, [(a, None) for a in word])[0] == 0


@pytest.mark.parametrize("make", SEMIRING_FIXTURES)
def test_cra_to_wa_round_trip(make):
    w = make()
    back = W.cra_to_wa(W.wa_to_cra(w))
    for word in tag_words("ab", 4):
        assert W.wa_eval(back, word) == W.wa_eval(w, word)


def test_cra_to_wa_on_linear_machine():
    m = F.linear_semiring_cra()
    w = W.cra_to_wa(m)
    for word in tag_words("ab", 4):
        assert W.wa_eval(w, word) == eval_stream(m, [(a, None) for a in word])[0]


def test_scaling_update_gives_self_loop():
    reg = W.semiring_registry("nat-arith")
    p = lambda s: parse_expr(s, ["x"], reg)
    m = Cra.build("a", ["x"], ["q"], [("q", "a", {"x": p("rmul[5](x)")}, "q")], {"q": {"x": p("1")}},
                  {"q": p("x")}, reg)
    w = W.cra_to_wa(m)
    loops = {e: d for e, d in w.weights.items() if e[0] == e[2] and d != 1}
    assert list(loops.values()) == [5]
    assert [W.wa_eval(w, "a" * n) for n in range(4)] == [1, 5, 25, 125]


def test_binary_times_rejected():
    m = F.doubling_exponent_cra()
    assert [eval_stream(m, [("a", None)] * i)[0] for i in range(4)] == [2, 4, 16, 256]
    with pytest.raises(NonLinearizableExpression):
        W.cra_to_wa(m)


def test_partial_rate_rejected():
    reg = W.semiring_registry("nat-arith")
    p = lambda s: parse_expr(s, ["x"], reg)
    m = Cra.build("ab", ["x"], ["q"], [("q", "a", {"x": p("x")}, "q")], {"q": {"x": p("1")}}, {"q": p("x")}, reg)
    with pytest.raises(PartialRate):
        W.cra_to_wa(m)


def test_linear_normalize_examples():
    reg = W.semiring_registry("nat-arith", binary_times=True)
    e = parse_expr("rmul[3](rmul[2](x) + y) + 1", ["x", "y"], reg)
    coeffs, const = W.linear_normalize(e, ["x", "y"], reg)
    assert coeffs == {"x": 6, "y": 3} and const == 1
    assert W.linear_normalize(parse_expr("0", [], reg), ["x", "y"], reg) == ({"x": 0, "y": 0}, 0)
    assert W.linear_normalize(parse_expr("x + x", ["x"], reg), ["x"], reg) == ({"x": 2}, 0)
    with pytest.raises(NonLinearizableExpression):
        W.linear_normalize(parse_expr("x * y", ["x", "y"], reg), ["x", "y"], reg)


_lin_leaf = st.sampled_from(["x", "y", "0", "1"])
_lin = st.recursive(_lin_leaf, lambda k: st.one_of(
    st.builds(lambda a, b: f"({a} + {b})", k, k),
    st.builds(lambda d, a: f"rmul[{d}]({a})", st.integers(0, 4), k),
    st.builds(lambda a, d: f"({a} * rmul[{d}](1))", k, st.integers(0, 4))), max_leaves=8)


@given(_lin)
def test_linear_normalize_agrees_on_random_valuations(text):
    reg = W.semiring_registry("nat-arith", binary_times=True)
    from streamcra.expr import eval_expr
    e = parse_expr(text, ["x", "y"], reg)
    coeffs, const = W.linear_normalize(e, ["x", "y"], reg)
    rng = random.Random(text)
    for _ in range(20):
        x, y = rng.randint(0, 9), rng.randint(0, 9)
        assert eval_expr(e, {"x": x, "y": y}, registry=reg) == x * coeffs["x"] + y * coeffs["y"] + const


def test_uwa_to_copyless_ucra_on_fstar():
    w = F.fstar_uwa()
    assert W.is_unambiguous_wa(w)
    m = W.uwa_to_copyless_ucra(w)
    d = validate(m)
    assert d.is_copyless and d.is_unambiguous and len(m.registers) == 1
    ev = Evaluator(m)
    for word in tag_words("ab#", 5):
        ev.reset()
        ev.feed_all([(a, None) for a in word])
        assert ev.result() == W.wa_eval(w, word) == F.fstar_oracle(word)


def test_single_state_uwa():
    w = W.WeightedAutomaton.build(make_monoid("free", "xyz"), "a", ["q"], {("q", "a", "q"): "y"},
                                  {"q": "x"}, {"q": "z"})
    m = W.uwa_to_copyless_ucra(w)
    for n in range(5):
        assert eval_stream(m, [("a", None)] * n)[0] == "x" + "y" * n + "z" == W.wa_path_oracle(w, "a" * n)


@pytest.mark.parametrize("make", [F.fstar_ucra, F.fstar_copyful_dcra])
def test_copyless_ucra_to_uwa(make):
    m = make()
    w = W.copyless_ucra_to_uwa(m)
    assert W.is_unambiguous_wa(w)
    for word in tag_words("ab#", 5):
        assert W.wa_eval(w, word) == F.fstar_oracle(word)


def test_uwa_round_trip():
    w = F.fstar_uwa()
    back = W.copyless_ucra_to_uwa(W.uwa_to_copyless_ucra(w))
    for word in tag_words("ab#", 5):
        assert W.wa_eval(back, word) == W.wa_eval(w, word)


def test_json_round_trip():
    for make in SEMIRING_FIXTURES + [F.fstar_uwa]:
        w = make()
        back = W.wa_from_json(W.wa_to_json(w))
        for word in tag_words(w.alphabet, 3):
            assert W.wa_eval(back, word) == W.wa_eval(w, word)
