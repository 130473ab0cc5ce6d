import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from streamcra.errors import (ArityMismatch, MissingCurrentVal, PartialOperationRejected,
                              UnboundRegister, UnknownDomain, UnknownOperation, ValueParseError)
from streamcra.expr import (VAL, Apply, Const, Reg, compile_expr, compile_update, eval_expr, parse_expr,
                            register_occurrences, to_text)
from streamcra.values import INF, UNIT, make_monoid, make_registry, make_semiring

NAT = make_registry({"domain": "int", "carrier": "nat", "ops": ["0", "1", "+", "max", "monus", "ITE"]})


def test_eval_sum_with_current_value():
    e = Apply("+", [Reg("x"), VAL])
    assert eval_expr(e, {"x": 3}, 4, NAT) == 7


def test_eval_constant():
    assert eval_expr(Const("0"), {}, registry=NAT) == 0


def test_eval_drawdown_update():
    # max(y, max(x, val) monus val) with x=5, y=2, val=1: max(2, 5-1) = 4
    e = Apply("max", [Reg("y"), Apply("monus", [Apply("max", [Reg("x"), VAL]), VAL])])
    step_max = max(5, 1)
    step_monus = max(step_max - 1, 0)
    assert eval_expr(e, {"x": 5, "y": 2}, 1, NAT) == max(2, step_monus) == 4


def test_eval_errors():
    with pytest.raises(UnboundRegister):
        eval_expr(Reg("z"), {}, registry=NAT)
    with pytest.raises(MissingCurrentVal):
        eval_expr(VAL, {}, registry=NAT)
    with pytest.raises(ArityMismatch):
        eval_expr(Apply("+", [Const("1")]), {}, registry=NAT)
    with pytest.raises(UnknownOperation):
        eval_expr(Apply("pow", [Const("1")]), {}, registry=NAT)


def test_register_occurrences():
    assert register_occurrences({"x": parse_expr("x + val"), "y": parse_expr("y")}) == Counter(x=1, y=1)
    copyful = {"x": parse_expr("max(x, val)"), "y": parse_expr("max(y, monus(max(x, val), val))")}
    assert register_occurrences(copyful) == Counter(x=2, y=1)
    assert register_occurrences({}) == Counter()


def test_registry_sizes_and_ite():
    assert len(make_registry({"domain": "int", "ops": ["0", "+"]})) == 2
    reg = make_registry({"domain": "int", "ops": ["ITE"]})
    assert reg.arity("ITE") == 4
    assert reg.lookup("ITE")(2, 2, 7, 9) == 7
    assert reg.lookup("ITE")(2, 3, 7, 9) == 9


def test_monoid_unary_registry():
    reg = make_registry({"domain": "monoid-unary", "monoid": "free", "alphabet": list("ab#"),
                         "ops": ["1", "rmul[a]", "rmul[b]", "rmul[#]"]})
    assert sorted(reg.names) == sorted(["1", "rmul[a]", "rmul[b]", "rmul[#]"])
    assert all(reg.arity(n) <= 1 for n in reg.names)
    assert reg.lookup("rmul[#]")(reg.lookup("rmul[a]")("b")) == "ba#"


def test_registry_rejections():
    with pytest.raises(PartialOperationRejected):
        make_registry({"domain": "int", "carrier": "nat", "ops": ["sub"]})
    with pytest.raises(UnknownDomain):
        make_registry({"domain": "quaternion"})
    with pytest.raises(UnknownOperation):
        make_registry({"domain": "int", "ops": ["pow"]})


def test_semiring_catalogue_laws():
    rng = random.Random(0)
    for name in ("nat-arith", "int-arith", "rat-arith", "tropical", "boolean"):
        assert make_semiring(name).check_laws(rng) == []


def test_tropical_zero_and_unit_singletons():
    s = make_semiring("tropical")
    assert s.zero is INF and s.plus(INF, 3) == 3 and s.times(INF, 3) is INF
    assert repr(UNIT) and UNIT is type(UNIT)()


def test_value_parsing():
    nat = make_registry({"domain": "int", "carrier": "nat", "ops": ["0"]}).domain
    assert nat.parse("12") == 12
    with pytest.raises(ValueParseError):
        nat.parse("-1")
    rat = make_registry({"domain": "rat", "ops": ["0"]}).domain
    assert rat.parse("1/3") == Fraction(1, 3)
    assert make_monoid("free", "ab").domain.parse("ab") == "ab"


def test_parse_and_print_round_trip():
    for text in ("x + val", "max(y, monus(max(x, val), val))", "ITE(x, 1, val, 0)", "0"):
        e = parse_expr(text, ["x", "y"], NAT)
        assert parse_expr(to_text(e), ["x", "y"], NAT) == e


# expression trees over registers x, y and the current value
_leaf = st.sampled_from([Reg("x"), Reg("y"), VAL, Const("0"), Const("1")])
_expr = st.recursive(_leaf, lambda kids: st.one_of(
    st.builds(lambda a, b: Apply("+", [a, b]), kids, kids),
    st.builds(lambda a, b: Apply("max", [a, b]), kids, kids),
    st.builds(lambda a, b: Apply("monus", [a, b]), kids, kids)), max_leaves=12)


@given(_expr, st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_compiled_expression_matches_interpreter(e, x, y, v):
    fn = compile_expr(e, ["x", "y"], NAT)
    assert fn((x, y), v) == eval_expr(e, {"x": x, "y": y}, v, NAT)


@given(st.lists(_expr, min_size=1, max_size=3), st.integers(0, 9), st.integers(0, 9), st.integers(0, 9))
def test_compiled_update_matches_interpreter(es, x, y, v):
    fn = compile_update(es, ["x", "y"], NAT)
    assert fn((x, y), v) == tuple(eval_expr(e, {"x": x, "y": y}, v, NAT) for e in es)


@given(_expr)
def test_printer_round_trip(e):
    assert parse_expr(to_text(e), ["x", "y"], NAT) == e


def test_broken_semiring_rejected():
    from streamcra import values
    bad = values.Semiring("bad", values.IntDomain(nonneg=True), lambda a, b: a + b,
                          lambda a, b: a + b, 0, 1)
    assert "zero absorbing" in bad.check_laws(random.Random(0))
