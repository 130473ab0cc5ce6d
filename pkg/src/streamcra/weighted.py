"""Weighted automata over semirings and monoids, and translations to and from CRAs.

Over a semiring every missing weight is the semiring zero.  Over a monoid
there is no zero: a missing entry simply means "no transition", so the
automaton is partial and only meaningful when unambiguous.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Any, Dict, Hashable, List, Mapping, Sequence, Tuple, Union

from . import automata as fa
from .cra import BOTTOM, Cra, _require_unambiguous, normalize, rate, unary_to_copyless
from .errors import (BoundExceeded, NonLinearizableExpression, NotUnambiguous, ParseError,
                     PartialRate, RegistryMismatch, ValueParseError)
from .expr import VAL, Apply, Const, Expression, Reg, eval_expr, is_closed
from .values import Monoid, OperationRegistry, Semiring, make_monoid, make_registry, make_semiring

Algebra = Union[Semiring, Monoid]

_RMUL = re.compile(r"^rmul\[(.*)\]$", re.S)


@dataclass(frozen=True, eq=False)
class WeightedAutomaton:
    algebra: Algebra
    alphabet: Tuple[str, ...]
    states: Tuple[Hashable, ...]
    weights: Dict[Tuple[Hashable, str, Hashable], Any]   # absent = zero / no edge
    init: Dict[Hashable, Any]
    final: Dict[Hashable, Any]

    @staticmethod
    def build(algebra, alphabet, states, weights, init, final) -> "WeightedAutomaton":
        """Drop explicit zeros and check that every weight lies in the carrier."""
        alphabet = fa.canonical_alphabet(alphabet)
        states = tuple(dict.fromkeys(states))
        known = set(states)
        zero = _zero(algebra)
        dom = algebra.domain

        def keep(v, where):
            if not dom.contains(v):
                raise ValueParseError(f"weight {v!r} at {where} is not in {dom.name}")
            return v != zero or zero is None

        w = {}
        for (p, a, q), v in dict(weights).items():
            if p not in known or q not in known or a not in alphabet:
                raise ParseError(f"weight entry {(p, a, q)} mentions unknown state or tag")
            if keep(v, (p, a, q)):
                w[(p, a, q)] = v
        i = {q: v for q, v in init.items() if keep(v, q)}
        f = {q: v for q, v in final.items() if keep(v, q)}
        if not (set(i) | set(f)) <= known:
            raise ParseError("init/final mention unknown states")
        return WeightedAutomaton(algebra, alphabet, states, w, i, f)

    @property
    def is_semiring(self) -> bool:
        return isinstance(self.algebra, Semiring)

    def support(self) -> fa.Nfa:
        """NFA of the nonzero edges, with nonzero I and F as initial and final states."""
        trans = sorted(((p, a, q) for (p, a, q) in self.weights), key=lambda t: (
            self.states.index(t[0]), t[1], self.states.index(t[2])))
        return fa.Nfa(self.alphabet, self.states, trans, tuple(q for q in self.states if q in self.init),
                      tuple(q for q in self.states if q in self.final))

    def __repr__(self):
        return (f"WeightedAutomaton({self.algebra.name}, {len(self.states)} states, "
                f"{len(self.weights)} edges)")


def _zero(algebra):
    return algebra.zero if isinstance(algebra, Semiring) else None


def _times(algebra):
    return algebra.times if isinstance(algebra, Semiring) else algebra.dot


# ---------------------------------------------------------------------------
# evaluation

def wa_eval(w: WeightedAutomaton, word: Sequence[str]):
    """Weight of ``word``: initial row times transition matrices times final column.

    Over a monoid the result is the weight of the unique successful path, or
    None when there is none.
    """
    if w.is_semiring:
        s = w.algebra
        vec = dict(w.init)
        by_tag = _edges_by_tag(w)
        for a in word:
            nxt = {}
            for (p, q), d in by_tag.get(a, ()):
                if p in vec:
                    v = s.times(vec[p], d)
                    nxt[q] = s.plus(nxt[q], v) if q in nxt else v
            vec = nxt
        return s.sum(s.times(v, w.final[q]) for q, v in vec.items() if q in w.final)
    # monoid: restrict to useful states so that two live partial paths never meet
    useful = set(fa.trim_nfa(w.support()).states)
    dot = w.algebra.dot
    vec = {q: v for q, v in w.init.items() if q in useful}
    by_tag = _edges_by_tag(w)
    for a in word:
        nxt = {}
        for (p, q), d in by_tag.get(a, ()):
            if p in vec and q in useful:
                if q in nxt:
                    raise NotUnambiguous(f"two paths meet in state {q!r}")
                nxt[q] = dot(vec[p], d)
        vec = nxt
    outs = [dot(v, w.final[q]) for q, v in vec.items() if q in w.final]
    if len(outs) > 1:
        raise NotUnambiguous("several successful paths")
    return outs[0] if outs else None


def _edges_by_tag(w):
    out: Dict[str, List] = {}
    for (p, a, q), d in w.weights.items():
        out.setdefault(a, []).append(((p, q), d))
    return out


def wa_path_oracle(w: WeightedAutomaton, word: Sequence[str], budget: int = 500_000):
    """Sum over every state sequence of I(first)·d1···dn·F(last), missing weights zero."""
    n_paths = len(w.states) ** (len(word) + 1)
    if n_paths > budget:
        raise BoundExceeded(f"{n_paths} state sequences exceed the budget {budget}")
    times = _times(w.algebra)
    found = []
    for seq in itertools.product(w.states, repeat=len(word) + 1):
        if seq[0] not in w.init or seq[-1] not in w.final:
            continue
        weight = w.init[seq[0]]
        for a, p, q in zip(word, seq, seq[1:]):
            d = w.weights.get((p, a, q))
            if d is None:
                break
            weight = times(weight, d)
        else:
            found.append(times(weight, w.final[seq[-1]]))
    if w.is_semiring:
        return w.algebra.sum(found)
    if len(found) > 1:
        raise NotUnambiguous(f"{len(found)} successful paths on {list(word)}")
    return found[0] if found else None


def is_unambiguous_wa(w: WeightedAutomaton) -> bool:
    return fa.is_unambiguous(w.support())


# ---------------------------------------------------------------------------
# semiring registries and linear forms

def semiring_registry(semiring: Union[str, Semiring], binary_times: bool = False,
                      seed: int = 0) -> OperationRegistry:
    name = semiring if isinstance(semiring, str) else semiring.name
    ops = ["0", "1", "+", "rmul[*]"] + (["*"] if binary_times else [])
    return make_registry({"domain": "semiring", "semiring": name, "ops": ops}, seed=seed)


def monoid_registry(monoid: Monoid, seed: int = 0) -> OperationRegistry:
    desc = {"domain": "monoid-unary", "monoid": monoid.name, "ops": ["1", "rmul[*]"]}
    alphabet = getattr(monoid.domain, "alphabet", None)
    if alphabet:
        desc["alphabet"] = list(alphabet)
    return make_registry(desc, seed=seed)


def _rmul(registry: OperationRegistry, d, e: Expression) -> Expression:
    return Apply(f"rmul[{registry.format_value(d)}]", [e])


def _plus_all(terms: List[Expression]) -> Expression:
    if not terms:
        return Const("0")
    out = terms[0]
    for t in terms[1:]:
        out = Apply("+", [out, t])
    return out


def _scaled(registry, s: Semiring, d, e: Expression) -> Expression:
    return e if d == s.one else _rmul(registry, d, e)


def _closed_value(registry, s: Semiring, d) -> Expression:
    if d == s.zero:
        return Const("0")
    if d == s.one:
        return Const("1")
    return _rmul(registry, d, Const("1"))


def linear_normalize(e: Expression, registers: Sequence[Hashable],
                     registry: OperationRegistry) -> Tuple[Dict[Hashable, Any], Any]:
    """Write ``e`` as x1·d1 + ... + xn·dn + d.

    Returns the coefficient of every register (zero when absent) and the
    constant.  Only 0, 1, +, right multiplications and binary times with a
    closed right operand are accepted.
    """
    s = registry.semiring
    if s is None:
        raise RegistryMismatch("linear forms need a semiring registry")

    def go(e):
        if e is VAL:
            raise NonLinearizableExpression("the current value cannot occur in a linear form")
        if isinstance(e, Reg):
            return {e.name: s.one}, s.zero
        if isinstance(e, Const):
            return {}, registry.lookup(e.name)()
        if isinstance(e, Apply):
            if e.op == "+":
                (ca, ka), (cb, kb) = go(e.args[0]), go(e.args[1])
                coeffs = dict(ca)
                for x, d in cb.items():
                    coeffs[x] = s.plus(coeffs[x], d) if x in coeffs else d
                return coeffs, s.plus(ka, kb)
            if _RMUL.match(e.op):
                d = registry.lookup(e.op)(s.one)
                return scale(go(e.args[0]), d)
            if e.op == "*":
                left, right = e.args
                if not is_closed(right):
                    raise NonLinearizableExpression(
                        "binary times with a register on the right is not linear")
                _, d = go(right)
                return scale(go(left), d)
        raise NonLinearizableExpression(f"operation {getattr(e, 'op', e)!r} is not linear")

    def scale(form, d):
        coeffs, k = form
        return {x: s.times(c, d) for x, c in coeffs.items()}, s.times(k, d)

    coeffs, k = go(e)
    return {x: coeffs.get(x, s.zero) for x in registers}, k


# ---------------------------------------------------------------------------
# translations

def wa_to_cra(w: WeightedAutomaton, registry: OperationRegistry = None) -> Cra:
    """Single-state total CRA with one register per automaton state."""
    if not w.is_semiring:
        raise RegistryMismatch("wa_to_cra needs a weighted automaton over a semiring")
    s = w.algebra
    registry = _check_semiring_registry(registry, s)
    name = {q: f"x{i}" for i, q in enumerate(w.states)}
    regs = [name[q] for q in w.states]
    trans = []
    for a in w.alphabet:
        upd = {}
        for q in w.states:
            terms = [_scaled(registry, s, d, Reg(name[p])) for (p, b, q2), d in w.weights.items()
                     if b == a and q2 == q]
            upd[name[q]] = _plus_all(terms)
        trans.append((0, a, upd, 0))
    init = {0: {name[q]: _closed_value(registry, s, w.init.get(q, s.zero)) for q in w.states}}
    final = {0: _plus_all([_scaled(registry, s, d, Reg(name[q])) for q, d in w.final.items()])}
    return Cra.build(w.alphabet, regs, [0], trans, init, final, registry)


def _check_semiring_registry(registry, s: Semiring) -> OperationRegistry:
    if registry is None:
        return semiring_registry(s)
    if registry.semiring is None or registry.semiring.name != s.name:
        raise RegistryMismatch(f"registry {registry.kind} does not implement semiring {s.name}")
    if "rmul" not in registry.families:
        raise RegistryMismatch("registry lacks the right-multiplication family rmul[*]")
    return registry


def cra_to_wa(m: Cra) -> WeightedAutomaton:
    """Weighted automaton with states Q ∪ Q×X computing the same total function.

    State q carries the constant part of the run so far, (q, x) the part
    flowing through register x.
    """
    s = m.registry.semiring
    if s is None:
        raise RegistryMismatch("cra_to_wa needs a CRA over a semiring registry")
    m = normalize(m)
    X = m.registers
    updates = [(t, {y: linear_normalize(e, X, m.registry) for y, e in t.update.items()})
               for t in m.transitions]
    finals = {q: linear_normalize(e, X, m.registry) for q, e in m.final.items()}
    inits = {q: {x: linear_normalize(e, X, m.registry)[1] for x, e in row.items()}
             for q, row in m.init.items()}
    if not fa.language_equal(rate(m), fa.sigma_star(m.alphabet)):
        w = fa.shortest_accepted(fa.complement(fa.minimize(rate(m))))
        raise PartialRate(f"machine is undefined on {list(w)}; only total machines translate")
    _require_unambiguous(m)

    weights: Dict[Tuple, Any] = {}

    def add(p, a, q, d):
        if d != s.zero:
            weights[(p, a, q)] = s.plus(weights[(p, a, q)], d) if (p, a, q) in weights else d

    for t, lin in updates:
        p, a, q = t.src, t.tag, t.dst
        add(p, a, q, s.one)
        for y, (coeffs, const) in lin.items():
            add(p, a, (q, y), const)
            for x, c in coeffs.items():
                add((p, x), a, (q, y), c)
    states = list(m.states) + [(q, x) for q in m.states for x in X]
    init = {}
    for q, row in inits.items():
        init[q] = s.one
        for x, v in row.items():
            init[(q, x)] = v
    final = {}
    for q, (coeffs, const) in finals.items():
        final[q] = const
        for x, c in coeffs.items():
            final[(q, x)] = c
    return WeightedAutomaton.build(s, m.alphabet, states, weights, init, final)


def uwa_to_copyless_ucra(w: WeightedAutomaton, registry: OperationRegistry = None) -> Cra:
    """One-register copyless UCRA: an edge of weight d becomes x := x·d."""
    if not is_unambiguous_wa(w):
        witness = fa.ambiguity_witness(w.support())
        raise NotUnambiguous(f"weighted automaton is ambiguous on {list(witness)}")
    monoid = w.algebra if not w.is_semiring else make_monoid(f"{w.algebra.name}/times")
    if registry is None:
        registry = monoid_registry(monoid)
    elif registry.monoid is None or registry.monoid.name != monoid.name:
        raise RegistryMismatch(f"registry does not implement monoid {monoid.name}")
    one = monoid.one

    def mul(d, e):
        return e if d == one else _rmul(registry, d, e)

    trans = [(p, a, {"x": mul(d, Reg("x"))}, q) for (p, a, q), d in w.weights.items()]
    init = {q: {"x": mul(d, Const("1"))} for q, d in w.init.items()}
    final = {q: mul(d, Reg("x")) for q, d in w.final.items()}
    return Cra.build(w.alphabet, ["x"], w.states, trans, init, final, registry)


def copyless_ucra_to_uwa(m: Cra) -> WeightedAutomaton:
    """Unambiguous weighted automaton over the registry's monoid.

    The machine is first reduced to a single register by guessing which
    register reaches the output; while the guess is ⊥ the path weight stays
    one, and a reset to a closed value v becomes an edge of weight v.
    """
    monoid = m.registry.monoid
    if monoid is None:
        raise RegistryMismatch("copyless_ucra_to_uwa needs a monoid-unary registry")
    single = unary_to_copyless(m, keep_names=True)
    reg = single.registry
    (r,) = single.registers

    def weight(e):
        # right multiplications only: e(x) = x · e(1)
        return eval_expr(e, {r: monoid.one}, registry=reg)

    weights, init, final = {}, {}, {}
    for t in single.transitions:
        weights[(t.src, t.tag, t.dst)] = weight(t.update[r])
    for q, row in single.init.items():
        init[q] = monoid.one if q[1] == BOTTOM else weight(row[r])
    for q, e in single.final.items():
        final[q] = weight(e)
    return WeightedAutomaton.build(monoid, single.alphabet, single.states, weights, init, final)


# ---------------------------------------------------------------------------
# JSON

def wa_to_json(w: WeightedAutomaton) -> dict:
    dump = w.algebra.domain.dump
    key = str
    obj = {"alphabet": list(w.alphabet), "states": [key(q) for q in w.states],
           "weights": [{"from": key(p), "tag": a, "to": key(q), "w": dump(d)}
                       for (p, a, q), d in w.weights.items()],
           "init": {key(q): dump(v) for q, v in w.init.items()},
           "final": {key(q): dump(v) for q, v in w.final.items()}}
    if w.is_semiring:
        obj["semiring"] = w.algebra.name
    else:
        obj["monoid"] = w.algebra.name
        alphabet = getattr(w.algebra.domain, "alphabet", None)
        if alphabet:
            obj["output_alphabet"] = list(alphabet)
    return obj


def wa_from_json(obj: Mapping) -> WeightedAutomaton:
    try:
        if "monoid" in obj:
            algebra = make_monoid(obj["monoid"], obj.get("output_alphabet", ()))
        else:
            algebra = make_semiring(obj.get("semiring", "nat-arith"))
        parse = algebra.domain.parse
        states = [str(q) for q in obj["states"]]
        weights = {}
        for e in obj.get("weights", []):
            k = (str(e["from"]), e["tag"], str(e["to"]))
            if k in weights:
                raise ParseError(f"duplicate weight entry {k}")
            weights[k] = parse(e["w"])
        init = {str(q): parse(v) for q, v in obj.get("init", {}).items()}
        final = {str(q): parse(v) for q, v in obj.get("final", {}).items()}
        alphabet = obj.get("alphabet") or sorted({e["tag"] for e in obj.get("weights", [])})
        return WeightedAutomaton.build(algebra, alphabet, states, weights, init, final)
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed weighted automaton: {e!r}") from None
