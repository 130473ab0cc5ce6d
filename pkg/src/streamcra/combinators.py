"""Quantitative regular combinators compiled to unambiguous CRAs.

A query is a tree of combinators over data words::

    eps(c)                 defined on the empty word only, value c
    item([a b], e)         one item tagged a or b, value e (over val and constants)
    op(name; q1; ...; qn)  all qi defined, value name(q1, ..., qn)
    else(f; g)             f where defined, otherwise g
    split(f; g; name)      unique cut uv with f(u), g(v) defined; name(f(u), g(v))
    iter(f; c; name)       unique decomposition into f-blocks; left fold from c
    prefixsum(f; c; name)  f total; left fold of f over all prefixes from c
"""
from __future__ import annotations

import itertools
import re
import warnings
from dataclasses import dataclass
from typing import Any, List, Sequence, Tuple

from . import automata as fa
from .cra import (Cra, eliminate_epsilon, is_deterministic, normalize, product_with_dfa, rate,
                  rename_registers, ucra_to_dcra, validate)
from .errors import AlphabetMismatch, BoundExceeded, ParseError, PrefixSumOnPartial, UnknownOperation
from .expr import (Apply, Const, Expression, Reg, eval_expr, parse_expr, registers_of, substitute,
                   to_text)
from .values import OperationRegistry


class Query:
    __slots__ = ()

    def __str__(self):
        return to_query_text(self)


@dataclass(frozen=True)
class Eps(Query):
    const: str


@dataclass(frozen=True)
class Item(Query):
    tags: Tuple[str, ...]
    expr: Expression

    def __init__(self, tags, expr):
        object.__setattr__(self, "tags", tuple(sorted(set(tags))))
        object.__setattr__(self, "expr", expr)


@dataclass(frozen=True)
class OpCombine(Query):
    op: str
    children: Tuple[Query, ...]

    def __init__(self, op, children):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Else(Query):
    first: Query
    second: Query


@dataclass(frozen=True)
class Split(Query):
    left: Query
    right: Query
    op: str


@dataclass(frozen=True)
class Iter(Query):
    body: Query
    const: str
    op: str


@dataclass(frozen=True)
class PrefixSum(Query):
    body: Query
    const: str
    op: str


class IterEmptyWarning(UserWarning):
    """Iteration over a body whose rate contains the empty word has empty rate."""


# ---------------------------------------------------------------------------
# definitional oracle

def oracle_eval(q: Query, word: Sequence[Tuple[str, Any]], registry: OperationRegistry,
                bound: int = 12):
    """Value of ``q`` on ``word`` straight from the combinator definitions, or None."""
    if len(word) > bound:
        raise BoundExceeded(f"word length {len(word)} exceeds oracle bound {bound}")
    return _Oracle(registry).eval(q, tuple(word))


class _Oracle:
    def __init__(self, registry):
        self.reg = registry
        self.memo = {}

    def const(self, name):
        return self.reg.lookup(name)()

    def apply(self, name, *args):
        return self.reg.lookup(name)(*args)

    def eval(self, q, w):
        key = (id(q), w)
        if key not in self.memo:
            self.memo[key] = self._eval(q, w)
        return self.memo[key]

    def _eval(self, q, w):
        if isinstance(q, Eps):
            return self.const(q.const) if not w else None
        if isinstance(q, Item):
            if len(w) == 1 and w[0][0] in q.tags:
                return eval_expr(q.expr, {}, w[0][1], self.reg)
            return None
        if isinstance(q, OpCombine):
            vals = [self.eval(c, w) for c in q.children]
            if any(v is None for v in vals):
                return None
            return self.apply(q.op, *vals)
        if isinstance(q, Else):
            v = self.eval(q.first, w)
            return v if v is not None else self.eval(q.second, w)
        if isinstance(q, Split):
            cuts = []
            for i in range(len(w) + 1):
                u = self.eval(q.left, w[:i])
                if u is None:
                    continue
                v = self.eval(q.right, w[i:])
                if v is not None:
                    cuts.append((u, v))
            if len(cuts) != 1:
                return None
            return self.apply(q.op, *cuts[0])
        if isinstance(q, Iter):
            decomps = self.decompositions(q.body, w)
            if len(decomps) != 1:
                return None
            acc = self.const(q.const)
            for v in decomps[0]:
                acc = self.apply(q.op, acc, v)
            return acc
        if isinstance(q, PrefixSum):
            acc = self.const(q.const)
            for i in range(len(w) + 1):
                v = self.eval(q.body, w[:i])
                if v is None:
                    raise PrefixSumOnPartial(f"prefix-sum body undefined on prefix of length {i}")
                acc = self.apply(q.op, acc, v)
            return acc
        raise TypeError(q)

    def decompositions(self, body, w, limit=2) -> List[List[Any]]:
        """Up to ``limit`` decompositions of ``w`` into blocks in the body's rate.

        Empty blocks are allowed; if the body accepts the empty word there are
        infinitely many decompositions, which we report as ``limit`` of them.
        """
        if self.eval(body, ()) is not None:
            return [[]] * limit
        out = []

        def walk(i, acc):
            if len(out) >= limit:
                return
            if i == len(w):
                out.append(list(acc))
                return
            for j in range(i + 1, len(w) + 1):
                v = self.eval(body, w[i:j])
                if v is not None:
                    acc.append(v)
                    walk(j, acc)
                    acc.pop()
        walk(0, [])
        return out


# ---------------------------------------------------------------------------
# rates

def rate_algebra(q: Query, alphabet) -> fa.Dfa:
    """The rate of a query computed from leaf rates by the combinator rules."""
    alphabet = fa.canonical_alphabet(alphabet)
    if isinstance(q, Eps):
        return fa.eps_dfa(alphabet)
    if isinstance(q, Item):
        return fa.letter_dfa(alphabet, q.tags)
    if isinstance(q, OpCombine):
        return fa.intersect_all(alphabet, [rate_algebra(c, alphabet) for c in q.children])
    if isinstance(q, Else):
        return fa.minimize(fa.union(rate_algebra(q.first, alphabet), rate_algebra(q.second, alphabet)))
    if isinstance(q, Split):
        return fa.unamb_concat_dfa(rate_algebra(q.left, alphabet), rate_algebra(q.right, alphabet))
    if isinstance(q, Iter):
        return fa.unamb_iter_dfa(rate_algebra(q.body, alphabet))
    if isinstance(q, PrefixSum):
        return fa.sigma_star(alphabet)
    raise TypeError(q)


# ---------------------------------------------------------------------------
# compilation

def compile_query(q: Query, alphabet, registry: OperationRegistry) -> Cra:
    """Unambiguous, trim, ε-free CRA computing ``q``."""
    alphabet = fa.canonical_alphabet(alphabet)
    _check_query(q, alphabet, registry)
    c = _Compiler(alphabet, registry)
    return normalize(c.build(q))


compile = compile_query


def copyless_report(q: Query, alphabet, registry: OperationRegistry) -> bool:
    return validate(compile_query(q, alphabet, registry)).is_copyless


class _Compiler:
    def __init__(self, alphabet, registry):
        self.alphabet = alphabet
        self.registry = registry
        self.counter = itertools.count()

    def fresh(self, hint="r"):
        return f"{hint}{next(self.counter)}"

    def c0(self):
        return Const(self.registry.first_constant())

    def build(self, q) -> Cra:
        m = getattr(self, "_" + type(q).__name__)(q)
        return normalize(m)

    def _disjoint(self, m: Cra, prefix) -> Cra:
        names = {x: self.fresh(prefix) for x in m.registers}
        return rename_registers(m, names.__getitem__)

    # leaves
    def _Eps(self, q: Eps) -> Cra:
        return Cra.build(self.alphabet, [], [0], [], {0: {}}, {0: Const(q.const)}, self.registry)

    def _Item(self, q: Item) -> Cra:
        r = self.fresh("v")
        trans = [(0, t, {r: q.expr}, 1) for t in q.tags]
        return Cra.build(self.alphabet, [r], [0, 1], trans, {0: {r: self.c0()}}, {1: Reg(r)},
                         self.registry)

    # combinators
    def _OpCombine(self, q: OpCombine) -> Cra:
        parts = [self._disjoint(self.build(c), "o") for c in q.children]
        regs = [x for m in parts for x in m.registers]
        start = [tuple(s) for s in itertools.product(*[m.initial_states for m in parts])]
        seen = set(start)
        order = list(start)
        trans = []
        for st in order:
            for a in self.alphabet:
                options = [[t for t in m.out[s] if t.tag == a] for m, s in zip(parts, st)]
                for combo in itertools.product(*options):
                    upd = {}
                    for t in combo:
                        upd.update(t.update)
                    nxt = tuple(t.dst for t in combo)
                    trans.append((st, a, upd, nxt))
                    if nxt not in seen:
                        seen.add(nxt)
                        order.append(nxt)
        init = {}
        for st in start:
            row = {}
            for m, s in zip(parts, st):
                row.update(m.init[s])
            init[st] = row
        final = {st: Apply(q.op, [m.final[s] for m, s in zip(parts, st)])
                 for st in order if all(s in m.final for m, s in zip(parts, st))}
        return Cra.build(self.alphabet, regs, order, trans, init, final, self.registry)

    def _Else(self, q: Else) -> Cra:
        f = self._disjoint(self.build(q.first), "e")
        g = self._disjoint(self.build(q.second), "e")
        g = product_with_dfa(g, fa.complement(fa.minimize(rate(f))))
        return self._disjoint_union(f, g)

    def _disjoint_union(self, f: Cra, g: Cra) -> Cra:
        regs = list(f.registers) + list(g.registers)
        c0 = self.c0
        L = lambda s: ("L", s)
        R = lambda s: ("R", s)
        trans = [(L(t.src), t.tag, t.update, L(t.dst)) for t in f.transitions]
        trans += [(R(t.src), t.tag, t.update, R(t.dst)) for t in g.transitions]
        init = {L(s): {**f.init[s], **{x: c0() for x in g.registers}} for s in f.initial_states}
        init.update({R(s): {**g.init[s], **{x: c0() for x in f.registers}} for s in g.initial_states})
        final = {L(s): e for s, e in f.final.items()}
        final.update({R(s): e for s, e in g.final.items()})
        states = [L(s) for s in f.states] + [R(s) for s in g.states]
        return Cra.build(self.alphabet, regs, states, trans, init, final, self.registry)

    def _Split(self, q: Split) -> Cra:
        f = self._disjoint(self.build(q.left), "s")
        g = self._disjoint(self.build(q.right), "s")
        z = self.fresh("z")
        c0 = self.c0
        regs = list(f.registers) + list(g.registers) + [z]
        L = lambda s: ("L", s)
        R = lambda s: ("R", s)
        trans = [(L(t.src), t.tag, t.update, L(t.dst)) for t in f.transitions]
        trans += [(R(t.src), t.tag, t.update, R(t.dst)) for t in g.transitions]
        for p, fe in f.final.items():
            for s in g.initial_states:
                upd = {z: fe}
                upd.update({x: c0() for x in f.registers})
                upd.update(g.init[s])
                trans.append((L(p), None, upd, R(s)))
        init = {L(s): {**f.init[s], **{x: c0() for x in g.registers}, z: c0()} for s in f.initial_states}
        final = {R(s): Apply(q.op, [Reg(z), e]) for s, e in g.final.items()}
        states = [L(s) for s in f.states] + [R(s) for s in g.states]
        m = Cra.build(self.alphabet, regs, states, trans, init, final, self.registry)
        cut = fa.unamb_concat_dfa(rate(f), rate(g))
        return product_with_dfa(eliminate_epsilon(m), cut)

    def _Iter(self, q: Iter) -> Cra:
        f = self._disjoint(self.build(q.body), "i")
        body_rate = fa.minimize(rate(f))
        if body_rate.initial in body_rate.final:
            warnings.warn(f"iter body {to_query_text(q.body)} accepts the empty word; "
                          "the iteration has empty rate", IterEmptyWarning, stacklevel=3)
            return Cra.build(self.alphabet, [], [], [], {}, {}, self.registry)
        y = self.fresh("y")
        c0 = self.c0
        regs = list(f.registers) + [y]
        hub = ("hub",)
        S = lambda s: ("S", s)
        trans = [(S(t.src), t.tag, t.update, S(t.dst)) for t in f.transitions]
        for s in f.initial_states:
            trans.append((hub, None, dict(f.init[s]), S(s)))
        for p, fe in f.final.items():
            upd = {y: Apply(q.op, [Reg(y), fe])}
            upd.update({x: c0() for x in f.registers})
            trans.append((S(p), None, upd, hub))
        init = {hub: {y: Const(q.const), **{x: c0() for x in f.registers}}}
        final = {hub: Reg(y)}
        states = [hub] + [S(s) for s in f.states]
        m = Cra.build(self.alphabet, regs, states, trans, init, final, self.registry)
        return product_with_dfa(eliminate_epsilon(m), fa.unamb_iter_dfa(body_rate))

    def _PrefixSum(self, q: PrefixSum) -> Cra:
        f = self.build(q.body)
        if not fa.language_equal(rate(f), fa.sigma_star(self.alphabet)):
            w = fa.shortest_accepted(fa.complement(fa.minimize(rate(f))))
            raise PrefixSumOnPartial(f"prefix-sum body is undefined on {list(w)}")
        d = f if is_deterministic(f) else ucra_to_dcra(f)
        d = self._disjoint(d, "p")
        total = self.fresh("total")
        regs = list(d.registers) + [total]
        (q0,) = d.initial_states
        init_row = dict(d.init[q0])
        init_row[total] = Apply(q.op, [Const(q.const), substitute(d.final[q0], d.init[q0])])
        trans = []
        for t in d.transitions:
            upd = dict(t.update)
            upd[total] = Apply(q.op, [Reg(total), substitute(d.final[t.dst], t.update)])
            trans.append((t.src, t.tag, upd, t.dst))
        final = {s: Reg(total) for s in d.final}
        return Cra.build(self.alphabet, regs, d.states, trans, {q0: init_row}, final, self.registry)


def _check_query(q: Query, alphabet, registry: OperationRegistry):
    def arity(name, n):
        if registry.arity(name) != n:
            raise UnknownOperation(f"{name} has arity {registry.arity(name)}, used with {n}")

    if isinstance(q, Eps):
        arity(q.const, 0)
    elif isinstance(q, Item):
        extra = set(q.tags) - set(alphabet)
        if extra:
            raise AlphabetMismatch(f"item tags {sorted(extra)} not in alphabet")
        if registers_of(q.expr):
            raise ParseError(f"item expression {to_text(q.expr)} mentions registers")
    elif isinstance(q, OpCombine):
        arity(q.op, len(q.children))
    elif isinstance(q, (Split, Iter, PrefixSum)):
        arity(q.op, 2)
        if not isinstance(q, Split):
            arity(q.const, 0)
    for c in children(q):
        _check_query(c, alphabet, registry)


def children(q: Query) -> Tuple[Query, ...]:
    if isinstance(q, OpCombine):
        return q.children
    if isinstance(q, Else):
        return (q.first, q.second)
    if isinstance(q, Split):
        return (q.left, q.right)
    if isinstance(q, (Iter, PrefixSum)):
        return (q.body,)
    return ()


# ---------------------------------------------------------------------------
# surface syntax

def parse_query(text: str, registry: OperationRegistry = None) -> Query:
    p = _QueryParser(text, registry)
    q = p.query()
    p.ws()
    if p.pos != len(text):
        raise ParseError(f"trailing input at {p.pos} in query {text!r}")
    return q


class _QueryParser:
    def __init__(self, text, registry):
        self.text = text
        self.pos = 0
        self.registry = registry

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, s):
        self.ws()
        if not self.text.startswith(s, self.pos):
            raise ParseError(f"expected {s!r} at {self.pos} in query {self.text!r}")
        self.pos += len(s)

    def word(self):
        self.ws()
        m = re.compile(r"[A-Za-z_][A-Za-z0-9_]*").match(self.text, self.pos)
        if not m:
            raise ParseError(f"expected a combinator at {self.pos} in {self.text!r}")
        self.pos = m.end()
        return m.group(0)

    def raw_arg(self):
        """Text up to the next top-level ';' or ')'."""
        self.ws()
        depth, start = 0, self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in "([":
                depth += 1
            elif ch in ")]":
                if depth == 0:
                    break
                depth -= 1
            elif ch == ";" and depth == 0:
                break
            self.pos += 1
        return self.text[start:self.pos].strip()

    def name_arg(self):
        name = self.raw_arg()
        if not name:
            raise ParseError(f"missing operation name at {self.pos} in {self.text!r}")
        if self.registry is not None and name not in self.registry:
            lit = self.registry.literal_name(name)
            if lit is not None:
                return lit
            raise UnknownOperation(f"operation {name!r} not in registry")
        return name

    def query(self) -> Query:
        kw = self.word()
        self.expect("(")
        if kw == "eps":
            q = Eps(self.name_arg())
        elif kw == "item":
            self.expect("[")
            end = self.text.index("]", self.pos)
            tags = self.text[self.pos:end].replace(",", " ").split()
            self.pos = end + 1
            self.expect(",")
            e = parse_expr(self.raw_arg(), [], self.registry)
            q = Item(tags, e)
        elif kw == "op":
            name = self.name_arg()
            kids = []
            while True:
                self.ws()
                if self.text.startswith(";", self.pos):
                    self.pos += 1
                    kids.append(self.query())
                else:
                    break
            q = OpCombine(name, kids)
        elif kw == "else":
            f = self.query()
            self.expect(";")
            q = Else(f, self.query())
        elif kw == "split":
            f = self.query()
            self.expect(";")
            g = self.query()
            self.expect(";")
            q = Split(f, g, self.name_arg())
        elif kw in ("iter", "prefixsum"):
            f = self.query()
            self.expect(";")
            c = self.name_arg()
            self.expect(";")
            op = self.name_arg()
            q = Iter(f, c, op) if kw == "iter" else PrefixSum(f, c, op)
        else:
            raise ParseError(f"unknown combinator {kw!r}")
        self.expect(")")
        return q


def to_query_text(q: Query) -> str:
    if isinstance(q, Eps):
        return f"eps({q.const})"
    if isinstance(q, Item):
        return f"item([{' '.join(q.tags)}], {to_text(q.expr)})"
    if isinstance(q, OpCombine):
        return f"op({q.op}; " + "; ".join(to_query_text(c) for c in q.children) + ")"
    if isinstance(q, Else):
        return f"else({to_query_text(q.first)}; {to_query_text(q.second)})"
    if isinstance(q, Split):
        return f"split({to_query_text(q.left)}; {to_query_text(q.right)}; {q.op})"
    if isinstance(q, Iter):
        return f"iter({to_query_text(q.body)}; {q.const}; {q.op})"
    if isinstance(q, PrefixSum):
        return f"prefixsum({to_query_text(q.body)}; {q.const}; {q.op})"
    raise TypeError(q)
