"""Register-update expressions: terms over registers, ``val`` and operations."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (ArityMismatch, MissingCurrentVal, ParseError, UnboundRegister,
                     UnknownOperation)
from .values import OperationRegistry


class Expression:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expression):
    name: str

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Reg(Expression):
    name: Hashable

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class _CurrentVal(Expression):
    def __str__(self):
        return "val"

    def __repr__(self):
        return "VAL"


VAL = _CurrentVal()
CurrentVal = _CurrentVal


@dataclass(frozen=True)
class Apply(Expression):
    op: str
    args: Tuple[Expression, ...]

    def __init__(self, op, args=()):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", tuple(args))

    def __str__(self):
        return to_text(self)


Update = Mapping[Hashable, Expression]
_MISSING = object()


# ---------------------------------------------------------------------------
# structural helpers

def registers_of(e: Expression) -> List[Hashable]:
    """Register leaves in left-to-right order, with repetitions."""
    out = []

    def walk(t):
        if isinstance(t, Reg):
            out.append(t.name)
        elif isinstance(t, Apply):
            for a in t.args:
                walk(a)
    walk(e)
    return out


def uses_val(e: Expression) -> bool:
    if e is VAL or isinstance(e, _CurrentVal):
        return True
    if isinstance(e, Apply):
        return any(uses_val(a) for a in e.args)
    return False


def is_closed(e: Expression) -> bool:
    """No registers and no ``val``."""
    return not registers_of(e) and not uses_val(e)


def register_occurrences(update: Mapping[Hashable, Expression]) -> Counter:
    """Multiset of register occurrences across all right-hand sides (val excluded)."""
    c = Counter()
    for e in update.values():
        c.update(registers_of(e))
    return c


def substitute(e: Expression, mapping: Mapping[Hashable, Expression],
               val: Optional[Expression] = None) -> Expression:
    """Replace registers by expressions (and optionally ``val``); unmapped registers stay."""
    if isinstance(e, Reg):
        return mapping.get(e.name, e)
    if isinstance(e, _CurrentVal):
        return val if val is not None else e
    if isinstance(e, Apply):
        return Apply(e.op, [substitute(a, mapping, val) for a in e.args])
    return e


def rename(e: Expression, f: Callable[[Hashable], Hashable]) -> Expression:
    return substitute(e, _RenameMap(f))


class _RenameMap(dict):
    def __init__(self, f):
        super().__init__()
        self.f = f

    def get(self, k, default=None):
        return Reg(self.f(k))


def size(e: Expression) -> int:
    if isinstance(e, Apply):
        return 1 + sum(size(a) for a in e.args)
    return 1


def count_applications(e: Expression) -> int:
    if isinstance(e, Apply):
        return 1 + sum(count_applications(a) for a in e.args)
    return 1 if isinstance(e, Const) else 0


def check_arity(e: Expression, registry: OperationRegistry) -> List[str]:
    """Arity problems of ``e`` against ``registry``; raises UnknownOperation."""
    problems = []

    def walk(t):
        if isinstance(t, Const):
            if registry.arity(t.name) != 0:
                problems.append(f"{t.name} used as a constant but has arity {registry.arity(t.name)}")
        elif isinstance(t, Apply):
            ar = registry.arity(t.op)
            if ar != len(t.args):
                problems.append(f"{t.op} expects {ar} arguments, got {len(t.args)}")
            for a in t.args:
                walk(a)
    walk(e)
    return problems


# ---------------------------------------------------------------------------
# evaluation

def eval_expr(expr: Expression, env: Mapping[Hashable, object], current=_MISSING,
              registry: OperationRegistry = None):
    """Homomorphic evaluation of ``expr`` under ``env`` with current value ``current``."""
    if isinstance(expr, Reg):
        try:
            return env[expr.name]
        except KeyError:
            raise UnboundRegister(f"register {expr.name!r} is unbound") from None
    if isinstance(expr, _CurrentVal):
        if current is _MISSING:
            raise MissingCurrentVal("val used without a current value")
        return current
    if isinstance(expr, Const):
        op = registry.lookup(expr.name)
        return op()
    if isinstance(expr, Apply):
        op = registry.lookup(expr.op)
        if op.arity != len(expr.args):
            raise ArityMismatch(f"{expr.op} expects {op.arity} arguments, got {len(expr.args)}")
        return op(*(eval_expr(a, env, current, registry) for a in expr.args))
    raise TypeError(f"not an expression: {expr!r}")


class _Codegen:
    def __init__(self, registry: OperationRegistry, reg_index: Mapping[Hashable, int]):
        self.registry = registry
        self.reg_index = reg_index
        self.ns: Dict[str, object] = {}
        self._names: Dict[object, str] = {}

    def _bind(self, key, obj, prefix):
        name = self._names.get(key)
        if name is None:
            name = f"{prefix}{len(self._names)}"
            self._names[key] = name
            self.ns[name] = obj
        return name

    def emit(self, e: Expression) -> str:
        if isinstance(e, Reg):
            try:
                return f"e[{self.reg_index[e.name]}]"
            except KeyError:
                raise UnboundRegister(f"register {e.name!r} is not a machine register") from None
        if isinstance(e, _CurrentVal):
            return "v"
        if isinstance(e, Const):
            value = self.registry.lookup(e.name)()
            return self._bind(("c", e.name), value, "_c")
        if isinstance(e, Apply):
            op = self.registry.lookup(e.op)
            if op.arity != len(e.args):
                raise ArityMismatch(f"{e.op} expects {op.arity} arguments, got {len(e.args)}")
            fn = self._bind(("o", e.op), op.fn, "_o")
            return f"{fn}({', '.join(self.emit(a) for a in e.args)})"
        raise TypeError(f"not an expression: {e!r}")


def compile_update(exprs: Sequence[Expression], registers: Sequence[Hashable],
                   registry: OperationRegistry) -> Callable[[tuple, object], tuple]:
    """Compile a parallel update into ``f(env_tuple, val) -> env_tuple``.

    ``exprs[k]`` is the new value of ``registers[k]``.
    """
    index = {r: k for k, r in enumerate(registers)}
    gen = _Codegen(registry, index)
    body = ", ".join(gen.emit(x) for x in exprs)
    src = f"lambda e, v: ({body}{',' if len(exprs) == 1 else ''})"
    try:
        return eval(src, gen.ns)  # noqa: S307 - source is generated from a typed AST
    except (SyntaxError, RecursionError, MemoryError):
        # very deep terms exceed the parser's nesting limit
        fns = [_closure(x, index, registry) for x in exprs]
        return lambda e, v: tuple(f(e, v) for f in fns)


def compile_expr(e: Expression, registers: Sequence[Hashable],
                 registry: OperationRegistry) -> Callable[[tuple, object], object]:
    index = {r: k for k, r in enumerate(registers)}
    gen = _Codegen(registry, index)
    try:
        return eval(f"lambda e, v: {gen.emit(e)}", gen.ns)  # noqa: S307
    except (SyntaxError, RecursionError, MemoryError):
        return _closure(e, index, registry)


def _closure(e: Expression, index, registry):
    if isinstance(e, Reg):
        k = index[e.name]
        return lambda env, v: env[k]
    if isinstance(e, _CurrentVal):
        return lambda env, v: v
    if isinstance(e, Const):
        c = registry.lookup(e.name)()
        return lambda env, v: c
    fn = registry.lookup(e.op).fn
    subs = [_closure(a, index, registry) for a in e.args]
    return lambda env, v: fn(*(s(env, v) for s in subs))


# ---------------------------------------------------------------------------
# text syntax
#
#   expr   := term ('+' term)*
#   term   := factor ('*' factor)*
#   factor := 'val' | NUMBER | STRING | IDENT ['[' param ']'] ['(' expr (',' expr)* ')'] | '(' expr ')'

INFIX = {"+": 1, "*": 2}
_IDENT = r"[A-Za-z_][A-Za-z0-9_.@:#']*"
_TOKEN = re.compile(r"""\s*(?:
      (?P<num>-?\d+(?:/\d+)?)
    | (?P<str>"[^"]*")
    | (?P<ident>""" + _IDENT + r"""(?:\[[^\]]*\])?)
    | (?P<punct>[()\[\],+*])
    )""", re.X)


def _tokenize(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos} in expression {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


class _ExprParser:
    def __init__(self, text, registers, registry):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.registers = None if registers is None else set(registers)
        self.registry = registry

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or 'token'} at {tok[2]} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        e = self.expr(1)
        if self.peek()[0] is not None:
            raise ParseError(f"trailing input at {self.peek()[2]} in {self.text!r}")
        return e

    def expr(self, level):
        if level > max(INFIX.values()):
            return self.factor()
        left = self.expr(level + 1)
        while True:
            kind, tok, _ = self.peek()
            if kind == "punct" and INFIX.get(tok) == level:
                self.take()
                right = self.expr(level + 1)
                left = Apply(tok, [left, right])
            else:
                return left

    def _literal(self, text):
        if self.registry is None:
            return Const(text)
        name = self.registry.literal_name(text)
        if name is None:
            raise UnknownOperation(f"literal {text} has no constant in the registry")
        return Const(name)

    def factor(self):
        kind, tok, pos = self.take()
        if kind == "punct" and tok == "(":
            e = self.expr(1)
            self.take(")")
            return e
        if kind == "num":
            return self._literal(tok)
        if kind == "str":
            return self._literal(tok[1:-1])
        if kind != "ident":
            raise ParseError(f"unexpected {tok!r} at {pos} in {self.text!r}")
        name = tok
        if self.peek()[1] == "(":
            self.take("(")
            args = [self.expr(1)]
            while self.peek()[1] == ",":
                self.take(",")
                args.append(self.expr(1))
            self.take(")")
            return Apply(name, args)
        if name == "val":
            return VAL
        if self.registers is not None and name in self.registers:
            return Reg(name)
        if self.registry is not None and name in self.registry:
            return Const(name)
        if self.registers is None:
            return Reg(name)
        raise UnboundRegister(f"{name!r} is neither a register nor a constant")


def parse_expr(text: str, registers: Optional[Iterable[Hashable]] = None,
               registry: OperationRegistry = None) -> Expression:
    """Parse the textual expression syntax.

    Bare identifiers resolve to registers when ``registers`` is given and
    contains them, otherwise to constants of ``registry``.
    """
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {text!r}")
    return _ExprParser(text, registers, registry).parse()


def to_text(e: Expression) -> str:
    if isinstance(e, Reg):
        return str(e.name)
    if isinstance(e, _CurrentVal):
        return "val"
    if isinstance(e, Const):
        return _const_text(e.name)
    if isinstance(e, Apply):
        if e.op in INFIX and len(e.args) == 2:
            return f"({to_text(e.args[0])} {e.op} {to_text(e.args[1])})"
        return f"{e.op}({', '.join(to_text(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def _const_text(name: str) -> str:
    m = re.fullmatch(r"const\[(.*)\]", name, re.S)
    if m:
        inner = m.group(1)
        if re.fullmatch(r"-?\d+(?:/\d+)?", inner):
            return inner
        return f'"{inner}"'
    return name
