"""Regular expressions over a finite tag alphabet: AST, parser, printer.

Surface syntax::

    r := r '|' r | r r | r '*' | r '+' | r '?' | '(' r ')'
       | '[' tags ']' | '.' | 'eps' | 'empty' | tag

A tag is a single non-special character, or ``<name>`` for multi-character
tags.  ``.`` stands for any tag of the alphabet.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple

from ..errors import AlphabetMismatch, ParseError


class Regex:
    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Empty(Regex):
    pass


@dataclass(frozen=True)
class Eps(Regex):
    pass


@dataclass(frozen=True)
class Lit(Regex):
    tag: str


@dataclass(frozen=True)
class LitSet(Regex):
    tags: FrozenSet[str]

    def __init__(self, tags):
        object.__setattr__(self, "tags", frozenset(tags))


@dataclass(frozen=True)
class Concat(Regex):
    parts: Tuple[Regex, ...]

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class Union(Regex):
    parts: Tuple[Regex, ...]

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))


@dataclass(frozen=True)
class Star(Regex):
    inner: Regex


@dataclass(frozen=True)
class Plus(Regex):
    inner: Regex


EMPTY = Empty()
EPS = Eps()


# ---------------------------------------------------------------------------
# simplifying constructors (used when regexes are synthesized from automata)

def concat(*rs: Regex) -> Regex:
    parts = []
    for r in rs:
        if isinstance(r, Empty):
            return EMPTY
        if isinstance(r, Eps):
            continue
        if isinstance(r, Concat):
            parts.extend(r.parts)
        else:
            parts.append(r)
    if not parts:
        return EPS
    return parts[0] if len(parts) == 1 else Concat(parts)


def union(*rs: Regex) -> Regex:
    parts = []
    for r in rs:
        if isinstance(r, Empty):
            continue
        for p in (r.parts if isinstance(r, Union) else (r,)):
            if p not in parts:
                parts.append(p)
    if not parts:
        return EMPTY
    # fold single letters into one class
    letters = [p for p in parts if isinstance(p, (Lit, LitSet))]
    if len(letters) > 1:
        tags = set()
        for p in letters:
            tags |= {p.tag} if isinstance(p, Lit) else set(p.tags)
        first = parts.index(letters[0])
        parts = [p for p in parts if not isinstance(p, (Lit, LitSet))]
        parts.insert(first, LitSet(tags))
    if EPS in parts and any(isinstance(p, (Star,)) for p in parts):
        parts.remove(EPS)
    return parts[0] if len(parts) == 1 else Union(parts)


def star(r: Regex) -> Regex:
    if isinstance(r, (Empty, Eps)):
        return EPS
    if isinstance(r, Star):
        return r
    if isinstance(r, Plus):
        return Star(r.inner)
    if isinstance(r, Union) and EPS in r.parts:
        return star(union(*[p for p in r.parts if p != EPS]))
    return Star(r)


def plus(r: Regex) -> Regex:
    if isinstance(r, (Empty, Eps)):
        return r
    if isinstance(r, (Star, Plus)):
        return r
    return Plus(r)


def optional(r: Regex) -> Regex:
    return union(EPS, r)


def any_of(alphabet: Iterable[str]) -> Regex:
    tags = list(alphabet)
    if len(tags) == 1:
        return Lit(tags[0])
    return LitSet(tags) if tags else EMPTY


def word(tags: Sequence[str]) -> Regex:
    return concat(*[Lit(t) for t in tags])


# ---------------------------------------------------------------------------
# analysis

def tags_of(r: Regex) -> set:
    if isinstance(r, Lit):
        return {r.tag}
    if isinstance(r, LitSet):
        return set(r.tags)
    if isinstance(r, (Concat, Union)):
        out = set()
        for p in r.parts:
            out |= tags_of(p)
        return out
    if isinstance(r, (Star, Plus)):
        return tags_of(r.inner)
    return set()


def nullable(r: Regex) -> bool:
    if isinstance(r, (Eps, Star)):
        return True
    if isinstance(r, (Empty, Lit, LitSet)):
        return False
    if isinstance(r, Concat):
        return all(nullable(p) for p in r.parts)
    if isinstance(r, Union):
        return any(nullable(p) for p in r.parts)
    if isinstance(r, Plus):
        return nullable(r.inner)
    raise TypeError(r)


def check_alphabet(r: Regex, alphabet: Iterable[str]) -> None:
    extra = tags_of(r) - set(alphabet)
    if extra:
        raise AlphabetMismatch(f"regex {to_text(r)} uses tags {sorted(extra)} outside {sorted(alphabet)}")


# ---------------------------------------------------------------------------
# parser

_SPECIAL = set("|*+?()[].<> \t\n")


class _Parser:
    def __init__(self, text: str, alphabet: Optional[Sequence[str]]):
        self.text = text
        self.pos = 0
        self.alphabet = None if alphabet is None else tuple(alphabet)

    def error(self, msg):
        raise ParseError(f"{msg} at position {self.pos} in regex {self.text!r}")

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else None

    def parse(self) -> Regex:
        r = self.union()
        if self.peek() is not None:
            self.error("unexpected character")
        return r

    def union(self):
        parts = [self.concat()]
        while self.peek() == "|":
            self.pos += 1
            parts.append(self.concat())
        return parts[0] if len(parts) == 1 else Union(parts)

    def concat(self):
        parts = []
        while True:
            c = self.peek()
            if c is None or c in "|)":
                break
            parts.append(self.postfix())
        if not parts:
            return EPS
        return parts[0] if len(parts) == 1 else Concat(parts)

    def postfix(self):
        r = self.atom()
        while True:
            c = self.peek()
            if c == "*":
                r = Star(r)
            elif c == "+":
                r = Plus(r)
            elif c == "?":
                r = Union([EPS, r])
            else:
                return r
            self.pos += 1

    def tag(self):
        c = self.text[self.pos]
        if c == "<":
            end = self.text.find(">", self.pos)
            if end < 0:
                self.error("unclosed '<'")
            t = self.text[self.pos + 1:end]
            self.pos = end + 1
        elif c in _SPECIAL:
            self.error(f"unexpected {c!r}")
        else:
            t = c
            self.pos += 1
        if self.alphabet is not None and t not in self.alphabet:
            raise AlphabetMismatch(f"tag {t!r} not in alphabet {list(self.alphabet)} (regex {self.text!r})")
        return t

    def atom(self):
        c = self.peek()
        if c == "(":
            self.pos += 1
            r = self.union()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return r
        if c == "[":
            self.pos += 1
            tags = []
            while self.peek() not in ("]", None):
                tags.append(self.tag())
            if self.peek() != "]":
                self.error("expected ']'")
            self.pos += 1
            return LitSet(tags) if tags else EMPTY
        if c == ".":
            self.pos += 1
            if self.alphabet is None:
                self.error("'.' needs a declared alphabet")
            return any_of(self.alphabet)
        for kw, node in (("empty", EMPTY), ("eps", EPS), ("ε", EPS), ("∅", EMPTY)):
            if self.text.startswith(kw, self.pos):
                self.pos += len(kw)
                return node
        if c == "Σ":
            self.pos += 1
            return any_of(self.alphabet or ())
        return Lit(self.tag())


def parse_regex(text: str, alphabet: Optional[Sequence[str]] = None) -> Regex:
    """Parse the surface syntax; ``alphabet`` enables ``.`` and tag checking."""
    if not isinstance(text, str):
        raise ParseError(f"regex must be a string, got {text!r}")
    return _Parser(text, alphabet).parse()


# ---------------------------------------------------------------------------
# printer

def _tag_text(t: str) -> str:
    if len(t) == 1 and t not in _SPECIAL and t not in "εΣ∅":
        return t
    return f"<{t}>"


def to_text(r: Regex, alphabet: Optional[Sequence[str]] = None) -> str:
    return _print(r, 0, None if alphabet is None else frozenset(alphabet))


def _print(r: Regex, prec: int, alphabet) -> str:
    # prec: 0 union context, 1 concat context, 2 postfix operand
    if isinstance(r, Empty):
        return "empty"
    if isinstance(r, Eps):
        return "eps"
    if isinstance(r, Lit):
        return _tag_text(r.tag)
    if isinstance(r, LitSet):
        if alphabet is not None and r.tags == alphabet and len(alphabet) > 1:
            return "."
        if len(r.tags) == 1:
            return _tag_text(next(iter(r.tags)))
        return "[" + "".join(_tag_text(t) for t in sorted(r.tags)) + "]"
    if isinstance(r, Union):
        s = "|".join(_print(p, 0, alphabet) for p in r.parts)
        return f"({s})" if prec > 0 else s
    if isinstance(r, Concat):
        s = "".join(_print(p, 1, alphabet) for p in r.parts)
        return f"({s})" if prec > 1 else s
    if isinstance(r, Star):
        return _print(r.inner, 2, alphabet) + "*"
    if isinstance(r, Plus):
        return _print(r.inner, 2, alphabet) + "+"
    raise TypeError(r)
