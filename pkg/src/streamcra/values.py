"""Value domains, semirings/monoids, and the operation registry.

Values are plain Python objects: ``int`` for integers, ``Fraction`` for
rationals, ``str`` for words over an output alphabet, ``bool`` for the
Boolean semiring, plus the two singletons ``INF`` (tropical infinity) and
``UNIT`` (the placeholder carried by value-oblivious inputs).
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import (LawViolation, NoConstant, PartialOperationRejected,
                     UnknownDomain, UnknownOperation, ValueParseError)


class _Unit:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNIT"

    def __reduce__(self):
        return (_Unit, ())


class _Infinity:
    """Positive infinity for the tropical semiring; compares above every int."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("streamcra-inf")


UNIT = _Unit()
INF = _Infinity()


# ---------------------------------------------------------------------------
# domains

class Domain:
    name = "abstract"

    def contains(self, v) -> bool:
        raise NotImplementedError

    def parse(self, obj) -> Any:
        """Parse a JSON scalar (or literal string) into a value."""
        raise NotImplementedError

    def dump(self, v) -> Any:
        """Inverse of :meth:`parse`, producing a JSON-serializable scalar."""
        return v

    def sample(self, rng: random.Random) -> Any:
        raise NotImplementedError

    def __repr__(self):
        return f"<domain {self.name}>"


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


class IntDomain(Domain):
    def __init__(self, nonneg: bool = False):
        self.nonneg = nonneg
        self.name = "nat" if nonneg else "int"

    def contains(self, v):
        return _is_int(v) and (v >= 0 or not self.nonneg)

    def parse(self, obj):
        if _is_int(obj):
            v = obj
        elif isinstance(obj, str) and re.fullmatch(r"-?\d+", obj.strip()):
            v = int(obj)
        else:
            raise ValueParseError(f"not an integer: {obj!r}")
        if not self.contains(v):
            raise ValueParseError(f"{v} outside {self.name}")
        return v

    def sample(self, rng):
        lo = 0 if self.nonneg else -20
        return rng.randint(lo, 20)


class RatDomain(Domain):
    name = "rat"

    def contains(self, v):
        return _is_int(v) or isinstance(v, Fraction)

    def parse(self, obj):
        if _is_int(obj):
            return Fraction(obj)
        if isinstance(obj, str):
            try:
                return Fraction(obj.strip())
            except (ValueError, ZeroDivisionError):
                pass
        raise ValueParseError(f"not a rational: {obj!r}")

    def dump(self, v):
        v = Fraction(v)
        return v.numerator if v.denominator == 1 else str(v)

    def sample(self, rng):
        return Fraction(rng.randint(-20, 20), rng.randint(1, 6))


class WordDomain(Domain):
    """Finite words over an output alphabet of single characters."""

    def __init__(self, alphabet: Sequence[str]):
        self.alphabet = tuple(alphabet)
        for a in self.alphabet:
            if not isinstance(a, str) or len(a) != 1:
                raise ValueParseError(f"output letters must be single characters: {a!r}")
        self.name = "str"

    def contains(self, v):
        return isinstance(v, str) and all(ch in self.alphabet for ch in v)

    def parse(self, obj):
        if isinstance(obj, str) and self.contains(obj):
            return obj
        raise ValueParseError(f"not a word over {self.alphabet}: {obj!r}")

    def sample(self, rng):
        if not self.alphabet:
            return ""
        return "".join(rng.choice(self.alphabet) for _ in range(rng.randint(0, 3)))


class TropicalDomain(Domain):
    name = "int+inf"

    def contains(self, v):
        return v is INF or _is_int(v)

    def parse(self, obj):
        if isinstance(obj, str) and obj.strip().lower() in ("inf", "infinity", "+inf"):
            return INF
        return IntDomain().parse(obj)

    def dump(self, v):
        return "inf" if v is INF else v

    def sample(self, rng):
        return INF if rng.random() < 0.15 else rng.randint(-20, 20)


class BoolDomain(Domain):
    name = "bool"

    def contains(self, v):
        return isinstance(v, bool)

    def parse(self, obj):
        if isinstance(obj, bool):
            return obj
        if obj in ("true", "1", 1):
            return True
        if obj in ("false", "0", 0):
            return False
        raise ValueParseError(f"not a boolean: {obj!r}")

    def sample(self, rng):
        return rng.random() < 0.5


class UnitDomain(Domain):
    name = "unit"

    def contains(self, v):
        return v is UNIT

    def parse(self, obj):
        return UNIT

    def dump(self, v):
        return None

    def sample(self, rng):
        return UNIT


# ---------------------------------------------------------------------------
# semirings and monoids

@dataclass(frozen=True)
class Semiring:
    name: str
    domain: Domain
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]
    zero: Any
    one: Any

    def sum(self, items: Iterable) -> Any:
        acc = self.zero
        for v in items:
            acc = self.plus(acc, v)
        return acc

    def product(self, items: Iterable) -> Any:
        acc = self.one
        for v in items:
            acc = self.times(acc, v)
        return acc

    def check_laws(self, rng: random.Random, samples: int = 300) -> List[str]:
        """Randomized check of the semiring axioms; returns violated law names."""
        bad = []
        p, t, z, o = self.plus, self.times, self.zero, self.one
        for _ in range(samples):
            a, b, c = (self.domain.sample(rng) for _ in range(3))
            checks = {
                "plus associative": p(p(a, b), c) == p(a, p(b, c)),
                "plus commutative": p(a, b) == p(b, a),
                "zero identity": p(a, z) == a,
                "times associative": t(t(a, b), c) == t(a, t(b, c)),
                "one identity": t(a, o) == a == t(o, a),
                "zero absorbing": t(a, z) == z == t(z, a),
                "left distributive": t(a, p(b, c)) == p(t(a, b), t(a, c)),
                "right distributive": t(p(a, b), c) == p(t(a, c), t(b, c)),
            }
            bad.extend(k for k, ok in checks.items() if not ok and k not in bad)
        return bad


@dataclass(frozen=True)
class Monoid:
    name: str
    domain: Domain
    dot: Callable[[Any, Any], Any]
    one: Any

    def product(self, items: Iterable) -> Any:
        acc = self.one
        for v in items:
            acc = self.dot(acc, v)
        return acc

    def check_laws(self, rng: random.Random, samples: int = 300) -> List[str]:
        bad = []
        for _ in range(samples):
            a, b, c = (self.domain.sample(rng) for _ in range(3))
            if self.dot(self.dot(a, b), c) != self.dot(a, self.dot(b, c)) and "associative" not in bad:
                bad.append("associative")
            if not (self.dot(a, self.one) == a == self.dot(self.one, a)) and "identity" not in bad:
                bad.append("identity")
        return bad


def _trop_plus(a, b):
    if a is INF:
        return b
    if b is INF:
        return a
    return min(a, b)


def _trop_times(a, b):
    if a is INF or b is INF:
        return INF
    return a + b


def _frac(v):
    return Fraction(v)


SEMIRINGS: Dict[str, Callable[[], Semiring]] = {
    "nat-arith": lambda: Semiring("nat-arith", IntDomain(nonneg=True),
                                  lambda a, b: a + b, lambda a, b: a * b, 0, 1),
    "int-arith": lambda: Semiring("int-arith", IntDomain(),
                                  lambda a, b: a + b, lambda a, b: a * b, 0, 1),
    "rat-arith": lambda: Semiring("rat-arith", RatDomain(),
                                  lambda a, b: _frac(a) + b, lambda a, b: _frac(a) * b,
                                  Fraction(0), Fraction(1)),
    "tropical": lambda: Semiring("tropical", TropicalDomain(), _trop_plus, _trop_times, INF, 0),
    "boolean": lambda: Semiring("boolean", BoolDomain(),
                                lambda a, b: a or b, lambda a, b: a and b, False, True),
}


def make_semiring(name: str) -> Semiring:
    try:
        return SEMIRINGS[name]()
    except KeyError:
        raise UnknownDomain(f"unknown semiring {name!r}; known: {sorted(SEMIRINGS)}") from None


def make_monoid(name: str, alphabet: Sequence[str] = ()) -> Monoid:
    """Catalogued monoids.  ``free`` is the free monoid over ``alphabet``;
    ``<semiring>/times`` is the multiplicative monoid of a semiring."""
    if name == "free":
        return Monoid("free", WordDomain(alphabet), lambda a, b: a + b, "")
    if name == "nat-add":
        return Monoid("nat-add", IntDomain(nonneg=True), lambda a, b: a + b, 0)
    if name == "int-add":
        return Monoid("int-add", IntDomain(), lambda a, b: a + b, 0)
    if name == "nat-mult":
        return Monoid("nat-mult", IntDomain(nonneg=True), lambda a, b: a * b, 1)
    if name.endswith("/times"):
        return monoid_view(make_semiring(name[: -len("/times")]))
    raise UnknownDomain(f"unknown monoid {name!r}")


def monoid_view(s: Semiring) -> Monoid:
    """The multiplicative monoid (D, times, one) of a semiring."""
    return Monoid(f"{s.name}/times", s.domain, s.times, s.one)


# ---------------------------------------------------------------------------
# operations and registries

@dataclass(frozen=True)
class Operation:
    name: str
    arity: int
    fn: Callable = field(compare=False)
    tags: frozenset = frozenset()

    def __call__(self, *args):
        return self.fn(*args)


@dataclass(frozen=True)
class _Entry:
    arity: int
    fn: Callable
    tags: Tuple = ()
    partial_on: frozenset = frozenset()


@dataclass(frozen=True)
class _Family:
    """A parametric operation ``name[param]``; ``build(param_value)`` returns the function."""
    arity: int
    parse: Callable[[str], Any]
    build: Callable[[Any], Callable]


_FAMILY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\[(.*)\]$", re.S)


def _ite(x, y, z, w):
    return z if x == y else w


def _monus(x, y):
    return x - y if x > y else x - x


def _int_catalogue(carrier: str) -> Dict[str, _Entry]:
    zero = Fraction(0) if carrier == "rat" else 0
    one = Fraction(1) if carrier == "rat" else 1
    cat = {
        "0": _Entry(0, lambda: zero),
        "1": _Entry(0, lambda: one),
        "+": _Entry(2, lambda a, b: a + b, (("associative",), ("commutative",), ("identity", zero))),
        "*": _Entry(2, lambda a, b: a * b,
                    (("associative",), ("commutative",), ("identity", one), ("absorbing", zero))),
        "max": _Entry(2, max, (("associative",), ("commutative",))),
        "min": _Entry(2, min, (("associative",), ("commutative",))),
        "monus": _Entry(2, _monus),
        "ITE": _Entry(4, _ite),
        "sub": _Entry(2, lambda a, b: a - b, partial_on=frozenset({"nat"})),
        "neg": _Entry(1, lambda a: -a, partial_on=frozenset({"nat"})),
        "div": _Entry(2, lambda a, b: a / b, partial_on=frozenset({"nat", "int", "rat"})),
    }
    return cat


class OperationRegistry:
    """A finite set of named operations over one value domain, plus optional
    parametric families resolved on demand (``rmul[d]``, ``append[a]``, ...)."""

    def __init__(self, kind: str, domain: Domain, ops: Dict[str, Operation],
                 families: Dict[str, _Family] = None, *, semiring: Semiring = None,
                 monoid: Monoid = None, descriptor: dict = None):
        self.kind = kind
        self.domain = domain
        self._ops = dict(ops)
        self._families = dict(families or {})
        self._cache: Dict[str, Operation] = {}
        self.semiring = semiring
        self.monoid = monoid
        self.descriptor = descriptor or {"domain": kind}

    def __repr__(self):
        return f"OperationRegistry({self.kind}, {list(self._ops)}, families={list(self._families)})"

    def __len__(self):
        return len(self._ops)

    def __contains__(self, name):
        try:
            self.lookup(name)
            return True
        except UnknownOperation:
            return False

    @property
    def names(self) -> List[str]:
        return list(self._ops)

    @property
    def families(self) -> List[str]:
        return list(self._families)

    def lookup(self, name: str) -> Operation:
        op = self._ops.get(name) or self._cache.get(name)
        if op is not None:
            return op
        m = _FAMILY_RE.match(name)
        if m and m.group(1) in self._families:
            fam = self._families[m.group(1)]
            try:
                param = fam.parse(m.group(2))
            except ValueParseError as e:
                raise UnknownOperation(f"{name}: {e}") from None
            op = Operation(name, fam.arity, fam.build(param))
            self._cache[name] = op
            return op
        raise UnknownOperation(f"operation {name!r} not in registry ({self.kind})")

    def arity(self, name: str) -> int:
        return self.lookup(name).arity

    def constants(self) -> List[str]:
        return [n for n, op in self._ops.items() if op.arity == 0]

    def first_constant(self) -> str:
        consts = self.constants()
        if not consts:
            raise NoConstant(f"registry {self.kind} has no constant")
        return consts[0]

    def max_arity(self) -> int:
        ar = [op.arity for op in self._ops.values()] + [f.arity for f in self._families.values()]
        return max(ar, default=0)

    def literal_name(self, text: str) -> Optional[str]:
        """Resolve a literal token (number, quoted word) to an operation name."""
        if text in self._ops:
            return text
        if "const" in self._families:
            name = f"const[{text}]"
            try:
                self.lookup(name)
                return name
            except UnknownOperation:
                return None
        return None

    def constant_expr_name(self, value) -> Optional[str]:
        """Name of an arity-0 operation producing ``value``, if one exists."""
        for n, op in self._ops.items():
            if op.arity == 0 and op.fn() == value:
                return n
        if "const" in self._families:
            return f"const[{_format_param(self.domain, value)}]"
        return None

    def format_value(self, v) -> str:
        return _format_param(self.domain, v)


def _format_param(domain: Domain, v) -> str:
    d = domain.dump(v)
    return str(d).lower() if isinstance(d, bool) else str(d)


def _param_parser(domain: Domain):
    def parse(text):
        text = text.strip()
        if isinstance(domain, WordDomain):
            return domain.parse(text)
        return domain.parse(text)
    return parse


CATALOGUE_DOMAINS = ("int", "rat", "str", "semiring", "monoid-unary")


def make_registry(descriptor: dict, seed: int = 0) -> OperationRegistry:
    """Build a registry from a JSON descriptor.

    ``{"domain": "int", "carrier": "nat", "ops": ["0", "+", "max"]}``.
    Omitting ``ops`` selects the whole catalogue of the domain.  Family
    members may be listed individually (``"rmul[a]"``) or wholesale
    (``"rmul[*]"``).
    """
    if not isinstance(descriptor, dict):
        raise UnknownDomain(f"registry descriptor must be an object, got {descriptor!r}")
    kind = descriptor.get("domain")
    entries: Dict[str, _Entry] = {}
    families: Dict[str, _Family] = {}
    semiring = monoid = None
    carrier = None
    if kind in ("int", "rat"):
        carrier = descriptor.get("carrier", "int") if kind == "int" else "rat"
        if carrier not in ("int", "nat", "rat"):
            raise UnknownDomain(f"unknown carrier {carrier!r}")
        domain = RatDomain() if kind == "rat" else IntDomain(nonneg=(carrier == "nat"))
        entries = _int_catalogue(carrier)
        families["const"] = _Family(0, _param_parser(domain), lambda v: (lambda: v))
    elif kind == "str":
        alphabet = tuple(descriptor.get("alphabet", ()))
        domain = WordDomain(alphabet)
        entries = {
            "eps": _Entry(0, lambda: ""),
            "concat": _Entry(2, lambda a, b: a + b, (("associative",), ("identity", ""))),
        }
        families["append"] = _Family(1, lambda t: _one_letter(t, alphabet),
                                     lambda a: (lambda x: x + a))
        families["const"] = _Family(0, domain.parse, lambda v: (lambda: v))
    elif kind == "semiring":
        semiring = make_semiring(descriptor.get("semiring", "nat-arith"))
        domain = semiring.domain
        s = semiring
        entries = {
            "0": _Entry(0, lambda: s.zero),
            "1": _Entry(0, lambda: s.one),
            "+": _Entry(2, s.plus, (("associative",), ("commutative",), ("identity", s.zero))),
            "*": _Entry(2, s.times, (("associative",), ("identity", s.one), ("absorbing", s.zero))),
        }
        families["rmul"] = _Family(1, _param_parser(domain), lambda d: (lambda x: s.times(x, d)))
    elif kind == "monoid-unary":
        monoid = make_monoid(descriptor.get("monoid", "free"), descriptor.get("alphabet", ()))
        domain = monoid.domain
        mo = monoid
        entries = {"1": _Entry(0, lambda: mo.one)}
        families["rmul"] = _Family(1, _param_parser(domain), lambda d: (lambda x: mo.dot(x, d)))
    else:
        raise UnknownDomain(f"unknown domain {kind!r}; expected one of {CATALOGUE_DOMAINS}")

    requested = descriptor.get("ops")
    ops: Dict[str, Operation] = {}
    fams: Dict[str, _Family] = {}
    if requested is None:
        # whole catalogue, minus partial entries and the non-default binary times
        for name, e in entries.items():
            if carrier not in e.partial_on and not (kind == "semiring" and name == "*"):
                ops[name] = Operation(name, e.arity, e.fn, frozenset(e.tags))
        fams = dict(families)
    else:
        for name in requested:
            m = _FAMILY_RE.match(name)
            if name in entries:
                e = entries[name]
                if carrier in e.partial_on:
                    raise PartialOperationRejected(
                        f"{name!r} is partial on {carrier}; use a total substitute such as monus")
                ops[name] = Operation(name, e.arity, e.fn, frozenset(e.tags))
            elif m and m.group(1) in families:
                fam = families[m.group(1)]
                if m.group(2) == "*":
                    fams[m.group(1)] = fam
                else:
                    try:
                        param = fam.parse(m.group(2))
                    except ValueParseError as ex:
                        raise UnknownOperation(f"{name}: {ex}") from None
                    ops[name] = Operation(name, fam.arity, fam.build(param))
            else:
                raise UnknownOperation(f"{name!r} is not catalogued for domain {kind!r}")

    desc = dict(descriptor)
    reg = OperationRegistry(kind, domain, ops, fams, semiring=semiring, monoid=monoid,
                            descriptor=desc)
    _validate_registry(reg, random.Random(seed))
    if semiring is not None:
        bad = semiring.check_laws(random.Random(seed))
        if bad:
            raise LawViolation(f"semiring {semiring.name}: {bad}")
    if monoid is not None:
        bad = monoid.check_laws(random.Random(seed))
        if bad:
            raise LawViolation(f"monoid {monoid.name}: {bad}")
    return reg


def _one_letter(text, alphabet):
    if len(text) == 1 and text in alphabet:
        return text
    raise ValueParseError(f"{text!r} is not an output letter of {alphabet}")


def _validate_registry(reg: OperationRegistry, rng: random.Random, triples: int = 1000):
    """Randomized closure and algebraic-tag checks; raises LawViolation."""
    dom = reg.domain
    for name in reg.names:
        op = reg.lookup(name)
        for _ in range(50):
            args = [dom.sample(rng) for _ in range(op.arity)]
            out = op(*args)
            if not dom.contains(out):
                raise LawViolation(f"{name}{tuple(args)} = {out!r} leaves domain {dom.name}")
        for tag in op.tags:
            if tag[0] == "associative":
                for _ in range(triples):
                    a, b, c = dom.sample(rng), dom.sample(rng), dom.sample(rng)
                    if op(op(a, b), c) != op(a, op(b, c)):
                        raise LawViolation(f"{name} is not associative at {(a, b, c)}")
            elif tag[0] == "commutative":
                for _ in range(triples):
                    a, b = dom.sample(rng), dom.sample(rng)
                    if op(a, b) != op(b, a):
                        raise LawViolation(f"{name} is not commutative at {(a, b)}")
            elif tag[0] == "identity":
                e = tag[1]
                for _ in range(triples // 10):
                    a = dom.sample(rng)
                    if not (op(a, e) == a == op(e, a)):
                        raise LawViolation(f"{e!r} is not an identity of {name}")
            elif tag[0] == "absorbing":
                z = tag[1]
                for _ in range(triples // 10):
                    a = dom.sample(rng)
                    if not (op(a, z) == z == op(z, a)):
                        raise LawViolation(f"{z!r} is not absorbing for {name}")
