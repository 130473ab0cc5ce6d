"""Forward-only word-to-DAG transductions given by regular rules.

A rule transduction has a finite copy set.  At every position x of an input
word (0..n, position x sits after the x-th item) each copy c may be active
with a label; edges go from an argument vertex (c, x) to the vertex (d, y)
consuming it as its i-th argument, with x <= y.  A vertex rule
``copy c, label g: r1; r2`` fires when the prefix up to x matches r1 and the
suffix matches r2; an edge rule ``c ->i d: r1; r2; r3`` fires when the word
splits as prefix, middle and suffix matching r1, r2 and r3.

The output DAG is evaluated at its unique sink.  The label ``val`` denotes
the data value of the item just before the position, ``id`` the identity.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from . import automata as fa
from .automata import regex as rx
from .cra import Cra, normalize, rate
from .errors import MalformedDag, NotWellFormed, ParseError, PreconditionError, UnknownOperation
from .expr import VAL, Apply, Const, Expression, Reg, registers_of
from .values import OperationRegistry, make_registry

VAL_LABEL = "val"
ID_LABEL = "id"
X_MARK = "⟨x⟩"
Y_MARK = "⟨y⟩"


@dataclass(frozen=True)
class VertexRule:
    copy: str
    label: str
    r1: rx.Regex
    r2: rx.Regex


@dataclass(frozen=True)
class EdgeRule:
    src: str
    dst: str
    arg: int
    r1: rx.Regex
    r2: rx.Regex
    r3: rx.Regex


@dataclass(frozen=True, eq=False)
class RuleTransduction:
    alphabet: Tuple[str, ...]
    copies: Tuple[str, ...]
    domain: rx.Regex
    vertex_rules: Tuple[VertexRule, ...]
    edge_rules: Tuple[EdgeRule, ...]
    registry: OperationRegistry

    @staticmethod
    def build(alphabet, copies, domain, vertex_rules, edge_rules, registry) -> "RuleTransduction":
        alphabet = fa.canonical_alphabet(alphabet)
        copies = tuple(dict.fromkeys(copies))
        t = RuleTransduction(alphabet, copies, domain, tuple(vertex_rules), tuple(edge_rules), registry)
        known = set(copies)
        rx.check_alphabet(domain, alphabet)
        for r in t.vertex_rules:
            if r.copy not in known:
                raise PreconditionError(f"vertex rule for unknown copy {r.copy!r}")
            t.arity(r.label)
            for e in (r.r1, r.r2):
                rx.check_alphabet(e, alphabet)
        for r in t.edge_rules:
            if r.src not in known or r.dst not in known:
                raise PreconditionError(f"edge rule {r.src}->{r.dst} mentions an unknown copy")
            if not 1 <= r.arg <= max(t.i_max, 1):
                raise PreconditionError(f"edge rule {r.src}->{r.dst} has argument index {r.arg} "
                                        f"outside 1..{t.i_max}")
            for e in (r.r1, r.r2, r.r3):
                rx.check_alphabet(e, alphabet)
        return t

    def arity(self, label: str) -> int:
        if label == VAL_LABEL:
            return 0
        if label == ID_LABEL:
            return 1
        try:
            return self.registry.arity(label)
        except UnknownOperation:
            raise UnknownOperation(f"vertex label {label!r} is not an operation of the registry") from None

    @property
    def i_max(self) -> int:
        return max([self.arity(r.label) for r in self.vertex_rules] + [self.registry.max_arity(), 1])

    def replace(self, **kw) -> "RuleTransduction":
        f = dict(alphabet=self.alphabet, copies=self.copies, domain=self.domain,
                 vertex_rules=self.vertex_rules, edge_rules=self.edge_rules, registry=self.registry)
        f.update(kw)
        return RuleTransduction.build(**f)

    def __repr__(self):
        return (f"RuleTransduction({len(self.copies)} copies, {len(self.vertex_rules)} vertex rules, "
                f"{len(self.edge_rules)} edge rules)")


# ---------------------------------------------------------------------------
# regex helpers

@lru_cache(maxsize=None)
def _dfa(r: rx.Regex, alphabet: Tuple[str, ...]) -> fa.Dfa:
    return fa.minimize(fa.regex_to_dfa(r, alphabet))


def _nonempty(r: rx.Regex, alphabet) -> bool:
    return not fa.is_empty(_dfa(r, alphabet))


@lru_cache(maxsize=1 << 16)
def _ends(r: rx.Regex, w: Tuple[str, ...], i: int) -> frozenset:
    """End positions j with w[i:j] in r, by direct recursion on the regex."""
    if isinstance(r, rx.Empty):
        return frozenset()
    if isinstance(r, rx.Eps):
        return frozenset((i,))
    if isinstance(r, rx.Lit):
        return frozenset((i + 1,)) if i < len(w) and w[i] == r.tag else frozenset()
    if isinstance(r, rx.LitSet):
        return frozenset((i + 1,)) if i < len(w) and w[i] in r.tags else frozenset()
    if isinstance(r, rx.Concat):
        cur = {i}
        for p in r.parts:
            cur = set().union(*[_ends(p, w, j) for j in cur]) if cur else set()
        return frozenset(cur)
    if isinstance(r, rx.Union):
        return frozenset().union(*[_ends(p, w, i) for p in r.parts])
    if isinstance(r, (rx.Star, rx.Plus)):
        seen = {i} if isinstance(r, rx.Star) else set()
        frontier = [i]
        while frontier:
            nxt = []
            for j in frontier:
                for k in _ends(r.inner, w, j):
                    if k not in seen:
                        seen.add(k)
                        nxt.append(k)
                    elif isinstance(r, rx.Plus) and k == i and k not in seen:
                        seen.add(k)
            frontier = nxt
        if isinstance(r, rx.Plus) and rx.nullable(r.inner):
            seen.add(i)
        return frozenset(seen)
    raise TypeError(r)


def matches(r: rx.Regex, word: Sequence[str]) -> bool:
    """Membership by direct recursion over the regex (no automata involved)."""
    w = tuple(word)
    return len(w) in _ends(r, w, 0)


def _regex_of(d: fa.Automaton) -> rx.Regex:
    return fa.dfa_to_regex(fa.minimize(fa.as_dfa(d)))


# ---------------------------------------------------------------------------
# direct DAG semantics

@dataclass
class OutputDag:
    labels: Dict[Tuple[str, int], str]                     # (copy, position) -> label
    edges: List[Tuple[Tuple[str, int], int, Tuple[str, int]]]  # (source, arg index, target)
    sink: Tuple[str, int]


def build_dag(t: RuleTransduction, tags: Sequence[str]) -> Optional[OutputDag]:
    """Materialize the output DAG of a tag word, or None off the domain."""
    tags = tuple(tags)
    n = len(tags)
    if not matches(t.domain, tags):
        return None
    labels: Dict[Tuple[str, int], str] = {}
    for x in range(n + 1):
        for r in t.vertex_rules:
            if matches(r.r1, tags[:x]) and matches(r.r2, tags[x:]):
                key = (r.copy, x)
                if labels.get(key, r.label) != r.label:
                    raise MalformedDag(f"vertex {key} has labels {labels[key]!r} and {r.label!r}")
                labels[key] = r.label
    edges = []
    for r in t.edge_rules:
        for x in range(n + 1):
            if not matches(r.r1, tags[:x]):
                continue
            for y in range(x, n + 1):
                if matches(r.r2, tags[x:y]) and matches(r.r3, tags[y:]):
                    src, dst = (r.src, x), (r.dst, y)
                    for v in (src, dst):
                        if v not in labels:
                            raise MalformedDag(f"edge {src} ->{r.arg} {dst} touches inactive vertex {v}")
                    edges.append((src, r.arg, dst))
    succ: Dict[Tuple[str, int], List] = {}
    for src, _, dst in edges:
        succ.setdefault(src, []).append(dst)
    cyc = _find_cycle(succ)
    if cyc:
        raise MalformedDag(f"cycle through vertices {cyc}")
    has_out = {e[0] for e in edges}
    sinks = [v for v in labels if v not in has_out]
    if len(sinks) != 1:
        raise MalformedDag(f"expected one sink, found {sorted(sinks)}")
    return OutputDag(labels, edges, sinks[0])


@lru_cache(maxsize=1 << 12)
def _cached_dag(t: RuleTransduction, tags: Tuple[str, ...]) -> Optional[OutputDag]:
    return build_dag(t, tags)


def dag_oracle_eval(t: RuleTransduction, word: Sequence[Tuple[str, Any]]):
    tags = tuple(a for a, _ in word)
    values = [v for _, v in word]
    dag = _cached_dag(t, tags)
    if dag is None:
        return None
    args: Dict[Tuple[str, int], Dict[int, List]] = {}
    for src, i, dst in dag.edges:
        args.setdefault(dst, {}).setdefault(i, []).append(src)
    memo: Dict[Tuple[str, int], Any] = {}
    busy = set()

    def value(v):
        if v in memo:
            return memo[v]
        if v in busy:
            raise MalformedDag(f"cycle through vertex {v}")
        busy.add(v)
        label = dag.labels[v]
        n = t.arity(label)
        incoming = args.get(v, {})
        if set(incoming) - set(range(1, n + 1)):
            raise MalformedDag(f"vertex {v} labelled {label!r} has extra argument edges")
        vals = []
        for i in range(1, n + 1):
            srcs = incoming.get(i, [])
            if len(srcs) != 1:
                raise MalformedDag(f"vertex {v} labelled {label!r} has {len(srcs)} edges for argument {i}")
            vals.append(value(srcs[0]))
        if label == VAL_LABEL:
            if v[1] == 0:
                raise MalformedDag("val at the first position")
            out = values[v[1] - 1]
        elif label == ID_LABEL:
            out = vals[0]
        else:
            out = t.registry.lookup(label)(*vals)
        busy.discard(v)
        memo[v] = out
        return out

    return value(dag.sink)


# ---------------------------------------------------------------------------
# single-step decomposition

def _step_words(r: rx.Regex, alphabet) -> Optional[List[Tuple[str, ...]]]:
    """The words of L(r) if they all have length at most one, else None."""
    d = _dfa(r, alphabet)
    short = _dfa(rx.union(rx.EPS, rx.any_of(alphabet)), alphabet)
    if not fa.is_empty(fa.difference(d, short)):
        return None
    return [w for w in ((),) + tuple((a,) for a in alphabet) if d.accepts(w)]


def is_single_step(t: RuleTransduction) -> bool:
    return all(isinstance(r.r2, (rx.Eps, rx.Lit)) for r in t.edge_rules)


def single_step(t: RuleTransduction) -> RuleTransduction:
    """Equivalent transduction whose edges span at most one letter.

    Long edges are routed through fresh ``id`` copies, one per state of the
    trimmed minimal DFA of the middle regex.
    """
    if is_single_step(t):
        return t
    A = t.alphabet
    copies = list(t.copies)
    vrules = list(t.vertex_rules)
    erules: List[EdgeRule] = []
    taken = set(copies)
    for n, r in enumerate(t.edge_rules):
        short = _step_words(r.r2, A)
        if short is not None:
            for w in short:
                mid = rx.EPS if not w else rx.Lit(w[0])
                erules.append(EdgeRule(r.src, r.dst, r.arg, r.r1, mid, r.r3))
            continue
        d = _dfa(r.r2, A)
        useful = set(fa.trim_nfa(d.to_nfa()).states)
        if d.initial not in useful:
            continue
        name = {}
        for q in sorted(useful):
            base = f"{r.src}{r.arg}{r.dst}.{q}"
            while base in taken:
                base += "'"
            taken.add(base)
            name[q] = base
            copies.append(base)
        Lq = {q: fa.dfa_to_regex(d, initial=d.initial, final=[q]) for q in useful}
        Rq = {q: fa.dfa_to_regex(d, initial=q) for q in useful}
        for q in sorted(useful):
            vrules.append(VertexRule(name[q], ID_LABEL, rx.concat(r.r1, Lq[q]), rx.concat(Rq[q], r.r3)))
        erules.append(EdgeRule(r.src, name[d.initial], 1, r.r1, rx.EPS, rx.concat(r.r2, r.r3)))
        for q in sorted(useful & set(d.final)):
            erules.append(EdgeRule(name[q], r.dst, r.arg, rx.concat(r.r1, Lq[q]), rx.EPS, r.r3))
        for p in sorted(useful):
            for k, a in enumerate(A):
                q = d.delta[p][k]
                if q in useful:
                    erules.append(EdgeRule(name[p], name[q], 1, rx.concat(r.r1, Lq[p]), rx.Lit(a),
                                           rx.concat(Rq[q], r.r3)))
    return t.replace(copies=copies, vertex_rules=vrules, edge_rules=erules)


# ---------------------------------------------------------------------------
# past and future automata

@dataclass(frozen=True, eq=False)
class PastAutomaton:
    """Product of the minimal DFAs of the prefix tests."""
    tests: Tuple[rx.Regex, ...]
    components: Tuple[fa.Dfa, ...]
    tuples: Tuple[Tuple[int, ...], ...]
    dfa: fa.Dfa

    def holds(self, state: int, test: int) -> bool:
        return self.tuples[state][test] in self.components[test].final

    def test_index(self, r: rx.Regex) -> int:
        return self.tests.index(r)

    def label(self, state: int) -> rx.Regex:
        """Regex of the prefixes leading to ``state``."""
        return fa.dfa_to_regex(self.dfa, initial=self.dfa.initial, final=[state])


def build_past(tests: Sequence[rx.Regex], alphabet) -> PastAutomaton:
    alphabet = fa.canonical_alphabet(alphabet)
    tests = tuple(dict.fromkeys(tests))
    comps = tuple(_dfa(r, alphabet) for r in tests)
    start = tuple(d.initial for d in comps)
    index = {start: 0}
    order = [start]
    delta = []
    for tup in order:
        row = []
        for k in range(len(alphabet)):
            nxt = tuple(d.delta[q][k] for d, q in zip(comps, tup))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
    dfa = fa.Dfa(alphabet, tuple(delta), 0, frozenset(range(len(order))))
    return PastAutomaton(tests, comps, tuple(order), dfa)


@dataclass(frozen=True, eq=False)
class FutureAutomaton:
    """Atoms of the derivative-closed algebra generated by the suffix tests."""
    tests: Tuple[rx.Regex, ...]
    atoms: fa.AtomTable

    @property
    def nfa(self) -> fa.Nfa:
        return self.atoms.nfa

    def holds(self, atom: int, test: int) -> bool:
        return self.atoms.in_base(atom, test)

    def test_index(self, r: rx.Regex) -> int:
        return self.tests.index(r)


def build_future(tests: Sequence[rx.Regex], alphabet) -> FutureAutomaton:
    alphabet = fa.canonical_alphabet(alphabet)
    tests = tuple(dict.fromkeys(tests)) or (rx.star(rx.any_of(alphabet)),)
    return FutureAutomaton(tests, fa.atomaton([_dfa(r, alphabet) for r in tests]))


def _prefix_tests(t: RuleTransduction) -> List[rx.Regex]:
    return [r.r1 for r in t.vertex_rules] + [r.r1 for r in t.edge_rules]


def _suffix_tests(t: RuleTransduction) -> List[rx.Regex]:
    out = [r.r2 for r in t.vertex_rules]
    for r in t.edge_rules:
        out += [rx.concat(r.r2, r.r3), r.r3]
    return out + [t.domain]


def past_automaton(t: RuleTransduction) -> PastAutomaton:
    return build_past(_prefix_tests(t), t.alphabet)


def future_automaton(t: RuleTransduction) -> FutureAutomaton:
    return build_future(_suffix_tests(t), t.alphabet)


# ---------------------------------------------------------------------------
# shapes and the future-past automaton

@dataclass
class Shape:
    """What happens at one position: active copies (with their labels),
    same-position edges, letter edges leaving towards the next position,
    and the active copies with no outgoing edge."""
    active: Dict[str, List[str]]
    eps_edges: List[Tuple[str, str, int]]
    out_letter: List[Tuple[str, str, int, str]]
    sinks: List[str]

    def label(self, c: str) -> str:
        (lab,) = set(self.active[c])
        return lab


@dataclass(eq=False)
class FuturePast:
    t: RuleTransduction
    past: PastAutomaton
    future: FutureAutomaton
    states: List[Tuple[int, int]]
    transitions: List[Tuple[int, str, int]]
    initial: List[int]
    final: List[int]
    shapes: List[Shape] = field(default_factory=list)
    _vrules: list = field(default_factory=list)
    _erules: list = field(default_factory=list)

    @property
    def nfa(self) -> fa.Nfa:
        return fa.Nfa(self.t.alphabet, range(len(self.states)), self.transitions, self.initial, self.final)

    def in_letter(self, src: int, tag: str, dst: int) -> List[Tuple[str, str, int]]:
        """Letter edges entering the position of ``dst`` along src -tag-> dst."""
        P = self.states[src][0]
        T2 = self.states[dst][1]
        return [(r.src, r.dst, r.arg) for r, pi, _, fi_dst, step in self._erules
                if step == tag and self.past.holds(P, pi) and self.future.holds(T2, fi_dst)]

    def out_degree(self, s: int) -> Dict[str, int]:
        sh = self.shapes[s]
        deg: Dict[str, int] = {}
        for c, _, _ in sh.eps_edges:
            deg[c] = deg.get(c, 0) + 1
        for c, _, _, _ in sh.out_letter:
            deg[c] = deg.get(c, 0) + 1
        return deg

    def witness(self, s: int, entry: Optional[Tuple[int, str]] = None) -> Tuple[str, ...]:
        """A tag word whose accepting run visits ``s`` (entered from ``entry`` if given)."""
        n = self.nfa
        if entry is None:
            prefix = _path_to(n, n.initial, s)
        else:
            p, a = entry
            prefix = _path_to(n, n.initial, p) + (a,)
        return prefix + _path_to(n, [s], None, targets=set(n.final))

    def to_dot(self, name="future_past") -> str:
        labels = {}
        for i, (P, T) in enumerate(self.states):
            sh = self.shapes[i]
            act = ",".join(f"{c}:{'/'.join(l)}" for c, l in sh.active.items())
            labels[i] = f"{i}: past {P}, atom {T}\\n{act}"
        return fa.to_dot(self.nfa, name, labels)


def _path_to(n: fa.Nfa, sources, target, targets=None) -> Tuple[str, ...]:
    targets = {target} if targets is None else targets
    prev = {s: None for s in sources}
    queue = deque(sources)
    while queue:
        q = queue.popleft()
        if q in targets:
            out = []
            while prev[q] is not None:
                q, a = prev[q]
                out.append(a)
            return tuple(reversed(out))
        for a, r in n.out[q]:
            if r not in prev:
                prev[r] = (q, a)
                queue.append(r)
    raise ValueError("no path")


def future_past(t: RuleTransduction) -> FuturePast:
    """Product of future and past automata for a single-step transduction, with shapes."""
    if not is_single_step(t):
        raise PreconditionError("future_past needs a single-step transduction")
    past = past_automaton(t)
    fut = future_automaton(t)
    dom = fut.test_index(t.domain)
    vrules = [(r, past.test_index(r.r1), fut.test_index(r.r2)) for r in t.vertex_rules]
    erules = [(r, past.test_index(r.r1), fut.test_index(rx.concat(r.r2, r.r3)),
               fut.test_index(r.r3), None if isinstance(r.r2, rx.Eps) else r.r2.tag)
              for r in t.edge_rules]
    atoms = fut.atoms
    start = [(past.dfa.initial, T) for T in range(len(atoms)) if fut.holds(T, dom)]
    index = {s: i for i, s in enumerate(start)}
    order = list(start)
    trans = []
    for i, (P, T) in enumerate(order):
        for a, T2 in atoms.nfa.out[T]:
            nxt = (past.dfa.next(P, a), T2)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            trans.append((i, a, index[nxt]))
    final = [i for i, (P, T) in enumerate(order) if T == atoms.empty_atom]
    fp = FuturePast(t, past, fut, order, trans, list(range(len(start))), final,
                    _vrules=vrules, _erules=erules)
    for P, T in order:
        active: Dict[str, List[str]] = {}
        for r, pi, fi in vrules:
            if past.holds(P, pi) and fut.holds(T, fi):
                labs = active.setdefault(r.copy, [])
                if r.label not in labs:
                    labs.append(r.label)
        eps, out = [], []
        for r, pi, fi_src, _, step in erules:
            if past.holds(P, pi) and fut.holds(T, fi_src):
                if step is None:
                    eps.append((r.src, r.dst, r.arg))
                else:
                    out.append((r.src, r.dst, r.arg, step))
        has_out = {e[0] for e in eps} | {e[0] for e in out}
        sinks = [c for c in t.copies if c in active and c not in has_out]
        fp.shapes.append(Shape(active, eps, out, sinks))
    return fp


# ---------------------------------------------------------------------------
# well-formedness

CONDITION_NAMES = {
    1: "at most one vertex label",
    2: "edges connect active vertices",
    3: "(non)existence of output",
    4: "no local cycle at any position",
    5: "arity of labels respected",
    6: "global uniqueness of sink",
    7: "no value at first position",
}


@dataclass
class ConditionResult:
    number: int
    ok: bool = True
    detail: str = ""
    witness: Optional[Tuple[str, ...]] = None

    @property
    def name(self) -> str:
        return CONDITION_NAMES[self.number]

    def fail(self, detail, witness=None):
        if self.ok:
            self.ok, self.detail, self.witness = False, detail, witness


@dataclass
class WellFormedness:
    conditions: Dict[int, ConditionResult]
    overlapping_rules: List[str]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions.values())

    def failed(self) -> List[int]:
        return [n for n, c in sorted(self.conditions.items()) if not c.ok]

    def as_dict(self) -> dict:
        return {"ok": self.ok,
                "conditions": {str(n): {"name": c.name, "ok": c.ok, "detail": c.detail,
                                        "witness": list(c.witness) if c.witness is not None else None}
                               for n, c in sorted(self.conditions.items())},
                "overlapping_rules": self.overlapping_rules}

    def summary(self) -> str:
        if self.ok:
            return "all well-formedness conditions hold"
        return "; ".join(f"({n}) {self.conditions[n].name}: {self.conditions[n].detail}"
                         for n in self.failed())


def _shortest(d) -> Optional[Tuple[str, ...]]:
    return fa.shortest_accepted(d)


def check_wellformed(t: RuleTransduction) -> WellFormedness:
    A = t.alphabet
    res = {n: ConditionResult(n) for n in CONDITION_NAMES}
    overlaps = []

    # (1) labels, plus overlap of same-label rules (harmless but reported)
    for r, s in itertools.combinations(t.vertex_rules, 2):
        if r.copy != s.copy:
            continue
        u = _shortest(fa.intersect(_dfa(r.r1, A), _dfa(s.r1, A)))
        v = _shortest(fa.intersect(_dfa(r.r2, A), _dfa(s.r2, A)))
        if u is None or v is None:
            continue
        if r.label != s.label:
            res[1].fail(f"copy {r.copy} gets labels {r.label!r} and {s.label!r} at position {len(u)}",
                        u + v)
        else:
            overlaps.append(f"vertex rules for ({r.copy}, {r.label}) overlap on {list(u + v)}")
    for r, s in itertools.combinations(t.edge_rules, 2):
        if (r.src, r.dst, r.arg) == (s.src, s.dst, s.arg):
            e = fa.intersect(_marked(r, A), _marked(s, A))
            w = _shortest(e)
            if w is not None:
                overlaps.append(f"edge rules {r.src}->{r.arg} {r.dst} overlap on {list(_unmark(w)[0])}")

    # (2) edges connect active vertices
    for r in t.edge_rules:
        src_ok = _active_src(t, r.src)
        dst_ok = _active_dst(t, r.dst)
        bad = fa.difference(_marked(r, A), fa.intersect(src_ok, dst_ok))
        w = _shortest(bad)
        if w is not None:
            word, x, y = _unmark(w)
            which = r.src if not fa.as_dfa(src_ok).accepts(w) else r.dst
            res[2].fail(f"edge {r.src} ->{r.arg} {r.dst} from position {x} to {y} "
                        f"reaches inactive copy {which}", word)

    # (3) domain equals the words with an active vertex
    act = fa.union_all(A, [_dfa(rx.concat(r.r1, r.r2), A) for r in t.vertex_rules])
    dom = _dfa(t.domain, A)
    w = _shortest(fa.difference(dom, act))
    if w is not None:
        res[3].fail("word in the domain without any active vertex", w)
    else:
        w = _shortest(fa.difference(act, dom))
        if w is not None:
            res[3].fail("word outside the domain with an active vertex", w)

    # (4) no cycle of same-position edges
    eps_rules = [r for r in t.edge_rules if rx.nullable(r.r2)]
    if eps_rules:
        past = build_past([r.r1 for r in eps_rules], A)
        fut = build_future([r.r3 for r in eps_rules], A)
        found = None
        for P in past.dfa.states:
            for T in range(len(fut.atoms)):
                graph: Dict[str, List[str]] = {}
                for r in eps_rules:
                    if past.holds(P, past.test_index(r.r1)) and fut.holds(T, fut.test_index(r.r3)):
                        graph.setdefault(r.src, []).append(r.dst)
                cyc = _find_cycle(graph)
                if cyc:
                    u = _path_to(past.dfa.to_nfa(), [past.dfa.initial], P)
                    v = _shortest(fut.atoms.atom_dfa(T))
                    found = (cyc, u, v)
                    break
            if found:
                break
        if found:
            cyc, u, v = found
            res[4].fail(f"cycle {' -> '.join(cyc)} at position {len(u)}", u + v)

    # (7) no val at the first position
    for r in t.vertex_rules:
        if r.label == VAL_LABEL and rx.nullable(r.r1) and _nonempty(r.r2, A):
            res[7].fail(f"copy {r.copy} labelled val at position 0", _shortest(_dfa(r.r2, A)))
            break

    # (5), (6) on the future-past automaton of the single-step form
    fp = future_past(single_step(t))
    _check_arity(fp, res[5])
    _check_sinks(fp, res[6])
    return WellFormedness(res, overlaps)


def _find_cycle(graph: Mapping[str, List[str]]) -> Optional[List[str]]:
    color: Dict[str, int] = {}
    stack: List[str] = []

    def dfs(u):
        color[u] = 1
        stack.append(u)
        for v in graph.get(u, ()):
            if color.get(v) == 1:
                return stack[stack.index(v):] + [v]
            if v not in color:
                c = dfs(v)
                if c:
                    return c
        color[u] = 2
        stack.pop()
        return None

    for u in list(graph):
        if u not in color:
            c = dfs(u)
            if c:
                return c
    return None


def _ext(alphabet):
    return fa.canonical_alphabet(tuple(alphabet) + (X_MARK, Y_MARK))


def _lift(r: rx.Regex, alphabet) -> fa.Dfa:
    return _dfa(r, _ext(alphabet))


def _mark(m) -> fa.Dfa:
    return fa.letter_dfa(_ext(m[1]), [m[0]])


def _insert_marker(d: fa.Dfa, marker: str) -> fa.Dfa:
    """Words of L(d) (over the extended alphabet) with one ``marker`` inserted anywhere."""
    trans = []
    for q in d.states:
        for k, a in enumerate(d.alphabet):
            if a in (X_MARK, Y_MARK):
                continue
            for f in (0, 1):
                trans.append(((q, f), a, (d.delta[q][k], f)))
        trans.append(((q, 0), marker, (q, 1)))
    states = [(q, f) for q in d.states for f in (0, 1)]
    n = fa.Nfa(d.alphabet, states, trans, [(d.initial, 0)], [(q, 1) for q in d.final])
    return fa.minimize(n)


def _marked(r: EdgeRule, alphabet) -> fa.Dfa:
    """Models of an edge rule as words u ⟨x⟩ m ⟨y⟩ v."""
    return fa.concat_dfa(_lift(r.r1, alphabet), _mark((X_MARK, alphabet)), _lift(r.r2, alphabet),
                         _mark((Y_MARK, alphabet)), _lift(r.r3, alphabet))


def _active_src(t: RuleTransduction, c: str) -> fa.Dfa:
    A = t.alphabet
    parts = [fa.concat_dfa(_lift(r.r1, A), _mark((X_MARK, A)), _insert_marker(_lift(r.r2, A), Y_MARK))
             for r in t.vertex_rules if r.copy == c]
    return fa.union_all(_ext(A), parts)


def _active_dst(t: RuleTransduction, c: str) -> fa.Dfa:
    A = t.alphabet
    parts = [fa.concat_dfa(_insert_marker(_lift(r.r1, A), X_MARK), _mark((Y_MARK, A)), _lift(r.r2, A))
             for r in t.vertex_rules if r.copy == c]
    return fa.union_all(_ext(A), parts)


def _unmark(w) -> Tuple[Tuple[str, ...], int, int]:
    x = w.index(X_MARK)
    y = w.index(Y_MARK)
    word = tuple(a for a in w if a not in (X_MARK, Y_MARK))
    return word, x, y - 1


def _check_arity(fp: FuturePast, res: ConditionResult):
    t = fp.t
    entries: Dict[int, List] = {s: [] for s in range(len(fp.states))}
    for s in fp.initial:
        entries[s].append(None)
    for p, a, s in fp.transitions:
        entries[s].append((p, a))
    for s, sh in enumerate(fp.shapes):
        for entry in entries[s]:
            incoming: Dict[Tuple[str, int], int] = {}
            for c, d, i in sh.eps_edges:
                incoming[(d, i)] = incoming.get((d, i), 0) + 1
            if entry is not None:
                for c, d, i in fp.in_letter(entry[0], entry[1], s):
                    incoming[(d, i)] = incoming.get((d, i), 0) + 1
            for c, labs in sh.active.items():
                if len(labs) != 1:
                    continue    # reported under condition 1
                n = t.arity(labs[0])
                for i in range(1, t.i_max + 1):
                    k = incoming.get((c, i), 0)
                    if (i <= n and k != 1) or (i > n and k):
                        w = fp.witness(s, entry)
                        pos = len(_path_to(fp.nfa, fp.nfa.initial, s)) if entry is None else \
                            len(_path_to(fp.nfa, fp.nfa.initial, entry[0])) + 1
                        res.fail(f"copy {c} labelled {labs[0]!r} (arity {n}) has {k} edges for "
                                 f"argument {i} at position {pos}", w)
                        return


def _check_sinks(fp: FuturePast, res: ConditionResult):
    count = {s: min(2, len(sh.sinks)) for s, sh in enumerate(fp.shapes)}
    start = [(s, count[s]) for s in fp.initial]
    prev = {st: None for st in start}
    queue = deque(start)
    out: Dict[int, List] = {}
    for p, a, s in fp.transitions:
        out.setdefault(p, []).append((a, s))
    finals = set(fp.final)
    while queue:
        s, k = queue.popleft()
        if s in finals and k >= 2:
            word = []
            st = (s, k)
            while prev[st] is not None:
                st, a = prev[st]
                word.append(a)
            res.fail("two sinks in one output DAG", tuple(reversed(word)))
            return
        for a, s2 in out.get(s, ()):
            nxt = (s2, min(2, k + count[s2]))
            if nxt not in prev:
                prev[nxt] = ((s, k), a)
                queue.append(nxt)


# ---------------------------------------------------------------------------
# tree check

def tree_witness(t: RuleTransduction) -> Optional[Tuple[Tuple[str, ...], str]]:
    """A word and copy where some vertex has two outgoing edges, or None."""
    fp = future_past(single_step(t))
    for s in range(len(fp.states)):
        for c, k in fp.out_degree(s).items():
            if k > 1:
                return fp.witness(s), c
    return None


def is_tree(t: RuleTransduction) -> bool:
    return tree_witness(t) is None


# ---------------------------------------------------------------------------
# compilation to an unambiguous CRA

SINK_REGISTER = "_sink"


def compile_to_ucra(t: RuleTransduction, check: bool = True) -> Cra:
    """UCRA with one register per stored copy, reading shapes off the future-past automaton."""
    if check:
        report = check_wellformed(t)
        if not report.ok:
            raise NotWellFormed(report.summary())
    fp = future_past(single_step(t))
    st = fp.t
    reg = st.registry
    c0 = None

    def const0():
        nonlocal c0
        if c0 is None:
            c0 = Const(reg.first_constant())
        return c0

    def stored(s):
        return [c for c in st.copies if any(e[0] == c for e in fp.shapes[s].out_letter)]

    def values(s, letter_in):
        sh = fp.shapes[s]
        at_start = letter_in is None
        args: Dict[Tuple[str, int], List] = {}
        for c, d, i in sh.eps_edges:
            args.setdefault((d, i), []).append(("eps", c))
        for c, d, i in (letter_in or ()):
            args.setdefault((d, i), []).append(("reg", c))
        memo: Dict[str, Expression] = {}
        busy = set()

        def value(c):
            if c in memo:
                return memo[c]
            if c in busy:
                raise NotWellFormed(f"cycle through copy {c}")
            if c not in sh.active or len(sh.active[c]) != 1:
                raise NotWellFormed(f"copy {c} is inactive or multiply labelled")
            busy.add(c)
            label = sh.active[c][0]
            vals = []
            for i in range(1, st.arity(label) + 1):
                srcs = args.get((c, i), [])
                if len(srcs) != 1:
                    raise NotWellFormed(f"copy {c} has {len(srcs)} edges for argument {i}")
                kind, d = srcs[0]
                vals.append(value(d) if kind == "eps" else Reg(d))
            if label == VAL_LABEL:
                if at_start:
                    raise NotWellFormed("val at the first position")
                e = VAL
            elif label == ID_LABEL:
                e = vals[0]
            elif vals:
                e = Apply(label, vals)
            else:
                e = Const(label)
            busy.discard(c)
            memo[c] = e
            return e

        return value

    registers: List[str] = []

    def use(r):
        if r not in registers:
            registers.append(r)

    def step(s, carry, letter_in):
        """Update and new carry register for entering fp state ``s``."""
        sh = fp.shapes[s]
        value = values(s, letter_in)
        keep = stored(s)
        upd = {c: value(c) for c in keep}
        for c in keep:
            use(c)
        if len(sh.sinks) > 1 or (sh.sinks and carry is not None):
            raise NotWellFormed("two sinks in one output DAG")
        if sh.sinks:
            k = sh.sinks[0]
            use(k)
            upd[k] = value(k)
            return upd, k
        if carry is None:
            return upd, None
        if carry not in keep:
            upd[carry] = Reg(carry)
            return upd, carry
        free = [c for c in st.copies if c not in keep] + [SINK_REGISTER]
        r = free[0]
        use(r)
        upd[r] = Reg(carry)
        return upd, r

    init, trans, states = {}, [], []
    index = {}
    queue = deque()
    for s in fp.initial:
        upd, carry = step(s, None, None)
        key = (s, carry)
        if key not in index:
            index[key] = len(states)
            states.append(key)
            queue.append(key)
        init[key] = upd
    out: Dict[int, List] = {}
    for p, a, s in fp.transitions:
        out.setdefault(p, []).append((a, s))
    while queue:
        key = queue.popleft()
        s, carry = key
        for a, s2 in out.get(s, ()):
            upd, carry2 = step(s2, carry, fp.in_letter(s, a, s2))
            key2 = (s2, carry2)
            if key2 not in index:
                index[key2] = len(states)
                states.append(key2)
                queue.append(key2)
            trans.append((key, a, upd, key2))
    final = {key: Reg(key[1]) for key in states if key[0] in set(fp.final) and key[1] is not None}
    regs = [c for c in st.copies if c in registers] + [r for r in registers if r not in st.copies]
    full_init = {k: {x: row.get(x, const0()) for x in regs} for k, row in init.items()}
    full_trans = [(p, a, {x: u.get(x, const0()) for x in regs}, q) for p, a, u, q in trans]
    m = Cra.build(st.alphabet, regs, states, full_trans, full_init, final, reg)
    return normalize(m)


# ---------------------------------------------------------------------------
# CRA to rules

def cra_to_rules(m: Cra) -> RuleTransduction:
    """Single-step rule transduction with one copy per register plus one per
    expression node; a copy is active only where its value reaches the output."""
    m = normalize(m)
    n = rate(m)
    w = fa.ambiguity_witness(n)
    if w is not None:
        raise PreconditionError(f"machine is ambiguous on {list(w)}")
    A = m.alphabet
    X = list(m.registers)
    name = {x: str(x) for x in X}
    if len(set(name.values())) != len(X):
        raise PreconditionError("register names collide when converted to strings")

    def lang(initial, final):
        return _regex_of(fa.Nfa(A, n.states, n.transitions, initial, final))

    L = {q: lang(n.initial, [q]) for q in m.states}
    # pair automaton: (q, y) reaches the output along the suffix
    pstates = [(q, y) for q in m.states for y in X]
    ptrans = []
    for t in m.transitions:
        for z, e in t.update.items():
            for y in set(registers_of(e)):
                ptrans.append(((t.src, y), t.tag, (t.dst, z)))
    pfinal = [(q, y) for q, e in m.final.items() for y in set(registers_of(e))]
    live_cache = {}

    def live(q, y):
        if (q, y) not in live_cache:
            live_cache[(q, y)] = _regex_of(fa.Nfa(A, pstates, ptrans, [(q, y)], pfinal))
        return live_cache[(q, y)]

    out_root = "out"
    while out_root in name.values():
        out_root += "'"
    copies = [name[x] for x in X]
    vrules: List[VertexRule] = []
    erules: List[EdgeRule] = []

    def node(e, copy, pre, post, reg_edge):
        """Rules for expression ``e`` computed at copy ``copy`` (``e`` is not a bare register)."""
        if copy not in copies:
            copies.append(copy)
        if e is VAL:
            vrules.append(VertexRule(copy, VAL_LABEL, pre, post))
        elif isinstance(e, Const):
            vrules.append(VertexRule(copy, e.name, pre, post))
        elif isinstance(e, Apply):
            vrules.append(VertexRule(copy, e.op, pre, post))
            for i, a in enumerate(e.args, 1):
                if isinstance(a, Reg):
                    reg_edge(name[a.name], copy, i)
                else:
                    child = f"{copy}/{i}"
                    node(a, child, pre, post, reg_edge)
                    erules.append(EdgeRule(child, copy, i, pre, rx.EPS, post))
        else:
            raise TypeError(e)

    for q, row in m.init.items():
        for z, e in row.items():
            post = live(q, z)
            if _nonempty(post, A):
                node(e, name[z], rx.EPS, post, None)
    for t in m.transitions:
        p, a, q = t.src, t.tag, t.dst
        pre = rx.concat(L[p], rx.Lit(a))
        for z, e in t.update.items():
            post = live(q, z)
            if not _nonempty(post, A):
                continue

            def letter_edge(y, copy, i, post=post):
                erules.append(EdgeRule(y, copy, i, L[p], rx.Lit(a), post))

            if isinstance(e, Reg):
                vrules.append(VertexRule(name[z], ID_LABEL, pre, post))
                letter_edge(name[e.name], name[z], 1)
            else:
                node(e, name[z], pre, post, letter_edge)
    for q, e in m.final.items():
        if isinstance(e, Reg):
            continue

        def same_pos(y, copy, i, q=q):
            erules.append(EdgeRule(y, copy, i, L[q], rx.EPS, rx.EPS))

        node(e, out_root, L[q], rx.EPS, same_pos)
    domain = _regex_of(fa.minimize(n))
    return RuleTransduction.build(A, copies, domain, vrules, erules, m.registry)


# ---------------------------------------------------------------------------
# JSON and DOT

def rules_to_json(t: RuleTransduction) -> dict:
    A = t.alphabet
    txt = lambda r: rx.to_text(r, A)
    return {"alphabet": list(A), "copies": list(t.copies), "domain": txt(t.domain),
            "vertex_rules": [{"copy": r.copy, "label": r.label, "r1": txt(r.r1), "r2": txt(r.r2)}
                             for r in t.vertex_rules],
            "edge_rules": [{"src": r.src, "dst": r.dst, "arg": r.arg, "r1": txt(r.r1),
                            "r2": txt(r.r2), "r3": txt(r.r3)} for r in t.edge_rules],
            "registry": t.registry.descriptor}


def rules_from_json(obj: Mapping, registry: OperationRegistry = None, seed: int = 0) -> RuleTransduction:
    try:
        A = fa.canonical_alphabet(obj["alphabet"])
        if registry is None:
            registry = make_registry(obj["registry"], seed=seed)
        p = lambda s: rx.parse_regex(s, A)
        vr = [VertexRule(str(r["copy"]), str(r["label"]), p(r["r1"]), p(r["r2"]))
              for r in obj.get("vertex_rules", [])]
        er = [EdgeRule(str(r["src"]), str(r["dst"]), int(r["arg"]), p(r["r1"]), p(r["r2"]), p(r["r3"]))
              for r in obj.get("edge_rules", [])]
        return RuleTransduction.build(A, [str(c) for c in obj["copies"]], p(obj.get("domain", "Σ*")),
                                      vr, er, registry)
    except (KeyError, TypeError, AttributeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"malformed rule file: {e!r}") from None


def dag_to_dot(t: RuleTransduction, tags: Sequence[str], name: str = "dag") -> str:
    dag = build_dag(t, tags)
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    if dag is None:
        lines.append('  empty [label="outside domain", shape=plaintext];')
    else:
        ident = {v: f"v{k}" for k, v in enumerate(sorted(dag.labels))}
        for v, lab in sorted(dag.labels.items()):
            shape = "doublecircle" if v == dag.sink else "circle"
            lines.append(f'  {ident[v]} [label="{lab}\\n{v[0]}@{v[1]}", shape={shape}];')
        for src, i, dst in dag.edges:
            lines.append(f'  {ident[src]} -> {ident[dst]} [label="{i}"];')
    lines.append("}")
    return "\n".join(lines)
