"""Nondeterministic and deterministic finite automata."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple, Union as TUnion

from ..errors import AlphabetMismatch
from . import regex as rx

State = Hashable
Label = Optional[str]  # None is epsilon


def canonical_alphabet(alphabet: Iterable[str]) -> Tuple[str, ...]:
    return tuple(sorted(set(alphabet)))


@dataclass(frozen=True, eq=False)
class Nfa:
    """An NFA with optional epsilon moves.

    ``transitions`` is a multiset (a tuple may repeat an edge); repeated edges
    are distinct runs, which matters for ambiguity.
    """
    alphabet: Tuple[str, ...]
    states: Tuple[State, ...]
    transitions: Tuple[Tuple[State, Label, State], ...]
    initial: Tuple[State, ...]
    final: Tuple[State, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphabet", canonical_alphabet(self.alphabet))
        object.__setattr__(self, "states", tuple(dict.fromkeys(self.states)))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "initial", tuple(dict.fromkeys(self.initial)))
        object.__setattr__(self, "final", tuple(dict.fromkeys(self.final)))

    @cached_property
    def out(self) -> Dict[State, List[Tuple[Label, State]]]:
        d = {q: [] for q in self.states}
        for p, a, q in self.transitions:
            d[p].append((a, q))
        return d

    @cached_property
    def final_set(self) -> FrozenSet[State]:
        return frozenset(self.final)

    @property
    def has_epsilon(self) -> bool:
        return any(a is None for _, a, _ in self.transitions)

    def eps_closure(self, states: Iterable[State]) -> FrozenSet[State]:
        seen = set(states)
        stack = list(seen)
        while stack:
            p = stack.pop()
            for a, q in self.out[p]:
                if a is None and q not in seen:
                    seen.add(q)
                    stack.append(q)
        return frozenset(seen)

    def step(self, states: Iterable[State], tag: str) -> FrozenSet[State]:
        nxt = set()
        for p in states:
            for a, q in self.out[p]:
                if a == tag:
                    nxt.add(q)
        return self.eps_closure(nxt)

    def accepts(self, word: Sequence[str]) -> bool:
        cur = self.eps_closure(self.initial)
        for t in word:
            cur = self.step(cur, t)
            if not cur:
                return False
        return bool(cur & self.final_set)

    def count_runs(self, word: Sequence[str]) -> int:
        """Number of accepting runs on ``word`` (ε-moves allowed, must be acyclic)."""
        @_memo
        def runs(q, i):
            total = 1 if (i == len(word) and q in self.final_set) else 0
            for a, r in self.out[q]:
                if a is None:
                    total += runs(r, i)
                elif i < len(word) and a == word[i]:
                    total += runs(r, i + 1)
            return total
        return sum(runs(q, 0) for q in self.initial)

    def is_deterministic(self) -> bool:
        if len(self.initial) > 1 or self.has_epsilon:
            return False
        seen = set()
        for p, a, _ in self.transitions:
            if (p, a) in seen:
                return False
            seen.add((p, a))
        return True

    def __repr__(self):
        return (f"Nfa({len(self.states)} states, {len(self.transitions)} transitions, "
                f"alphabet={list(self.alphabet)})")


def _memo(f):
    cache = {}

    def g(*args):
        if args not in cache:
            cache[args] = f(*args)
        return cache[args]
    return g


@dataclass(frozen=True)
class Dfa:
    """A complete DFA over states ``0..n-1``; ``delta[q][k]`` follows ``alphabet[k]``."""
    alphabet: Tuple[str, ...]
    delta: Tuple[Tuple[int, ...], ...]
    initial: int
    final: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, "final", frozenset(self.final))
        assert all(len(row) == len(self.alphabet) for row in self.delta)

    @property
    def n(self) -> int:
        return len(self.delta)

    @property
    def states(self) -> range:
        return range(len(self.delta))

    @cached_property
    def index(self) -> Dict[str, int]:
        return {a: k for k, a in enumerate(self.alphabet)}

    def next(self, q: int, tag: str) -> int:
        return self.delta[q][self.index[tag]]

    def run(self, word: Sequence[str], start: Optional[int] = None) -> int:
        q = self.initial if start is None else start
        idx = self.index
        for t in word:
            q = self.delta[q][idx[t]]
        return q

    def accepts(self, word: Sequence[str], start: Optional[int] = None) -> bool:
        return self.run(word, start) in self.final

    def to_nfa(self) -> Nfa:
        trans = [(q, a, self.delta[q][k]) for q in self.states for k, a in enumerate(self.alphabet)]
        return Nfa(self.alphabet, tuple(self.states), trans, (self.initial,), tuple(sorted(self.final)))

    def with_initial(self, q: int) -> "Dfa":
        return Dfa(self.alphabet, self.delta, q, self.final)

    def with_final(self, final: Iterable[int]) -> "Dfa":
        return Dfa(self.alphabet, self.delta, self.initial, frozenset(final))

    def __repr__(self):
        return f"Dfa({self.n} states, alphabet={list(self.alphabet)})"


Automaton = TUnion[Nfa, Dfa]


# ---------------------------------------------------------------------------
# constructions

def regex_to_nfa(r: rx.Regex, alphabet: Iterable[str]) -> Nfa:
    """Thompson-style construction."""
    alphabet = canonical_alphabet(alphabet)
    rx.check_alphabet(r, alphabet)
    counter = itertools.count()
    trans: List[Tuple[int, Label, int]] = []

    def build(e) -> Tuple[int, int]:
        s, f = next(counter), next(counter)
        if isinstance(e, rx.Empty):
            pass
        elif isinstance(e, rx.Eps):
            trans.append((s, None, f))
        elif isinstance(e, rx.Lit):
            trans.append((s, e.tag, f))
        elif isinstance(e, rx.LitSet):
            for t in sorted(e.tags):
                trans.append((s, t, f))
        elif isinstance(e, rx.Concat):
            cur = s
            for p in e.parts:
                ps, pf = build(p)
                trans.append((cur, None, ps))
                cur = pf
            trans.append((cur, None, f))
        elif isinstance(e, rx.Union):
            for p in e.parts:
                ps, pf = build(p)
                trans.append((s, None, ps))
                trans.append((pf, None, f))
        elif isinstance(e, (rx.Star, rx.Plus)):
            ps, pf = build(e.inner)
            trans.append((s, None, ps))
            trans.append((pf, None, f))
            trans.append((pf, None, ps))
            if isinstance(e, rx.Star):
                trans.append((s, None, f))
        else:
            raise TypeError(e)
        return s, f

    s, f = build(r)
    n = next(counter)
    return Nfa(alphabet, tuple(range(n)), trans, (s,), (f,))


def determinize(a: Automaton) -> Dfa:
    """Subset construction; the result is complete (a sink appears if needed)."""
    if isinstance(a, Dfa):
        return a
    start = a.eps_closure(a.initial)
    index = {start: 0}
    order = [start]
    rows: List[Tuple[int, ...]] = []
    i = 0
    while i < len(order):
        S = order[i]
        row = []
        for t in a.alphabet:
            T = a.step(S, t)
            if T not in index:
                index[T] = len(order)
                order.append(T)
            row.append(index[T])
        rows.append(tuple(row))
        i += 1
    final = {index[S] for S in order if S & a.final_set}
    return Dfa(a.alphabet, tuple(rows), 0, frozenset(final))


def minimize(a: Automaton) -> Dfa:
    """Minimal complete DFA with states renumbered in BFS order (canonical form)."""
    d = determinize(a)
    # reachable part
    reach = [d.initial]
    seen = {d.initial}
    for q in reach:
        for r in d.delta[q]:
            if r not in seen:
                seen.add(r)
                reach.append(r)
    # Moore refinement
    block = {q: (q in d.final) for q in reach}
    nblocks = len(set(block.values()))
    while True:
        sig = {q: (block[q],) + tuple(block[r] for r in d.delta[q]) for q in reach}
        ids: Dict[tuple, int] = {}
        new = {}
        for q in reach:
            new[q] = ids.setdefault(sig[q], len(ids))
        if len(ids) == nblocks:
            block = new
            break
        block, nblocks = new, len(ids)
    # canonical BFS numbering over blocks
    rep = {}
    for q in reach:
        rep.setdefault(block[q], q)
    number = {block[d.initial]: 0}
    queue = [block[d.initial]]
    rows = []
    for b in queue:
        q = rep[b]
        row = []
        for r in d.delta[q]:
            br = block[r]
            if br not in number:
                number[br] = len(number)
                queue.append(br)
            row.append(number[br])
        rows.append(tuple(row))
    final = frozenset(number[block[q]] for q in reach if q in d.final)
    return Dfa(d.alphabet, tuple(rows), 0, final)


def regex_to_dfa(r: rx.Regex, alphabet: Iterable[str]) -> Dfa:
    """Minimal complete DFA of a regex."""
    return minimize(regex_to_nfa(r, alphabet))


def as_dfa(x, alphabet: Optional[Iterable[str]] = None) -> Dfa:
    if isinstance(x, Dfa):
        return x
    if isinstance(x, Nfa):
        return determinize(x)
    if isinstance(x, rx.Regex):
        if alphabet is None:
            raise ValueError("regex needs an alphabet")
        return regex_to_dfa(x, alphabet)
    raise TypeError(f"not an automaton: {x!r}")


def _same_alphabet(a, b):
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch(f"alphabets differ: {list(a.alphabet)} vs {list(b.alphabet)}")


def product(a: Automaton, b: Automaton, accept) -> Dfa:
    a, b = as_dfa(a), as_dfa(b)
    _same_alphabet(a, b)
    index = {(a.initial, b.initial): 0}
    order = [(a.initial, b.initial)]
    rows = []
    for p, q in order:
        row = []
        for k in range(len(a.alphabet)):
            nxt = (a.delta[p][k], b.delta[q][k])
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        rows.append(tuple(row))
    final = {i for i, (p, q) in enumerate(order) if accept(p in a.final, q in b.final)}
    return Dfa(a.alphabet, tuple(rows), 0, frozenset(final))


def intersect(a: Automaton, b: Automaton) -> Dfa:
    return product(a, b, lambda x, y: x and y)


def union(a: Automaton, b: Automaton) -> Dfa:
    return product(a, b, lambda x, y: x or y)


def difference(a: Automaton, b: Automaton) -> Dfa:
    return product(a, b, lambda x, y: x and not y)


def complement(a: Automaton) -> Dfa:
    d = as_dfa(a)
    return Dfa(d.alphabet, d.delta, d.initial, frozenset(d.states) - d.final)


def intersect_all(alphabet, automata: Iterable[Automaton]) -> Dfa:
    out = sigma_star(alphabet)
    for x in automata:
        out = minimize(intersect(out, x))
    return out


def union_all(alphabet, automata: Iterable[Automaton]) -> Dfa:
    out = empty_dfa(alphabet)
    for x in automata:
        out = minimize(union(out, x))
    return out


def reverse(a: Automaton) -> Nfa:
    n = a.to_nfa() if isinstance(a, Dfa) else a
    return Nfa(n.alphabet, n.states, [(q, t, p) for p, t, q in n.transitions], n.final, n.initial)


def reachable(a: Automaton) -> set:
    d = as_dfa(a)
    seen = {d.initial}
    stack = [d.initial]
    while stack:
        q = stack.pop()
        for r in d.delta[q]:
            if r not in seen:
                seen.add(r)
                stack.append(r)
    return seen


def is_empty(a: Automaton) -> bool:
    if isinstance(a, Nfa):
        return shortest_accepted(a) is None
    d = a
    return not (reachable(d) & d.final)


def contains(a: Automaton, b: Automaton) -> bool:
    """L(b) ⊆ L(a)."""
    return is_empty(difference(b, a))


def language_equal(a: Automaton, b: Automaton) -> bool:
    a, b = as_dfa(a), as_dfa(b)
    _same_alphabet(a, b)
    return minimize(a) == minimize(b)


def shortest_accepted(a: Automaton, start=None) -> Optional[Tuple[str, ...]]:
    """A shortest accepted word (BFS), or None if the language is empty."""
    if isinstance(a, Dfa):
        s = a.initial if start is None else start
        prev = {s: None}
        queue = deque([s])
        while queue:
            q = queue.popleft()
            if q in a.final:
                out = []
                while prev[q] is not None:
                    q, t = prev[q]
                    out.append(t)
                return tuple(reversed(out))
            for k, t in enumerate(a.alphabet):
                r = a.delta[q][k]
                if r not in prev:
                    prev[r] = (q, t)
                    queue.append(r)
        return None
    starts = a.initial if start is None else (start,)
    return shortest_accepted(determinize(Nfa(a.alphabet, a.states, a.transitions, starts, a.final)))


def accepted_words(a: Automaton, max_len: int) -> Iterator[Tuple[str, ...]]:
    d = as_dfa(a)
    for w in words(d.alphabet, max_len):
        if d.accepts(w):
            yield w


def words(alphabet: Sequence[str], max_len: int) -> Iterator[Tuple[str, ...]]:
    """All words up to ``max_len`` in length-lexicographic order."""
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def sigma_star(alphabet) -> Dfa:
    alphabet = canonical_alphabet(alphabet)
    return Dfa(alphabet, ((0,) * len(alphabet),), 0, frozenset({0}))


def empty_dfa(alphabet) -> Dfa:
    alphabet = canonical_alphabet(alphabet)
    return Dfa(alphabet, ((0,) * len(alphabet),), 0, frozenset())


def eps_dfa(alphabet) -> Dfa:
    alphabet = canonical_alphabet(alphabet)
    return Dfa(alphabet, ((1,) * len(alphabet), (1,) * len(alphabet)), 0, frozenset({0}))


def trim_nfa(n: Nfa) -> Nfa:
    """Drop states that are not both reachable and co-reachable."""
    fwd = set(n.initial)
    stack = list(fwd)
    while stack:
        p = stack.pop()
        for _, q in n.out[p]:
            if q not in fwd:
                fwd.add(q)
                stack.append(q)
    back_adj: Dict[State, List[State]] = {q: [] for q in n.states}
    for p, _, q in n.transitions:
        back_adj[q].append(p)
    bwd = set(n.final)
    stack = list(bwd)
    while stack:
        q = stack.pop()
        for p in back_adj[q]:
            if p not in bwd:
                bwd.add(p)
                stack.append(p)
    keep = fwd & bwd
    return Nfa(n.alphabet, [q for q in n.states if q in keep],
               [t for t in n.transitions if t[0] in keep and t[2] in keep],
               [q for q in n.initial if q in keep], [q for q in n.final if q in keep])


def concat_nfa(a: Automaton, b: Automaton) -> Nfa:
    a = a.to_nfa() if isinstance(a, Dfa) else a
    b = b.to_nfa() if isinstance(b, Dfa) else b
    _same_alphabet(a, b)
    L = lambda q: ("L", q)
    R = lambda q: ("R", q)
    trans = [(L(p), t, L(q)) for p, t, q in a.transitions]
    trans += [(R(p), t, R(q)) for p, t, q in b.transitions]
    trans += [(L(f), None, R(i)) for f in a.final for i in b.initial]
    return Nfa(a.alphabet, [L(q) for q in a.states] + [R(q) for q in b.states], trans,
               [L(q) for q in a.initial], [R(q) for q in b.final])


def concat_dfa(*parts: Automaton) -> Dfa:
    out = parts[0]
    for p in parts[1:]:
        out = minimize(concat_nfa(out, p))
    return minimize(out)


def star_nfa(a: Automaton) -> Nfa:
    a = a.to_nfa() if isinstance(a, Dfa) else a
    hub = ("hub",)
    S = lambda q: ("S", q)
    trans = [(S(p), t, S(q)) for p, t, q in a.transitions]
    trans += [(hub, None, S(i)) for i in a.initial]
    trans += [(S(f), None, hub) for f in a.final]
    return Nfa(a.alphabet, [hub] + [S(q) for q in a.states], trans, [hub], [hub])


def letter_dfa(alphabet, tags: Iterable[str]) -> Dfa:
    """The language of one-letter words over ``tags``."""
    alphabet = canonical_alphabet(alphabet)
    tags = set(tags)
    return minimize(Dfa(alphabet, (tuple(1 if a in tags else 2 for a in alphabet),
                                   (2,) * len(alphabet), (2,) * len(alphabet)), 0, frozenset({1})))


def prepend_letter(alphabet, tag: str, d: Automaton) -> Dfa:
    return concat_dfa(letter_dfa(alphabet, [tag]), as_dfa(d))


# ---------------------------------------------------------------------------
# back to regexes (state elimination)

def dfa_to_regex(a: Automaton, initial=None, final=None) -> rx.Regex:
    """A regex for the language of ``a`` (optionally with another start/final set)."""
    d = minimize(as_dfa(a)) if initial is None and final is None else as_dfa(a)
    start = d.initial if initial is None else initial
    finals = d.final if final is None else frozenset(final)
    # restrict to useful states
    fwd = set()
    stack = [start]
    while stack:
        q = stack.pop()
        if q in fwd:
            continue
        fwd.add(q)
        stack.extend(d.delta[q])
    pred: Dict[int, set] = {q: set() for q in d.states}
    for q in d.states:
        for r in d.delta[q]:
            pred[r].add(q)
    useful = set()
    stack = [q for q in finals if q in fwd]
    while stack:
        q = stack.pop()
        if q in useful:
            continue
        useful.add(q)
        stack.extend(p for p in pred[q] if p in fwd)
    if start not in useful:
        return rx.EMPTY
    states = sorted(useful)
    S, F = "start", "final"
    edge: Dict[Tuple, rx.Regex] = {}

    def add(p, q, r):
        edge[(p, q)] = rx.union(edge.get((p, q), rx.EMPTY), r)

    add(S, start, rx.EPS)
    for q in states:
        if q in finals:
            add(q, F, rx.EPS)
        by_target: Dict[int, List[str]] = {}
        for k, t in enumerate(d.alphabet):
            r = d.delta[q][k]
            if r in useful:
                by_target.setdefault(r, []).append(t)
        for r, tags in by_target.items():
            add(q, r, rx.any_of(tags))
    # eliminate states, cheapest first for smaller output
    remaining = list(states)
    while remaining:
        def cost(q):
            ins = sum(1 for (p, r) in edge if r == q and p != q)
            outs = sum(1 for (p, r) in edge if p == q and r != q)
            return (ins * outs, q)
        q = min(remaining, key=cost)
        remaining.remove(q)
        loop = edge.pop((q, q), rx.EMPTY)
        ins = [(p, r) for (p, t), r in list(edge.items()) if t == q]
        outs = [(t, r) for (p, t), r in list(edge.items()) if p == q]
        for p, _ in ins:
            del edge[(p, q)]
        for t, _ in outs:
            del edge[(q, t)]
        mid = rx.star(loop)
        for p, rin in ins:
            for t, rout in outs:
                add(p, t, rx.concat(rin, mid, rout))
    return edge.get((S, F), rx.EMPTY)


# ---------------------------------------------------------------------------
# DOT export

def _dot_id(q) -> str:
    s = str(q).replace('"', '\\"')
    return f'"{s}"'


def to_dot(a: Automaton, name: str = "automaton", state_labels: Optional[Dict] = None) -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  node [shape=circle];',
             '  __start [shape=point];']
    if isinstance(a, Dfa):
        states, final, initial = list(a.states), a.final, [a.initial]
        edges: Dict[Tuple, List[str]] = {}
        for q in a.states:
            for k, t in enumerate(a.alphabet):
                edges.setdefault((q, a.delta[q][k]), []).append(t)
    else:
        states, final, initial = list(a.states), a.final_set, list(a.initial)
        edges = {}
        for p, t, q in a.transitions:
            edges.setdefault((p, q), []).append("ε" if t is None else t)
    for q in states:
        shape = "doublecircle" if q in final else "circle"
        label = (state_labels or {}).get(q, str(q)).replace('"', '\\"')
        lines.append(f'  {_dot_id(q)} [shape={shape}, label="{label}"];')
    for q in initial:
        lines.append(f"  __start -> {_dot_id(q)};")
    for (p, q), tags in edges.items():
        label = ",".join(tags).replace('"', '\\"')
        lines.append(f'  {_dot_id(p)} -> {_dot_id(q)} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
