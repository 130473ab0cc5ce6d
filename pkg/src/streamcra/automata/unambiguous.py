"""Ambiguity-aware constructions: run-preserving ε-elimination, the
ambiguity test, and DFAs for unambiguous concatenation and iteration."""
from __future__ import annotations

from collections import Counter, deque
from typing import Dict, List, Optional, Tuple

from ..errors import EpsilonCycle
from .fa import Automaton, Dfa, Nfa, as_dfa, empty_dfa, minimize, trim_nfa


def find_epsilon_cycle(n: Nfa) -> Optional[list]:
    """A list of states forming an ε-cycle, or None."""
    eps = {q: [r for a, r in n.out[q] if a is None] for q in n.states}
    color: Dict = {}
    for root in n.states:
        if root in color:
            continue
        stack = [(root, iter(eps[root]))]
        path = [root]
        color[root] = 1
        while stack:
            q, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[q] = 2
                stack.pop()
                path.pop()
            elif color.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            elif nxt not in color:
                color[nxt] = 1
                stack.append((nxt, iter(eps[nxt])))
                path.append(nxt)
    return None


def epsilon_paths(n: Nfa, q) -> List[list]:
    """All ε-paths from ``q`` as lists of transition indices (the empty path included)."""
    eps_out: Dict = {}
    for k, (p, a, r) in enumerate(n.transitions):
        if a is None:
            eps_out.setdefault(p, []).append((k, r))
    out = []

    def walk(s, acc):
        out.append((s, acc))
        for k, r in eps_out.get(s, ()):
            walk(r, acc + [k])
    walk(q, [])
    return out


def eliminate_epsilon(n: Nfa) -> Nfa:
    """ε-free NFA with the same number of accepting runs on every word.

    A letter move followed by an ε-path becomes one letter move per ε-path;
    ε-paths leaving initial states become extra initial states (copies of the
    target when several paths reach the same state).
    """
    if not n.has_epsilon:
        return n
    cyc = find_epsilon_cycle(n)
    if cyc:
        raise EpsilonCycle(f"ε-cycle through states {cyc}")
    closure = {q: [t for t, _ in epsilon_paths(n, q)] for q in n.states}
    trans = []
    for p, a, s in n.transitions:
        if a is not None:
            trans.extend((p, a, t) for t in closure[s])
    init_mult = Counter()
    init_order = []
    for i in n.initial:
        for t in closure[i]:
            if t not in init_mult:
                init_order.append(t)
            init_mult[t] += 1
    states = list(n.states)
    initial = list(init_order)
    final = list(n.final)
    out_by_state: Dict = {}
    for p, a, q in trans:
        out_by_state.setdefault(p, []).append((a, q))
    for t in init_order:
        for j in range(1, init_mult[t]):
            clone = ("copy", t, j)
            states.append(clone)
            initial.append(clone)
            if t in n.final_set:
                final.append(clone)
            trans.extend((clone, a, q) for a, q in out_by_state.get(t, ()))
    return Nfa(n.alphabet, states, trans, initial, final)


def ambiguity_witness(n: Nfa) -> Optional[Tuple[str, ...]]:
    """A word with at least two accepting runs, or None if ``n`` is unambiguous."""
    n = trim_nfa(eliminate_epsilon(n))
    if not n.initial:
        return None
    # parallel edges are distinct runs
    counts = Counter(n.transitions)
    dup = next((t for t, c in counts.items() if c > 1), None)
    if dup is not None:
        p, a, q = dup
        pre = _path_word(n, n.initial, p)
        post = _path_word_to_final(n, q)
        return pre + (a,) + post
    # self-product over ordered pairs
    start = [(i, j) for i in n.initial for j in n.initial]
    parent: Dict = {s: None for s in start}
    queue = deque(start)
    edges: Dict = {}
    while queue:
        p, q = queue.popleft()
        for a, p2 in n.out[p]:
            for b, q2 in n.out[q]:
                if a == b:
                    edges.setdefault((p, q), []).append((a, (p2, q2)))
                    if (p2, q2) not in parent:
                        parent[(p2, q2)] = ((p, q), a)
                        queue.append((p2, q2))
    back: Dict = {}
    for s, lst in edges.items():
        for a, t in lst:
            back.setdefault(t, []).append(s)
    fin = n.final_set
    co = {s for s in parent if s[0] in fin and s[1] in fin}
    stack = list(co)
    while stack:
        t = stack.pop()
        for s in back.get(t, ()):
            if s not in co:
                co.add(s)
                stack.append(s)
    bad = [s for s in parent if s[0] != s[1] and s in co]
    if not bad:
        return None
    target = bad[0]
    pre = []
    s = target
    while parent[s] is not None:
        s, a = parent[s]
        pre.append(a)
    pre.reverse()
    # shortest continuation to a final pair
    prev = {target: None}
    queue = deque([target])
    while queue:
        s = queue.popleft()
        if s[0] in fin and s[1] in fin:
            post = []
            while prev[s] is not None:
                s, a = prev[s]
                post.append(a)
            return tuple(pre) + tuple(reversed(post))
        for a, t in edges.get(s, ()):
            if t in co and t not in prev:
                prev[t] = (s, a)
                queue.append(t)
    raise AssertionError("co-reachable pair without a final continuation")


def _path_word(n: Nfa, sources, target) -> Tuple[str, ...]:
    prev = {s: None for s in sources}
    queue = deque(sources)
    while queue:
        q = queue.popleft()
        if q == target:
            out = []
            while prev[q] is not None:
                q, a = prev[q]
                out.append(a)
            return tuple(reversed(out))
        for a, r in n.out[q]:
            if r not in prev:
                prev[r] = (q, a)
                queue.append(r)
    raise AssertionError("unreachable state in trimmed NFA")


def _path_word_to_final(n: Nfa, source) -> Tuple[str, ...]:
    prev = {source: None}
    queue = deque([source])
    while queue:
        q = queue.popleft()
        if q in n.final_set:
            out = []
            while prev[q] is not None:
                q, a = prev[q]
                out.append(a)
            return tuple(reversed(out))
        for a, r in n.out[q]:
            if r not in prev:
                prev[r] = (q, a)
                queue.append(r)
    raise AssertionError("non-co-reachable state in trimmed NFA")


def is_unambiguous(n: Automaton) -> bool:
    """True iff no word has two or more accepting runs."""
    if isinstance(n, Dfa):
        return True
    return ambiguity_witness(n) is None


def _explore(alphabet, start, step, accepting) -> Dfa:
    index = {start: 0}
    order = [start]
    rows = []
    for s in order:
        row = []
        for t in alphabet:
            nxt = step(s, t)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        rows.append(tuple(row))
    final = frozenset(i for i, s in enumerate(order) if accepting(s))
    return minimize(Dfa(tuple(alphabet), tuple(rows), 0, final))


def unamb_concat_dfa(a: Automaton, b: Automaton) -> Dfa:
    """Words with exactly one cut ``u|v`` such that u ∈ A and v ∈ B."""
    A, B = minimize(as_dfa(a)), minimize(as_dfa(b))
    if A.alphabet != B.alphabet:
        from ..errors import AlphabetMismatch
        raise AlphabetMismatch("unamb_concat_dfa: alphabets differ")
    nb = B.n

    def spawn(qa, counts):
        if qa in A.final:
            counts = list(counts)
            counts[B.initial] = min(2, counts[B.initial] + 1)
            return tuple(counts)
        return counts

    start = (A.initial, spawn(A.initial, (0,) * nb))

    def step(state, t):
        qa, counts = state
        k = A.index[t]
        nc = [0] * nb
        for qb, c in enumerate(counts):
            if c:
                r = B.delta[qb][k]
                nc[r] = min(2, nc[r] + c)
        qa2 = A.delta[qa][k]
        return (qa2, spawn(qa2, tuple(nc)))

    def accepting(state):
        return sum(c for qb, c in enumerate(state[1]) if qb in B.final) == 1

    return _explore(A.alphabet, start, step, accepting)


def unamb_iter_dfa(a: Automaton) -> Dfa:
    """Words with exactly one decomposition into A-words; empty if ε ∈ A."""
    A = minimize(as_dfa(a))
    if A.initial in A.final:
        return empty_dfa(A.alphabet)
    na = A.n
    init = [0] * na
    init[A.initial] = 1
    start = (tuple(init), 1)

    def step(state, t):
        counts, _ = state
        k = A.index[t]
        nc = [0] * na
        for q, c in enumerate(counts):
            if c:
                r = A.delta[q][k]
                nc[r] = min(2, nc[r] + c)
        closed = min(2, sum(c for q, c in enumerate(nc) if q in A.final))
        nc[A.initial] = min(2, nc[A.initial] + closed)
        return (tuple(nc), closed)

    return _explore(A.alphabet, start, step, lambda s: s[1] == 1)
