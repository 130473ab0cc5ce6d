"""Cost register automata: model, validation, streaming evaluation,
path-enumeration oracle, determinization and register-guessing."""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import automata as fa
from .errors import (AlphabetMismatch, AmbiguityDetected, ArityMismatch, BoundExceeded,
                     EpsilonCycle, NonUnaryOperation, NotUnambiguous, ParseError,
                     PreconditionError, TagOutOfAlphabet)
from .expr import (Apply, Const, Expression, Reg, check_arity, compile_expr,
                   compile_update, count_applications, eval_expr, is_closed, parse_expr,
                   register_occurrences, registers_of, substitute, to_text, uses_val)
from .values import OperationRegistry, make_registry

State = Hashable
Register = Hashable


@dataclass(frozen=True, eq=False)
class Transition:
    src: State
    tag: Optional[str]          # None for an ε-transition
    update: Dict[Register, Expression]
    dst: State

    def __repr__(self):
        upd = ", ".join(f"{x} := {to_text(e)}" for x, e in self.update.items())
        return f"{self.src} -{self.tag if self.tag is not None else 'ε'}/{{{upd}}}-> {self.dst}"


@dataclass(frozen=True, eq=False)
class Cra:
    alphabet: Tuple[str, ...]
    registers: Tuple[Register, ...]
    states: Tuple[State, ...]
    transitions: Tuple[Transition, ...]
    init: Dict[State, Dict[Register, Expression]]
    final: Dict[State, Expression]
    registry: OperationRegistry

    @staticmethod
    def build(alphabet, registers, states, transitions, init, final, registry) -> "Cra":
        """Normalizing constructor.

        ``transitions`` are ``(src, tag, update, dst)`` tuples or Transition
        objects.  Registers missing from an update keep their value; registers
        missing from an initialization get the registry's first constant.
        """
        registers = tuple(registers)
        states = tuple(dict.fromkeys(states))
        trans = []
        for t in transitions:
            if not isinstance(t, Transition):
                t = Transition(*t)
            upd = {x: t.update.get(x, Reg(x)) for x in registers}
            extra = set(t.update) - set(registers)
            if extra:
                raise PreconditionError(f"update assigns unknown registers {sorted(map(str, extra))}")
            trans.append(Transition(t.src, t.tag, upd, t.dst))
        full_init = {}
        for q, vals in init.items():
            row = {}
            for x in registers:
                if x in vals:
                    row[x] = vals[x]
                else:
                    row[x] = Const(registry.first_constant())
            full_init[q] = row
        m = Cra(fa.canonical_alphabet(alphabet), registers, states, tuple(trans),
                full_init, dict(final), registry)
        m._check_references()
        return m

    def _check_references(self):
        known = set(self.states)
        for t in self.transitions:
            if t.src not in known or t.dst not in known:
                raise PreconditionError(f"transition {t} references an unknown state")
            if t.tag is not None and t.tag not in self.alphabet:
                raise AlphabetMismatch(f"transition tag {t.tag!r} not in {list(self.alphabet)}")
        for q in itertools.chain(self.init, self.final):
            if q not in known:
                raise PreconditionError(f"init/final references unknown state {q!r}")
        for q, row in self.init.items():
            for x, e in row.items():
                if not is_closed(e):
                    raise PreconditionError(f"initialization of {x} at {q} is not closed: {to_text(e)}")
        for q, e in self.final.items():
            if uses_val(e):
                raise PreconditionError(f"finalization at {q} uses val")
        for t in self.transitions:
            if t.tag is None and any(uses_val(e) for e in t.update.values()):
                raise PreconditionError(f"ε-transition {t} reads val")

    # -- structure -----------------------------------------------------------
    @cached_property
    def out(self) -> Dict[State, List[Transition]]:
        d = {q: [] for q in self.states}
        for t in self.transitions:
            d[t.src].append(t)
        return d

    @property
    def initial_states(self) -> Tuple[State, ...]:
        return tuple(q for q in self.states if q in self.init)

    @property
    def final_states(self) -> Tuple[State, ...]:
        return tuple(q for q in self.states if q in self.final)

    @property
    def has_epsilon(self) -> bool:
        return any(t.tag is None for t in self.transitions)

    def replace(self, **kw) -> "Cra":
        fields = dict(alphabet=self.alphabet, registers=self.registers, states=self.states,
                      transitions=self.transitions, init=self.init, final=self.final,
                      registry=self.registry)
        fields.update(kw)
        return Cra.build(**fields)

    def __repr__(self):
        return (f"Cra({len(self.states)} states, {len(self.registers)} registers, "
                f"{len(self.transitions)} transitions, alphabet={list(self.alphabet)})")


# ---------------------------------------------------------------------------
# validation

@dataclass
class Diagnostics:
    is_deterministic: bool
    is_unambiguous: bool
    is_copyless: bool
    is_trim: bool
    arity_ok: bool
    epsilon_free: bool
    copy_violations: List[str] = field(default_factory=list)
    arity_problems: List[str] = field(default_factory=list)
    ambiguity_witness: Optional[Tuple[str, ...]] = None
    untrim_states: List[State] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "is_deterministic": self.is_deterministic,
            "is_unambiguous": self.is_unambiguous,
            "is_copyless": self.is_copyless,
            "is_trim": self.is_trim,
            "arity_ok": self.arity_ok,
            "epsilon_free": self.epsilon_free,
            "copy_violations": self.copy_violations,
            "arity_problems": self.arity_problems,
            "ambiguity_witness": None if self.ambiguity_witness is None else list(self.ambiguity_witness),
            "untrim_states": [str(q) for q in self.untrim_states],
        }


def rate(m: Cra) -> fa.Nfa:
    """Tag projection: the underlying NFA with updates erased."""
    return fa.Nfa(m.alphabet, m.states, [(t.src, t.tag, t.dst) for t in m.transitions],
                  m.initial_states, m.final_states)


def rate_dfa(m: Cra) -> fa.Dfa:
    return fa.minimize(rate(m))


def copy_violations(m: Cra) -> List[str]:
    out = []
    for t in m.transitions:
        occ = register_occurrences(t.update)
        for x, k in occ.items():
            if k > 1:
                out.append(f"register {x} used {k} times in update of {t.src} -"
                           f"{t.tag if t.tag is not None else 'ε'}-> {t.dst}")
    for q, e in m.final.items():
        for x, k in Counter(registers_of(e)).items():
            if k > 1:
                out.append(f"register {x} used {k} times in finalization of {q}")
    return out


def validate(m: Cra) -> Diagnostics:
    arity = []
    exprs = [e for t in m.transitions for e in t.update.values()]
    exprs += [e for row in m.init.values() for e in row.values()] + list(m.final.values())
    for e in exprs:
        arity.extend(check_arity(e, m.registry))
    nfa = rate(m)
    trimmed = fa.trim_nfa(nfa)
    untrim = [q for q in m.states if q not in set(trimmed.states)]
    try:
        witness = fa.ambiguity_witness(nfa)
        unamb = witness is None
    except EpsilonCycle:
        witness, unamb = None, False
    viol = copy_violations(m)
    return Diagnostics(
        is_deterministic=nfa.is_deterministic(),
        is_unambiguous=unamb,
        is_copyless=not viol,
        is_trim=not untrim,
        arity_ok=not arity,
        epsilon_free=not m.has_epsilon,
        copy_violations=viol,
        arity_problems=arity,
        ambiguity_witness=witness,
        untrim_states=untrim,
    )


def is_deterministic(m: Cra) -> bool:
    return rate(m).is_deterministic()


def trim(m: Cra) -> Cra:
    keep = set(fa.trim_nfa(rate(m)).states)
    if len(keep) == len(m.states):
        return m
    return Cra.build(m.alphabet, m.registers, [q for q in m.states if q in keep],
                     [t for t in m.transitions if t.src in keep and t.dst in keep],
                     {q: v for q, v in m.init.items() if q in keep},
                     {q: e for q, e in m.final.items() if q in keep}, m.registry)


def relabel(m: Cra) -> Cra:
    """Renumber states 0..n-1 in breadth-first order from the initial states."""
    order = list(m.initial_states)
    seen = set(order)
    for q in order:
        for t in m.out[q]:
            if t.dst not in seen:
                seen.add(t.dst)
                order.append(t.dst)
    order += [q for q in m.states if q not in seen]
    num = {q: k for k, q in enumerate(order)}
    trans = sorted(m.transitions, key=lambda t: (num[t.src], _tag_key(t.tag), num[t.dst]))
    return Cra.build(m.alphabet, m.registers, range(len(order)),
                     [Transition(num[t.src], t.tag, t.update, num[t.dst]) for t in trans],
                     {num[q]: m.init[q] for q in order if q in m.init},
                     {num[q]: m.final[q] for q in order if q in m.final}, m.registry)


def _tag_key(tag):
    return ("", "") if tag is None else ("1", tag)


def rename_registers(m: Cra, f) -> Cra:
    """Apply ``f`` to every register name."""
    sub = {x: Reg(f(x)) for x in m.registers}
    return Cra.build(m.alphabet, [f(x) for x in m.registers], m.states,
                     [Transition(t.src, t.tag, {f(x): substitute(e, sub) for x, e in t.update.items()}, t.dst)
                      for t in m.transitions],
                     {q: {f(x): e for x, e in row.items()} for q, row in m.init.items()},
                     {q: substitute(e, sub) for q, e in m.final.items()}, m.registry)


def compose_updates(first: Mapping[Register, Expression],
                    second: Mapping[Register, Expression]) -> Dict[Register, Expression]:
    """The update performing ``first`` then ``second``."""
    return {x: substitute(e, first) for x, e in second.items()}


def eliminate_epsilon(m: Cra) -> Cra:
    """Remove ε-transitions, composing updates along ε-paths.

    Runs are preserved one-to-one (initial ε-paths reaching the same state
    twice produce copies of that state), so unambiguity is unaffected.
    """
    if not m.has_epsilon:
        return m
    cyc = fa.find_epsilon_cycle(rate(m))
    if cyc:
        raise EpsilonCycle(f"ε-cycle through states {cyc}")
    eps_out: Dict[State, List[Transition]] = {}
    for t in m.transitions:
        if t.tag is None:
            eps_out.setdefault(t.src, []).append(t)

    def paths(q) -> List[Tuple[State, List[Transition]]]:
        out = [(q, [])]
        for t in eps_out.get(q, ()):
            out.extend((r, [t] + p) for r, p in paths(t.dst))
        return out

    closure = {q: paths(q) for q in m.states}

    def along(update, path):
        for t in path:
            update = compose_updates(update, t.update)
        return update

    trans = []
    for t in m.transitions:
        if t.tag is None:
            continue
        for r, path in closure[t.dst]:
            trans.append(Transition(t.src, t.tag, along(t.update, path), r))
    init: Dict[State, Dict] = {}
    states = list(m.states)
    final = dict(m.final)
    extra = []
    for i in m.initial_states:
        for r, path in closure[i]:
            row = along(m.init[i], path)
            if r not in init:
                init[r] = row
            else:
                clone = ("copy", r, len(extra))
                extra.append((clone, r))
                init[clone] = row
    out_by: Dict[State, List[Transition]] = {}
    for t in trans:
        out_by.setdefault(t.src, []).append(t)
    for clone, r in extra:
        states.append(clone)
        if r in m.final:
            final[clone] = m.final[r]
        trans.extend(Transition(clone, t.tag, t.update, t.dst) for t in out_by.get(r, ()))
    return Cra.build(m.alphabet, m.registers, states, trans, init, final, m.registry)


def normalize(m: Cra) -> Cra:
    """ε-free, trim, canonically numbered."""
    return relabel(trim(eliminate_epsilon(m)))


# ---------------------------------------------------------------------------
# streaming evaluation

@dataclass
class EvalStats:
    items: int = 0
    max_live_tokens: int = 0
    max_stored_values: int = 0
    op_applications: int = 0

    def as_dict(self):
        return dict(items=self.items, max_live_tokens=self.max_live_tokens,
                    max_stored_values=self.max_stored_values,
                    op_applications=self.op_applications)


@dataclass
class Token:
    state: State
    env: Dict[Register, Any]


class Evaluator:
    """One streaming session over an unambiguous, trim, ε-free machine.

    At most one token per state is kept; a second token arriving at the same
    state is an ambiguity and raises.
    """

    def __init__(self, m: Cra, check: bool = True):
        if check:
            if m.has_epsilon:
                raise PreconditionError("eval_stream needs an ε-free machine (use eliminate_epsilon)")
            diag = validate(m)
            if not diag.is_trim:
                raise PreconditionError(f"machine is not trim: {diag.untrim_states[:5]}")
            if not diag.is_unambiguous:
                raise PreconditionError(f"machine is ambiguous, witness {diag.ambiguity_witness}")
            if not diag.arity_ok:
                raise ArityMismatch("; ".join(diag.arity_problems))
        self.m = m
        self.nregs = len(m.registers)
        idx = {q: k for k, q in enumerate(m.states)}
        self._states = list(m.states)
        regs = m.registers
        self._table: List[Dict[str, List[tuple]]] = [dict() for _ in m.states]
        for t in m.transitions:
            fn = compile_update([t.update[x] for x in regs], regs, m.registry)
            napps = sum(count_applications(e) for e in t.update.values())
            self._table[idx[t.src]].setdefault(t.tag, []).append((idx[t.dst], fn, napps))
        self._init = [(idx[q], compile_update([m.init[q][x] for x in regs], regs, m.registry),
                       sum(count_applications(e) for e in m.init[q].values()))
                      for q in m.initial_states]
        self._final = {idx[q]: (compile_expr(e, regs, m.registry), count_applications(e))
                       for q, e in m.final.items()}
        self._alphabet = set(m.alphabet)
        self.reset()

    def reset(self):
        self.stats = EvalStats()
        tokens = {}
        for q, fn, napps in self._init:
            if q in tokens:
                raise AmbiguityDetected(f"two initial tokens on state {self._states[q]}")
            tokens[q] = fn((), None)
            self.stats.op_applications += napps
        self.tokens = tokens
        self._observe()

    def _observe(self):
        n = len(self.tokens)
        s = self.stats
        if n > s.max_live_tokens:
            s.max_live_tokens = n
        if n * self.nregs > s.max_stored_values:
            s.max_stored_values = n * self.nregs

    def feed(self, tag: str, value) -> None:
        if tag not in self._alphabet:
            raise TagOutOfAlphabet(f"tag {tag!r} not in {sorted(self._alphabet)}")
        new = {}
        table = self._table
        apps = 0
        for q, env in self.tokens.items():
            for dst, fn, napps in table[q].get(tag, ()):
                if dst in new:
                    raise AmbiguityDetected(f"two tokens collide on state {self._states[dst]}")
                new[dst] = fn(env, value)
                apps += napps
        self.tokens = new
        s = self.stats
        s.items += 1
        s.op_applications += apps
        n = len(new)
        if n > s.max_live_tokens:
            s.max_live_tokens = n
        if n * self.nregs > s.max_stored_values:
            s.max_stored_values = n * self.nregs

    def feed_all(self, items: Iterable[Tuple[str, Any]]) -> None:
        for tag, value in items:
            self.feed(tag, value)

    def result(self):
        """The output on the input consumed so far, or None if undefined."""
        done = [q for q in self.tokens if q in self._final]
        if len(done) > 1:
            raise AmbiguityDetected(f"{len(done)} tokens on final states")
        if not done:
            return None
        fn, napps = self._final[done[0]]
        self.stats.op_applications += napps
        return fn(self.tokens[done[0]], None)

    def live_tokens(self) -> List[Token]:
        return [Token(self._states[q], dict(zip(self.m.registers, env)))
                for q, env in self.tokens.items()]


def eval_stream(m: Cra, items: Iterable[Tuple[str, Any]], check: bool = True):
    """Evaluate ``m`` on a stream of ``(tag, value)`` items: ``(output or None, EvalStats)``."""
    ev = Evaluator(m, check=check)
    ev.feed_all(items)
    out = ev.result()
    bound = len(m.states) * len(m.registers)
    assert ev.stats.max_live_tokens <= len(m.states)
    assert ev.stats.max_stored_values <= bound
    return out, ev.stats


def eval_paths_oracle(m: Cra, word: Sequence[Tuple[str, Any]], bound: int = 12) -> List[Any]:
    """Values of all accepting runs, by explicit run enumeration."""
    if len(word) > bound:
        raise BoundExceeded(f"word length {len(word)} exceeds bound {bound}")
    if fa.find_epsilon_cycle(rate(m)):
        raise EpsilonCycle("machine has an ε-cycle")
    reg = m.registry
    results = []

    def step(env, update, value):
        return {x: eval_expr(e, env, value, reg) for x, e in update.items()}

    def walk(q, i, env):
        if i == len(word) and q in m.final:
            results.append(eval_expr(m.final[q], env, registry=reg))
        for t in m.out[q]:
            if t.tag is None:
                walk(t.dst, i, step(env, t.update, None))
            elif i < len(word) and t.tag == word[i][0]:
                walk(t.dst, i + 1, step(env, t.update, word[i][1]))

    for q in m.initial_states:
        walk(q, 0, {x: eval_expr(e, {}, registry=reg) for x, e in m.init[q].items()})
    return results


# ---------------------------------------------------------------------------
# constructions

def _require_unambiguous(m: Cra):
    w = fa.ambiguity_witness(rate(m))
    if w is not None:
        raise NotUnambiguous(f"machine is ambiguous on tag word {list(w)}")


def ucra_to_dcra(m: Cra) -> Cra:
    """Subset construction carrying one register copy per (state, register)."""
    m = normalize(m)
    _require_unambiguous(m)
    c0 = Const(m.registry.first_constant())
    Q, X = m.states, m.registers
    name = {(q, x): f"{x}@{q}" for q in Q for x in X}
    regs = [name[(q, x)] for q in Q for x in X]

    def lift(e, p):
        return substitute(e, {y: Reg(name[(p, y)]) for y in X})

    start = tuple(m.initial_states)
    index = {start: 0}
    order = [start]
    trans = []
    for P in order:
        for a in m.alphabet:
            into: Dict[State, List[Tuple[State, Transition]]] = {}
            for p in P:
                for t in m.out[p]:
                    if t.tag == a:
                        into.setdefault(t.dst, []).append((p, t))
            if not into:
                continue
            R = tuple(q for q in Q if q in into)
            update = {}
            for q in Q:
                if q in into:
                    if len(into[q]) > 1:
                        raise NotUnambiguous(f"state {q} has two predecessors on {a!r}")
                    p, t = into[q][0]
                    for x in X:
                        update[name[(q, x)]] = lift(t.update[x], p)
                else:
                    for x in X:
                        update[name[(q, x)]] = c0
            if R not in index:
                index[R] = len(order)
                order.append(R)
            trans.append(Transition(index[P], a, update, index[R]))
    init = {}
    if m.initial_states:
        init[0] = {name[(q, x)]: (m.init[q][x] if q in m.init else c0) for q in Q for x in X}
    final = {}
    for P in order:
        fin = [q for q in P if q in m.final]
        if len(fin) > 1:
            raise NotUnambiguous(f"subset {P} contains several final states")
        if fin:
            q = fin[0]
            final[index[P]] = lift(m.final[q], q)
    return Cra.build(m.alphabet, regs, range(len(order)), trans, init, final, m.registry)


BOTTOM = "⊥"


def unary_to_copyless(m: Cra, keep_names: bool = False) -> Cra:
    """Single-register copyless machine for a machine using unary operations only.

    States are pairs (q, g) where g guesses the register whose value will
    reach the output (or ⊥ when none will).  With ``keep_names`` the pairs
    are kept as state names instead of being renumbered.
    """
    for e in _all_expressions(m):
        _check_unary(e)
    m = normalize(m)
    _require_unambiguous(m)
    r = "r"
    X = m.registers
    guesses = list(X) + [BOTTOM]

    def filler(q):
        if X:
            return m.init[q][X[0]]
        return Const(m.registry.first_constant())

    init = {}
    for q in m.initial_states:
        for y in X:
            init[(q, y)] = {r: m.init[q][y]}
        init[(q, BOTTOM)] = {r: filler(q)}
    trans = []
    for t in m.transitions:
        for g2 in X:
            e = t.update[g2]
            src = registers_of(e)
            if src:
                trans.append(Transition((t.src, src[0]), t.tag, {r: substitute(e, {src[0]: Reg(r)})},
                                        (t.dst, g2)))
            else:
                trans.append(Transition((t.src, BOTTOM), t.tag, {r: e}, (t.dst, g2)))
        trans.append(Transition((t.src, BOTTOM), t.tag, {r: Reg(r)}, (t.dst, BOTTOM)))
    final = {}
    for q, e in m.final.items():
        src = registers_of(e)
        if src:
            final[(q, src[0])] = substitute(e, {src[0]: Reg(r)})
        else:
            final[(q, BOTTOM)] = e
    states = [(q, g) for q in m.states for g in guesses]
    out = trim(Cra.build(m.alphabet, [r], states, trans, init, final, m.registry))
    return out if keep_names else relabel(out)


def _all_expressions(m: Cra):
    for t in m.transitions:
        yield from t.update.values()
    for row in m.init.values():
        yield from row.values()
    yield from m.final.values()


def _check_unary(e: Expression):
    if isinstance(e, Apply):
        if len(e.args) > 1:
            raise NonUnaryOperation(f"operation {e.op} has arity {len(e.args)}")
        for a in e.args:
            _check_unary(a)


def product_with_dfa(m: Cra, d) -> Cra:
    """Restrict the rate of ``m`` to L(d) by running a DFA alongside."""
    d = fa.as_dfa(d)
    if d.alphabet != m.alphabet:
        raise AlphabetMismatch(f"machine alphabet {list(m.alphabet)} vs DFA {list(d.alphabet)}")
    start = [(q, d.initial) for q in m.initial_states]
    seen = set(start)
    order = list(start)
    trans = []
    for q, s in order:
        for t in m.out[q]:
            s2 = s if t.tag is None else d.next(s, t.tag)
            nxt = (t.dst, s2)
            trans.append(Transition((q, s), t.tag, t.update, nxt))
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
    init = {(q, s): m.init[q] for q, s in start}
    final = {(q, s): m.final[q] for q, s in order if q in m.final and s in d.final}
    return trim(Cra.build(m.alphabet, m.registers, order, trans, init, final, m.registry))


# ---------------------------------------------------------------------------
# JSON

def cra_to_json(m: Cra) -> dict:
    key = str
    return {
        "alphabet": list(m.alphabet),
        "registers": [key(x) for x in m.registers],
        "states": [key(q) for q in m.states],
        "transitions": [{"from": key(t.src), "tag": t.tag, "to": key(t.dst),
                         "update": {key(x): to_text(e) for x, e in t.update.items()}}
                        for t in m.transitions],
        "init": {key(q): {key(x): to_text(e) for x, e in row.items()} for q, row in m.init.items()},
        "final": {key(q): to_text(e) for q, e in m.final.items()},
        "registry": m.registry.descriptor,
    }


def cra_from_json(obj: dict, registry: OperationRegistry = None, seed: int = 0) -> Cra:
    try:
        if registry is None:
            registry = make_registry(obj["registry"], seed=seed)
        regs = [str(x) for x in obj.get("registers", [])]
        states = [str(q) for q in obj["states"]]

        def p(text):
            return parse_expr(text, regs, registry)

        trans = [(str(t["from"]), t.get("tag"), {str(x): p(e) for x, e in t.get("update", {}).items()},
                  str(t["to"])) for t in obj.get("transitions", [])]
        init = {str(q): {str(x): p(e) for x, e in row.items()} for q, row in obj.get("init", {}).items()}
        final = {str(q): p(e) for q, e in obj.get("final", {}).items()}
        return Cra.build(obj["alphabet"], regs, states, trans, init, final, registry)
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed CRA document: {e!r}") from None


def cra_to_dot(m: Cra, name: str = "cra") -> str:
    """Graphviz rendering: edges carry ``tag / non-identity updates``."""
    def esc(s):
        return str(s).replace("\\", "\\\\").replace('"', '\\"')
    ident = {q: f"q{k}" for k, q in enumerate(m.states)}
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for q in m.states:
        shape = "doublecircle" if q in m.final else "circle"
        label = esc(q) + (f"\\nF: {esc(to_text(m.final[q]))}" if q in m.final else "")
        lines.append(f'  {ident[q]} [label="{label}", shape={shape}];')
        if q in m.init:
            init = ", ".join(f"{x}:={to_text(e)}" for x, e in m.init[q].items())
            lines.append(f'  i{ident[q]} [shape=plaintext, label="{esc(init)}"];')
            lines.append(f"  i{ident[q]} -> {ident[q]};")
    for t in m.transitions:
        upd = ", ".join(f"{x}:={to_text(e)}" for x, e in t.update.items() if e != Reg(x))
        tag = "ε" if t.tag is None else t.tag
        lines.append(f'  {ident[t.src]} -> {ident[t.dst]} [label="{esc(tag)}'
                     + (f" / {esc(upd)}" if upd else "") + '"];')
    lines.append("}")
    return "\n".join(lines)
