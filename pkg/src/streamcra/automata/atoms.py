"""Atoms of the Boolean algebra generated by a derivative-closed family of
regular languages, and the unambiguous automaton over them.

Each atom is identified by its profile: for every base DFA, the set of
states from whose language the residual word is accepted.  Profiles are
discovered by determinizing the reversed base DFAs in parallel; the atom
automaton is the reverse of that determinization.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Sequence, Tuple

from ..errors import AlphabetMismatch
from .fa import Automaton, Dfa, Nfa, as_dfa, minimize

Profile = Tuple[FrozenSet[int], ...]


@dataclass(frozen=True, eq=False)
class AtomTable:
    """The atoms together with the minimal base DFAs they are described against."""
    alphabet: Tuple[str, ...]
    bases: Tuple[Dfa, ...]          # minimal DFAs, one per input language
    profiles: Tuple[Profile, ...]   # profiles[k] describes atom k
    nfa: Nfa                        # state k accepts exactly atom k
    empty_atom: int                 # the atom containing the empty word

    def __len__(self):
        return len(self.profiles)

    def in_base(self, atom: int, i: int) -> bool:
        """Is atom ``atom`` included in base language ``i``?  (Otherwise disjoint.)"""
        return self.bases[i].initial in self.profiles[atom][i]

    def in_residual(self, atom: int, i: int, state: int) -> bool:
        """Is the atom included in the language of base DFA ``i`` started at ``state``?"""
        return state in self.profiles[atom][i]

    def atom_of(self, word: Sequence[str]) -> int:
        prof = tuple(frozenset(q for q in d.states if d.accepts(word, q)) for d in self.bases)
        return self.profiles.index(prof)

    def atom_dfa(self, atom: int) -> Dfa:
        n = self.nfa
        return minimize(Nfa(n.alphabet, n.states, n.transitions, (atom,), n.final))


def atomaton(base: Sequence[Automaton]) -> AtomTable:
    if not base:
        raise ValueError("atomaton needs at least one base language")
    bases = [minimize(as_dfa(b)) for b in base]
    alphabet = bases[0].alphabet
    if any(b.alphabet != alphabet for b in bases):
        raise AlphabetMismatch("atomaton: base languages over different alphabets")

    def pre(profile: Profile, k: int) -> Profile:
        return tuple(frozenset(q for q in d.states if d.delta[q][k] in S)
                     for d, S in zip(bases, profile))

    start: Profile = tuple(frozenset(d.final) for d in bases)
    index = {start: 0}
    order = [start]
    for prof in order:
        for k in range(len(alphabet)):
            p = pre(prof, k)
            if p not in index:
                index[p] = len(order)
                order.append(p)
    trans = []
    for j, prof in enumerate(order):
        for k, t in enumerate(alphabet):
            trans.append((index[pre(prof, k)], t, j))
    trans.sort(key=lambda x: (x[0], alphabet.index(x[1]), x[2]))
    states = tuple(range(len(order)))
    nfa = Nfa(alphabet, states, trans, states, (0,))
    return AtomTable(alphabet, tuple(bases), tuple(order), nfa, 0)
