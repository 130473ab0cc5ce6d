"""Finite-automata toolkit: regexes, NFAs/DFAs, ambiguity, atoms."""
from .regex import (EMPTY, EPS, Concat, Empty, Eps, Lit, LitSet, Plus, Regex, Star, Union,
                    nullable, parse_regex, to_text)
from . import regex
from .fa import (Dfa, Nfa, accepted_words, as_dfa, canonical_alphabet, complement, concat_dfa,
                 concat_nfa, contains, determinize, dfa_to_regex, difference, empty_dfa,
                 eps_dfa, intersect, intersect_all, is_empty, language_equal, letter_dfa,
                 minimize, prepend_letter, product, reachable, regex_to_dfa, regex_to_nfa,
                 reverse, shortest_accepted, sigma_star, star_nfa, to_dot, trim_nfa, union,
                 union_all, words)
from .unambiguous import (ambiguity_witness, eliminate_epsilon, epsilon_paths,
                          find_epsilon_cycle, is_unambiguous, unamb_concat_dfa, unamb_iter_dfa)
from .atoms import AtomTable, atomaton

__all__ = [name for name in dir() if not name.startswith("_")]
