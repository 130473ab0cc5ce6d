import pytest
from hypothesis import given, strategies as st

from streamcra import automata as fa
from streamcra.automata import regex as rx
from streamcra.errors import AlphabetMismatch, EpsilonCycle, ParseError

from conftest import tag_words
from oracles import INFINITE, count_cuts, count_decompositions, member, nfa_runs

AB = ("A", "B")
P = lambda s, alpha=AB: rx.parse_regex(s, alpha)

_lit = st.sampled_from([rx.Lit("a"), rx.Lit("b"), rx.EPS, rx.EMPTY, rx.LitSet(["a", "b"])])
regexes = st.recursive(_lit, lambda kids: st.one_of(
    st.builds(lambda x, y: rx.Concat([x, y]), kids, kids),
    st.builds(lambda x, y: rx.Union([x, y]), kids, kids),
    st.builds(rx.Star, kids),
    st.builds(rx.Plus, kids)), max_leaves=8)


def test_empty_regex_gives_one_dead_state():
    d = fa.regex_to_dfa(rx.EMPTY, AB)
    assert d.n == 1 and not d.final


def test_b_star_a_minimal_dfa():
    r = P("B*A")
    d = fa.regex_to_dfa(r, AB)
    assert d.n == 3
    for w in tag_words(AB, 4):
        assert d.accepts(w) == member(r, w)


def test_block_rate():
    r = rx.parse_regex("(a+#)*", "a#")
    d = fa.regex_to_dfa(r, "a#")
    for w in tag_words("a#", 6):
        s = "".join(w)
        expected = s == "" or (s.endswith("#") and "##" not in s and not s.startswith("#"))
        assert d.accepts(w) == expected


def test_boolean_identities_of_running_example():
    comp = fa.complement(fa.regex_to_dfa(P("B*A.*"), AB))
    assert fa.language_equal(comp, fa.regex_to_dfa(P("B*"), AB))
    assert fa.language_equal(fa.regex_to_dfa(P("(eps|.*A)B*"), AB), fa.sigma_star(AB))
    d = fa.regex_to_dfa(P("A.*B"), AB)
    assert fa.is_empty(fa.intersect(d, fa.complement(d)))


def test_alphabet_checks():
    with pytest.raises(AlphabetMismatch):
        P("C")
    with pytest.raises(ParseError):
        P("(A")
    with pytest.raises(AlphabetMismatch):
        fa.intersect(fa.sigma_star("ab"), fa.sigma_star("abc"))


@given(regexes)
def test_regex_to_dfa_membership(r):
    d = fa.regex_to_dfa(r, "ab")
    for w in tag_words("ab", 4):
        assert d.accepts(w) == member(r, w)


@given(regexes, regexes)
def test_boolean_operations_membership(r, s):
    a, b = fa.regex_to_dfa(r, "ab"), fa.regex_to_dfa(s, "ab")
    i, u, d, c = fa.intersect(a, b), fa.union(a, b), fa.difference(a, b), fa.complement(a)
    for w in tag_words("ab", 4):
        x, y = member(r, w), member(s, w)
        assert (i.accepts(w), u.accepts(w), d.accepts(w), c.accepts(w)) == (x and y, x or y, x and not y, not x)


@given(regexes)
def test_minimal_dfa_is_canonical(r):
    via_nfa = fa.minimize(fa.determinize(fa.regex_to_nfa(r, "ab")))
    direct = fa.minimize(fa.regex_to_dfa(r, "ab"))
    assert via_nfa == direct
    assert fa.minimize(fa.reverse(fa.reverse(direct))) == direct


@given(regexes)
def test_dfa_to_regex_round_trip(r):
    d = fa.regex_to_dfa(r, "ab")
    back = fa.dfa_to_regex(d)
    assert fa.language_equal(fa.regex_to_dfa(back, "ab"), d)
    assert fa.language_equal(fa.regex_to_dfa(rx.parse_regex(rx.to_text(back, "ab"), "ab"), "ab"), d)


@given(regexes)
def test_shortest_accepted_is_shortest(r):
    d = fa.regex_to_dfa(r, "ab")
    w = fa.shortest_accepted(d)
    words = [v for v in tag_words("ab", 4) if member(r, v)]
    if w is None:
        assert not words and fa.is_empty(d)
    else:
        assert member(r, w)
        if words:
            assert len(w) == min(len(v) for v in words)


# ---------------------------------------------------------------------------
# epsilon elimination and ambiguity

def _branching_nfa():
    # guess at the start whether the word ends in a or in b
    return fa.Nfa("ab", ["s", "pa", "pb", "qa", "qb"],
                  [("s", None, "pa"), ("s", None, "pb"),
                   ("pa", "a", "pa"), ("pa", "b", "pa"), ("pa", "a", "qa"),
                   ("pb", "a", "pb"), ("pb", "b", "pb"), ("pb", "b", "qb")],
                  ["s"], ["qa", "qb"])


def test_eliminate_epsilon_keeps_language_and_runs():
    n = _branching_nfa()
    e = fa.eliminate_epsilon(n)
    assert not e.has_epsilon
    assert fa.is_unambiguous(e)
    for w in tag_words("ab", 5):
        assert nfa_runs(e, w) == n.count_runs(w) == (1 if w else 0)


def test_eliminate_epsilon_on_epsilon_free_input():
    n = fa.regex_to_nfa(P("A*B"), AB)
    e = fa.eliminate_epsilon(fa.eliminate_epsilon(n))
    assert fa.eliminate_epsilon(e) == e


def test_epsilon_cycle_rejected():
    n = fa.Nfa("a", [0, 1], [(0, None, 1), (1, None, 0), (1, "a", 1)], [0], [1])
    with pytest.raises(EpsilonCycle):
        fa.eliminate_epsilon(n)


def test_ambiguity():
    assert fa.is_unambiguous(fa.regex_to_dfa(P("(A|B)*A"), AB))
    guess = fa.Nfa("a", [0, 1], [(0, "a", 0), (0, "a", 1), (1, "a", 1)], [0], [1])
    assert [nfa_runs(guess, w) for w in tag_words("a", 3)] == [0, 1, 2, 3]
    assert not fa.is_unambiguous(guess)
    assert fa.ambiguity_witness(guess) == ("a", "a")


random_nfas = st.builds(
    lambda edges, init, final: fa.Nfa("ab", range(4), edges, init, final),
    st.lists(st.tuples(st.integers(0, 3), st.sampled_from("ab"), st.integers(0, 3)), max_size=9),
    st.lists(st.integers(0, 3), min_size=1, max_size=2), st.lists(st.integers(0, 3), max_size=3))


@given(random_nfas)
def test_ambiguity_check_agrees_with_run_counting(n):
    n = fa.trim_nfa(n)
    counted = all(nfa_runs(n, w) <= 1 for w in tag_words("ab", 5))
    if fa.is_unambiguous(n):
        assert counted
    else:
        w = fa.ambiguity_witness(n)
        assert nfa_runs(n, w) >= 2


# ---------------------------------------------------------------------------
# unambiguous concatenation and iteration

def _concat_agrees(a, b, alphabet, max_len):
    d = fa.unamb_concat_dfa(fa.regex_to_dfa(a, alphabet), fa.regex_to_dfa(b, alphabet))
    for w in tag_words(alphabet, max_len):
        assert d.accepts(w) == (count_cuts(lambda u: member(a, u), lambda v: member(b, v), w) == 1), w


def _iter_agrees(a, alphabet, max_len):
    d = fa.unamb_iter_dfa(fa.regex_to_dfa(a, alphabet))
    for w in tag_words(alphabet, max_len):
        assert d.accepts(w) == (count_decompositions(lambda u: member(a, u), w) == 1), w


def test_unamb_concat_examples():
    a, b = rx.parse_regex("a", "ab"), rx.parse_regex("b", "ab")
    assert fa.unamb_concat_dfa(fa.regex_to_dfa(a, "ab"), fa.regex_to_dfa(b, "ab")).accepts("ab")
    a2, b2 = rx.parse_regex("a|ab", "ab"), rx.parse_regex("b|eps", "ab")
    d = fa.unamb_concat_dfa(fa.regex_to_dfa(a2, "ab"), fa.regex_to_dfa(b2, "ab"))
    assert not d.accepts("ab")
    _concat_agrees(a2, b2, "ab", 4)
    _concat_agrees(P("(A|B)*A"), P("(A|B)*"), AB, 6)


def test_unamb_iter_examples():
    a = rx.parse_regex("eps|a", "ab")
    assert fa.is_empty(fa.unamb_iter_dfa(fa.regex_to_dfa(a, "ab")))
    assert count_decompositions(lambda u: member(a, u), ()) == INFINITE
    blocks = rx.parse_regex("[ab]+#", "ab#")
    d = fa.unamb_iter_dfa(fa.regex_to_dfa(blocks, "ab#"))
    assert fa.language_equal(d, fa.regex_to_dfa(rx.parse_regex("([ab]+#)*", "ab#"), "ab#"))
    aa = rx.parse_regex("a|aa", "a")
    d = fa.unamb_iter_dfa(fa.regex_to_dfa(aa, "a"))
    assert d.accepts("a") and not d.accepts("aaa")
    _iter_agrees(aa, "a", 6)


@given(regexes, regexes)
def test_unamb_concat_property(a, b):
    _concat_agrees(a, b, "ab", 4)


@given(regexes)
def test_unamb_iter_property(a):
    _iter_agrees(a, "ab", 4)


# ---------------------------------------------------------------------------
# atoms

def test_single_atom():
    t = fa.atomaton([fa.sigma_star(AB)])
    assert len(t) == 1


def test_running_example_atoms():
    base = [fa.regex_to_dfa(P(s), AB) for s in (".*", "B*A.*", "B+A.*", "A.*")]
    t = fa.atomaton(base)
    expected = [fa.regex_to_dfa(P(s), AB) for s in ("A.*", "B+A.*", "B*")]
    got = [t.atom_dfa(k) for k in range(len(t))]
    assert len(got) == 3
    for e in expected:
        assert sum(fa.language_equal(e, g) for g in got) == 1
    assert fa.is_unambiguous(t.nfa)


@given(st.lists(regexes, min_size=1, max_size=3))
def test_atoms_partition_and_derivatives(rs):
    base = [fa.regex_to_dfa(r, "ab") for r in rs]
    t = fa.atomaton(base)
    atoms = [t.atom_dfa(k) for k in range(len(t))]
    for w in tag_words("ab", 5):
        owners = [k for k, d in enumerate(atoms) if d.accepts(w)]
        assert len(owners) == 1
        k = owners[0]
        for i, r in enumerate(rs):
            assert t.in_base(k, i) == member(r, w)
        # successors of the atom on the first letter partition its derivative
        if w:
            succ = [q for a, q in t.nfa.out[t.atom_of(w)] if a == w[0]]
            assert sum(atoms[q].accepts(w[1:]) for q in succ) == 1
