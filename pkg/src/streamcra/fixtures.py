"""Small machines used by the tests, the acceptance suite and the CLI demos.

Every builder returns a fresh object; the docstring states what it computes.
"""
from __future__ import annotations

from .cra import Cra
from .expr import parse_expr
from .values import make_registry


def _cra(alphabet, registers, states, transitions, init, final, registry):
    p = lambda s: parse_expr(s, registers, registry)
    return Cra.build(alphabet, registers, states,
                     [(a, t, {x: p(e) for x, e in upd.items()}, b) for a, t, upd, b in transitions],
                     {q: {x: p(e) for x, e in row.items()} for q, row in init.items()},
                     {q: p(e) for q, e in final.items()}, registry)


def nat_registry(*ops):
    return make_registry({"domain": "int", "carrier": "nat", "ops": list(ops)})


def sum_dcra() -> Cra:
    """Copyless DCRA over {a,b}: sum of the values whose tag equals the last tag.
    Defined on nonempty words."""
    reg = nat_registry("0", "+")
    ta = {"x": "x + val", "y": "y"}
    tb = {"x": "x", "y": "y + val"}
    return _cra("ab", ["x", "y"], ["p", "qa", "qb"],
                [("p", "a", ta, "qa"), ("p", "b", tb, "qb"),
                 ("qa", "a", ta, "qa"), ("qb", "b", tb, "qb"),
                 ("qa", "b", tb, "qb"), ("qb", "a", ta, "qa")],
                {"p": {"x": "0", "y": "0"}}, {"qa": "x", "qb": "y"}, reg)


def end_letter_ucra() -> Cra:
    """One-register copyless UCRA (with ε-moves) for the same function as
    :func:`sum_dcra`: it guesses the last tag up front."""
    reg = nat_registry("0", "+")
    return _cra("ab", ["x"], ["p", "pa", "pb", "qa", "qb"],
                [("p", None, {"x": "0"}, "pa"), ("p", None, {"x": "0"}, "pb"),
                 ("pa", "a", {"x": "x + val"}, "pa"), ("pa", "b", {"x": "x"}, "pa"),
                 ("pa", "a", {"x": "x + val"}, "qa"),
                 ("pb", "b", {"x": "x + val"}, "pb"), ("pb", "a", {"x": "x"}, "pb"),
                 ("pb", "b", {"x": "x + val"}, "qb")],
                {"p": {"x": "0"}}, {"qa": "x", "qb": "x"}, reg)


def end_letter_ucra_eps_free() -> Cra:
    """ε-free variant of :func:`end_letter_ucra` with two initial states."""
    reg = nat_registry("0", "+")
    return _cra("ab", ["x"], ["pa", "pb", "qa", "qb"],
                [("pa", "a", {"x": "x + val"}, "pa"), ("pa", "b", {"x": "x"}, "pa"),
                 ("pa", "a", {"x": "x + val"}, "qa"),
                 ("pb", "b", {"x": "x + val"}, "pb"), ("pb", "a", {"x": "x"}, "pb"),
                 ("pb", "b", {"x": "x + val"}, "qb")],
                {"pa": {"x": "0"}, "pb": {"x": "0"}}, {"qa": "x", "qb": "x"}, reg)


def block_max_dcra() -> Cra:
    """Copyless DCRA over {a,#} with rate (a+#)*: maximum over blocks of the
    block's sum of a-values."""
    reg = nat_registry("0", "+", "max")
    ta = {"x": "x + val", "y": "y"}
    th = {"x": "0", "y": "max(y, x)"}
    return _cra("a#", ["x", "y"], ["p", "q"],
                [("p", "a", ta, "q"), ("q", "a", ta, "q"), ("q", "#", th, "p")],
                {"p": {"x": "0", "y": "0"}}, {"p": "y"}, reg)


def drawdown_ucra() -> Cra:
    """Copyful UCRA over {a,b}: maximum drawdown of the a-values after the last b.
    Defined on words containing a b."""
    reg = nat_registry("0", "max", "monus")
    t0 = {"x": "0", "y": "0"}
    th = {"x": "max(x, val)", "y": "max(y, monus(max(x, val), val))"}
    return _cra("ab", ["x", "y"], ["p", "q"],
                [("p", "a", t0, "p"), ("p", "b", t0, "p"), ("p", "b", t0, "q"),
                 ("q", "a", th, "q")],
                {"p": {"x": "0", "y": "0"}}, {"q": "y"}, reg)


def ambiguous_pair() -> Cra:
    """Two runs on every one-letter word: outputs val and val + 1."""
    reg = nat_registry("0", "1", "+")
    return _cra("a", ["x"], ["i", "f"],
                [("i", "a", {"x": "val"}, "f"), ("i", "a", {"x": "val + 1"}, "f")],
                {"i": {"x": "0"}}, {"f": "x"}, reg)


def free_monoid_registry(alphabet="ab#"):
    ops = ["1"] + [f"rmul[{c}]" for c in alphabet]
    return make_registry({"domain": "monoid-unary", "monoid": "free", "alphabet": list(alphabet),
                          "ops": ops})


def fstar_ucra() -> Cra:
    """One-register copyless UCRA over {a,b,#} with rate ({a,b}+#)*.

    Each block u# is mapped to a^|u|# or b^|u|# according to the last letter
    of u; the machine guesses that letter when the block starts.
    """
    reg = free_monoid_registry()
    ra, rb, rh = "rmul[a](r)", "rmul[b](r)", "rmul[#](r)"
    trans = [("s", "a", {"r": ra}, "A1"), ("s", "b", {"r": ra}, "A0"),
             ("A0", "a", {"r": ra}, "A1"), ("A0", "b", {"r": ra}, "A0"),
             ("A1", "a", {"r": ra}, "A1"), ("A1", "b", {"r": ra}, "A0"),
             ("A1", "#", {"r": rh}, "s"),
             ("s", "b", {"r": rb}, "B1"), ("s", "a", {"r": rb}, "B0"),
             ("B0", "b", {"r": rb}, "B1"), ("B0", "a", {"r": rb}, "B0"),
             ("B1", "b", {"r": rb}, "B1"), ("B1", "a", {"r": rb}, "B0"),
             ("B1", "#", {"r": rh}, "s")]
    return _cra("ab#", ["r"], ["s", "A0", "A1", "B0", "B1"], trans,
                {"s": {"r": "1"}}, {"s": "r"}, reg)


def fstar_copyful_dcra() -> Cra:
    """Two-register copyful DCRA for the same transduction as :func:`fstar_ucra`:
    both candidate outputs are kept and one is copied into both at each #."""
    reg = free_monoid_registry()
    step = {"xa": "rmul[a](xa)", "xb": "rmul[b](xb)"}
    trans = []
    for q in ("s", "la", "lb"):
        trans.append((q, "a", step, "la"))
        trans.append((q, "b", step, "lb"))
    trans.append(("la", "#", {"xa": "rmul[#](xa)", "xb": "rmul[#](xa)"}, "s"))
    trans.append(("lb", "#", {"xa": "rmul[#](xb)", "xb": "rmul[#](xb)"}, "s"))
    return _cra("ab#", ["xa", "xb"], ["s", "la", "lb"], trans,
                {"s": {"xa": "1", "xb": "1"}}, {"s": "xa"}, reg)


def fstar_oracle(tags) -> str:
    """Reference output of the f* transduction, or None off its rate."""
    out, block = [], []
    for t in tags:
        if t == "#":
            if not block:
                return None
            out.append(block[-1] * len(block) + "#")
            block = []
        else:
            block.append(t)
    if block:
        return None
    return "".join(out)


# ---------------------------------------------------------------------------
# queries: (text, alphabet) pairs over nat_registry("0", "1", "+", "max")

QUERY_REGISTRY_OPS = ("0", "1", "+", "max")

QUERIES = {
    # max of the total sum and the sum of the a-values
    "op_sums": ("op(max; iter(item([a b], val); 0; +); iter(else(item([a], val); item([b], 0)); 0; +))", "ab"),
    # a single a wins; otherwise 1 on ε; otherwise the maximum value
    "else_priority": ("else(item([a], val); else(eps(1); iter(item([a b], val); 0; max)))", "ab"),
    # a-prefix sum followed by a running max: ambiguous cut unless the word starts with b
    "split_cut": ("split(iter(item([a], val); 0; +); iter(item([a b], val); 0; max); +)", "ab"),
    # maximum block sum, blocks terminated by #
    "block_max": ("iter(split(iter(item([a], val); 0; +); item([#], 0); +); 0; max)", "a#"),
    # running a-sum, maximised over all prefixes
    "prefix_max": ("prefixsum(iter(else(item([a], val); item([b], 0)); 0; +); 0; max)", "ab"),
    # blocks a, b or ab: 'ab' factors twice, so words containing it are undefined
    "iter_ambiguous": ("iter(else(item([a b], val); split(item([a], val); item([b], val); +)); 0; +)", "ab"),
}


def query_fixture(name):
    """(query, alphabet, registry) for one of :data:`QUERIES`."""
    from .combinators import parse_query
    reg = nat_registry(*QUERY_REGISTRY_OPS)
    text, alphabet = QUERIES[name]
    return parse_query(text, reg), alphabet, reg


# ---------------------------------------------------------------------------
# weighted automata

def ab_factor_wa():
    """(ℕ,+,×) automaton over {a,b} counting occurrences of the factor ab."""
    from .weighted import WeightedAutomaton
    from .values import make_semiring
    w = {(0, "a", 0): 1, (0, "b", 0): 1, (0, "a", 1): 1, (1, "b", 2): 1,
         (2, "a", 2): 1, (2, "b", 2): 1}
    return WeightedAutomaton.build(make_semiring("nat-arith"), "ab", [0, 1, 2], w, {0: 1}, {2: 1})


def weighted_count_wa():
    """(ℕ,+,×) automaton over {a,b} with non-unit weights: Σ over a-positions
    i of 2^(#b before i) · 3^(#a after i)."""
    from .weighted import WeightedAutomaton
    from .values import make_semiring
    w = {(0, "a", 0): 1, (0, "b", 0): 2, (0, "a", 1): 1, (1, "a", 1): 3, (1, "b", 1): 1}
    return WeightedAutomaton.build(make_semiring("nat-arith"), "ab", [0, 1], w, {0: 1}, {1: 1})


def tropical_wa():
    """Complete two-state (min,+) automaton over {a,b}: cheapest run cost."""
    from .weighted import WeightedAutomaton
    from .values import make_semiring
    w = {(0, "a", 0): 1, (0, "a", 1): 3, (1, "a", 0): 0, (1, "a", 1): 2,
         (0, "b", 0): 4, (0, "b", 1): 1, (1, "b", 0): 2, (1, "b", 1): 5}
    return WeightedAutomaton.build(make_semiring("tropical"), "ab", [0, 1], w, {0: 0, 1: 2}, {0: 0, 1: 1})


def fstar_uwa():
    """Unambiguous automaton over the free monoid on {a,b,#} computing the
    f* transduction of :func:`fstar_ucra`."""
    from .weighted import WeightedAutomaton
    from .values import make_monoid
    w = {}
    for g in "ab":
        G = g.upper()
        other = "b" if g == "a" else "a"
        w[("s", g, G + "1")] = g
        w[("s", other, G + "0")] = g
        for k in "01":
            w[(G + k, g, G + "1")] = g
            w[(G + k, other, G + "0")] = g
        w[(G + "1", "#", "s")] = "#"
    return WeightedAutomaton.build(make_monoid("free", "ab#"), "ab#", ["s", "A0", "A1", "B0", "B1"],
                                   w, {"s": ""}, {"s": ""})


def doubling_exponent_cra():
    """Single-register total CRA over {a} with x := x*x from x = 2: a^i ↦ 2^(2^i).
    Uses binary semiring times, so it has no weighted-automaton counterpart."""
    from .weighted import semiring_registry
    reg = semiring_registry("nat-arith", binary_times=True)
    return _cra("a", ["x"], ["q"], [("q", "a", {"x": "x * x"}, "q")],
                {"q": {"x": "rmul[2](1)"}}, {"q": "x"}, reg)


def linear_semiring_cra():
    """Total two-register DCRA over (ℕ,+,×) using only linear updates."""
    from .weighted import semiring_registry
    reg = semiring_registry("nat-arith")
    return _cra("ab", ["x", "y"], ["p", "q"],
                [("p", "a", {"x": "rmul[2](x) + 1", "y": "y"}, "q"),
                 ("p", "b", {"x": "x", "y": "(y + x)"}, "p"),
                 ("q", "a", {"x": "x + y", "y": "rmul[3](y)"}, "p"),
                 ("q", "b", {"x": "rmul[2](x + y) + 1", "y": "1"}, "q")],
                {"p": {"x": "0", "y": "1"}}, {"p": "x + rmul[5](y)", "q": "rmul[2](x)"}, reg)


# ---------------------------------------------------------------------------
# rule transductions

def _rules(copies, vertex, edges, domain=".*", registry=None, alphabet="AB"):
    return {"alphabet": list(alphabet), "copies": list(copies), "domain": domain,
            "vertex_rules": [{"copy": c, "label": g, "r1": r1, "r2": r2} for c, g, r1, r2 in vertex],
            "edge_rules": [{"src": c, "dst": d, "arg": i, "r1": r1, "r2": r2, "r3": r3}
                           for c, d, i, r1, r2, r3 in edges],
            "registry": registry or {"domain": "int", "carrier": "nat", "ops": ["0", "+"]}}


SUM_OF_A_VERTEX = [("V", "val", ".*A", ".*"),
                   ("S", "+", ".*A", ".*"),
                   ("S", "0", "eps", ".*")]
SUM_OF_A_EDGES = [("V", "S", 2, ".*A", "eps", ".*"),
                  ("S", "S", 1, "eps|.*A", "B*A", ".*")]


def sum_of_a_rules() -> dict:
    """Rule file over {A,B}: the sum of the values tagged A (0 if none).
    Copy V holds the value at each A; copy S the running sum, linked from
    one A to the next."""
    return _rules(["V", "S"], SUM_OF_A_VERTEX, SUM_OF_A_EDGES)


def sum_of_a_oracle(word) -> int:
    return sum(v for a, v in word if a == "A")


def _mutant(copies=("V", "S"), vertex=None, edges=None, domain=".*"):
    return _rules(list(copies), SUM_OF_A_VERTEX if vertex is None else vertex,
                  SUM_OF_A_EDGES if edges is None else edges, domain)


# name -> (rule file, the single condition it breaks)
RULE_MUTANTS = {
    "label_clash_S": (_mutant(vertex=SUM_OF_A_VERTEX + [("S", "+", "eps", ".*")]), 1),
    "label_clash_V": (_mutant(vertex=SUM_OF_A_VERTEX + [("V", "0", ".*A", "B*")]), 1),
    "edge_into_inactive": (_mutant(copies="VSW", edges=SUM_OF_A_EDGES + [("V", "W", 1, ".*A", "eps", ".*")]), 2),
    "letter_edge_into_inactive": (_mutant(copies="VSW", edges=SUM_OF_A_EDGES + [("S", "W", 1, "eps|.*A", "B*", ".*")]), 2),
    "domain_too_small": (_mutant(domain=".+"), 3),
    "no_vertex_on_empty": (_mutant(vertex=SUM_OF_A_VERTEX[:2] + [("S", "0", "eps", ".+")]), 3),
    "local_cycle": (_mutant(copies="VSPQ",
                            vertex=SUM_OF_A_VERTEX + [("P", "id", "eps", ".*"), ("Q", "id", "eps", ".*")],
                            edges=SUM_OF_A_EDGES + [("P", "Q", 1, "eps", "eps", ".*"),
                                                    ("Q", "P", 1, "eps", "eps", ".*")]), 4),
    "wrong_argument_index": (_mutant(edges=[("V", "S", 1, ".*A", "eps", ".*"), SUM_OF_A_EDGES[1]]), 5),
    "second_sink": (_mutant(copies="VST", vertex=SUM_OF_A_VERTEX + [("T", "0", ".*", "eps")]), 6),
    "val_at_start": (_mutant(vertex=SUM_OF_A_VERTEX[:2] + [("S", "val", "eps", ".*")]), 7),
}


def tree_breaking_rules() -> dict:
    """Sum-of-A with the V->S edge duplicated at index 1 and 2: S becomes
    A+A at every A position, and V has two outgoing edges."""
    return _rules(["V", "S"], [("V", "val", ".*A", ".*"), ("S", "+", ".*A", ".*"), ("S", "0", "eps", ".*")],
                  [("V", "S", 2, ".*A", "eps", ".*"), ("V", "S", 1, ".*A", "eps", ".*")])


# ---------------------------------------------------------------------------
# sample files for the command line

def query_document(name) -> dict:
    text, alphabet = QUERIES[name]
    return {"query": text, "alphabet": list(alphabet),
            "registry": {"domain": "int", "carrier": "nat", "ops": list(QUERY_REGISTRY_OPS)}}


def write_samples(directory) -> list:
    """Write every fixture as a JSON file under ``directory``; returns the paths."""
    import json
    import os
    from .cra import cra_to_json
    from .weighted import wa_to_json

    os.makedirs(directory, exist_ok=True)
    docs = {"sum_of_a.rules.json": sum_of_a_rules(), "tree_breaking.rules.json": tree_breaking_rules()}
    for name, (doc, cond) in RULE_MUTANTS.items():
        docs[f"mutant_c{cond}_{name}.rules.json"] = doc
    for name in QUERIES:
        docs[f"{name}.query.json"] = query_document(name)
    for name in ("sum_dcra", "end_letter_ucra", "block_max_dcra", "drawdown_ucra", "fstar_ucra",
                 "fstar_copyful_dcra", "linear_semiring_cra", "doubling_exponent_cra"):
        docs[f"{name}.cra.json"] = cra_to_json(globals()[name]())
    for name in ("ab_factor_wa", "weighted_count_wa", "tropical_wa", "fstar_uwa"):
        docs[f"{name}.json"] = wa_to_json(globals()[name]())
    paths = []
    for fname, doc in sorted(docs.items()):
        path = os.path.join(directory, fname)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
        paths.append(path)
    return paths


if __name__ == "__main__":
    import sys
    for p in write_samples(sys.argv[1] if len(sys.argv) > 1 else "samples"):
        print(p)
