"""Command-line front end: check, compile, run, xcheck, graph.

Exit codes: 0 success, 1 validation or semantic failure, 2 I/O or parse failure.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import os
import random
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Tuple

import click

from . import automata as fa
from . import combinators as qc
from . import transduction as td
from . import weighted as wt
from .cra import (Cra, Evaluator, cra_from_json, cra_to_dot, cra_to_json, eval_paths_oracle, normalize,
                  ucra_to_dcra, validate)
from .errors import (AlphabetMismatch, BudgetExceeded, ParseError, StreamCraError, TagOutOfAlphabet,
                     UnknownDomain, ValueParseError)
from .values import make_registry

KINDS = ("cra", "query", "rules", "wa")
PARSE_ERRORS = (ParseError, ValueParseError, TagOutOfAlphabet, UnknownDomain, AlphabetMismatch,
                json.JSONDecodeError, OSError, UnicodeDecodeError)
DEFAULT_SEED = 0


class Failure(Exception):
    """Validation or semantic failure carrying a JSON report."""

    def __init__(self, report: dict):
        super().__init__(report.get("message", "failure"))
        self.report = report


def effective_seed(seed: int) -> int:
    env = os.environ.get("STREAMCRA_SEED")
    return int(env) if env not in (None, "") else seed


def emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, ensure_ascii=False, default=str))


def run_command(body: Callable[[], Any]) -> None:
    """Run ``body`` and map exceptions onto the exit-code contract."""
    try:
        body()
    except Failure as f:
        emit(f.report)
        sys.exit(1)
    except PARSE_ERRORS as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(2)
    except StreamCraError as e:
        emit({"ok": False, "error": type(e).__name__, "message": str(e)})
        sys.exit(1)


# ---------------------------------------------------------------------------
# artifacts

@dataclass
class Artifact:
    kind: str
    obj: Any            # Cra, (Query, alphabet, registry), RuleTransduction, WeightedAutomaton
    doc: dict

    @property
    def alphabet(self) -> Tuple[str, ...]:
        if self.kind == "query":
            return self.obj[1]
        return tuple(self.obj.alphabet)

    @property
    def domain(self):
        if self.kind == "query":
            return self.obj[2].domain
        if self.kind == "wa":
            return None
        return self.obj.registry.domain


def detect_kind(doc: dict) -> str:
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    if doc.get("kind") in KINDS:
        return doc["kind"]
    if "query" in doc:
        return "query"
    if "vertex_rules" in doc or "edge_rules" in doc:
        return "rules"
    if "weights" in doc:
        return "wa"
    if "transitions" in doc or "registers" in doc:
        return "cra"
    raise ParseError("cannot tell the artifact kind; add a \"kind\" field")


def load(path: str, kind: str = "auto", seed: int = DEFAULT_SEED) -> Artifact:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = detect_kind(doc) if kind == "auto" else kind
    if kind == "cra":
        return Artifact(kind, cra_from_json(doc, seed=seed), doc)
    if kind == "query":
        try:
            registry = make_registry(doc["registry"], seed=seed)
            alphabet = fa.canonical_alphabet(doc["alphabet"])
            text = doc["query"]
        except (KeyError, TypeError) as e:
            raise ParseError(f"query file needs query, alphabet and registry: {e!r}") from None
        return Artifact(kind, (qc.parse_query(text, registry), alphabet, registry), doc)
    if kind == "rules":
        return Artifact(kind, td.rules_from_json(doc, seed=seed), doc)
    if kind == "wa":
        return Artifact(kind, wt.wa_from_json(doc), doc)
    raise ParseError(f"unknown kind {kind!r}")


def to_machine(a: Artifact) -> Cra:
    """Compile any artifact to a trim, ε-free, unambiguous CRA."""
    if a.kind == "cra":
        return normalize(a.obj)
    if a.kind == "query":
        return qc.compile_query(*a.obj)
    if a.kind == "rules":
        return td.compile_to_ucra(a.obj)
    w = a.obj
    return wt.wa_to_cra(w) if w.is_semiring else wt.uwa_to_copyless_ucra(w)


def reference_eval(a: Artifact, budget: int) -> Callable[[List[Tuple[str, Any]]], Any]:
    """Definition-level oracle for an artifact (None means undefined)."""
    if a.kind == "query":
        q, _, reg = a.obj
        return lambda w: qc.oracle_eval(q, w, reg, bound=max(12, len(w)))
    if a.kind == "rules":
        return lambda w: td.dag_oracle_eval(a.obj, w)
    if a.kind == "wa":
        return lambda w: wt.wa_path_oracle(a.obj, [t for t, _ in w], budget=budget)

    def paths(w):
        outs = eval_paths_oracle(a.obj, w, bound=max(12, len(w)))
        if len(outs) > 1:
            raise Failure({"ok": False, "message": "machine has two accepting runs",
                           "word": [list(x) for x in w]})
        return outs[0] if outs else None
    return paths


# ---------------------------------------------------------------------------
# streams

def parse_value(domain, raw):
    if domain is None:
        return raw
    return domain.parse(raw)


def read_stream(fh, fmt: str, domain) -> Iterator[Tuple[str, Any]]:
    if fmt == "jsonl":
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                tag, raw = rec["tag"], rec.get("value")
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueParseError(f"line {n}: bad record {line[:80]!r} ({e})") from None
            yield str(tag), parse_value(domain, raw)
    elif fmt == "csv":
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "tag" not in reader.fieldnames:
            raise ValueParseError("CSV input needs a header with columns tag,value")
        for row in reader:
            raw = row.get("value")
            yield row["tag"], parse_value(domain, None if raw in (None, "") else raw)
    else:
        raise ParseError(f"unknown stream format {fmt!r}")


def stream_format(path: str, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    return "csv" if path.lower().endswith(".csv") else "jsonl"


def dump_value(domain, v):
    if v is None:
        return "undefined"
    return domain.dump(v) if domain is not None else v


def parse_tags(text: str, alphabet) -> Tuple[str, ...]:
    tags = tuple(text.split()) if any(c.isspace() for c in text) else tuple(text)
    bad = [t for t in tags if t not in alphabet]
    if bad:
        raise TagOutOfAlphabet(f"tags {bad} not in alphabet {list(alphabet)}")
    return tags


# ---------------------------------------------------------------------------
# commands

seed_option = click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True,
                           help="Seed for randomized law checks (STREAMCRA_SEED overrides).")
kind_option = click.option("--kind", type=click.Choice(("auto",) + KINDS), default="auto",
                           show_default=True)


@click.group()
@click.version_option(package_name="streamcra")
def main():
    """Streaming evaluation of cost register automata and their front ends."""


@main.command()
@click.argument("path", type=click.Path())
@kind_option
@click.option("--require-copyless", is_flag=True, help="Fail if a machine is copyful.")
@seed_option
def check(path, kind, require_copyless, seed):
    """Validate a machine, query, rule file or weighted automaton."""
    def body():
        a = load(path, kind, effective_seed(seed))
        report = {"kind": a.kind, "path": path}
        problems = []
        if a.kind == "cra":
            d = validate(a.obj)
            report["diagnostics"] = {k: getattr(d, k) for k in
                                     ("is_deterministic", "is_unambiguous", "is_copyless", "is_trim",
                                      "arity_ok", "epsilon_free")}
            report["copy_violations"] = d.copy_violations
            if not d.is_unambiguous:
                problems.append(f"ambiguous on {list(d.ambiguity_witness)}")
            if not d.arity_ok:
                problems += d.arity_problems
            if not d.is_trim:
                problems.append(f"untrim states {[str(q) for q in d.untrim_states]}")
            if require_copyless and not d.is_copyless:
                problems += d.copy_violations
        elif a.kind == "query":
            m = qc.compile_query(*a.obj)
            d = validate(m)
            report.update(states=len(m.states), registers=len(m.registers), is_copyless=d.is_copyless)
            if require_copyless and not d.is_copyless:
                problems += d.copy_violations
        elif a.kind == "rules":
            wf = td.check_wellformed(a.obj)
            report["wellformedness"] = wf.as_dict()
            report["is_tree"] = td.is_tree(a.obj) if wf.ok else None
            if not wf.ok:
                problems.append(wf.summary())
        else:
            w = a.obj
            violations = w.algebra.check_laws(random.Random(effective_seed(seed)))
            report["law_violations"] = violations
            report["is_unambiguous"] = wt.is_unambiguous_wa(w)
            problems += violations
            if not w.is_semiring and not report["is_unambiguous"]:
                problems.append("monoid automaton is ambiguous")
        report["ok"] = not problems
        report["problems"] = problems
        if problems:
            raise Failure(report)
        emit(report)
    run_command(body)


@main.command("compile")
@click.argument("path", type=click.Path())
@kind_option
@click.option("--out", "out", type=click.Path(), default=None, help="Output file (default stdout).")
@click.option("--emit", "emit_as", type=click.Choice(["json", "dot"]), default="json", show_default=True)
@click.option("--determinize", is_flag=True, help="Turn the compiled UCRA into a DCRA.")
@click.option("--to", "target", type=click.Choice(["cra", "rules", "wa"]), default="cra", show_default=True,
              help="Target representation for CRA inputs.")
@click.option("--fp-dot", type=click.Path(), default=None,
              help="For rule files: also write the future-past automaton as DOT.")
@seed_option
def compile_cmd(path, kind, out, emit_as, determinize, target, fp_dot, seed):
    """Compile an artifact to a CRA (or translate a CRA to rules / a weighted automaton)."""
    def body():
        a = load(path, kind, effective_seed(seed))
        if target != "cra":
            if a.kind != "cra":
                raise ParseError("--to rules/wa expects a CRA input")
            if target == "rules":
                doc = td.rules_to_json(td.cra_to_rules(a.obj))
            else:
                m = normalize(a.obj)
                w = wt.cra_to_wa(m) if m.registry.kind == "semiring" else wt.copyless_ucra_to_uwa(m)
                doc = wt.wa_to_json(w)
            text = json.dumps(doc, indent=2, ensure_ascii=False)
        else:
            m = to_machine(a)
            if determinize:
                m = ucra_to_dcra(m)
            text = cra_to_dot(m) if emit_as == "dot" else json.dumps(cra_to_json(m), indent=2,
                                                                        ensure_ascii=False)
            d = validate(m)
            click.echo(f"compiled {a.kind}: {len(m.states)} states, {len(m.registers)} registers, "
                       f"{'copyless' if d.is_copyless else 'copyful'}, "
                       f"{'deterministic' if d.is_deterministic else 'unambiguous'}", err=True)
        if fp_dot:
            if a.kind != "rules":
                raise ParseError("--fp-dot needs a rule file")
            with open(fp_dot, "w", encoding="utf-8") as fh:
                fh.write(td.future_past(td.single_step(a.obj)).to_dot() + "\n")
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            click.echo(text)
    run_command(body)


@main.command()
@click.argument("path", type=click.Path())
@kind_option
@click.option("--input", "input_path", type=click.Path(), default="-", show_default=True,
              help="Stream file (JSONL or CSV); '-' reads stdin.")
@click.option("--format", "fmt", type=click.Choice(["auto", "jsonl", "csv"]), default="auto", show_default=True)
@click.option("--stats/--no-stats", default=True, show_default=True)
@seed_option
def run(path, kind, input_path, fmt, stats, seed):
    """Evaluate a machine (or any compilable artifact) over one stream."""
    def body():
        a = load(path, kind, effective_seed(seed))
        m = to_machine(a)
        ev = Evaluator(m)
        dom = m.registry.domain
        fmt_ = stream_format(input_path, fmt)
        t0 = time.perf_counter()
        if input_path == "-":
            ev.feed_all(read_stream(io.TextIOWrapper(sys.stdin.buffer, encoding="utf-8"), fmt_, dom))
        else:
            with open(input_path, encoding="utf-8", newline="") as fh:
                ev.feed_all(read_stream(fh, fmt_, dom))
        value = ev.result()
        elapsed = time.perf_counter() - t0
        s = ev.stats
        bound = len(m.states) * len(m.registers)
        report = {"output": dump_value(dom, value)}
        if stats:
            report["stats"] = s.as_dict()
            report["bounds"] = {"states": len(m.states), "registers": len(m.registers),
                                "stored_value_bound": bound,
                                "stored_values_ok": s.max_stored_values <= bound,
                                "live_tokens_ok": s.max_live_tokens <= len(m.states)}
            report["timings"] = {"seconds": round(elapsed, 6),
                                 "items_per_second": round(s.items / elapsed, 1) if elapsed > 0 else None}
        if s.max_stored_values > bound or s.max_live_tokens > len(m.states):
            report["ok"] = False
            raise Failure(report)
        emit(report)
    run_command(body)


def _values(text: str, domain) -> List[Any]:
    raw = [v.strip() for v in text.split(",") if v.strip()]
    if domain is None:
        return [None]
    return [domain.parse(v) for v in raw] or [None]


@main.command()
@click.argument("path", type=click.Path())
@kind_option
@click.option("--against", type=click.Path(), default=None,
              help="Reference artifact whose definition-level oracle is used (default: PATH itself).")
@click.option("--max-len", type=int, default=4, show_default=True)
@click.option("--values", "values_text", default="0,1,2", show_default=True)
@click.option("--budget", type=int, default=2_000_000, show_default=True,
              help="Maximum number of data words to compare.")
@seed_option
def xcheck(path, kind, against, max_len, values_text, budget, seed):
    """Compare the compiled machine against a definition-level oracle on all short words."""
    def body():
        s = effective_seed(seed)
        a = load(path, kind, s)
        ref = load(against, "auto", s) if against else a
        m = to_machine(a)
        if tuple(m.alphabet) != tuple(ref.alphabet):
            raise AlphabetMismatch(f"alphabets differ: {list(m.alphabet)} vs {list(ref.alphabet)}")
        uses_values = not (ref.kind == "wa" or m.registry.kind in ("monoid-unary",))
        vals = _values(values_text, m.registry.domain) if uses_values else [None]
        total = sum((len(m.alphabet) * len(vals)) ** n for n in range(max_len + 1))
        if total > budget:
            raise BudgetExceeded(f"{total} data words exceed the budget of {budget}")
        oracle = reference_eval(ref, budget)
        ev = Evaluator(m)
        compared = 0
        for n in range(max_len + 1):
            for tags in itertools.product(m.alphabet, repeat=n):
                for vs in itertools.product(vals, repeat=n):
                    w = list(zip(tags, vs))
                    ev.reset()
                    ev.feed_all(w)
                    got, want = ev.result(), oracle(w)
                    compared += 1
                    if got != want:
                        raise Failure({"ok": False, "compared": compared,
                                       "counterexample": {"word": [[t, v] for t, v in w],
                                                          "machine": dump_value(m.registry.domain, got),
                                                          "oracle": dump_value(m.registry.domain, want)}})
        emit({"ok": True, "compared": compared, "mismatches": 0, "max_len": max_len,
              "values": [dump_value(m.registry.domain, v) for v in vals] if uses_values else None,
              "oracle": ref.kind})
    run_command(body)


@main.command()
@click.argument("path", type=click.Path())
@kind_option
@click.option("--view", type=click.Choice(["machine", "future-past", "dag", "support"]), default="machine",
              show_default=True)
@click.option("--word", default=None, help="Tag word for --view dag ('ABA' or 'A B A').")
@click.option("--out", "out", type=click.Path(), default=None)
@seed_option
def graph(path, kind, view, word, out, seed):
    """Write a Graphviz DOT rendering of an artifact."""
    def body():
        a = load(path, kind, effective_seed(seed))
        if view == "machine":
            text = cra_to_dot(to_machine(a))
        elif view in ("future-past", "dag"):
            if a.kind != "rules":
                raise ParseError(f"--view {view} needs a rule file")
            if view == "dag":
                text = td.dag_to_dot(a.obj, parse_tags(word or "", a.alphabet))
            else:
                text = td.future_past(td.single_step(a.obj)).to_dot()
        else:
            if a.kind != "wa":
                raise ParseError("--view support needs a weighted automaton")
            text = fa.to_dot(a.obj.support(), "support")
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            click.echo(text)
    run_command(body)


if __name__ == "__main__":
    main()
