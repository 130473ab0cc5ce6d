import json
import random

from click.testing import CliRunner

from streamcra import cli

from test_cra import drawdown


def invoke(*args, input=None):
    return CliRunner().invoke(cli.main, [str(a) for a in args], input=input)


def report(result):
    return json.loads(result.stdout)


def test_check_rules(sample_dir):
    r = invoke("check", sample_dir / "sum_of_a.rules.json")
    assert r.exit_code == 0
    assert report(r)["wellformedness"]["ok"] is True


def test_check_require_copyless(sample_dir):
    path = sample_dir / "drawdown_ucra.cra.json"
    assert invoke("check", path).exit_code == 0
    r = invoke("check", path, "--require-copyless")
    assert r.exit_code == 1
    assert any("register x" in p for p in report(r)["problems"])


def test_check_mutant_fails(sample_dir):
    r = invoke("check", sample_dir / "mutant_c6_second_sink.rules.json")
    assert r.exit_code == 1
    assert report(r)["wellformedness"]["conditions"]["6"]["ok"] is False


def test_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert invoke("check", bad).exit_code == 2
    assert invoke("check", tmp_path / "missing.json").exit_code == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"something": 1}')
    assert invoke("check", unknown).exit_code == 2


def test_compile_rules_is_deterministic(sample_dir, tmp_path):
    a, b, dot = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "fp.dot"
    assert invoke("compile", sample_dir / "sum_of_a.rules.json", "--out", a, "--fp-dot", dot).exit_code == 0
    assert invoke("compile", sample_dir / "sum_of_a.rules.json", "--out", b).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert dot.read_text().startswith("digraph")
    assert invoke("check", a, "--require-copyless").exit_code == 0


def test_compile_query_reports_registers(sample_dir):
    r = invoke("compile", sample_dir / "block_max.query.json")
    assert r.exit_code == 0
    doc = json.loads(r.stdout)
    assert f"{len(doc['registers'])} registers" in r.stderr


def test_compile_determinize(sample_dir, tmp_path):
    out = tmp_path / "d.json"
    assert invoke("compile", sample_dir / "end_letter_ucra.cra.json", "--determinize", "--out", out).exit_code == 0
    assert report(invoke("check", out))["diagnostics"]["is_deterministic"] is True


def test_compile_to_rules_and_wa(sample_dir, tmp_path):
    rules = tmp_path / "r.json"
    assert invoke("compile", sample_dir / "block_max_dcra.cra.json", "--to", "rules", "--out", rules).exit_code == 0
    assert invoke("check", rules).exit_code == 0
    wa = tmp_path / "w.json"
    assert invoke("compile", sample_dir / "linear_semiring_cra.cra.json", "--to", "wa", "--out", wa).exit_code == 0
    assert invoke("xcheck", wa, "--max-len", 3).exit_code == 0
    r = invoke("compile", sample_dir / "doubling_exponent_cra.cra.json", "--to", "wa")
    assert r.exit_code == 1 and report(r)["error"] == "NonLinearizableExpression"


def _jsonl(items):
    return "".join(json.dumps({"tag": a, "value": v}) + "\n" for a, v in items)


def test_run_jsonl_and_csv(sample_dir, tmp_path):
    stream = tmp_path / "s.jsonl"
    stream.write_text(_jsonl([("A", 1), ("B", 2), ("A", 3)]))
    r = invoke("run", sample_dir / "sum_of_a.rules.json", "--input", stream)
    assert r.exit_code == 0
    rep = report(r)
    assert rep["output"] == 4
    assert rep["stats"]["max_stored_values"] <= rep["bounds"]["stored_value_bound"]
    csv = tmp_path / "s.csv"
    csv.write_text("tag,value\nA,1\nA,5\n")
    assert report(invoke("run", sample_dir / "sum_of_a.rules.json", "--input", csv))["output"] == 6
    r = invoke("run", sample_dir / "sum_of_a.rules.json", "--input", "-", input=_jsonl([("A", 2)]))
    assert report(r)["output"] == 2


def test_run_empty_input_undefined(sample_dir, tmp_path):
    empty = tmp_path / "e.jsonl"
    empty.write_text("")
    assert report(invoke("run", sample_dir / "sum_dcra.cra.json", "--input", empty))["output"] == "undefined"


def test_run_bad_input(sample_dir, tmp_path):
    bad = tmp_path / "b.jsonl"
    bad.write_text(_jsonl([("Z", 1)]))
    assert invoke("run", sample_dir / "sum_of_a.rules.json", "--input", bad).exit_code == 2
    bad.write_text(_jsonl([("A", "x")]))
    assert invoke("run", sample_dir / "sum_of_a.rules.json", "--input", bad).exit_code == 2


def test_run_drawdown_matches_peak_trough_oracle(sample_dir, tmp_path):
    rng = random.Random(7)
    items = [("b", 0)] + [("a", rng.randint(0, 1000)) for _ in range(999)]
    stream = tmp_path / "d.jsonl"
    stream.write_text(_jsonl(items))
    r = invoke("run", sample_dir / "drawdown_ucra.cra.json", "--input", stream)
    assert r.exit_code == 0
    assert report(r)["output"] == drawdown(items)


def test_xcheck_rules(sample_dir):
    r = invoke("xcheck", sample_dir / "sum_of_a.rules.json", "--max-len", 5, "--values", "0,1,2")
    assert r.exit_code == 0
    rep = report(r)
    assert rep["mismatches"] == 0 and rep["compared"] == sum(6 ** n for n in range(6))


def test_xcheck_empty_word_only(sample_dir):
    rep = report(invoke("xcheck", sample_dir / "block_max.query.json", "--max-len", 0))
    assert rep["compared"] == 1


def test_xcheck_broken_update(sample_dir, tmp_path):
    compiled = tmp_path / "bm.json"
    invoke("compile", sample_dir / "block_max.query.json", "--out", compiled)
    doc = json.loads(compiled.read_text())
    # the self-loop accumulating a block sum forgets the running total
    broken = False
    for t in doc["transitions"]:
        for x, e in t["update"].items():
            if t["from"] == t["to"] and e == f"({x} + val)":
                t["update"][x] = "val"
                broken = True
    assert broken
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    r = invoke("xcheck", path, "--against", sample_dir / "block_max.query.json", "--max-len", 4)
    assert r.exit_code == 1
    ce = report(r)["counterexample"]
    assert ce["machine"] != ce["oracle"] and ce["word"]


def test_xcheck_budget(sample_dir):
    r = invoke("xcheck", sample_dir / "sum_of_a.rules.json", "--max-len", 9, "--budget", 1000)
    assert r.exit_code == 1 and report(r)["error"] == "BudgetExceeded"


def test_xcheck_weighted_and_cra(sample_dir):
    assert report(invoke("xcheck", sample_dir / "tropical_wa.json", "--max-len", 4))["mismatches"] == 0
    assert report(invoke("xcheck", sample_dir / "fstar_uwa.json", "--max-len", 4))["mismatches"] == 0
    assert report(invoke("xcheck", sample_dir / "end_letter_ucra.cra.json", "--max-len", 3))["mismatches"] == 0


def test_graph_views(sample_dir):
    for args in (("--view", "machine"), ("--view", "future-past"), ("--view", "dag", "--word", "ABA")):
        r = invoke("graph", sample_dir / "sum_of_a.rules.json", *args)
        assert r.exit_code == 0 and r.stdout.startswith("digraph")
    assert invoke("graph", sample_dir / "tropical_wa.json", "--view", "support").exit_code == 0
    assert invoke("graph", sample_dir / "tropical_wa.json", "--view", "dag").exit_code == 2


def test_seed_environment_override(monkeypatch):
    monkeypatch.delenv("STREAMCRA_SEED", raising=False)
    assert cli.effective_seed(3) == 3
    monkeypatch.setenv("STREAMCRA_SEED", "11")
    assert cli.effective_seed(3) == 11
