import csv
import io
import itertools
import json
import statistics
import subprocess
import sys

import pytest

from igsd import cli
from igsd import document as docmod
from igsd.measures import ac1_pair
from igsd.pipeline import run

from conftest import COHORT, DATA, FIXTURE, IRIS, TICTACTOE, write_csv


def _run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def fixture_doc(tmp_path_factory):
    out = tmp_path_factory.mktemp("docs") / "fixture.json"
    assert cli.main(["discover", "--data", str(FIXTURE), "--target", "target", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def ttt_docs(tmp_path_factory):
    base = tmp_path_factory.mktemp("ttt")
    paths = []
    for mode in ("dynamic", "maximum"):
        out = base / f"ttt-{mode}.json"
        assert cli.main(["discover", "--data", str(TICTACTOE), "--target", "Class", "--t-mode", mode,
                         "--dmax", "4", "--out", str(out)]) == 0
        paths.append(out)
    return paths


def test_discover_document_layout(fixture_doc):
    doc = json.loads(fixture_doc.read_text())
    assert set(doc) == {"format_version", "dataset", "config", "truncated", "passes", "patterns", "set_stats"}
    assert doc["dataset"]["n_rows"] == 8 and doc["dataset"]["columns"] == ["A", "B", "C", "target"]
    assert doc["config"]["t_mode"] == "dynamic" and doc["config"]["dmax"] == 3
    assert doc["truncated"] is False
    assert [p["target"] for p in doc["passes"]] == ["Y", "N"]
    for p in doc["patterns"]:
        k = len(p["selectors"])
        assert all(len(p["profile"][key]) == k for key in ("ig", "odds", "orr", "p"))
        assert p["stats"]["p_value"] <= 0.05
    assert set(doc["set_stats"]["per_class"]) == {"Y", "N"}


def test_discover_to_stdout(capsys):
    code, out, _ = _run(["discover", "--data", FIXTURE, "--target", "target", "--dmax", "1"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["dmax"] == 1
    assert all(len(p["selectors"]) == 1 for p in doc["patterns"])
    assert all(p["depth"] == 1 for p in doc["passes"])


def test_document_round_trip(fixture_doc, ttt_docs):
    for path in [fixture_doc, *ttt_docs]:
        text = path.read_text(encoding="utf-8")
        assert text.endswith("\n")
        assert docmod.dumps(docmod.read_document(path)) == text


def test_infinite_odds_serialised(ttt_docs):
    doc = docmod.read_document(ttt_docs[0])
    odds = [p["stats"]["odds"] for p in doc["patterns"]]
    assert "inf" in odds
    assert "Infinity" not in ttt_docs[0].read_text()


def test_evaluate_reproduces_stored_set_stats(fixture_doc, ttt_docs, capsys):
    for path, data in [(fixture_doc, FIXTURE), *[(p, TICTACTOE) for p in ttt_docs]]:
        code, out, _ = _run(["evaluate", "--data", data, "--patterns", path, "--format", "json"], capsys)
        assert code == 0
        row = json.loads(out)[0]
        stored = docmod.read_document(path)["set_stats"]["overall"]
        for name, attr in cli.METRIC_COLUMNS:
            a, b = row[name], stored[attr]
            assert (a is None and b is None) or abs(a - b) <= 1e-9, name


def test_evaluate_two_documents(ttt_docs, capsys):
    code, out, _ = _run(["evaluate", "--data", TICTACTOE, "--patterns", *ttt_docs], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["document"] + [n for n, _ in cli.METRIC_COLUMNS]
    assert len(rows) == 3
    assert [r[0] for r in rows[1:]] == ["ttt-dynamic.json", "ttt-maximum.json"]
    p_col = rows[0].index("p-value")
    assert all("E-" in r[p_col] for r in rows[1:])


def test_evaluate_markdown_notes(ttt_docs, capsys):
    code, out, _ = _run(["evaluate", "--data", TICTACTOE, "--patterns", *ttt_docs, "--format", "md"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("| document |") and lines[0].endswith("| notes |")
    assert set(lines[1]) <= {"|", "-"}
    assert "best size" in out and "worst size" in out


def test_metric_formatting():
    assert cli._fmt_metric("p-value", 1.93e-13) == "1.93E-13"
    assert cli._fmt_metric("p-value", 0.02) == "0.02"
    assert cli._fmt_metric("size", 4) == "4"
    assert cli._fmt_metric("coverage", None) == "-"


def test_foreign_pattern_set(tmp_path, capsys):
    foreign = {
        "label": "other-tool",
        "config": {"target_columns": ["Class"]},
        "patterns": [
            {"target": "positive", "selectors": [
                {"attribute": a, "op": "==", "value": "x"}
                for a in ("top-left-square", "middle-middle-square", "bottom-right-square")]},
            {"target": "negative", "selectors": [{"attribute": "middle-middle-square", "op": "==", "value": "o"}]},
        ],
    }
    path = write_csv(tmp_path / "foreign.json", json.dumps(foreign))
    code, out, _ = _run(["evaluate", "--data", TICTACTOE, "--patterns", path, "--format", "json"], capsys)
    assert code == 0
    row = json.loads(out)[0]
    assert row["document"] == "other-tool" and row["size"] == 2 and row["length"] == 2.0


@pytest.mark.parametrize("selectors", [
    [{"attribute": "nope", "op": "==", "value": "x"}],
    [{"attribute": "top-left-square", "op": "<=", "value": 3}],
    [{"attribute": "top-left-square", "op": "~", "value": "x"}],
    [],
])
def test_foreign_pattern_schema_errors(tmp_path, capsys, selectors):
    doc = {"config": {"target_columns": ["Class"]}, "patterns": [{"target": "positive", "selectors": selectors}]}
    path = write_csv(tmp_path / "bad.json", json.dumps(doc))
    code, _, err = _run(["evaluate", "--data", TICTACTOE, "--patterns", path], capsys)
    assert code == 2 and err


def test_evaluate_schema_mismatch(fixture_doc, capsys):
    code, _, err = _run(["evaluate", "--data", TICTACTOE, "--patterns", fixture_doc, "--target", "Class"], capsys)
    assert code == 2
    assert "columns" in err


def test_evaluate_not_a_document(tmp_path, capsys):
    path = write_csv(tmp_path / "x.json", "[1, 2]")
    assert _run(["evaluate", "--data", FIXTURE, "--patterns", path], capsys)[0] == 2


@pytest.mark.parametrize("argv", [
    ["discover"],
    ["discover", "--data", str(FIXTURE), "--target", "target", "--t-mode", "median"],
    ["discover", "--data", str(FIXTURE), "--target", "target", "--dmax", "0"],
    ["discover", "--data", str(FIXTURE), "--target", "target", "--time-budget", "-1"],
    ["discover", "--data", str(FIXTURE), "--target", "target", "--dmax", "1", "--cond", "A,B"],
    ["evaluate", "--data", str(FIXTURE), "--patterns", "x.json", "--format", "xml"],
    ["frobnicate"],
    [],
])
def test_usage_errors_exit_1(argv, capsys):
    # argparse failures leave through SystemExit, config errors through the return value
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["discover", "--data", "/nonexistent.csv", "--target", "target"],
    ["discover", "--data", str(FIXTURE), "--target", "missing"],
    ["discover", "--data", str(FIXTURE), "--target", "target", "--cond", "Z"],
])
def test_data_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2
    assert capsys.readouterr().err


def test_constant_target_exit_2(tmp_path, capsys):
    path = write_csv(tmp_path / "c.csv", "a,t\n1,x\n2,x\n")
    assert _run(["discover", "--data", path, "--target", "t"], capsys)[0] == 2


def test_cond_list_and_multi_target(capsys):
    code, out, _ = _run(["discover", "--data", COHORT, "--target", "progression", "--target", "death",
                         "--cond", "stage,first_treatment", "--dmax", "3"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["passes"]) == 4
    assert doc["patterns"]
    for p in doc["patterns"]:
        assert {"stage", "first_treatment"} <= {s["attribute"] for s in p["selectors"]}
        assert p["target"].startswith("progression=")


def test_numeric_target_bins(tmp_path, capsys):
    code, out, _ = _run(["discover", "--data", IRIS, "--target", "petal_width", "--bins", "3",
                         "--dmax", "1"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["passes"]) == 3 and doc["config"]["bins"] == 3


def test_truncation_reported(capsys):
    code, out, _ = _run(["discover", "--data", TICTACTOE, "--target", "Class", "--time-budget", "1e-9"], capsys)
    assert code == 0
    assert json.loads(out)["truncated"] is True


def test_schema_flag(tmp_path, capsys):
    data = write_csv(tmp_path / "s.csv", "code,t\n1,a\n2,b\n1,a\n2,b\n")
    hints = write_csv(tmp_path / "s.txt", "code=nominal\n")
    code, out, _ = _run(["discover", "--data", data, "--target", "t", "--schema", hints], capsys)
    assert code == 0
    assert json.loads(out)["patterns"][0]["selectors"][0]["op"] == "=="


# -- agree --------------------------------------------------------------------

def _ratings_file(tmp_path, rows):
    return write_csv(tmp_path / "ratings.csv", "item,rater,rating\n" + "".join(f"{i},{r},{v}\n" for i, r, v in rows))


def _report(out):
    return dict(line.split(" ", 1) for line in out.splitlines())


def test_agree_perfect(tmp_path, capsys):
    rows = [(i, r, "accept" if i % 3 else "reject") for i in range(12) for r in ("a", "b")]
    code, out, _ = _run(["agree", "--ratings", _ratings_file(tmp_path, rows)], capsys)
    rep = _report(out)
    assert code == 0
    assert float(rep["AC1"]) == 1.0 and float(rep["ICC"]) == 1.0
    assert rep["N"] == "12" and rep["R"] == "2"


def test_agree_hundred_items(capsys):
    code, out, _ = _run(["agree", "--ratings", DATA / "ratings_100.csv"], capsys)
    assert code == 0
    assert _report(out)["AC1"] == "0.600000"
    res = cli.agreement(cli.read_ratings(DATA / "ratings_100.csv"))
    assert res["AC1"] == pytest.approx(0.6, abs=1e-12)


def test_agree_seven_raters(capsys):
    ratings = cli.read_ratings(DATA / "ratings_seven.csv")
    code, out, _ = _run(["agree", "--ratings", DATA / "ratings_seven.csv"], capsys)
    rep = _report(out)
    assert code == 0 and rep["R"] == "7" and rep["N"] == "30"
    items = sorted(next(iter(ratings.values())))
    pairwise = [ac1_pair([ratings[a][i] for i in items], [ratings[b][i] for i in items])
                for a, b in itertools.combinations(sorted(ratings), 2)]
    assert len(pairwise) == 21
    assert float(rep["AC1"]) == pytest.approx(statistics.fmean(pairwise), abs=1e-6)


def test_agree_integer_codes(tmp_path, capsys):
    rows = [(i, r, str(i % 4 + (r == "b"))) for i in range(8) for r in ("a", "b", "c")]
    code, out, _ = _run(["agree", "--ratings", _ratings_file(tmp_path, rows)], capsys)
    rep = _report(out)
    assert code == 0 and rep["AC1"].startswith("n/a")
    assert -1 <= float(rep["ICC"]) <= 1


@pytest.mark.parametrize("text", [
    "item,who,rating\n1,a,accept\n",
    "item,rater,rating\n1,a,accept\n1,a,reject\n1,b,accept\n",
    "item,rater,rating\n1,a,maybe\n1,b,accept\n2,a,accept\n2,b,reject\n",
    "item,rater,rating\n",
    "item,rater,rating\n1,a,accept\n1,b,accept\n2,a,accept\n",
])
def test_agree_bad_files(tmp_path, capsys, text):
    path = write_csv(tmp_path / "bad.csv", text)
    assert _run(["agree", "--ratings", path], capsys)[0] == 2


# -- oracle -------------------------------------------------------------------

def test_oracle_pass(capsys):
    code, out, _ = _run(["oracle", "--data", FIXTURE, "--target", "target"], capsys)
    assert code == 0
    assert out.splitlines()[-1] == "PASS"
    assert "enumerated combinations: 48" in out


def test_oracle_detects_injected_bug(monkeypatch, capsys):
    monkeypatch.setattr(cli, "run", lambda d, cfg, inclusive=True: run(d, cfg, inclusive=not inclusive))
    code, out, _ = _run(["oracle", "--data", TICTACTOE, "--target", "Class", "--dmax", "2"], capsys)
    assert code == 3
    assert out.splitlines()[-1] == "FAIL"
    assert "mismatch: [positive] final" in out


def test_oracle_guard_refusal(capsys):
    code, out, err = _run(["oracle", "--data", IRIS, "--target", "species", "--dmax", "4"], capsys)
    assert code == 2
    assert "refused" in err and "guard" in err
    assert out == ""


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "igsd.cli", "oracle", "--data", str(FIXTURE),
                          "--target", "target", "--t-mode", "maximum"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.rstrip().endswith("PASS")
