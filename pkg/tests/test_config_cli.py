import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrsurv import cli
from corrsurv.config import ConfigError, dump_config, load_config, parse_config
from corrsurv.system_survival import system_survival

from conftest import random_model

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def mutate(tmp_path, name, fn):
    doc = json.loads((DATA / name).read_text())
    fn(doc)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


class TestConfig:
    @pytest.mark.parametrize("name", ["series2.json", "bridge.json", "two_of_three.json", "zero.json"])
    def test_round_trip_files(self, name):
        model = load_config(DATA / name)
        doc = dump_config(model)
        again = parse_config(json.loads(json.dumps(doc)))
        assert again == model
        assert dump_config(again) == doc

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32))
    def test_round_trip_random(self, seed):
        model = random_model(seed)
        again = parse_config(json.loads(json.dumps(dump_config(model))))
        assert again == model

    @pytest.mark.parametrize(
        "edit,field",
        [
            (lambda d: d["stress"].update(probs=[0.7, 0.4]), "stress.probs"),
            (lambda d: d["stress"].update(probs=[1.0]), "stress.probs"),
            (lambda d: d["nodes"][0].pop("baseline"), "nodes[0]"),
            (lambda d: d["nodes"][1]["intensity"].update(kind="cubic"), "nodes[1].intensity.kind"),
            (lambda d: d["service"].update(rate=-1), "service.rate"),
            (lambda d: d["structure"]["children"][0].update(id="zz"), "structure"),
            (lambda d: d["nodes"].append(dict(d["nodes"][0])), "nodes"),
            (lambda d: d["correlator"].update(breakpoints=[2, 1], rates=[1, 1, 1], kind="piecewise"), "correlator"),
        ],
    )
    def test_errors_name_the_field(self, tmp_path, edit, field):
        with pytest.raises(ConfigError) as info:
            load_config(mutate(tmp_path, "series2.json", edit))
        assert info.value.field.startswith(field)

    def test_kofn_k_too_large(self, tmp_path):
        path = mutate(tmp_path, "two_of_three.json", lambda d: d["structure"].update(k=4))
        with pytest.raises(ConfigError, match="structure.k"):
            load_config(path)

    def test_bad_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"nodes": [\n')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(path)

    @pytest.mark.parametrize("doc", [[], "x", None, 3, {"nodes": []}])
    def test_non_object_documents(self, doc):
        with pytest.raises(ConfigError):
            parse_config(doc)


class TestAnalyze:
    def test_single_step(self, tmp_path, capsys):
        code, out, _ = run(["analyze", DATA / "zero.json", "--t-max", 1, "--steps", 1], capsys)
        assert code == 0
        assert rows(out) == [["t", "survival"], ["0.0", "1.0"], ["1.0", "1.0"]]

    def test_first_row_and_value(self, capsys):
        code, out, _ = run(["analyze", DATA / "series2.json", "--t-max", 1, "--steps", 1], capsys)
        table = rows(out)
        assert table[1] == ["0.0", "1.0"]
        model = load_config(DATA / "series2.json")
        assert float(table[2][1]) == system_survival(model, 1.0)

    def test_bridge_monotone(self, tmp_path, capsys):
        out_path = tmp_path / "curve.csv"
        code, _, _ = run(["analyze", DATA / "bridge.json", "--t-max", 5, "--steps", 100, "--out", out_path], capsys)
        table = rows(out_path.read_text())
        assert code == 0 and len(table) == 102
        values = [float(r[1]) for r in table[1:]]
        assert np.all(np.diff(values) <= 0)

    def test_bad_probs_exit_2(self, tmp_path, capsys):
        path = mutate(tmp_path, "series2.json", lambda d: d["stress"].update(probs=[0.7, 0.4]))
        code, _, err = run(["analyze", path, "--t-max", 1], capsys)
        assert code == 2 and "stress.probs" in err

    @pytest.mark.parametrize("argv", [["--t-max", "0"], ["--t-max", "-1"], ["--t-max", "1", "--steps", "0"],
                                      ["--t-max", "1", "--quad-rel-tol", "0"]])
    def test_bad_arguments_exit_2(self, argv, capsys):
        code, _, _ = run(["analyze", DATA / "series2.json", *argv], capsys)
        assert code == 2

    def test_missing_file_exit_2(self, capsys):
        assert run(["analyze", DATA / "absent.json", "--t-max", 1], capsys)[0] == 2

    def test_numerical_failure_exit_3(self, capsys):
        argv = ["analyze", DATA / "two_of_three.json", "--t-max", 3, "--steps", 2,
                "--quad-rel-tol", "1e-16", "--quad-abs-tol", "1e-300"]
        code, _, err = run(argv, capsys)
        assert code == 3 and "numerical" in err

    def test_csv_round_trips_floats(self, capsys):
        code, out, _ = run(["analyze", DATA / "bridge.json", "--t-max", 3, "--steps", 3], capsys)
        model = load_config(DATA / "bridge.json")
        for t, v in rows(out)[1:]:
            assert float(v) == system_survival(model, float(t))


class TestSimulate:
    def test_zero_rate(self, capsys):
        code, out, _ = run(["simulate", DATA / "zero.json", "--t-max", 2, "--steps", 4, "--reps", 100], capsys)
        table = rows(out)
        assert code == 0 and table[0] == ["t", "survival", "stderr"]
        assert all(r[1] == "1.0" and r[2] == "0.0" for r in table[1:])

    @pytest.mark.parametrize("estimator", ["crude", "rb"])
    def test_byte_identical(self, tmp_path, capsys, estimator):
        base = ["simulate", DATA / "bridge.json", "--t-max", 3, "--steps", 6, "--reps", 9000,
                "--seed", 42, "--estimator", estimator]
        outputs = []
        for workers in (1, 1, 3):
            path = tmp_path / f"run{len(outputs)}.csv"
            assert run([*base, "--workers", workers, "--out", path], capsys)[0] == 0
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_reps_one_twice(self, capsys):
        argv = ["simulate", DATA / "series2.json", "--t-max", 2, "--steps", 3, "--reps", 1, "--seed", 7]
        assert run(argv, capsys)[1] == run(argv, capsys)[1]

    def test_bad_seed(self, capsys):
        argv = ["simulate", DATA / "series2.json", "--t-max", 2, "--seed", -3]
        assert run(argv, capsys)[0] == 2


class TestExpand:
    def test_series(self, tmp_path, capsys):
        path = mutate(tmp_path, "series2.json", lambda d: None)
        code, out, _ = run(["expand", path], capsys)
        assert code == 0
        assert json.loads(out) == [{"coeff": 1, "exponents": {"a": 1, "b": 1}}]

    def test_two_of_three_paper(self, capsys):
        terms = json.loads(run(["expand", DATA / "two_of_three.json", "--mode", "paper"], capsys)[1])
        assert len(terms) == 7
        pattern = sorted((t["coeff"], tuple(sorted(t["exponents"].values()))) for t in terms)
        assert pattern == sorted([(1, (1, 1))] * 3 + [(-1, (1, 1, 2))] * 3 + [(1, (2, 2, 2))])

    def test_bridge_paper(self, capsys):
        assert len(json.loads(run(["expand", DATA / "bridge.json", "--mode", "paper"], capsys)[1])) == 15

    def test_capacity_exit_4(self, tmp_path, capsys):
        def widen(d):
            node = d["nodes"][0]
            d["nodes"] = [dict(node, id=f"c{i}") for i in range(25)]
            d["structure"] = {"kind": "parallel", "children": [{"kind": "component", "id": f"c{i}"} for i in range(25)]}

        code, _, err = run(["expand", mutate(tmp_path, "zero.json", widen)], capsys)
        assert code == 4 and "24" in err


class TestCompare:
    def test_independent_model_passes(self, tmp_path, capsys):
        path = mutate(tmp_path, "series2.json", lambda d: d["correlator"].update(rate=0))
        code, out, _ = run(["compare", path, "--t-max", 3, "--steps", 3, "--reps", 40_000, "--seed", 1], capsys)
        report = json.loads(out)
        assert code == 0 and report["pass"]
        assert {"closed_form_idempotent", "closed_form_paper", "simulated", "stderr", "z_idempotent", "z_paper"} <= set(report["rows"][0])

    def test_bridge_reports_paper_without_gating(self, capsys):
        argv = ["compare", DATA / "bridge.json", "--t-max", 3, "--steps", 3, "--reps", 60_000,
                "--seed", 2, "--estimator", "rb"]
        code, out, _ = run(argv, capsys)
        report = json.loads(out)
        assert code == 0 and report["pass"]
        assert max(abs(r["z_paper"]) for r in report["rows"]) > 4

    def test_degenerate_grid(self, capsys):
        code, out, _ = run(["compare", DATA / "bridge.json", "--t-max", 0, "--reps", 10], capsys)
        report = json.loads(out)
        assert code == 0 and len(report["rows"]) == 1
        assert report["rows"][0]["closed_form_idempotent"] == report["rows"][0]["simulated"] == 1.0

    def test_mismatch_exit_5(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "Z_LIMIT", 1e-9)
        argv = ["compare", DATA / "series2.json", "--t-max", 2, "--steps", 2, "--reps", 2000, "--seed", 3]
        assert run(argv, capsys)[0] == 5


class TestCorrelation:
    def test_report(self, capsys):
        argv = ["correlation", DATA / "bridge.json", "--t", 1, "--node-i", "n1", "--node-j", "n2", "--reps", 100_000]
        code, out, _ = run(argv, capsys)
        report = json.loads(out)
        assert code == 0
        assert abs(report["closed_form"] - report["simulated"]) <= 4 * report["se"]

    def test_zero_correlator(self, tmp_path, capsys):
        path = mutate(tmp_path, "series2.json", lambda d: d["correlator"].update(rate=0))
        out = run(["correlation", path, "--t", 1, "--node-i", "a", "--node-j", "b", "--reps", 100], capsys)[1]
        assert json.loads(out)["closed_form"] == 0.0

    def test_symmetric_unit_rates(self, tmp_path, capsys):
        def unit(d):
            d["correlator"] = {"kind": "constant", "rate": 1}
            for n in d["nodes"]:
                n["intensity"] = {"kind": "constant", "rate": 1}

        out = run(["correlation", mutate(tmp_path, "series2.json", unit), "--t", 2, "--node-i", "a",
                   "--node-j", "b", "--reps", 100], capsys)[1]
        assert json.loads(out)["closed_form"] == pytest.approx(0.5)

    def test_unknown_id_exit_2(self, capsys):
        argv = ["correlation", DATA / "series2.json", "--t", 1, "--node-i", "a", "--node-j", "zz"]
        assert run(argv, capsys)[0] == 2


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "corrsurv", "analyze", str(DATA / "zero.json"), "--t-max", "1", "--steps", "1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("t,survival")
