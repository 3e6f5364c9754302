from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from concircle import catalog, cli
from concircle.errors import ArgumentError
from concircle.report import (Options, canonical_json, run_analyze, run_compare_oracle,
                              sample_points, write_report)
from concircle.warped import NO_STRUCTURE


def rounded(obj):
    """Normalise floats to the 13 significant digits the report keeps."""
    if isinstance(obj, float):
        return float("%.12e" % obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    return obj


def skipping_manifest(tmp_path):
    doc = {"name": "half", "dimension": 3, "coordinates": ["x", "y", "z"],
           "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1 + 0*ln(x)"]],
           "sample_box": {"x": [-0.5, 1], "y": [0, 1], "z": [0, 1]}, "points": 12}
    path = tmp_path / "half.json"
    path.write_text(json.dumps(doc))
    return path


class TestSampling:
    def test_documented_value(self):
        m = catalog.build("euclidean", {"n": 1})
        m = catalog._with_box(m, "x", (0.0, 1.0))
        assert sample_points(m, 1, 42)[0, 0] == pytest.approx(0.7739560485559633, abs=0)

    def test_box_containment(self):
        m = catalog.build("sphere", {"n": 2})
        pts = sample_points(m, 32, 42)
        assert np.all((pts[:, 0] >= 0.3) & (pts[:, 0] <= 2.8))

    def test_deterministic(self):
        m = catalog.build("schwarzschild")
        np.testing.assert_array_equal(sample_points(m, 32, 7), sample_points(m, 32, 7))

    def test_count_positive(self):
        with pytest.raises(ArgumentError):
            sample_points(catalog.build("sphere"), 0, 1)


class TestAnalyze:
    def test_sphere(self):
        rep = run_analyze(catalog.build("sphere", {"n": 3}))
        assert rep["verdicts"]["concircularly_flat"] is True
        assert rep["verdicts"]["constant_curvature"]["kappa"] == pytest.approx(1.0, abs=1e-9)
        assert rep["consistent"] is True
        assert rep["point_count"] == 32 and len(rep["records"]) == 32

    def test_schwarzschild(self):
        v = run_analyze(catalog.build("schwarzschild"))["verdicts"]
        assert v["ricci_codazzi"] is True and v["divergence_free_C"] is True
        assert v["concircularly_symmetric"] is False
        assert v["einstein"]["holds"] is True

    def test_perturbed(self):
        assert run_analyze(catalog.build("perturbed3"))["verdicts"]["ricci_codazzi"] is False

    def test_two_dimensional_not_applicable(self):
        rep = run_analyze(catalog.build("sphere", {"n": 2}), Options(points=4))
        assert rep["verdicts"]["concircularly_flat"] == "not_applicable"
        assert rep["verdicts"]["flat"] is False
        assert any("dimension >= 3" in w for w in rep["warnings"])

    def test_skipped_points_give_indeterminate(self, tmp_path):
        m = cli.resolve(str(skipping_manifest(tmp_path)), {})
        rep = run_analyze(m)
        skipped = [r for r in rep["records"] if r["skipped"]]
        assert skipped and all("at point" in r["skipped"] for r in skipped)
        assert rep["verdicts"]["flat"] == "indeterminate"
        assert any("skipped" in w for w in rep["warnings"])

    def test_flag_tolerance_override(self):
        m = catalog.build("perturbed3")
        rep = run_analyze(m, Options(points=8, flag_tol={"ricci_codazzi": 10.0}))
        assert rep["verdicts"]["ricci_codazzi"] is True
        assert rep["flag_tolerances"] == {"ricci_codazzi": 10.0}

    def test_unknown_flag(self):
        with pytest.raises(ArgumentError):
            run_analyze(catalog.build("sphere"), Options(points=2, flag_tol={"shiny": 1.0}))

    def test_structured_sections(self):
        rep = run_analyze(catalog.build("de_sitter"))
        assert rep["oracle_agreement"]["pass"] is True
        assert rep["structured"]["concircularly_flat_by_conditions"] is True
        assert all(v != "violated" for v in rep["implications"].values())

    def test_threads_do_not_change_output(self, monkeypatch):
        m = catalog.build("warped_exp_sphere")
        monkeypatch.setenv("CONCIRCLE_THREADS", "1")
        one = canonical_json(run_analyze(m, Options(points=8)))
        monkeypatch.setenv("CONCIRCLE_THREADS", "3")
        three = canonical_json(run_analyze(m, Options(points=8)))
        assert one == three

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv("CONCIRCLE_THREADS", "zero")
        with pytest.raises(ArgumentError):
            run_analyze(catalog.build("sphere"), Options(points=2))


class TestCompareOracle:
    @pytest.mark.parametrize("name", ["de_sitter", "warped_exp_sphere"])
    def test_passes(self, name):
        rep = run_compare_oracle(catalog.build(name))
        assert rep["oracle_agreement"]["pass"] is True
        assert rep["oracle_agreement"]["max"] < 1e-7

    def test_unstructured(self):
        with pytest.raises(ArgumentError, match=NO_STRUCTURE):
            run_compare_oracle(catalog.build("sphere"))


class TestJson:
    def test_format(self):
        text = canonical_json({"b": 1.5, "a": [1, 2.0, None, float("nan")], "c": {"z": True}})
        assert text == ('{\n  "a": [1, 2.000000000000e+00, null, null],\n'
                        '  "b": 1.500000000000e+00,\n  "c": {\n    "z": true\n  }\n}\n')
        assert "\r" not in text

    def test_round_trip(self, tmp_path):
        rep = run_analyze(catalog.build("perturbed3"), Options(points=4))
        path = tmp_path / "r.json"
        write_report(rep, path)
        assert json.loads(path.read_text()) == rounded(json.loads(json.dumps(rep)))

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError, match="nope"):
            write_report({"a": 1}, tmp_path / "nope" / "r.json")


class TestCli:
    def test_analyze_exit_zero(self, capsys):
        assert cli.main(["analyze", "catalog:sphere", "--param", "n=3", "--points", "4"]) == 0
        out = capsys.readouterr().out
        assert "concircularly_flat: true" in out

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert cli.main(["analyze", "catalog:schwarzschild", "--points", "6", "--json", str(a)]) == 0
        assert cli.main(["analyze", "catalog:schwarzschild", "--points", "6", "--json", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_json(self, tmp_path, capsys):
        code = cli.main(["analyze", "catalog:sphere", "--points", "2", "--json",
                         str(tmp_path / "missing" / "x.json")])
        assert code == 3
        assert "cannot write" in capsys.readouterr().err

    def test_compare_oracle_unstructured(self, tmp_path, capsys):
        path = tmp_path / "err.json"
        assert cli.main(["compare-oracle", "catalog:sphere", "--json", str(path)]) == 3
        assert NO_STRUCTURE in capsys.readouterr().err
        assert json.loads(path.read_text())["error"]["message"] == NO_STRUCTURE

    def test_compare_oracle_ok(self, capsys):
        assert cli.main(["compare-oracle", "catalog:de_sitter", "--points", "4"]) == 0
        assert "true" in capsys.readouterr().out

    def test_validation_error_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"name": "b", "dimension": 2, "coordinates": ["x", "y"],
                                   "metric": [["1", "x"], ["y", "1"]],
                                   "sample_box": {"x": [0, 1], "y": [1, 1]}}))
        out = tmp_path / "out.json"
        assert cli.main(["analyze", str(bad), "--json", str(out)]) == 3
        err = json.loads(out.read_text())["error"]
        assert err["type"] == "validation"
        assert "asymmetric at (0,1)" in err["details"]
        assert any("degenerate" in d for d in err["details"])

    def test_missing_file(self, tmp_path):
        assert cli.main(["analyze", str(tmp_path / "none.json")]) == 3

    def test_bad_arguments(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["analyze"])
        assert info.value.code == 3
        with pytest.raises(SystemExit) as info:
            cli.main(["analyze", "catalog:sphere", "--flag-tol", "flat"])
        assert info.value.code == 3

    def test_unknown_catalog_entry(self, capsys):
        assert cli.main(["analyze", "catalog:kerr"]) == 3
        assert "valid entries" in capsys.readouterr().err

    def test_param_on_file_rejected(self, tmp_path):
        path = skipping_manifest(tmp_path)
        assert cli.main(["analyze", str(path), "--param", "n=3"]) == 3

    def test_inconsistent_exit_two(self, monkeypatch):
        def fake(m, opts):
            return {"manifest": {"name": m.name}, "point_count": 1, "seed": 1, "tolerance": 1e-7,
                    "verdicts": {}, "implications": {"x": "violated"}, "consistent": False,
                    "warnings": []}
        monkeypatch.setattr(cli, "run_analyze", fake)
        assert cli.main(["analyze", "catalog:sphere"]) == 2

    def test_catalog_list_and_emit(self, tmp_path, capsys):
        assert cli.main(["catalog"]) == 0
        listing = capsys.readouterr().out
        assert all(n in listing for n in catalog.entry_names())
        path = tmp_path / "s.json"
        assert cli.main(["catalog", "sphere", "--param", "n=4", "--json", str(path)]) == 0
        assert cli.resolve(str(path), {}).dimension == 4

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "m.json"
        proc = subprocess.run([sys.executable, "-m", "concircle.cli", "analyze",
                               "catalog:euclidean", "--points", "2", "--json", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert json.loads(out.read_text())["verdicts"]["flat"] is True
