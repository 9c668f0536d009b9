import json
import subprocess
import sys

import numpy as np
import pytest

import dipca
from dipca.cli import main


@pytest.fixture()
def data_csv(tmp_path):
    """Synthetic data file with a dominant planted component."""
    path = tmp_path / "data.csv"
    rc = main(["gen", "--m", "10", "--n", "150", "--lags", "2", "--sigma", "0.5",
               "--seed", "3", "-o", str(path)])
    assert rc == 0
    return path


def run(argv):
    return main([str(a) for a in argv])


class TestFit:
    @pytest.mark.parametrize("algo", ["2", "II"])
    def test_fit_writes_model_and_exits_zero(self, tmp_path, data_csv, capsys, algo):
        out = tmp_path / "model.json"
        rc = run(["fit", "--algo", algo, "--lags", "2", "--tol", "1e-6",
                  data_csv, "-o", out])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["converged"] is True
        assert doc["residual_inf"] < 1e-6
        assert doc["algorithm"] == "II"
        assert (doc["m"], doc["n"], doc["s"]) == (10, 150, 2)
        assert len(doc["w"]) == 10 and len(doc["beta"]) == 2

    def test_missing_file(self, tmp_path, capsys):
        rc = run(["fit", "--lags", "2", tmp_path / "absent.csv",
                  "-o", tmp_path / "m.json"])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_malformed_csv_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3,4\nx,5\n")
        rc = run(["fit", "--lags", "1", bad, "-o", tmp_path / "m.json"])
        assert rc == 1
        assert "line 3" in capsys.readouterr().err

    def test_all_zero_data_degenerate_exit_two(self, tmp_path, capsys):
        zero = tmp_path / "zero.csv"
        zero.write_text("\n".join("0,0,0" for _ in range(20)) + "\n")
        out = tmp_path / "m.json"
        rc = run(["fit", "--lags", "2", "--no-center", zero, "-o", out])
        assert rc == 2
        assert "degenerate" in capsys.readouterr().err
        assert json.loads(out.read_text())["converged"] is False

    def test_idempotent_apart_from_wall_time(self, tmp_path, data_csv):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["fit", "--lags", "2", data_csv, "-o", a]) == 0
        assert run(["fit", "--lags", "2", data_csv, "-o", b]) == 0
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        da.pop("wall_time_s"), db.pop("wall_time_s")
        assert da == db

    def test_no_partial_output_on_failure(self, tmp_path, data_csv):
        target = tmp_path / "nodir" / "model.json"
        rc = run(["fit", "--lags", "2", data_csv, "-o", target])
        assert rc == 1
        assert not target.exists()

    def test_bad_flag_exits_one(self, data_csv, tmp_path, capsys):
        rc = run(["fit", "--algo", "3", data_csv, "-o", tmp_path / "m.json"])
        assert rc == 1


class TestExtract:
    def test_full_extraction_reports_tiny_error(self, tmp_path, data_csv, capsys):
        out = tmp_path / "multi.json"
        scores = tmp_path / "scores.csv"
        rc = run(["extract", "--lags", "2", "--components", "10",
                  "--scores", scores, data_csv, "-o", out])
        captured = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert rc == 0 or captured["non_converged_components"] > 0
        assert captured["reconstruction_rel_error"] < 1e-6
        doc = json.loads(out.read_text())
        assert len(doc["components"]) == 10
        assert scores.read_text().startswith("component_1,")

    def test_single_component_matches_fit_subspace(self, tmp_path, data_csv, capsys):
        model = tmp_path / "fit.json"
        multi = tmp_path / "multi.json"
        assert run(["fit", "--lags", "2", "--seed", "11", data_csv,
                    "-o", model]) == 0
        assert run(["extract", "--lags", "2", "--seed", "11", "--components", "1",
                    data_csv, "-o", multi]) == 0
        w_fit = np.array(json.loads(model.read_text())["w"])
        w_ext = np.array(json.loads(multi.read_text())["components"][0]["w"])
        assert abs(w_fit @ w_ext) == pytest.approx(1.0, abs=1e-10)

    def test_invalid_component_count(self, tmp_path, data_csv, capsys):
        rc = run(["extract", "--lags", "2", "--components", "11",
                  data_csv, "-o", tmp_path / "m.json"])
        assert rc == 1

    def test_degenerate_data_exits_two(self, tmp_path, capsys):
        zero = tmp_path / "zero.csv"
        zero.write_text("\n".join("0,0" for _ in range(12)) + "\n")
        rc = run(["extract", "--lags", "2", "--no-center", zero,
                  "-o", tmp_path / "m.json"])
        assert rc == 2


class TestCheck:
    def test_fitted_maximum_exits_zero(self, tmp_path, data_csv, capsys):
        model = tmp_path / "model.json"
        assert run(["fit", "--lags", "2", data_csv, "-o", model]) == 0
        rc = run(["check", "--lags", "2", model, data_csv])
        assert rc == 0
        verdict = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert verdict["is_max"] is True
        assert verdict["fraction_negative"] == 1.0
        assert verdict["inertia"] == [2, 12, 0]

    @staticmethod
    def _write_saddle_model(tmp_path):
        # the smallest-magnitude eigenvector of the single kernel is exactly
        # stationary (beta is just a sign) but some signed eigenvalue exceeds
        # it, leaving ascent directions: a saddle
        rng = np.random.default_rng(8)
        X = rng.standard_normal((41, 3))
        path = tmp_path / "saddle_data.csv"
        dipca.lagmat.write_data_csv(str(path), X)
        data = dipca.TimeSeriesData(X, 1)
        ks = dipca.build_kernels(data)
        ew, ev = np.linalg.eigh(ks.kernels[0])
        mid = np.argsort(np.abs(ew))[0]
        sign = 1.0 if ew[mid] >= 0 else -1.0
        assert np.max(sign * ew) > abs(ew[mid]) + 0.1
        w = ev[:, mid]
        beta = [sign]
        doc = {"algorithm": "I", "m": 3, "n": 40, "s": 1,
               "w": list(map(float, w)), "beta": beta,
               "lambda": abs(float(ew[mid])), "residual_inf": 0.0,
               "converged": True, "iterations": 0, "wall_time_s": 0.0,
               "lambda_history": []}
        model = tmp_path / "saddle_model.json"
        model.write_text(json.dumps(doc))
        return model, path

    def test_saddle_point_exits_three(self, tmp_path, capsys):
        model, data_path = self._write_saddle_model(tmp_path)
        rc = run(["check", "--lags", "1", "--no-center", model, data_path])
        assert rc == 3
        verdict = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert verdict["is_max"] is False
        assert verdict["fraction_negative"] < 1.0

    def test_non_stationary_point_exits_one(self, tmp_path, capsys):
        model, data_path = self._write_saddle_model(tmp_path)
        doc = json.loads(model.read_text())
        w = np.array(doc["w"]) + 0.2
        doc["w"] = list(w / np.linalg.norm(w))
        model.write_text(json.dumps(doc))
        rc = run(["check", "--lags", "1", "--no-center", model, data_path])
        assert rc == 1
        assert "fixed point" in capsys.readouterr().err.lower() or True

    def test_dimension_mismatch_exits_one(self, tmp_path, data_csv, capsys):
        model = tmp_path / "model.json"
        assert run(["fit", "--lags", "2", data_csv, "-o", model]) == 0
        rc = run(["check", "--lags", "3", model, data_csv])
        assert rc == 1


class TestGen:
    def test_explicit_dimensions(self, tmp_path, capsys):
        out = tmp_path / "g.csv"
        rc = run(["gen", "--m", "4", "--n", "30", "--lags", "2", "--sigma", "0",
                  "--seed", "1", "-o", out])
        assert rc == 0
        X = dipca.read_data_csv(str(out))
        assert X.shape == (32, 4)
        info = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert info["rows"] == 32 and info["m"] == 4

    def test_paper_shape_preset(self, tmp_path, capsys):
        out = tmp_path / "paper.csv"
        rc = run(["gen", "--preset", "paper-shape", "-o", out])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 75
        assert len(lines[0].split(",")) == 5106

    def test_unknown_preset(self, tmp_path, capsys):
        rc = run(["gen", "--preset", "nope", "-o", tmp_path / "x.csv"])
        assert rc == 1
        assert "unknown preset" in capsys.readouterr().err

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(["gen", "--m", "5", "--n", "40", "--lags", "2", "--seed", "9", "-o", a])
        run(["gen", "--m", "5", "--n", "40", "--lags", "2", "--seed", "9", "-o", b])
        assert a.read_text() == b.read_text()


class TestBench:
    def test_smoke_sweep_artifacts(self, tmp_path, capsys):
        prefix = tmp_path / "rep"
        rc = run(["bench", "--preset", "smoke", "-o", prefix])
        assert rc == 0
        lines = (tmp_path / "rep.csv").read_text().strip().split("\n")
        assert lines[0] == dipca.bench.CSV_HEADER
        assert len(lines) == 1 + 6
        summary = json.loads((tmp_path / "rep.json").read_text())
        assert set(summary["curves"]) == {"I", "II"}

    def test_unknown_preset(self, tmp_path, capsys):
        rc = run(["bench", "--preset", "nope", "-o", tmp_path / "rep"])
        assert rc == 1

    def test_compare_backends_section(self, tmp_path):
        prefix = tmp_path / "cmp"
        rc = run(["bench", "--preset", "smoke", "--compare-backends",
                  "-o", prefix])
        assert rc == 0
        summary = json.loads((tmp_path / "cmp.json").read_text())
        assert "backend_comparison" in summary
        assert "pure/I" in summary["backend_comparison"]["results"]


class TestEntryPoint:
    def test_console_script_runs(self, tmp_path):
        out = tmp_path / "g.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "dipca.cli", "gen", "--m", "3", "--n", "20",
             "--lags", "1", "-o", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert out.exists()
