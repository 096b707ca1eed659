import contextlib
import io
import json

import numpy as np
import pytest

import graphsentry as gs
from graphsentry.cli import main


def run_cli(*args):
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        code = main(list(args))
    return code, err.getvalue()


@pytest.fixture(scope="module")
def scenario1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim1")
    code, err = run_cli("simulate", "--scenario", "1", "--seed", "42",
                        "--output-dir", str(out))
    assert code == 0, err
    return out


class TestSimulate:
    def test_scenario1_defaults(self, scenario1_run):
        g = gs.load_edge_list(scenario1_run / "edges.txt")
        assert g.m == 22
        assert g.n == 100
        meta = json.loads((scenario1_run / "metadata.json").read_text())
        assert meta["command"] == "simulate"
        assert meta["ground_truth"]["anomalous_times"] == [6, 7]
        assert meta["options"]["seed"] == 42

    def test_scenario2_defaults(self, tmp_path):
        code, err = run_cli("simulate", "--scenario", "2", "--seed", "1", "--n", "120",
                            "--delta-n", "30", "--output-dir", str(tmp_path))
        assert code == 0, err
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["ground_truth"]["params"]["theta"] == 0.125
        assert len(meta["ground_truth"]["anomalous_vertices"]) == 30
        g = gs.load_edge_list(tmp_path / "edges.txt")
        assert g.m == 12

    def test_scenario3_theta(self, tmp_path):
        code, _ = run_cli("simulate", "--scenario", "3", "--seed", "2", "--n", "60",
                          "--delta-n", "12", "--output-dir", str(tmp_path))
        assert code == 0
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["ground_truth"]["params"]["theta"] == 0.875

    def test_same_seed_byte_identical(self, scenario1_run, tmp_path):
        code, _ = run_cli("simulate", "--scenario", "1", "--seed", "42",
                          "--output-dir", str(tmp_path))
        assert code == 0
        assert (tmp_path / "edges.txt").read_bytes() == (scenario1_run / "edges.txt").read_bytes()

    def test_config_replay_byte_identical(self, scenario1_run, tmp_path):
        code, _ = run_cli("simulate", "--config", str(scenario1_run / "metadata.json"),
                          "--output-dir", str(tmp_path))
        assert code == 0
        assert (tmp_path / "edges.txt").read_bytes() == (scenario1_run / "edges.txt").read_bytes()

    def test_missing_scenario(self, tmp_path):
        code, err = run_cli("simulate", "--output-dir", str(tmp_path))
        assert code == 1
        assert "scenario" in err


class TestDetectChart:
    def test_scenario1_fixture_flags_six_seven(self, scenario1_run, tmp_path):
        code, err = run_cli("detect-chart", "--input", str(scenario1_run / "edges.txt"),
                            "--output-dir", str(tmp_path), "--method", "omni",
                            "--dim", "1", "--window", "11")
        assert code == 2, err
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["resolved"]["graph_flags"] == [6, 7]
        assert meta["resolved"]["dim"] == 1
        csv = (tmp_path / "graph_chart.csv").read_text().splitlines()
        assert csv[0] == "time,statistic,center_line,sigma,ucl,flag"
        assert (tmp_path / "vertex_chart.csv").exists()

    def test_identical_fixture_no_flags(self, tmp_path):
        rng = np.random.default_rng(0)
        a = gs.rdpg_sample(rng.uniform(0.3, 0.7, 30), rng)
        g = gs.GraphSeries.from_matrices([a] * 8)
        src = tmp_path / "edges.txt"
        g.to_edge_list(src)
        code, err = run_cli("detect-chart", "--input", str(src), "--output-dir",
                            str(tmp_path / "out"), "--dim", "1", "--window", "4")
        assert code == 0, err

    def test_missing_input_file(self, tmp_path):
        code, err = run_cli("detect-chart", "--input", str(tmp_path / "nope.txt"),
                            "--output-dir", str(tmp_path / "out"))
        assert code == 1
        assert "error" in err

    def test_auto_dimension_recorded(self, scenario1_run, tmp_path):
        code, _ = run_cli("detect-chart", "--input", str(scenario1_run / "edges.txt"),
                          "--output-dir", str(tmp_path), "--window", "11")
        assert code in (0, 2)
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["resolved"]["dim"] >= 1
        assert meta["options"]["dim"] == "auto"


class TestDetectPvalue:
    def test_report_structure(self, scenario1_run, tmp_path):
        code, err = run_cli("detect-pvalue", "--input", str(scenario1_run / "edges.txt"),
                            "--output-dir", str(tmp_path), "--method", "omni",
                            "--dim", "1", "--bootstrap", "20", "--seed", "3")
        assert code in (0, 2)
        doc = json.loads((tmp_path / "pvalues.json").read_text())
        assert doc["n_boot"] == 20
        assert doc["alpha"] == 0.05
        assert doc["seed"] == 3
        assert len(doc["p_graph"]) == 21
        for p in doc["p_graph"].values():
            assert 0.0 <= p <= 1.0
            assert round(p * 20, 9) == round(p * 20)
        some_time = next(iter(doc["p_vertex"]))
        assert len(doc["p_vertex"][some_time]) == 100

    def test_exit_codes_contract(self, tmp_path):
        # detectable anomaly -> 2; bad flag -> 1; never anything else
        code, _ = run_cli("detect-pvalue", "--frobnicate")
        assert code == 1


class TestInject:
    def test_clique_injection(self, tmp_path):
        src = tmp_path / "edges.txt"
        src.write_text("1 a b 4\n2 a b 1\n1 c d 1\n")
        vf = tmp_path / "clique.txt"
        vf.write_text("a\nb\nc\n# comment line\n")
        code, err = run_cli("inject", "--input", str(src), "--time", "1",
                            "--clique-vertices", str(vf), "--clique-weight", "1",
                            "--output-dir", str(tmp_path / "out"))
        assert code == 0, err
        g = gs.load_edge_list(tmp_path / "out" / "edges.txt")
        assert g.dense(1)[g.index_of("a"), g.index_of("b")] == 5.0
        assert g.dense(1)[g.index_of("a"), g.index_of("c")] == 1.0
        assert g.dense(2)[g.index_of("a"), g.index_of("b")] == 1.0

    def test_missing_required(self, tmp_path):
        code, err = run_cli("inject", "--input", "x", "--output-dir", str(tmp_path))
        assert code == 1
        assert "--time" in err or "required" in err


class TestPower:
    def test_tiny_power_run(self, tmp_path):
        code, err = run_cli("power", "--theta", "0.5", "--n-mc", "1", "--bootstrap", "6",
                            "--n", "30", "--delta-n", "8", "--m", "8", "--seed", "1",
                            "--method", "omni", "--span", "2",
                            "--output-dir", str(tmp_path))
        assert code == 0, err
        lines = (tmp_path / "power.csv").read_text().strip().splitlines()
        assert lines[0] == "theta,method,span,power,power_se,rr_gap,rr_gap_se,n_mc"
        fields = lines[1].split(",")
        assert float(fields[3]) in (0.0, 0.5, 1.0)


class TestHarness:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_wrong_config_command(self, scenario1_run, tmp_path):
        code, err = run_cli("detect-chart", "--config", str(scenario1_run / "metadata.json"),
                            "--output-dir", str(tmp_path))
        assert code == 1
        assert "config" in err
