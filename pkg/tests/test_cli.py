import json
import subprocess
import sys
from pathlib import Path

import pytest

from infoflow import outputs
from infoflow.cli import RunConfig, compute, load_config_file, main, parse_d_grid, run

FIXTURE = Path(__file__).parent / "fixtures" / "toy_market"
SMALL = ["--d-grid", "0,0.01,0.015,0.03", "--surrogate-count", "3", "--n-bootstrap", "50"]


@pytest.fixture(scope="module")
def analyzed(tmp_path_factory):
    out = tmp_path_factory.mktemp("analyze")
    assert main(["analyze", "--config", str(FIXTURE / "run.cfg"), "-o", str(out), *SMALL]) == 0
    return out


class TestAnalyze:
    def test_all_files(self, analyzed):
        assert sorted(p.name for p in analyzed.iterdir()) == sorted(outputs.OUTPUT_FILES)
        outputs.validate_output_dir(analyzed)

    def test_summary(self, analyzed):
        summary = json.loads((analyzed / "summary.json").read_text())
        assert isinstance(summary["pearson_r"], float)
        assert summary["n_pairs"] == 20 and summary["d"] == 0.015
        assert summary["mean_te_i_to_s"] > summary["mean_te_s_to_i"]
        assert len(summary["top_k_i_to_s"]) == 10

    def test_flows_roundtrip(self, analyzed):
        from infoflow.cli import RunConfig
        from infoflow.entropy import EmbeddingSpec
        from infoflow.panel import align_panel, ingest_all
        from infoflow.pipeline import flows_at
        from infoflow.surrogates import SurrogateConfig

        panel = align_panel(ingest_all([FIXTURE]), "INDEX")
        fresh = flows_at(panel.index, panel.stocks, 0.015, EmbeddingSpec(), SurrogateConfig(3, 7))
        parsed = outputs.read_flows_csv(analyzed / "flows.csv")
        assert len(parsed) == len(fresh)
        for a, b in zip(parsed, fresh):
            assert a.stock_id == b.stock_id and a.sample_count == b.sample_count
            for x, y in [(a.te_index_to_stock, b.te_index_to_stock), (a.te_stock_to_index, b.te_stock_to_index),
                         (a.surrogate_i_to_s.mean, b.surrogate_i_to_s.mean),
                         (a.surrogate_s_to_i.std_dev, b.surrogate_s_to_i.std_dev), (a.d, b.d)]:
                assert x == float(outputs.fmt(y))

    def test_manifest(self, analyzed):
        m = json.loads((analyzed / "manifest.json").read_text())
        assert m["seed"] == 7 and m["command"] == "analyze" and m["index_id"] == "INDEX"
        assert m["config"]["d_grid"] == [0.0, 0.01, 0.015, 0.03]
        assert "output_dir" not in m["config"]
        assert m["files"] == list(outputs.OUTPUT_FILES)

    def test_state_probs_rows(self, analyzed):
        rows = outputs.read_csv(analyzed / "state_probs.csv")
        assert {r["role"] for r in rows} == {"index", "stock", "stocks_mean"}
        assert len(rows) == (21 + 1) * 4

    def test_histograms_mass(self, analyzed):
        rows = outputs.read_csv(analyzed / "histograms.csv")
        for table in ("i_to_s", "s_to_i", "difference"):
            assert sum(r["count"] for r in rows if r["table"] == table) == 20


class TestDeterminism:
    def test_byte_identical_and_worker_independent(self, tmp_path, analyzed):
        out = tmp_path / "again"
        args = ["analyze", "--config", str(FIXTURE / "run.cfg"), "-o", str(out), *SMALL]
        assert main(args) == 0
        for name in outputs.OUTPUT_FILES:
            assert (out / name).read_bytes() == (analyzed / name).read_bytes(), name
        threaded = tmp_path / "threaded"
        assert main(["analyze", "--config", str(FIXTURE / "run.cfg"), "-o", str(threaded), *SMALL, "--workers", "4"]) == 0
        for name in ("flows.csv", "sweep.csv", "summary.json"):
            assert (threaded / name).read_bytes() == (analyzed / name).read_bytes(), name


class TestErrors:
    def test_unknown_index(self, tmp_path, caplog):
        out = tmp_path / "o"
        rc = main(["analyze", "--config", str(FIXTURE / "run.cfg"), "-o", str(out), "--index-id", "NOPE", *SMALL])
        assert rc == 2
        assert not out.exists() or not any(out.iterdir())
        assert "stage align" in caplog.text and "NOPE" in caplog.text

    def test_usage_error(self, capsys):
        assert main(["analyze", "--bogus"]) == 1
        assert main([]) == 1

    def test_missing_index_id(self, tmp_path):
        assert main(["analyze", str(FIXTURE), "-o", str(tmp_path)]) == 1

    def test_data_error_bad_csv(self, tmp_path):
        (tmp_path / "IDX.csv").write_text("date,close\n2020-01-01,1\n2020-01-01,2\n")
        (tmp_path / "A.csv").write_text("date,close\n2020-01-01,1\n")
        assert main(["analyze", str(tmp_path), "--index-id", "IDX", "-o", str(tmp_path / "o")]) == 2

    def test_internal_error(self, monkeypatch, tmp_path):
        import infoflow.cli as cli

        def boom(*a, **k):
            raise RuntimeError("boom")

        monkeypatch.setattr(cli, "d_sweep", boom)
        cfg = RunConfig(input_paths=[str(FIXTURE)], index_id="INDEX", output_dir=str(tmp_path))
        assert run(cfg) == 3

    def test_bad_config_key(self, tmp_path):
        cfg = tmp_path / "x.cfg"
        cfg.write_text("frobnicate = 3\n")
        assert main(["analyze", "--config", str(cfg)]) == 1


class TestSweepAndFixture:
    def test_sweep_only(self, tmp_path):
        rc = main(["sweep", str(FIXTURE), "--index-id", "INDEX", "-o", str(tmp_path),
                   "--d-grid", "0:0.02:0.01", "--surrogate-count", "2"])
        assert rc == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.json", "sweep.csv"]
        rows = outputs.read_csv(tmp_path / "sweep.csv")
        assert [r["d"] for r in rows] == [0.0, 0.01, 0.02]
        outputs.validate_output_dir(tmp_path, ["sweep.csv", "manifest.json"])

    def test_gen_fixture_reproduces_committed(self, tmp_path):
        assert main(["gen-fixture", str(tmp_path), "--length", "2000", "--seed", "7"]) == 0
        for path in sorted(FIXTURE.iterdir()):
            assert (tmp_path / path.name).read_bytes() == path.read_bytes(), path.name

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "infoflow", "gen-fixture", str(tmp_path), "--n-stocks", "2",
                            "--length", "50"], capture_output=True)
        assert r.returncode == 0
        assert (tmp_path / "S01.csv").exists()


class TestConfig:
    def test_grid_parsing(self):
        assert parse_d_grid("0:0.06:0.0025")[-1] == 0.06
        assert len(parse_d_grid("0:0.06:0.0025")) == 25
        assert parse_d_grid("0.02, 0.01,0.01") == (0.01, 0.02)

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# comment\ninput_paths = a.csv, b.csv\nindex_id = IDX\nk = 2\nflow_d = equiprobable\n"
                       "shuffle_both = yes\nd_grid = 0.01 0.02\n")
        v = load_config_file(cfg)
        assert v["input_paths"] == [str(tmp_path / "a.csv"), str(tmp_path / "b.csv")]
        assert v["k"] == 2 and v["flow_d"] == "equiprobable" and v["shuffle_both"] is True
        assert v["d_grid"] == (0.01, 0.02)

    def test_equiprobable_flow_mode(self, tmp_path):
        cfg = RunConfig(input_paths=[str(FIXTURE)], index_id="INDEX", d_grid=(0.01,), flow_d="equiprobable",
                        surrogate_count=2, n_bootstrap=10)
        files = compute(cfg)
        summary = json.loads(files["summary.json"])
        assert summary["d"] == "equiprobable"
        assert summary["mean_te_i_to_s"] > summary["mean_te_s_to_i"]


class TestBackendSelection:
    def _backend(self, **env):
        import os

        full = {k: v for k, v in os.environ.items() if k != "INFOFLOW_PURE_PYTHON"} | env
        r = subprocess.run([sys.executable, "-c", "import infoflow; print(infoflow.BACKEND)"],
                           env=full, capture_output=True, text=True, check=True)
        return r.stdout.strip()

    def test_env_forces_fallback(self):
        assert self._backend(INFOFLOW_PURE_PYTHON="1") == "python"

    def test_default_prefers_extension(self):
        from conftest import _ckernels

        assert self._backend() == ("cython" if _ckernels is not None else "python")

    def test_fallback_run_matches(self, tmp_path, analyzed):
        import os

        env = os.environ | {"INFOFLOW_PURE_PYTHON": "1"}
        out = tmp_path / "pure"
        r = subprocess.run([sys.executable, "-m", "infoflow", "analyze", "--config", str(FIXTURE / "run.cfg"),
                            "-o", str(out), *SMALL], env=env, capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        # 12-digit CSVs agree byte for byte; JSON keeps full doubles, which differ in the last bit
        # because the two backends sum the entropy terms in different orders
        for name in ("flows.csv", "sweep.csv", "state_probs.csv", "histograms.csv"):
            assert (out / name).read_bytes() == (analyzed / name).read_bytes(), name
        a = json.loads((out / "summary.json").read_text())
        b = json.loads((analyzed / "summary.json").read_text())
        assert a.keys() == b.keys()
        for key in ("pearson_r", "mean_te_i_to_s", "mean_te_s_to_i", "fraction_reverse_dominant"):
            assert a[key] == pytest.approx(b[key], abs=1e-12)
        assert [x["stock_id"] for x in a["top_k_i_to_s"]] == [x["stock_id"] for x in b["top_k_i_to_s"]]
