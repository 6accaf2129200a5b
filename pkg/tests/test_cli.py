"""Tests for the gplabel CLI: commands, output files and exit codes."""

from typer.testing import CliRunner

from gplabel.cli import app
from gplabel.io import read_dataset, read_grid, read_refined

runner = CliRunner()

# =============================================================================
# Test: gen-data
# =============================================================================


class TestGenData:
    """Synthetic dataset files."""

    def test_longtail(self, tmp_path):
        """The long-tail preset writes a dataset and prints class counts."""
        out = tmp_path / "lt.csv"
        args = ["gen-data", "--preset", "longtail", "--k", "10", "--n1", "1500", "--out", str(out)]
        result = runner.invoke(app, args)
        assert result.exit_code == 0, result.output
        assert "class 9: 15" in result.output
        assert read_dataset(out).class_counts()[9] == 15

    def test_fig3(self, tmp_path):
        """The fig3 preset has four classes."""
        out = tmp_path / "f3.csv"
        result = runner.invoke(app, ["gen-data", "--preset", "fig3", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert read_dataset(out).num_classes == 4

    def test_bad_gamma(self, tmp_path):
        """gamma below 1 is a usage error."""
        result = runner.invoke(
            app,
            ["gen-data", "--preset", "longtail", "--gamma", "0.5", "--out", str(tmp_path / "x")],
        )
        assert result.exit_code == 2


# =============================================================================
# Test: confmap / refine
# =============================================================================


class TestConfmapRefine:
    """Grid and refined-label outputs."""

    def _data(self, tmp_path):
        path = tmp_path / "data.csv"
        args = ["gen-data", "--preset", "fig3", "--n-minority", "5", "--out", str(path)]
        runner.invoke(app, args)
        return path

    def test_confmap(self, tmp_path):
        """confmap writes nx*ny grid rows."""
        data, out = self._data(tmp_path), tmp_path / "grid.csv"
        result = runner.invoke(
            app, ["confmap", "--data", str(data), "--grid", "-2,2,-2,2,5,4", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert read_grid(out).conf.size == 20

    def test_confmap_bad_grid(self, tmp_path):
        """A malformed grid is a usage error."""
        data = self._data(tmp_path)
        result = runner.invoke(
            app, ["confmap", "--data", str(data), "--grid", "1,2", "--out", str(tmp_path / "g")]
        )
        assert result.exit_code == 2

    def test_refine(self, tmp_path):
        """refine writes one row per unlabeled sample."""
        data, out, cfg = tmp_path / "data.csv", tmp_path / "refined.csv", tmp_path / "c.txt"
        data.write_text("x0,x1,label\n0,0,0\n0.1,0,0\n3,3,1\n3.1,3,1\n0,0.1,-1\n9,-9,-1\n")
        cfg.write_text("gp.lambda=10\ngp.sigma=0.5\n")
        result = runner.invoke(
            app, ["refine", "--data", str(data), "--out", str(out), "--config", str(cfg)]
        )
        assert result.exit_code == 0, result.output
        refined = read_refined(out)
        assert refined.pred_class.tolist() == [0, -1]

    def test_missing_data(self, tmp_path):
        """A missing dataset is a runtime error."""
        result = runner.invoke(
            app, ["refine", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 1
        assert "Error" in result.output

    def test_bad_config(self, tmp_path):
        """An unknown config key is a runtime error."""
        data = self._data(tmp_path)
        cfg = tmp_path / "c.txt"
        cfg.write_text("gp.nosie=1\n")
        result = runner.invoke(
            app,
            [
                "confmap",
                "--data", str(data),
                "--grid", "0,1,0,1,2,2",
                "--out", str(tmp_path / "g"),
                "--config", str(cfg),
            ],
        )
        assert result.exit_code == 1


# =============================================================================
# Test: demos / bench
# =============================================================================


class TestDemos:
    """Demo commands write their files and a summary."""

    def test_demo_fig3(self, tmp_path):
        """demo-fig3 passes and writes a grid per classifier."""
        result = runner.invoke(app, ["demo-fig3", "--out-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "result: PASS" in result.output
        for name in ("dataset.csv", "config.txt", "summary.txt", "grid_gp.csv", "grid_linear.csv"):
            assert (tmp_path / name).exists()

    def test_demo_fig1(self, tmp_path):
        """demo-fig1 passes and writes refined labels for both refiners."""
        result = runner.invoke(app, ["demo-fig1", "--out-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "refined_gp.csv").exists()
        assert (tmp_path / "refined_similarity.csv").exists()


class TestBench:
    """Benchmark command."""

    def test_small_run(self, tmp_path):
        """A small run prints key=value results and appends to the results file."""
        out = tmp_path / "bench.csv"
        result = runner.invoke(
            app, ["bench", "--nq", "32", "--b", "2", "--rounds", "2", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert "speedup=" in result.output
        assert len(out.read_text().splitlines()) == 2

    def test_sweep(self):
        """A sweep prints both slopes."""
        result = runner.invoke(app, ["bench", "--sweep", "16,32", "--b", "2", "--rounds", "2"])
        assert result.exit_code == 0, result.output
        assert "classic_slope=" in result.output

    def test_batch_too_large(self):
        """B >= N_Q is a usage error."""
        assert runner.invoke(app, ["bench", "--nq", "8", "--b", "8"]).exit_code == 2

    def test_bad_sweep(self):
        """Non-integer sweep sizes are a usage error."""
        assert runner.invoke(app, ["bench", "--sweep", "a,b"]).exit_code == 2

    def test_unordered_sweep(self):
        """Descending sweep sizes are a runtime error."""
        result = runner.invoke(app, ["bench", "--sweep", "64,32", "--b", "2", "--rounds", "1"])
        assert result.exit_code == 1
