"""Tests for gplabel.demo: summary rendering and both toy demos."""

from gplabel.demo import Check, DemoSummary, demo_config, run_fig1, run_fig3
from gplabel.io import ModelKind

# =============================================================================
# Test: summaries
# =============================================================================


class TestSummary:
    """Check lines and the overall verdict."""

    def test_check_render(self):
        """A check renders label, description, value and status."""
        assert Check("a", "x < 1", "0.5", True).render() == "(a) x < 1: 0.5 PASS"
        assert Check("d", "probe", "3", None).render() == "(d) probe: 3 RECORDED"

    def test_recorded_checks_ignored(self):
        """Recorded-only checks never fail a run."""
        summary = DemoSummary("t", 0, [Check("a", "x", "1", True), Check("b", "y", "2", None)])
        assert summary.passed
        assert summary.render().endswith("result: PASS\n")

    def test_failure(self):
        """One failing check fails the run."""
        summary = DemoSummary("t", 3, [Check("a", "x", "1", False)])
        assert not summary.passed
        lines = summary.render().splitlines()
        assert lines[0] == "# t seed=3"
        assert lines[-1] == "result: FAIL"

    def test_demo_config(self):
        """Demos run with eta=1, l=0.5, sigma=0.5, lambda=10, tau=0.8."""
        cfg = demo_config(model=ModelKind.SIMILARITY)
        assert (cfg.kernel_eta, cfg.kernel_length_scale) == (1.0, 0.5)
        assert (cfg.gp_sigma, cfg.gp_lambda, cfg.refine_tau) == (0.5, 10.0, 0.8)
        assert cfg.refine_model is ModelKind.SIMILARITY


# =============================================================================
# Test: demos
# =============================================================================


class TestFig3:
    """Four-cluster confidence maps."""

    def test_passes(self):
        """GP is unsure at the outlier, linear is confidently wrong, centers are confident."""
        result = run_fig3(0)
        assert result.summary.passed, result.summary.render()
        assert set(result.grids) == set(ModelKind)
        assert result.grids[ModelKind.GP].conf.size == 81 * 81

    def test_deterministic(self):
        """Same seed, same summary."""
        assert run_fig3(1).summary.render() == run_fig3(1).summary.render()

    def test_boundary_records_smoothed_argmax(self):
        """The boundary line reports the heavily smoothed argmax and never fails a run."""
        (line,) = [c for c in run_fig3(0).summary.checks if c.label == "d"]
        assert line.passed is None
        assert "similarity=" in line.value
        assert "smooth=" in line.value


class TestFig1:
    """Region toy with label propagation."""

    def test_passes(self):
        """GP carries the minority label and holds back on outliers; similarity does not."""
        result = run_fig1(0)
        assert result.summary.passed, result.summary.render()
        assert set(result.refined) == {ModelKind.GP, ModelKind.SIMILARITY}
        gp = result.refined[ModelKind.GP]
        assert gp.pred_class.size == result.dataset.num_unlabeled
