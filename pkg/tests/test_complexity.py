import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hypercube import complexity as cx
from hypercube.optable import make_modular, make_symmetric
from hypercube.training import TrainConfig

FAST = TrainConfig(max_steps=400, log_every=50)


class TestRanks:
    def test_ties_within_tolerance(self):
        np.testing.assert_array_equal(cx.tie_ranks([108.0, 108.5, 200.0]), [1.5, 1.5, 3.0])

    def test_no_ties(self):
        np.testing.assert_array_equal(cx.tie_ranks([3.0, 1.0, 2.0], rtol=0.0), [3.0, 1.0, 2.0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(1, 1e4), min_size=2, max_size=8, unique=True))
    def test_zero_tolerance_matches_rankdata(self, xs):
        np.testing.assert_array_equal(cx.tie_ranks(xs, rtol=0.0), stats.rankdata(xs))

    def test_spearman_sign(self):
        assert cx.spearman([100, 200, 300, 400], [0.9, 0.8, 0.7, 0.1]) == pytest.approx(-1.0)
        assert cx.spearman([100, 200, 300, 400], [0.1, 0.2, 0.3, 0.4]) == pytest.approx(1.0)

    def test_spearman_ties_on_h(self):
        # the two near-equal complexities share a rank
        r = cx.spearman([363.0, 363.001, 363.0008, 609.3], [0.675, 0.657, 0.690, 0.200])
        rh = stats.rankdata([1, 1, 1, 2])
        want = np.corrcoef(rh, stats.rankdata([0.675, 0.657, 0.690, 0.200]))[0, 1]
        assert r == pytest.approx(want)
        assert r < -0.7

    def test_spearman_errors(self):
        with pytest.raises(ValueError):
            cx.spearman([1.0], [0.5])
        with pytest.raises(ValueError):
            cx.spearman([1.0, 2.0], [0.5])
        assert np.isnan(cx.spearman([1.0, 1.0], [0.2, 0.3]))


class TestAuc:
    def test_mean_of_means(self):
        rows = [cx.SweepRow("add", "hypercube", f, s, 1, True, acc, 0.0)
                for f, s, acc in [(0.1, 0, 0.0), (0.1, 1, 1.0), (0.5, 0, 1.0), (0.5, 1, 1.0), (0.5, 2, 1.0)]]
        assert cx.auc_from_rows(rows) == pytest.approx(0.75)
        res = cx.SweepResult("add", "hypercube", rows)
        f, m = res.mean_curve()
        np.testing.assert_allclose(f, [0.1, 0.5])
        np.testing.assert_allclose(m, [0.5, 1.0])

    def test_empty(self):
        with pytest.raises(ValueError):
            cx.auc_from_rows([])

    def test_default_grid(self):
        assert cx.DEFAULT_FRACTIONS[0] == 0.05 and cx.DEFAULT_FRACTIONS[-1] == 0.95
        assert len(cx.DEFAULT_FRACTIONS) == 19
        assert cx.DEFAULT_SEEDS == (0, 1, 2)


class TestVariants:
    @pytest.mark.parametrize("variant,reg,tied", [("hypercube", "hypercube", False), ("hypercube_se", "hypercube", True),
                                                 ("l2", "l2", False), ("none", "none", False)])
    def test_mapping(self, variant, reg, tied):
        c = cx.variant_config(variant, TrainConfig())
        assert (c.reg_kind, c.tied) == (reg, tied)

    def test_unknown(self):
        with pytest.raises(ValueError):
            cx.variant_config("transformer", TrainConfig())

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv(cx.WORKERS_ENV, "3")
        assert cx.default_workers() == 3
        monkeypatch.setenv(cx.WORKERS_ENV, "zero")
        with pytest.raises(ValueError):
            cx.default_workers()
        monkeypatch.setenv(cx.WORKERS_ENV, "0")
        with pytest.raises(ValueError):
            cx.default_workers()


class TestSweep:
    def test_deterministic_and_sorted(self):
        op = make_modular("add", 5)
        a = cx.generalization_sweep(op, "hypercube", [0.7, 0.3], [1, 0], FAST, workers=1)
        b = cx.generalization_sweep(op, "hypercube", [0.7, 0.3], [1, 0], FAST, workers=1)
        assert a.rows == b.rows
        assert [(r.fraction, r.seed) for r in a.rows] == [(0.3, 0), (0.3, 1), (0.7, 0), (0.7, 1)]
        assert all(0.0 <= r.test_acc <= 1.0 for r in a.rows)
        assert 0.0 <= a.auc <= 1.0

    def test_worker_pool_matches_serial(self):
        op = make_modular("add", 4)
        a = cx.generalization_sweep(op, "l2", [0.5, 0.8], [0], FAST, workers=1)
        b = cx.generalization_sweep(op, "l2", [0.5, 0.8], [0], FAST, workers=2)
        assert a.rows == b.rows

    def test_full_fraction_flagged(self):
        op = make_modular("add", 3)
        res = cx.generalization_sweep(op, "none", [1.0], [0], FAST.replace(lr=0.25), workers=1)
        (row,) = res.rows
        assert row.test_empty and row.test_acc == 1.0

    def test_divergence_recorded(self):
        op = make_modular("add", 4)
        res = cx.generalization_sweep(op, "hypercube", [0.5, 0.9], [0], TrainConfig(lr=0.9, momentum=0.9,
                                                                                   max_steps=500), workers=1)
        assert len(res.rows) == 2
        for r in res.rows:
            if r.status == "diverged":
                assert r.test_acc == 0.0 and not r.converged

    @pytest.mark.parametrize("bad", [dict(fractions=[0.0]), dict(fractions=[1.2]), dict(seeds=[]),
                                     dict(fractions=[]), dict(variant="x")])
    def test_validation(self, bad):
        kw = dict(variant="hypercube", fractions=[0.5], seeds=[0])
        kw.update(bad)
        with pytest.raises(ValueError):
            cx.generalization_sweep(make_modular("add", 3), kw["variant"], kw["fractions"], kw["seeds"], FAST, 1)


class TestHstar:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_cyclic_groups(self, n):
        est = cx.estimate_hstar(make_modular("add", n), restarts=2)
        assert est.converged
        assert est.h_star == pytest.approx(3 * n * n, rel=0.01)
        assert est.fit_residual < 1e-8
        assert len(est.restarts) == 2

    def test_s3(self):
        est = cx.estimate_hstar(make_symmetric(3), restarts=1)
        assert est.h_star == pytest.approx(108, rel=0.01)

    def test_subtraction_untied_is_minimal(self):
        est = cx.estimate_hstar(make_modular("sub", 6), restarts=1)
        assert est.h_star == pytest.approx(108, rel=0.01)

    def test_not_converged(self):
        est = cx.estimate_hstar(make_modular("add", 5), cx.hstar_config(max_steps=5), restarts=2)
        assert not est.converged and est.h_star is None
        assert est.fit_residual > 1e-8

    def test_restarts_validated(self):
        with pytest.raises(ValueError):
            cx.estimate_hstar(make_modular("add", 3), restarts=0)

    def test_config_defaults(self):
        assert cx.hstar_config().lr == 0.25
        assert cx.hstar_config(tied=True).lr == 0.1
        assert cx.hstar_config(max_steps=7).max_steps == 7


def test_add11_accuracy_rises_with_fraction():
    cfg = TrainConfig(lr=0.25, max_steps=5000, log_every=50)
    res = cx.generalization_sweep(make_modular("add", 11), "hypercube", [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
                                  [0, 1, 2], cfg, workers=1)
    _, curve = res.mean_curve()
    drops = np.diff(curve)[np.diff(curve) < 0]
    assert len(drops) <= 1 and np.all(drops >= -0.05)
    assert curve[-1] == 1.0
