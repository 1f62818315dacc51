import math

import numpy as np
import pytest

import povbench.models as M
from povbench.dataset import GeneratorConfig, label_poor, poverty_line, synthesize
from povbench.errors import (DataValidationError, DegenerateTargetError,
                             PovbenchError)
from povbench.missingness import MAR_PURE, MNAR_PURE, conditional_mask, mcar
from povbench.pipeline import (AUTO_YOUDEN, PREDICT_ON_ALL, Scenario, auc,
                               classify_categorical, classify_continuous,
                               error_adjusted_rate,
                               error_adjusted_rate_categorical, roc_curve,
                               run_scenario, youden_cutpoint)

LIGHT = M.with_mlp(M.with_rf(M.with_en(M.HyperParams(), lambda_grid_size=20,
                                       cv_folds=5), trees=20),
                   epochs=5, max_restarts=1)


class TestClassification:
    def test_continuous_boundary_inclusive(self):
        flags = classify_continuous(np.array([9.0, 10.0, 11.0]),
                                    math.exp(10.0))
        np.testing.assert_array_equal(flags, [1, 1, 0])

    def test_continuous_all_above(self):
        flags = classify_continuous(np.array([11.0, 12.0]), math.exp(10.0))
        assert flags.sum() == 0

    def test_categorical_strict_inequality(self):
        flags = classify_categorical(np.array([0.4, 0.5, 0.6]), 0.5)
        np.testing.assert_array_equal(flags, [0, 0, 1])

    def test_categorical_monotone_in_cutpoint(self):
        probs = np.array([0.4, 0.5, 0.6])
        low = classify_categorical(probs, 0.45)
        high = classify_categorical(probs, 0.55)
        assert np.all(high <= low)

    def test_cutpoint_domain(self):
        with pytest.raises(DataValidationError):
            classify_categorical(np.array([0.5]), 1.0)


class TestErrorAdjustment:
    def test_zero_residuals_collapse(self, ds_small):
        X = ds_small.design_matrix()
        m = M.fit(M.ModelSpec.from_code("wcn"), X, ds_small.log_income)
        m.train_residuals = np.zeros_like(m.train_residuals)
        z = poverty_line(ds_small, 0.25)
        adj = error_adjusted_rate(m, X, z, draws=50, seed=1)
        plain = 100.0 * classify_continuous(M.predict(m, X), z).mean()
        assert adj == pytest.approx(plain)

    def test_empty_residual_store(self, ds_small):
        X = ds_small.design_matrix()
        z = poverty_line(ds_small, 0.5)
        m = M.fit(M.ModelSpec.from_code("pct", hyper=LIGHT), X,
                  label_poor(ds_small, z).astype(float))
        with pytest.raises(DataValidationError):
            error_adjusted_rate(m, X, z, draws=10, seed=1)

    def test_mcar50_quarter_line_recovery(self):
        """Residual re-addition recovers the tail rate OLS alone misses."""
        adj_gap, raw_gap = [], []
        for seed in range(6):
            ds = synthesize(GeneratorConfig(n=7062, seed=100 + seed))
            mask = mcar(ds, 0.5, seed=seed)
            train = np.flatnonzero(~mask.missing)
            test = np.flatnonzero(mask.missing)
            X = ds.design_matrix()
            m = M.fit(M.ModelSpec.from_code("wcn"), X[train],
                      ds.log_income[train])
            z = poverty_line(ds, 0.25)
            true_rate = 100.0 * label_poor(ds, z)[test].mean()
            raw = 100.0 * classify_continuous(M.predict(m, X[test]), z).mean()
            adj = error_adjusted_rate(m, X[test], z, draws=100, seed=seed)
            adj_gap.append(adj - true_rate)
            raw_gap.append(raw - true_rate)
        assert abs(np.mean(adj_gap)) < 2.0
        assert np.mean(raw_gap) < -5.0

    def test_median_line_robust_to_symmetric_noise(self):
        """At the median line the adjustment barely moves the rate; at the
        quarter line it moves it a lot (seed-averaged simulation oracle)."""
        mid_shift, quarter_shift = [], []
        for seed in range(6):
            ds = synthesize(GeneratorConfig(n=7062, seed=200 + seed))
            mask = mcar(ds, 0.5, seed=3)
            train = np.flatnonzero(~mask.missing)
            test = np.flatnonzero(mask.missing)
            X = ds.design_matrix()
            m = M.fit(M.ModelSpec.from_code("wcn"), X[train],
                      ds.log_income[train])
            for q, store in ((0.5, mid_shift), (0.25, quarter_shift)):
                z = poverty_line(ds, q)
                raw = 100.0 * classify_continuous(M.predict(m, X[test]),
                                                  z).mean()
                adj = error_adjusted_rate(m, X[test], z, draws=100, seed=4)
                store.append(abs(adj - raw))
        assert np.mean(mid_shift) < 1.5
        assert np.mean(quarter_shift) > 5.0
        assert np.mean(mid_shift) < np.mean(quarter_shift)

    def test_doubling_draws_converges(self, ds_small):
        X = ds_small.design_matrix()
        m = M.fit(M.ModelSpec.from_code("wcn"), X, ds_small.log_income)
        z = poverty_line(ds_small, 0.25)
        r1 = error_adjusted_rate(m, X, z, draws=200, seed=9)
        r2 = error_adjusted_rate(m, X, z, draws=400, seed=10)
        assert abs(r2 - r1) <= 100 * 2 / math.sqrt(200)

    def test_categorical_bernoulli_variant(self):
        probs = np.full(4000, 0.3)
        rate = error_adjusted_rate_categorical(probs, draws=200, seed=5)
        assert abs(rate - 30.0) < 1.5


class TestRoc:
    def test_perfect_classifier(self):
        truth = np.array([0, 0, 1, 1])
        roc = roc_curve(truth.astype(float), truth)
        assert any(s == 1.0 and sp == 1.0 for _, s, sp in roc)
        cut, j = youden_cutpoint(roc)
        assert j == pytest.approx(1.0)

    def test_constant_probs_chance_line(self):
        probs = np.full(20, 0.5)
        truth = np.array([0, 1] * 10)
        roc = roc_curve(probs, truth)
        for _, sens, spec in roc:
            assert sens + spec == pytest.approx(1.0)
        cut, j = youden_cutpoint(roc)
        assert j == pytest.approx(0.0)
        assert cut == 0.5  # tie broken toward the conventional default

    def test_sensitivity_non_increasing(self):
        rng = np.random.default_rng(40)
        probs = rng.random(200)
        truth = (rng.random(200) < probs).astype(int)
        roc = roc_curve(probs, truth)
        sens = [s for _, s, _ in roc]
        assert all(a >= b for a, b in zip(sens, sens[1:]))

    def test_single_class_truth(self):
        with pytest.raises(DegenerateTargetError):
            roc_curve(np.array([0.2, 0.8]), np.array([1, 1]))

    def test_informative_model_auc(self, ds_small):
        X = ds_small.design_matrix()
        z = poverty_line(ds_small, 0.5)
        y = label_poor(ds_small, z)
        m = M.fit(M.ModelSpec.from_code("pct", hyper=LIGHT), X,
                  y.astype(float))
        roc = roc_curve(M.predict(m, X), y)
        assert auc(roc) > 0.5

    def test_youden_matches_exhaustive_scan(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            n = int(rng.integers(20, 200))
            probs = np.round(rng.random(n), 3)  # force ties
            truth = (rng.random(n) < probs).astype(int)
            if truth.sum() in (0, n):
                continue
            roc = roc_curve(probs, truth)
            _, j = youden_cutpoint(roc)
            best = -np.inf
            for c in np.concatenate([[0.0, 1.0], np.unique(probs)]):
                flags = probs > c
                sens = np.sum(flags & (truth == 1)) / truth.sum()
                spec = np.sum(~flags & (truth == 0)) / (n - truth.sum())
                best = max(best, sens + spec - 1.0)
            assert abs(j - best) < 1e-12


class TestRunScenario:
    def test_noiseless_perfect_model(self):
        ds = synthesize(GeneratorConfig(n=600, seed=5, noise_sd=0.0))
        s = Scenario(dataset=ds, mask=mcar(ds, 0.0, seed=1),
                     spec=M.ModelSpec.from_code("wcn"), q=0.5,
                     predict_on=PREDICT_ON_ALL)
        res = run_scenario(s)
        assert res.metrics.accuracy == 100.0
        assert res.predicted_rate == pytest.approx(res.true_rate)

    def test_full_sample_baseline_bands(self, ds7062):
        s = Scenario(dataset=ds7062, mask=mcar(ds7062, 0.0, seed=1),
                     spec=M.ModelSpec.from_code("wcn"), q=0.5,
                     predict_on=PREDICT_ON_ALL)
        res = run_scenario(s)
        assert 60.0 <= res.metrics.accuracy <= 75.0
        assert abs(res.predicted_rate - 50.0) < 5.0

    def test_forest_beats_ols_in_sample(self, ds7062):
        mask = mcar(ds7062, 0.0, seed=1)
        wcn = run_scenario(Scenario(dataset=ds7062, mask=mask,
                                    spec=M.ModelSpec.from_code("wcn"), q=0.5,
                                    predict_on=PREDICT_ON_ALL))
        rct = run_scenario(Scenario(dataset=ds7062, mask=mask,
                                    spec=M.ModelSpec.from_code("rct"), q=0.5,
                                    predict_on=PREDICT_ON_ALL, seed=2))
        assert rct.metrics.accuracy > wcn.metrics.accuracy

    def test_quarter_line_underestimation(self, ds7062):
        s = Scenario(dataset=ds7062, mask=mcar(ds7062, 0.5, seed=6),
                     spec=M.ModelSpec.from_code("wcn"), q=0.25)
        res = run_scenario(s)
        assert res.predicted_rate < res.true_rate - 5.0

    def test_cutpoint_scan_monotone(self, ds7062):
        mask = mcar(ds7062, 0.0, seed=1)
        rates = []
        for cut in (0.45, 0.50, 0.55):
            res = run_scenario(Scenario(
                dataset=ds7062, mask=mask,
                spec=M.ModelSpec.from_code("pct"), q=0.5, cutpoint=cut,
                predict_on=PREDICT_ON_ALL))
            rates.append(res.predicted_rate)
        assert rates[0] > rates[1] > rates[2]

    def test_step3_consistency(self, ds_small):
        s = Scenario(dataset=ds_small, mask=mcar(ds_small, 0.3, seed=2),
                     spec=M.ModelSpec.from_code("pct", hyper=LIGHT), q=0.5)
        res = run_scenario(s)
        assert res.predicted_rate == pytest.approx(
            100.0 * res.poor_flags.mean())

    def test_youden_cutpoint_path(self, ds_small):
        s = Scenario(dataset=ds_small, mask=mcar(ds_small, 0.3, seed=2),
                     spec=M.ModelSpec.from_code("pct", hyper=LIGHT), q=0.5,
                     cutpoint=AUTO_YOUDEN)
        res = run_scenario(s)
        assert 0.0 < res.cutpoint < 1.0

    def test_determinism(self, ds_small):
        def once():
            s = Scenario(dataset=ds_small, mask=mcar(ds_small, 0.4, seed=3),
                         spec=M.ModelSpec.from_code("rct", hyper=LIGHT),
                         q=0.5, seed=17)
            return run_scenario(s)
        a, b = once(), once()
        np.testing.assert_array_equal(a.predictions, b.predictions)
        assert a.confusion == b.confusion

    def test_constant_train_column_dropped(self, ds7062):
        mask = conditional_mask(ds7062, MAR_PURE, 0.5, seed=4)
        s = Scenario(dataset=ds7062, mask=mask,
                     spec=M.ModelSpec.from_code("wcn"), q=0.5)
        res = run_scenario(s)
        assert "sect_sec" in res.dropped_regressors
        assert math.isfinite(res.metrics.accuracy)

    def test_degenerate_target_propagates_with_context(self, ds7062):
        mask = conditional_mask(ds7062, MNAR_PURE, 0.5, seed=4)
        s = Scenario(dataset=ds7062, mask=mask,
                     spec=M.ModelSpec.from_code("pct"), q=0.75)
        with pytest.raises(PovbenchError, match="MNAR_PURE"):
            run_scenario(s)
