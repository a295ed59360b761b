import json
import math

import numpy as np
import pytest

from sqrnet.evaluation import (
    TrialReport,
    TrialRecord,
    TrialSpec,
    mae,
    mse,
    pinball_risk,
    rate_fit,
    run_csv_trials,
    run_trials,
)
from sqrnet.losses import pinball_loss
from sqrnet.network import Architecture
from sqrnet.rng import Rng
from sqrnet.scenarios import generate, get_scenario
from sqrnet.trainer import TrainConfig

TINY = TrainConfig(max_epochs=3, batch_size=32)
TINY_ARCH = Architecture(2, (6,), 1)


def _tiny_spec(method="gaussian", h=0.05, tau=0.5, n=80, n_test=50):
    return TrialSpec("S1", TINY_ARCH, tau, method, h if method != "baseline" else None,
                     n, n_test, TINY)


class TestMetrics:
    def test_perfect_prediction(self):
        v = np.arange(5.0)
        assert mse(v, v) == 0.0
        assert mae(v, v) == 0.0
        assert pinball_risk(v, v, 0.3) == 0.0

    def test_unit_errors(self):
        pred = np.array([1.0, -1.0])
        truth = np.zeros(2)
        assert mse(pred, truth) == 1.0
        assert mae(pred, truth) == 1.0

    def test_pinball_quarter(self):
        pred = np.zeros(2)
        y = np.array([1.0, -1.0])
        assert pinball_risk(pred, y, 0.25) == pytest.approx(0.5)

    def test_brute_force_loops(self):
        rng = Rng(55)
        pred = np.asarray(rng.uniform(1000, low=-2, high=2))
        truth = np.asarray(rng.uniform(1000, low=-2, high=2))
        assert mse(pred, truth) == pytest.approx(
            sum((p - t) ** 2 for p, t in zip(pred, truth)) / 1000, abs=1e-12)
        assert mae(pred, truth) == pytest.approx(
            sum(abs(p - t) for p, t in zip(pred, truth)) / 1000, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros(3), np.zeros(4))

    def test_constant_at_empirical_quantile_minimizes_pinball(self):
        rng = Rng(77)
        y = np.asarray(rng.uniform(400, low=-3, high=3))
        tau = 0.3
        best_const = float(np.quantile(y, tau))
        best_risk = pinball_risk(np.full_like(y, best_const), y, tau)
        for c in np.linspace(-3, 3, 61):
            risk = pinball_risk(np.full_like(y, c), y, tau)
            assert risk >= best_risk - 1e-9


class TestRunTrials:
    def test_single_trial_aggregate_equals_record(self):
        report = run_trials(_tiny_spec(), 1, base_seed=3)
        assert len(report.records) == 1
        agg = report.aggregate("mse")
        assert agg.mean == report.records[0].mse
        assert agg.stderr == 0.0

    def test_deterministic_science_fields(self):
        a = run_trials(_tiny_spec(), 3, base_seed=9)
        b = run_trials(_tiny_spec(), 3, base_seed=9)
        for ra, rb in zip(a.records, b.records):
            assert (ra.mse, ra.mae, ra.pinball, ra.epochs_run) == \
                   (rb.mse, rb.mae, rb.pinball, rb.epochs_run)

    def test_methods_share_data_streams(self):
        # Baseline and smoothed runs with one base seed must see identical
        # trial datasets; with zero training epochs the fitted model depends
        # only on the init stream, which is also shared.
        spec_a = _tiny_spec(method="gaussian")
        spec_b = _tiny_spec(method="baseline")
        ra = run_trials(spec_a, 2, base_seed=4)
        rb = run_trials(spec_b, 2, base_seed=4)
        # Same data + same init; after training they differ, but the trial
        # seeds recorded must agree.
        assert [r.trial for r in ra.records] == [r.trial for r in rb.records]
        assert ra.base_seed == rb.base_seed

    def test_parallel_matches_serial(self):
        spec = _tiny_spec(n=60, n_test=30)
        serial = run_trials(spec, 2, base_seed=5, n_workers=1)
        parallel = run_trials(spec, 2, base_seed=5, n_workers=2)
        for rs, rp in zip(serial.records, parallel.records):
            assert (rs.mse, rs.mae, rs.pinball, rs.epochs_run) == \
                   (rp.mse, rp.mae, rp.pinball, rp.epochs_run)

    def test_aggregates_permutation_invariant(self):
        report = run_trials(_tiny_spec(), 3, base_seed=1)
        shuffled = TrialReport(report.spec, report.base_seed,
                               list(reversed(report.records)))
        for metric in ("mse", "mae", "pinball"):
            assert report.aggregate(metric).mean == shuffled.aggregate(metric).mean
            assert report.aggregate(metric).stderr == shuffled.aggregate(metric).stderr

    def test_report_round_trips_losslessly(self):
        report = run_trials(_tiny_spec(), 2, base_seed=8)
        doc = json.loads(json.dumps(report.to_json()))
        back = TrialReport.from_json(doc)
        assert back.records == report.records
        assert back.spec == report.spec

    def test_stderr_formula(self):
        records = [TrialRecord(i, 0, float(v), 0.0, 0.0, 0.0, 1)
                   for i, v in enumerate([1.0, 2.0, 3.0])]
        report = TrialReport({}, 0, records)
        agg = report.aggregate("mse")
        assert agg.mean == pytest.approx(2.0)
        assert agg.stderr == pytest.approx(np.std([1, 2, 3], ddof=1) / math.sqrt(3))

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            run_trials(_tiny_spec(), 0, 0)

    def test_baseline_spec_forbids_bandwidth(self):
        with pytest.raises(ValueError):
            TrialSpec("S1", TINY_ARCH, 0.5, "baseline", 0.1, 10, 10, TINY)

    def test_smoothed_spec_requires_bandwidth(self):
        with pytest.raises(ValueError):
            TrialSpec("S1", TINY_ARCH, 0.5, "gaussian", None, 10, 10, TINY)


class TestCsvTrials:
    def test_pinball_only_protocol(self):
        ds = generate(get_scenario("S1"), 100, Rng(12))
        report = run_csv_trials(ds, TINY_ARCH, 0.5, "gaussian", 0.05, TINY,
                                n_trials=2, base_seed=3)
        assert len(report.records) == 2
        for r in report.records:
            assert math.isnan(r.mse) and math.isnan(r.mae)
            assert math.isfinite(r.pinball)
        assert report.spec["test_fraction"] == 0.2


class TestRateFit:
    def test_exact_inverse_law(self):
        points = [(n, 10.0 / n) for n in (100, 200, 400, 800)]
        fit = rate_fit(points)
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_two_points_r2_one(self):
        fit = rate_fit([(100, 0.5), (1000, 0.05)])
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_synthetic_exponent_recovery(self):
        c, gamma = 3.0, -0.7
        points = [(n, c * n**gamma) for n in (500, 1000, 2000, 4000, 8000)]
        fit = rate_fit(points)
        assert fit.slope == pytest.approx(gamma, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(c), abs=1e-10)

    def test_rejects_nonpositive_mse(self):
        with pytest.raises(ValueError):
            rate_fit([(100, 0.1), (200, 0.0)])

    def test_rejects_single_n(self):
        with pytest.raises(ValueError):
            rate_fit([(100, 0.1), (100, 0.2)])
