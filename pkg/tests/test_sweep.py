import numpy as np
import pytest

from afdmtt.channel import PathRanges
from afdmtt.sweep import Scenario, config_digest, run_sweep, run_trial
from afdmtt.waveform import SystemConfig

CFG = SystemConfig.build(M=64, M_CPP=8, N=3, N_frame=5, N_BS=6, P=2, delta_f=15e3,
                         nu_max=2000.0)


def scenario(name="nmse", **kw):
    return Scenario.named(name, CFG, **kw)


class TestScenario:
    def test_defaults(self):
        assert scenario("nmse").estimators == ("tt", "cpals")
        assert scenario("ber").link and scenario("mse").bounds
        assert scenario("bounds").estimators == ()

    def test_unknown(self):
        with pytest.raises(ValueError):
            Scenario.named("throughput", CFG)


class TestSweep:
    def test_no_trials(self):
        assert run_sweep(scenario(), [0.0, 10.0], 0) == []

    def test_order_and_shape(self):
        recs = run_sweep(scenario("mse"), [0.0, 10.0], 2, master_seed=3)
        assert [(r.trial, r.snr_db) for r in recs] == [(0, 0.0), (0, 10.0), (1, 0.0), (1, 10.0)]
        assert all(r.config_digest == config_digest(CFG) for r in recs)
        assert {"mse_theta_tt", "nmse_tt", "crb_eta", "zzb_nu"} <= set(recs[0].metrics)

    def test_deterministic(self):
        a = run_sweep(scenario(), [5.0, 20.0], 3, master_seed=11)
        b = run_sweep(scenario(), [5.0, 20.0], 3, master_seed=11)
        assert [r.metrics for r in a] == [r.metrics for r in b]

    def test_workers_do_not_change_records(self):
        a = run_sweep(scenario("mse"), [10.0], 3, master_seed=2)
        b = run_sweep(scenario("mse"), [10.0], 3, master_seed=2, workers=2)
        assert [r.metrics for r in a] == [r.metrics for r in b]

    def test_trial_independent_of_order(self):
        full = run_sweep(scenario("mse"), [10.0], 3, master_seed=4)
        alone = run_trial(scenario("mse"), 2, [10.0], 4)
        assert alone[0].metrics == full[2].metrics

    def test_noiseless_regression(self):
        recs = run_sweep(scenario("nmse", estimators=("tt",)), [np.inf], 5, master_seed=0)
        assert all(r.metrics["nmse_tt"] <= 1e-8 for r in recs)

    def test_metrics_finite(self):
        recs = run_sweep(scenario("ber"), [0.0, 15.0], 2, master_seed=5)
        for r in recs:
            assert not r.failed
            for k, v in r.metrics.items():
                assert np.isfinite(v) and v >= 0, k
            assert r.metrics["ber_tt"] <= 1 and r.metrics["se_tt"] >= 0

    def test_failed_draw_is_recorded(self):
        tight = PathRanges.for_config(CFG, min_loc_separation=1e6)
        recs = run_sweep(scenario(ranges=tight), [0.0, 10.0], 2)
        assert len(recs) == 4
        assert all(r.failed and "SamplingError" in r.error for r in recs)

    def test_estimator_failure_does_not_stop_sweep(self):
        recs = run_sweep(scenario(lobe_model="cubic"), [10.0], 2)
        assert all(r.failed for r in recs) and "lobe_model" in recs[0].error
