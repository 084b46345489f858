import json

import numpy as np
import pytest

from bilayer_spectra.discrete import outlier_threshold
from bilayer_spectra.enclosure import TheoremConstants
from bilayer_spectra.errors import InsufficientDataError, NoOutliersError
from bilayer_spectra.harness import (SAFETY_FACTOR, TrialConfig, calibrate, corollary32_suite,
                                     radius_fit, run_trial)
from bilayer_spectra.potentials import GridSpec

G16 = GridSpec(16, 6.0)
ALL = ("thm11", "thm12", "thm31")
GENERAL = ("thm11", "thm12")
IW2 = {"kind": "random_gaussian", "width_range": [0.5, 1.0], "center_radius": 0.25,
       "i_times_square": True, "normalize": {"functional": "trace", "value": 3.0}}


@pytest.fixture(scope="module")
def massive_report():
    # m = 1 at n = 16 gives a handful of outliers in four trials
    return run_trial(TrialConfig(G16, 1.0, theorems=GENERAL, trials=4, seed=0))


@pytest.fixture(scope="module")
def dissipative_report():
    return run_trial(TrialConfig(G16, 1.0, builder=IW2, theorems=ALL, trials=2, seed=0))


def test_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(G16, theorems="thm99")
    with pytest.raises(ValueError):
        TrialConfig(G16, p=1.5)
    with pytest.raises(ValueError):
        TrialConfig(G16, trials=0)
    with pytest.raises(ValueError):
        TrialConfig(G16, m=-1.0)
    assert TrialConfig(G16, theorems="thm12").theorems == ("thm12",)
    # the trace bound is stated for V = i W^2 only
    with pytest.raises(ValueError):
        TrialConfig(G16, theorems=("thm31",))
    # p only matters for the first theorem
    TrialConfig(G16, p=2.0, builder=IW2, theorems=("thm31",))


def test_trace_bound_checks_potential_form():
    rep = run_trial(TrialConfig(G16, 1.0, builder={"kind": "gaussian", "width": 1.0},
                                theorems=("thm31",)))
    assert rep.failed == [0]
    assert rep.results[0].error.startswith("DomainError")
    ok = run_trial(TrialConfig(G16, 1.0, builder={"kind": "gaussian", "width": 1.0,
                                                  "amplitude": [["1j", 0], [0, "2j"]]},
                               theorems=("thm31",)))
    assert ok.failed == []


def test_trial_builder_seeds():
    cfg = TrialConfig(G16, seed=7, trials=3)
    assert [cfg.trial_builder(i)["seed"] for i in range(3)] == [7, 8, 9]
    fixed = TrialConfig(G16, builder={"kind": "gaussian", "width": 1.0})
    assert "seed" not in fixed.trial_builder(2)


def test_zero_potential_trial():
    rep = run_trial(TrialConfig(G16, 1.0, builder={"kind": "zero"}, theorems=ALL, trials=2))
    assert rep.outlier_count == 0
    assert rep.violations == 0
    assert rep.failed == []
    assert rep.needed_constants() == {}
    assert rep.max_deficit is None


def test_failures_are_recorded():
    rep = run_trial(TrialConfig(G16, builder={"kind": "gaussian", "width": 3.0}))
    assert rep.failed == [0]
    assert rep.results[0].error.startswith("TailError")


def test_no_outliers_error():
    with pytest.raises(NoOutliersError):
        calibrate([TrialConfig(G16, builder={"kind": "zero"})])
    with pytest.raises(NoOutliersError):
        calibrate([])


def test_calibrate_covers_family(massive_report, dissipative_report):
    rep = massive_report
    assert rep.outlier_count > 0 and dissipative_report.outlier_count > 0
    needed = rep.needed_constants()
    c = calibrate([rep])
    assert c.provenance == "calibrated"
    assert c.c_p == pytest.approx(SAFETY_FACTOR * needed["thm11"], rel=1e-15)
    assert c.c_12 == pytest.approx(SAFETY_FACTOR * needed["thm12"], rel=1e-15)
    assert c.c_31 == 1.0
    again = run_trial(TrialConfig(G16, 1.0, theorems=GENERAL, trials=4, seed=0, constants=c,
                                  diagnostics=False))
    assert again.violations == 0
    both = calibrate([rep, dissipative_report])
    need31 = dissipative_report.needed_constants()["thm31"]
    assert both.c_31 == pytest.approx(SAFETY_FACTOR * need31, rel=1e-15)
    assert both.c_p >= c.c_p
    again = run_trial(TrialConfig(G16, 1.0, builder=IW2, theorems=ALL, trials=2, seed=0,
                                  constants=both, diagnostics=False))
    assert again.violations == 0
    # with the bare needed constants the tightest outlier sits exactly on LHS = 1
    tight = TheoremConstants(needed["thm11"], needed["thm12"])
    rerun = run_trial(TrialConfig(G16, 1.0, theorems=("thm11", "thm12"), trials=4, seed=0,
                                  constants=tight, diagnostics=False))
    mins = [min(np.min(r.lhs[t]) for r in rerun.results if r.outliers.size)
            for t in ("thm11", "thm12")]
    assert np.allclose(mins, 1.0, rtol=1e-12)


def test_calibrate_monotone_in_family(massive_report):
    extra = run_trial(TrialConfig(G16, 1.0, theorems=GENERAL, trials=2, seed=40,
                                  diagnostics=False))
    one = calibrate([massive_report])
    both = calibrate([massive_report, extra])
    assert both.c_p >= one.c_p and both.c_12 >= one.c_12


def test_calibrate_keeps_unexercised_constants():
    rep = run_trial(TrialConfig(G16, 1.0, theorems="thm11", trials=2, seed=0, diagnostics=False,
                                constants=TheoremConstants(1.0, 7.0, 9.0)))
    c = calibrate([rep])
    assert (c.c_12, c.c_31) == (7.0, 9.0)


def test_proof_norms_reported(massive_report):
    for r in massive_report.results:
        assert len(r.proof_norms) == r.outliers.size
        assert all(np.isfinite(r.proof_norms))


def test_radius_fit_synthetic():
    t = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    r = np.exp(0.3 - 2.0 / t)
    fit = radius_fit(list(zip(t, r)) + [(16.0, None)])
    assert fit.slope == pytest.approx(-2.0, rel=1e-12)
    assert fit.intercept == pytest.approx(0.3, rel=1e-12)
    assert fit.correlation == pytest.approx(-1.0, abs=1e-12)
    assert len(fit.couplings) == 5
    assert set(fit.to_dict()) == {"slope", "intercept", "correlation", "couplings", "radii"}


def test_radius_fit_needs_data():
    with pytest.raises(InsufficientDataError):
        radius_fit([(1.0, 0.5), (2.0, 0.7), (4.0, None)])


def test_corollary_zero_coupling():
    builder = {"kind": "band_limited", "cutoff": 1.0, "envelope_width": 1.0}
    rep = corollary32_suite([0, 1], 0.0, grid=G16, builder=builder)
    assert rep.passed
    assert rep.outliers == (0, 0)
    assert rep.threshold == outlier_threshold(G16, 0.0)
    assert max(rep.max_abs_im) < rep.threshold
    assert rep.to_dict()["passed"] is True


def test_report_write_deterministic(tmp_path):
    cfg = TrialConfig(G16, 1.0, builder=IW2, theorems=ALL, trials=2, seed=3)
    a = run_trial(cfg, workers=2).write(tmp_path / "a")
    b = run_trial(cfg, workers=1).write(tmp_path / "b")
    assert [p.split("/")[-1] for p in a] == ["trial_000.csv", "trial_001.csv", "campaign.json"]
    for pa, pb in zip(a, b):
        assert open(pa, "rb").read() == open(pb, "rb").read()
    summary = json.loads(open(a[-1]).read())
    for key in ("violations", "calibrated_constants", "fit_slope", "calibration_suggestion",
                "trials"):
        assert key in summary
