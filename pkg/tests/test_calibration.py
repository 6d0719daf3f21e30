"""Calibration spec loading, loss, and simplex recovery of known optima."""

import pytest

from rentdyn.calibration import (
    CalibrationError,
    CalibrationParameter,
    CalibrationSpec,
    CalibrationTarget,
    calibrate,
    calibration_loss,
    load_calibration_spec,
)
from rentdyn.params import default_params, get_value, with_value
from rentdyn.scenarios import BUILTIN_SCENARIOS, run_scenario


def _recovery_spec():
    """Two free parameters, targets set to what the defaults achieve.

    The shipped defaults are then the exact optimum, so a perturbed start
    must come back to the same metric values.
    """
    shock = run_scenario(default_params(), BUILTIN_SCENARIOS["run2"]).metrics
    return CalibrationSpec(
        parameters=(
            CalibrationParameter("covid.magnitude", 0.40, 0.80),
            CalibrationParameter("rent_delay_curve.steepness", 1.0, 3.0),
        ),
        targets=(
            CalibrationTarget("run2", "evictions_total", shock.evictions_total),
            CalibrationTarget("run2", "arrears_growth_36mo", shock.arrears_growth_36mo),
        ),
        max_iterations=400,
    )


# ---------------------------------------------------------------- spec file

def test_shipped_spec_loads_and_is_already_optimal():
    spec = load_calibration_spec("params/calibration.yaml")
    assert len(spec.parameters) == 5
    assert len(spec.targets) == 4
    assert spec.max_iterations == 600
    loss = calibration_loss(default_params(), spec)
    assert loss < 1e-6


def _write_spec(tmp_path, text):
    path = tmp_path / "spec.yaml"
    path.write_text(text)
    return path


def test_spec_rejects_unknown_parameter_path(tmp_path):
    path = _write_spec(tmp_path, (
        "parameters:\n  - path: no.such.knob\n"
        "targets:\n  - {scenario: run2, metric: evictions_total, value: 1.0}\n"
    ))
    with pytest.raises(CalibrationError):
        load_calibration_spec(path)


def test_spec_rejects_bounds_outside_registry(tmp_path):
    path = _write_spec(tmp_path, (
        "parameters:\n  - {path: covid.magnitude, lower: -0.5, upper: 2.0}\n"
        "targets:\n  - {scenario: run2, metric: evictions_total, value: 1.0}\n"
    ))
    with pytest.raises(CalibrationError) as err:
        load_calibration_spec(path)
    assert "documented" in str(err.value)


def test_spec_rejects_unknown_metric_and_scenario(tmp_path):
    path = _write_spec(tmp_path, (
        "parameters:\n  - path: covid.magnitude\n"
        "targets:\n  - {scenario: run2, metric: vibes_total, value: 1.0}\n"
    ))
    with pytest.raises(CalibrationError):
        load_calibration_spec(path)
    path = _write_spec(tmp_path, (
        "parameters:\n  - path: covid.magnitude\n"
        "targets:\n  - {scenario: run99, metric: evictions_total, value: 1.0}\n"
    ))
    with pytest.raises(CalibrationError):
        load_calibration_spec(path)


def test_spec_rejects_empty_sections_and_unknown_keys(tmp_path):
    path = _write_spec(tmp_path, "parameters: []\ntargets: []\n")
    with pytest.raises(CalibrationError):
        load_calibration_spec(path)
    path = _write_spec(tmp_path, (
        "parameters:\n  - path: covid.magnitude\n"
        "targets:\n  - {scenario: run2, metric: evictions_total, value: 1.0}\n"
        "extra_stuff: true\n"
    ))
    with pytest.raises(CalibrationError):
        load_calibration_spec(path)


def test_spec_rejects_duplicate_parameter(tmp_path):
    path = _write_spec(tmp_path, (
        "parameters:\n  - path: covid.magnitude\n  - path: covid.magnitude\n"
        "targets:\n  - {scenario: run2, metric: evictions_total, value: 1.0}\n"
    ))
    with pytest.raises(CalibrationError) as err:
        load_calibration_spec(path)
    assert "duplicate" in str(err.value)


# ---------------------------------------------------------------- loss

def test_loss_zero_at_exact_targets_and_weights_scale():
    spec = _recovery_spec()
    assert calibration_loss(default_params(), spec) == pytest.approx(0.0, abs=1e-20)
    heavier = CalibrationSpec(
        parameters=spec.parameters,
        targets=tuple(
            CalibrationTarget(t.scenario, t.metric, t.value * 1.1, weight=4.0)
            for t in spec.targets
        ),
        max_iterations=10,
    )
    lighter = CalibrationSpec(
        parameters=spec.parameters,
        targets=tuple(
            CalibrationTarget(t.scenario, t.metric, t.value * 1.1, weight=1.0)
            for t in spec.targets
        ),
        max_iterations=10,
    )
    assert calibration_loss(default_params(), heavier) == pytest.approx(
        4.0 * calibration_loss(default_params(), lighter), rel=1e-12)


# ---------------------------------------------------------------- recovery

@pytest.fixture(scope="module")
def recovery():
    spec = _recovery_spec()
    start = with_value(default_params(), "covid.magnitude", 0.68)
    start = with_value(start, "rent_delay_curve.steepness", 1.6)
    return spec, start, calibrate(start, spec)


def test_recovery_hits_targets_within_one_percent(recovery):
    spec, _, result = recovery
    assert result.converged
    assert result.loss < result.initial_loss
    for target in spec.targets:
        achieved = result.achieved[target.key]
        assert achieved == pytest.approx(target.value, rel=0.01), target.key


def test_recovery_respects_bounds_and_reports_work(recovery):
    spec, _, result = recovery
    for p in spec.parameters:
        assert p.lower <= result.fitted[p.path] <= p.upper
        assert get_value(result.params, p.path) == result.fitted[p.path]
    assert result.evaluations > 0
    assert result.iterations > 0


def test_recovery_is_deterministic(recovery):
    spec, start, first = recovery
    second = calibrate(start, spec)
    assert second.fitted == first.fitted
    assert second.loss == first.loss
    assert second.evaluations == first.evaluations


def test_start_outside_bounds_is_clipped_in():
    spec = CalibrationSpec(
        parameters=(CalibrationParameter("covid.magnitude", 0.45, 0.55),),
        targets=(CalibrationTarget("run2", "evictions_total", 6.5e6),),
        max_iterations=60,
    )
    start = with_value(default_params(), "covid.magnitude", 0.90)
    result = calibrate(start, spec)
    assert 0.45 <= result.fitted["covid.magnitude"] <= 0.55
