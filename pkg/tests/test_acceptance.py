"""Acceptance gate: every headline criterion, one pass/fail line each.

The quantitative gauges check the shipped calibration against the headline
scenario outcomes at their stated tolerances; the property gauges are
calibration-independent invariants. Each gauge prints a [PASS]/[FAIL] line
(collected into a checklist after the run) and then asserts.
"""

import dataclasses

import numpy as np
import pytest

from acceptance_log import record
from rentdyn.calibration import (
    CalibrationParameter,
    CalibrationSpec,
    CalibrationTarget,
    calibrate,
)
from rentdyn.engine import SimClock
from rentdyn.params import (
    FIELDS,
    clamp_to_bounds,
    default_params,
    get_value,
    with_value,
)
from rentdyn.scenarios import BUILTIN_SCENARIOS, run_many, run_scenario
from rentdyn.validation import extreme_conditions, theil_decomposition


@pytest.fixture(scope="module")
def suite():
    return run_many(default_params(), BUILTIN_SCENARIOS)


# ------------------------------------------------- 1. moratorium effect

def test_moratorium_cuts_evictions_about_half(suite):
    reduction = 1.0 - (suite["run3"].metrics.evictions_total
                       / suite["run2"].metrics.evictions_total)
    ok = 0.46 <= reduction <= 0.56
    assert record(
        "moratorium eviction reduction",
        ok, f"run3 is {reduction * 100:.1f}% below run2 (band 46-56%)")


def test_national_run_is_fast(suite):
    slowest = max(r.elapsed_seconds for r in suite.values())
    ok = slowest < 10.0
    assert record(
        "desk-scale runtime",
        ok, f"slowest scenario {slowest * 1e3:.0f} ms (limit 10 s)")


# ------------------------------------------------- 2. no-intervention fallout

def test_shock_arrears_accumulation(suite):
    growth = suite["run2"].metrics.arrears_growth_36mo
    ok = 17.34e9 <= growth <= 23.46e9
    assert record(
        "shock arrears accumulation",
        ok, f"run2 adds ${growth / 1e9:.2f}B over 36 months "
            f"(band $17.34B-$23.46B)")


def test_shock_excess_evictions(suite):
    ev1 = suite["run1"].metrics.evictions_total
    ev2 = suite["run2"].metrics.evictions_total
    excess = ev2 - ev1
    ratio = excess / ev1
    ok = 1.275e6 <= excess <= 1.725e6 and ratio >= 0.25
    assert record(
        "shock excess evictions",
        ok, f"run2 adds {excess / 1e6:.2f}M evictions, +{ratio * 100:.1f}% "
            f"(band 1.275M-1.725M and >= 25%)")


def test_shock_crowding_increase(suite):
    rise = (suite["run2"].metrics.crowding_mean
            / suite["run1"].metrics.crowding_mean - 1.0)
    ok = 0.35 <= rise <= 0.55
    assert record(
        "shock crowding increase",
        ok, f"mean crowding +{rise * 100:.1f}% over baseline (band 35-55%)")


def test_shock_homelessness_increase(suite):
    rise = (suite["run2"].metrics.homeless_end
            / suite["run1"].metrics.homeless_end - 1.0)
    ok = 1.00 <= rise <= 1.40
    assert record(
        "shock homelessness increase",
        ok, f"end homelessness +{rise * 100:.1f}% over baseline (band 100-140%)")


# ------------------------------------------------- 3. moratorium residue

def test_moratorium_leaves_debt_in_place(suite):
    growth = suite["run3"].metrics.arrears_growth_window
    ok = growth >= 18e9
    assert record(
        "moratorium arrears residue",
        ok, f"run3 still carries ${growth / 1e9:.2f}B of shock-era arrears "
            f"at the horizon (floor $18B)")


# ------------------------------------------------- 4. assistance pacing

def test_assistance_disbursement_pace(suite):
    frac = suite["run4"].metrics.assistance_disbursed_fraction
    ok = 0.39 <= frac <= 0.45
    assert record(
        "assistance disbursement pace",
        ok, f"run4 pays out {frac * 100:.1f}% of the fund by the horizon "
            f"(band 39-45%)")


def test_faster_assistance_beats_slow(suite):
    a4 = suite["run4"].metrics.arrears_end
    a4a = suite["run4a"].metrics.arrears_end
    exhausted = suite["run4a"].metrics.assistance_exhausted_at
    ok = a4a < a4 and exhausted is not None and exhausted < 50.0
    when = "never" if exhausted is None else f"t={exhausted:g}"
    assert record(
        "accelerated assistance",
        ok, f"run4a ends ${(a4 - a4a) / 1e9:.2f}B below run4 and exhausts "
            f"the fund at {when} (before t=50)")


# ------------------------------------------------- 5. processing identity

def test_pre_shock_processing_identity(suite):
    p = default_params()
    traj = suite["run1"].trajectory
    expected = (p.eviction_proportion / p.processing_time) \
        * traj["units_pending_eviction"]
    actual = traj["evictions_processed"]
    worst = float(np.max(np.abs(actual - expected) / np.abs(expected)))
    ok = worst < 1e-9
    assert record(
        "baseline processing identity",
        ok, f"evictions == {p.eviction_proportion:g}/AT_proc * pending "
            f"(worst deviation {worst:.2e}, limit 1e-9)")


# ------------------------------------------------- 6. property suite

def test_effect_curves_bounded_on_random_inputs():
    p = default_params()
    rng = np.random.default_rng(20180101)
    n = 10_000
    ratios = rng.uniform(0.0, 50.0, n)
    stress = np.array([p.stress_curve(x) for x in ratios])
    mortgage = np.array([p.mortgage_delay_curve(x) for x in ratios])
    crowd_in = rng.uniform(0.0, 20.0, n)
    crowding = np.array([
        p.crowding_curve(x) if x > 1.0 else 1.0 for x in crowd_in])
    overdue = np.maximum(1.0, rng.uniform(0.0, 1e6, n) / p.landlord_tolerance)
    ok = (np.all((stress >= 1.0) & (stress <= 3.0))
          and np.all((mortgage >= 1.0) & (mortgage <= 3.0))
          and np.all((crowding >= 1.0) & (crowding <= 2.0))
          and np.all(overdue >= 1.0))
    assert record(
        "effect-curve bounds",
        ok, f"stress/mortgage in [1,3], crowding in [1,2], pressure >= 1 "
            f"on {n} random inputs each")


def test_conservation_identities_every_step(suite):
    worst = 0.0
    for result in suite.values():
        traj = result.trajectory
        dt = traj.clock.dt
        units = sum(traj[name] for name in (
            "units_occupied", "units_pending_eviction",
            "units_vacant", "units_foreclosed"))
        unit_step = np.diff(units)
        unit_expected = -dt * traj["stock_decline"][:-1]
        scale = float(units[0])
        worst = max(worst, float(np.max(np.abs(unit_step - unit_expected))) / scale)

        people = traj["households_insecure"] + traj["households_homeless"]
        people_step = np.diff(people)
        people_expected = dt * (
            traj["new_insecure"] + traj["new_homeless"]
            - traj["insecure_stabilizing"] - traj["homeless_stabilizing"])[:-1]
        worst = max(worst,
                    float(np.max(np.abs(people_step - people_expected)))
                    / float(people[0]))
    ok = worst < 1e-9
    assert record(
        "unit and household conservation",
        ok, f"per-step ledger identities hold across all scenarios "
            f"(worst relative residual {worst:.2e}, limit 1e-9)")


def test_stocks_nonnegative_across_runs_and_sweep(suite):
    from rentdyn.model import NONNEG_STOCKS

    floor = 0.0
    for result in suite.values():
        for name in NONNEG_STOCKS:
            floor = min(floor, float(np.min(result.trajectory[name])))

    base = default_params()
    shock = BUILTIN_SCENARIOS["run2"]
    runs = 0
    for f in FIELDS:
        for direction in (-1.0, 1.0):
            value = clamp_to_bounds(
                f.path, get_value(base, f.path) * (1.0 + direction * 0.15))
            result = run_scenario(with_value(base, f.path, value), shock)
            runs += 1
            for name in NONNEG_STOCKS:
                floor = min(floor, float(np.min(result.trajectory[name])))
    ok = floor >= -1e-9
    assert record(
        "stock non-negativity",
        ok, f"no stock below zero across 5 scenarios and {runs} sweep runs "
            f"(floor {floor:.2e})")


def test_theil_decomposition_closes():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        sim = rng.normal(size=int(rng.integers(2, 40)))
        obs = rng.normal(size=sim.size)
        worst = max(worst, abs(sum(theil_decomposition(sim, obs)) - 1.0))
    ok = worst < 1e-9
    assert record(
        "Theil decomposition closure",
        ok, f"bias+variance+covariance shares sum to 1 on 1000 random "
            f"pairs (worst residual {worst:.2e}, limit 1e-9)")


def test_headline_metrics_stable_under_dt_halving(suite):
    fine_clock = SimClock(dt=0.125)
    headline = ("evictions_total", "arrears_end", "homeless_end",
                "crowding_mean", "assistance_disbursed_fraction")
    worst = 0.0
    worst_key = ""
    for name, coarse in suite.items():
        fine = run_scenario(default_params(), BUILTIN_SCENARIOS[name],
                            clock=fine_clock)
        for metric in headline:
            a = getattr(coarse.metrics, metric)
            b = getattr(fine.metrics, metric)
            if a == 0.0 and b == 0.0:
                continue
            change = abs(b - a) / abs(a)
            if change > worst:
                worst, worst_key = change, f"{name}.{metric}"
    ok = worst < 0.02
    assert record(
        "step-size robustness",
        ok, f"halving dt moves every headline metric < 2% "
            f"(worst {worst * 100:.2f}% on {worst_key})")


def test_moratorium_window_throttles_processing(suite):
    p = default_params()
    m = p.moratorium
    traj = suite["run3"].trajectory
    times = traj.times
    in_window = (times >= m.start_time) & (times < m.start_time + m.duration)
    factor = traj["processing_factor"][in_window]
    rate_cap = 0.10 * (p.eviction_proportion / p.processing_time)
    per_unit = (traj["evictions_processed"][in_window]
                / np.maximum(traj["units_pending_eviction"][in_window], 1e-9))
    ok = (np.all(factor <= 0.10 + 1e-12)
          and np.all(per_unit <= rate_cap + 1e-12))
    assert record(
        "moratorium processing throttle",
        ok, f"in-window processing at most 10% of the baseline rate "
            f"(max factor {float(factor.max()):.3f})")


def test_assistance_funds_conserved(suite):
    worst = 0.0
    for name in ("run4", "run4a"):
        traj = suite[name].trajectory
        total = default_params().assistance.total_funds
        residual = np.abs(traj["assistance_funds"]
                          + traj["assistance_disbursed"] - total) / total
        worst = max(worst, float(residual.max()))
    ok = worst < 1e-6
    assert record(
        "assistance fund conservation",
        ok, f"disbursed + remaining == allocated at every step "
            f"(worst relative residual {worst:.2e}, limit 1e-6)")


def test_calibration_recovers_planted_parameter():
    planted = with_value(default_params(), "covid.magnitude", 0.55)
    target = run_scenario(planted, BUILTIN_SCENARIOS["run2"]).metrics
    spec = CalibrationSpec(
        parameters=(CalibrationParameter("covid.magnitude", 0.40, 0.80),),
        targets=(CalibrationTarget("run2", "evictions_total",
                                   target.evictions_total),
                 CalibrationTarget("run2", "arrears_growth_36mo",
                                   target.arrears_growth_36mo)),
        max_iterations=200,
    )
    result = calibrate(default_params(), spec)
    fitted = result.fitted["covid.magnitude"]
    miss = abs(fitted - 0.55) / 0.55
    ok = miss < 0.01
    assert record(
        "calibration self-consistency",
        ok, f"planted shock magnitude 0.55 recovered as {fitted:.4f} "
            f"({miss * 100:.3f}% off, limit 1%)")


def test_extreme_condition_battery():
    checks = extreme_conditions(default_params())
    failed = [c.name for c in checks if not c.passed]

    # two additional corner settings: a toothless moratorium and a flat
    # stress response must stay finite and directionally sane
    p = default_params()
    toothless = with_value(p, "moratorium.processing_reduction", 0.0)
    r_toothless = run_scenario(toothless, BUILTIN_SCENARIOS["run3"])
    r_default = run_scenario(p, BUILTIN_SCENARIOS["run3"])
    r_shock = run_scenario(p, BUILTIN_SCENARIOS["run2"])
    sane_toothless = (
        np.isfinite(r_toothless.metrics.evictions_total)
        and r_toothless.metrics.evictions_total
        >= r_default.metrics.evictions_total)

    flat = dataclasses.replace(
        p, stress_curve=type(p.stress_curve)(1.0, 1.0, p.stress_curve.steepness))
    r_flat = run_scenario(flat, BUILTIN_SCENARIOS["run2"])
    sane_flat = (np.isfinite(r_flat.metrics.evictions_total)
                 and r_flat.metrics.evictions_total
                 <= r_shock.metrics.evictions_total)

    ok = not failed and sane_toothless and sane_flat
    detail = (f"{len(checks)} battery checks plus toothless-moratorium and "
              f"flat-stress corners all finite and sane")
    if failed:
        detail = "failed: " + ", ".join(failed)
    assert record("extreme-condition battery", ok, detail)
