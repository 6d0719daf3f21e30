"""Validation tools: fit statistics, reference modes, sweeps, extreme checks.

Four independent facilities:

* Theil inequality statistics for scoring a simulated series against an
  observed one, with the bias/variance/covariance decomposition that tells
  you *why* a fit is poor, not just how poor it is.
* Reference-mode ingestion: small CSV files of observed data points, each
  self-describing (which scenario, which model series, units, source), scored
  with the Theil statistics. A missing or empty directory degrades to
  skipped results rather than errors so validation can run without data.
* One-at-a-time sensitivity sweeps over every registered numeric parameter,
  reporting normalized elasticities of the headline metrics.
* An extreme-conditions battery that pushes inputs to implausible corners
  (no shock, total income loss, no housing stock, hair-trigger landlords,
  airtight moratorium) and checks the model degrades sensibly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from rentdyn.engine import SimClock, Trajectory
from rentdyn.params import ModelParams, default_params, get_value, bounds_for, \
    sweepable_parameters, with_value
from rentdyn.scenarios import BUILTIN_SCENARIOS, MetricSet, Scenario, \
    compute_metrics, run_scenario

__all__ = [
    "theils_u",
    "theil_decomposition",
    "ReferenceError",
    "ReferenceMode",
    "ReferenceResult",
    "load_reference_mode",
    "score_reference_mode",
    "reference_report",
    "SweepEntry",
    "sensitivity_sweep",
    "ExtremeCheck",
    "extreme_conditions",
]


# ---------------------------------------------------------------------------
# Theil inequality statistics


def _as_pair(simulated, observed) -> tuple[np.ndarray, np.ndarray]:
    sim = np.asarray(simulated, dtype=float)
    obs = np.asarray(observed, dtype=float)
    if sim.ndim != 1 or obs.ndim != 1:
        raise ValueError("Theil statistics need one-dimensional series")
    if sim.shape != obs.shape:
        raise ValueError(f"series lengths differ: {sim.size} vs {obs.size}")
    if sim.size == 0:
        raise ValueError("Theil statistics need at least one point")
    if not (np.all(np.isfinite(sim)) and np.all(np.isfinite(obs))):
        raise ValueError("Theil statistics need finite inputs")
    return sim, obs


def theils_u(simulated, observed) -> float:
    """Theil's inequality coefficient, bounded to [0, 1].

    U = RMSE / (RMS(simulated) + RMS(observed)); 0 is a perfect fit, 1 is
    maximal disagreement. Two identically-zero series agree perfectly.
    """
    sim, obs = _as_pair(simulated, observed)
    rmse = math.sqrt(float(np.mean((sim - obs) ** 2)))
    denom = math.sqrt(float(np.mean(sim**2))) + math.sqrt(float(np.mean(obs**2)))
    if denom == 0.0:
        return 0.0
    return rmse / denom


def theil_decomposition(simulated, observed) -> tuple[float, float, float]:
    """Split mean squared error into bias, variance, and covariance shares.

    Returns (bias_share, variance_share, covariance_share), which sum to 1
    for any non-degenerate pair. Bias is systematic offset, variance is
    mismatched volatility, covariance is imperfect phase: a good model run
    concentrates its error in the covariance share.  Uses population
    standard deviations. A zero-error pair returns (0, 0, 0).
    """
    sim, obs = _as_pair(simulated, observed)
    mse = float(np.mean((sim - obs) ** 2))
    if mse == 0.0:
        return (0.0, 0.0, 0.0)
    mean_s, mean_o = float(np.mean(sim)), float(np.mean(obs))
    sd_s = float(np.std(sim))
    sd_o = float(np.std(obs))
    bias = (mean_s - mean_o) ** 2 / mse
    variance = (sd_s - sd_o) ** 2 / mse
    if sd_s > 0.0 and sd_o > 0.0:
        r = float(np.mean((sim - mean_s) * (obs - mean_o))) / (sd_s * sd_o)
    else:
        r = 0.0
    covariance = 2.0 * (1.0 - r) * sd_s * sd_o / mse
    return (bias, variance, covariance)


# ---------------------------------------------------------------------------
# Reference modes


class ReferenceError(ValueError):
    """A reference-mode CSV is structurally invalid."""


_REFERENCE_COLUMNS = ("calendar_month", "value", "scenario", "series", "units", "source")


@dataclass(frozen=True)
class ReferenceMode:
    """Observed data points for one model series, read from a CSV file."""

    name: str
    scenario: str
    series: str
    units: str
    source: str
    months: tuple[str, ...]
    values: tuple[float, ...]


@dataclass(frozen=True)
class ReferenceResult:
    """Outcome of scoring one reference mode (or of failing to load one)."""

    mode: str
    status: str  # "scored" or "skipped"
    detail: str = ""
    scenario: str = ""
    series: str = ""
    n_points: int = 0
    u: float | None = None
    bias_share: float | None = None
    variance_share: float | None = None
    covariance_share: float | None = None


def _parse_month(label: str, clock: SimClock) -> float:
    """Model time at the start of a 'YYYY-MM' calendar month."""
    try:
        year_s, month_s = label.strip().split("-")
        year, month = int(year_s), int(month_s)
        if not 1 <= month <= 12:
            raise ValueError
    except ValueError:
        raise ReferenceError(f"bad calendar month {label!r} (expected YYYY-MM)") from None
    t = (year - clock.start_year) * 12.0 + (month - clock.start_month)
    if t < 0.0 or t > clock.horizon:
        raise ReferenceError(
            f"calendar month {label} falls outside the simulated horizon "
            f"[{clock.calendar_label(0.0)}, {clock.calendar_label(clock.horizon)}]"
        )
    return t


def load_reference_mode(path: str | Path) -> ReferenceMode:
    """Read one reference-mode CSV.

    Expected columns: calendar_month, value, scenario, series, units, source.
    The scenario/series/units/source fields must be identical on every row;
    they make the file self-describing (no code-side lookup table).
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ReferenceError(f"{path.name}: empty file")
        missing = [c for c in _REFERENCE_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ReferenceError(f"{path.name}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise ReferenceError(f"{path.name}: no data rows")
    constant: dict[str, str] = {}
    for col in ("scenario", "series", "units", "source"):
        values = {row[col].strip() for row in rows}
        if len(values) != 1:
            raise ReferenceError(f"{path.name}: column {col!r} must be constant, got {sorted(values)}")
        constant[col] = values.pop()
    months = []
    values = []
    for row in rows:
        months.append(row["calendar_month"].strip())
        try:
            values.append(float(row["value"]))
        except ValueError:
            raise ReferenceError(
                f"{path.name}: bad value {row['value']!r} for {row['calendar_month']}"
            ) from None
    return ReferenceMode(
        name=path.stem,
        scenario=constant["scenario"],
        series=constant["series"],
        units=constant["units"],
        source=constant["source"],
        months=tuple(months),
        values=tuple(values),
    )


def score_reference_mode(mode: ReferenceMode, trajectory: Trajectory) -> ReferenceResult:
    """Theil-score one reference mode against a simulated trajectory."""
    if mode.series not in trajectory.series:
        raise ReferenceError(f"{mode.name}: unknown model series {mode.series!r}")
    clock = trajectory.clock
    times = [_parse_month(label, clock) for label in mode.months]
    sim = np.array([trajectory.at(mode.series, t) for t in times])
    obs = np.array(mode.values, dtype=float)
    u = theils_u(sim, obs)
    bias, variance, covariance = theil_decomposition(sim, obs)
    return ReferenceResult(
        mode=mode.name,
        status="scored",
        scenario=mode.scenario,
        series=mode.series,
        n_points=len(obs),
        u=u,
        bias_share=bias,
        variance_share=variance,
        covariance_share=covariance,
    )


def reference_report(
    directory: str | Path,
    params: ModelParams | None = None,
    clock: SimClock | None = None,
    scenarios: dict[str, Scenario] | None = None,
) -> list[ReferenceResult]:
    """Score every reference-mode CSV in ``directory``.

    Modes that cannot be used (missing directory, no CSVs, malformed file,
    unknown scenario) come back with status "skipped" and a reason, so a
    degraded data directory weakens the report instead of crashing it.
    """
    params = params if params is not None else default_params()
    clock = clock if clock is not None else SimClock()
    scenarios = scenarios if scenarios is not None else dict(BUILTIN_SCENARIOS)
    directory = Path(directory)
    if not directory.is_dir():
        return [ReferenceResult(mode=str(directory), status="skipped",
                                detail="reference directory not found")]
    paths = sorted(directory.glob("*.csv"))
    if not paths:
        return [ReferenceResult(mode=str(directory), status="skipped",
                                detail="no reference CSV files found")]
    cache: dict[str, Trajectory] = {}
    results = []
    for path in paths:
        try:
            mode = load_reference_mode(path)
        except ReferenceError as err:
            results.append(ReferenceResult(mode=path.stem, status="skipped", detail=str(err)))
            continue
        if mode.scenario not in scenarios:
            results.append(ReferenceResult(
                mode=mode.name, status="skipped",
                detail=f"unknown scenario {mode.scenario!r}"))
            continue
        if mode.scenario not in cache:
            cache[mode.scenario] = run_scenario(params, scenarios[mode.scenario],
                                                clock=clock).trajectory
        try:
            results.append(score_reference_mode(mode, cache[mode.scenario]))
        except ReferenceError as err:
            results.append(ReferenceResult(mode=mode.name, status="skipped", detail=str(err)))
    return results


# ---------------------------------------------------------------------------
# Sensitivity sweep


_SWEEP_METRICS = (
    "evictions_total",
    "filings_total",
    "arrears_end",
    "homeless_end",
    "insecure_end",
    "crowding_mean",
)


@dataclass(frozen=True)
class SweepEntry:
    """One perturbed run: a single parameter moved by one relative step."""

    parameter: str
    direction: str  # "down" or "up"
    baseline_value: float
    requested_value: float
    applied_value: float
    clamped: bool
    metrics: dict[str, float]
    elasticities: dict[str, float]


def _metric_values(metrics: MetricSet, names: tuple[str, ...]) -> dict[str, float]:
    return {name: float(getattr(metrics, name)) for name in names}


def sensitivity_sweep(
    params: ModelParams | None = None,
    scenario: Scenario | None = None,
    clock: SimClock | None = None,
    fraction: float = 0.15,
    metrics: tuple[str, ...] = _SWEEP_METRICS,
) -> tuple[dict[str, float], list[SweepEntry]]:
    """Perturb every registered numeric parameter one at a time by ±fraction.

    Each perturbation moves a single constant around the shipped baseline
    (no re-derivation of the stationary fields, so the response includes any
    induced disequilibrium: that is the point of the exercise). Requested
    values that violate a parameter's documented bounds are clamped and
    flagged. Returns the baseline metric values and one entry per run.

    Elasticities are normalized: (relative metric change) / (relative
    parameter change), using the applied value. Zero-valued baselines get
    an absolute-step fallback and an elasticity of 0 when no step was
    possible at all.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    params = params if params is not None else default_params()
    scenario = scenario if scenario is not None else BUILTIN_SCENARIOS["run2"]
    clock = clock if clock is not None else SimClock()

    base_metrics = _metric_values(
        run_scenario(params, scenario, clock=clock).metrics, metrics)

    entries: list[SweepEntry] = []
    for path in sweepable_parameters():
        base = float(get_value(params, path))
        lo, hi = bounds_for(path)
        for direction, sign in (("down", -1.0), ("up", +1.0)):
            requested = base * (1.0 + sign * fraction)
            applied = requested
            if applied < lo:
                applied = lo
            if hi is not None and applied > hi:
                applied = hi
            clamped = applied != requested
            if applied == base:
                entries.append(SweepEntry(
                    parameter=path, direction=direction, baseline_value=base,
                    requested_value=requested, applied_value=applied, clamped=clamped,
                    metrics=dict(base_metrics),
                    elasticities={name: 0.0 for name in metrics},
                ))
                continue
            perturbed = with_value(params, path, applied)
            run = run_scenario(perturbed, scenario, clock=clock)
            values = _metric_values(run.metrics, metrics)
            rel_dp = (applied - base) / base if base != 0.0 else math.inf
            elasticities = {}
            for name in metrics:
                m0 = base_metrics[name]
                if m0 == 0.0 or not math.isfinite(rel_dp):
                    elasticities[name] = 0.0
                else:
                    elasticities[name] = ((values[name] - m0) / m0) / rel_dp
            entries.append(SweepEntry(
                parameter=path, direction=direction, baseline_value=base,
                requested_value=requested, applied_value=applied, clamped=clamped,
                metrics=values, elasticities=elasticities,
            ))
    return base_metrics, entries


# ---------------------------------------------------------------------------
# Extreme conditions


@dataclass(frozen=True)
class ExtremeCheck:
    """One extreme-input experiment and whether the model behaved."""

    name: str
    passed: bool
    detail: str


def _finite_nonnegative(trajectory: Trajectory, tol: float = 1e-6) -> str:
    """Empty string when every recorded stock is finite and non-negative."""
    from rentdyn.model import NONNEG_STOCKS

    for name in NONNEG_STOCKS:
        series = trajectory.series[name]
        if not np.all(np.isfinite(series)):
            return f"{name} went non-finite"
        low = float(np.min(series))
        if low < -tol:
            return f"{name} went negative ({low:.3e})"
    return ""


def extreme_conditions(
    params: ModelParams | None = None,
    clock: SimClock | None = None,
) -> list[ExtremeCheck]:
    """Run the extreme-input battery and report pass/fail per experiment."""
    params = params if params is not None else default_params()
    clock = clock if clock is not None else SimClock()
    checks: list[ExtremeCheck] = []
    run2 = BUILTIN_SCENARIOS["run2"]
    run3 = BUILTIN_SCENARIOS["run3"]

    # 1. A shock of zero magnitude must reproduce the baseline exactly.
    zeroed = with_value(params, "covid.magnitude", 0.0)
    base = run_scenario(params, BUILTIN_SCENARIOS["run1"], clock=clock).trajectory
    shocked = run_scenario(zeroed, run2, clock=clock).trajectory
    worst = 0.0
    for name, series in base.series.items():
        scale = max(float(np.max(np.abs(series))), 1.0)
        worst = max(worst, float(np.max(np.abs(shocked.series[name] - series))) / scale)
    checks.append(ExtremeCheck(
        name="zero_shock_matches_baseline",
        passed=worst <= 1e-12,
        detail=f"max relative deviation {worst:.2e}",
    ))

    # 2. Total income loss: collections fall to the delay-ceiling floor and
    # every stock stays finite and non-negative.
    total = with_value(params, "covid.magnitude", 1.0)
    total = with_value(total, "covid.recovery_time", 1e9)
    traj = run_scenario(total, run2, clock=clock).trajectory
    problem = _finite_nonnegative(traj)
    t_probe = params.covid.start_time + 1.0
    expected = traj.at("rent_owed", t_probe) / (
        params.at_rent_base * params.rent_delay_curve.y_final)
    got = traj.at("rent_paid", t_probe)
    rel = abs(got - expected) / max(abs(expected), 1.0)
    passed = problem == "" and rel <= 1e-9
    checks.append(ExtremeCheck(
        name="total_income_loss_bounded",
        passed=passed,
        detail=problem or f"collections at delay ceiling (rel err {rel:.2e})",
    ))

    # 3. No rental stock at all: unit flows must stay identically zero.
    empty = params
    for path in ("units_occupied_initial", "units_pending_initial",
                 "units_vacant_initial", "units_foreclosed_initial",
                 "rent_owed_initial", "mortgage_owed_initial"):
        empty = with_value(empty, path, 0.0)
    traj = run_scenario(empty, run2, clock=clock).trajectory
    problem = _finite_nonnegative(traj)
    peaks = {
        name: float(np.max(np.abs(traj.series[name])))
        for name in ("units_occupied", "units_pending_eviction", "units_vacant",
                     "units_foreclosed", "evictions_processed", "eviction_filings")
    }
    stuck_at_zero = all(v <= 1e-9 for v in peaks.values())
    checks.append(ExtremeCheck(
        name="no_rental_stock_stays_empty",
        passed=problem == "" and stuck_at_zero,
        detail=problem or f"peak unit-side magnitudes {max(peaks.values()):.2e}",
    ))

    # 4. Hair-trigger landlords: filing pressure explodes but the limiter
    # must keep stocks non-negative and finite.
    impatient = with_value(params, "landlord_tolerance", 1.0)
    traj = run_scenario(impatient, run2, clock=clock).trajectory
    problem = _finite_nonnegative(traj)
    checks.append(ExtremeCheck(
        name="hair_trigger_landlords_bounded",
        passed=problem == "",
        detail=problem or "stocks stayed finite and non-negative under runaway filings",
    ))

    # 5. An airtight moratorium processes zero evictions inside its window
    # and resumes processing after it lapses.
    airtight = with_value(params, "moratorium.processing_reduction", 1.0)
    traj = run_scenario(airtight, run3, clock=clock).trajectory
    m = params.moratorium
    times = traj.times
    inside = (times >= m.start_time) & (times < m.start_time + m.duration)
    after = times >= m.start_time + m.duration
    ev = traj.series["evictions_processed"]
    peak_inside = float(np.max(np.abs(ev[inside])))
    resumed = float(np.max(ev[after]))
    checks.append(ExtremeCheck(
        name="airtight_moratorium_blocks_processing",
        passed=peak_inside == 0.0 and resumed > 0.0,
        detail=f"peak in-window rate {peak_inside:.2e}, post-window peak {resumed:.3g}",
    ))

    # 6. Nobody insecure or homeless at the outset: inflows rebuild the
    # pools smoothly from zero, nothing goes negative or non-finite.
    nobody = with_value(params, "households_insecure_initial", 0.0)
    nobody = with_value(nobody, "households_homeless_initial", 0.0)
    traj = run_scenario(nobody, run2, clock=clock).trajectory
    problem = _finite_nonnegative(traj)
    checks.append(ExtremeCheck(
        name="empty_household_pools_rebuild",
        passed=problem == "",
        detail=problem or "household pools rebuilt from zero without sign errors",
    ))
    return checks
