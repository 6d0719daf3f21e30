"""Scenario definitions, runners, metrics, and comparisons.

A scenario toggles the policy blocks (income shock, eviction moratorium,
rental assistance) on a shared parameter set and may override individual
parameters by dotted path. The five standard runs:

* ``run1``  pre-shock baseline, all policies off
* ``run2``  income shock, no intervention
* ``run3``  shock + eviction moratorium
* ``run4``  shock + moratorium + rental assistance
* ``run4a`` as run4 with disbursement three times faster
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np
import yaml

from rentdyn.engine import SimClock, Trajectory
from rentdyn.model import run_model
from rentdyn.params import ModelParams, validate_params, with_value

__all__ = [
    "Scenario",
    "BUILTIN_SCENARIOS",
    "load_scenarios",
    "MetricSet",
    "compute_metrics",
    "RunResult",
    "run_scenario",
    "run_many",
    "compare",
    "emit_timeseries",
]


@dataclass(frozen=True)
class Scenario:
    """A named policy configuration over a base parameter set."""

    name: str
    description: str = ""
    covid: bool = False
    moratorium: bool = False
    assistance: bool = False
    assistance_rate_multiplier: float = 1.0
    overrides: Mapping[str, float] = field(default_factory=dict)

    def apply(self, params: ModelParams) -> ModelParams:
        """Base parameters with this scenario's switches and overrides set."""
        out = with_value(params, "covid.enabled", self.covid)
        out = with_value(out, "moratorium.enabled", self.moratorium)
        out = with_value(out, "assistance.enabled", self.assistance)
        if self.assistance:
            out = with_value(out, "assistance.rate_multiplier",
                             self.assistance_rate_multiplier)
        for path in sorted(self.overrides):
            out = with_value(out, path, float(self.overrides[path]))
        validate_params(out)
        return out


BUILTIN_SCENARIOS: Mapping[str, Scenario] = MappingProxyType({
    "run1": Scenario("run1", "pre-shock baseline, all policies off"),
    "run2": Scenario("run2", "income shock, no intervention", covid=True),
    "run3": Scenario("run3", "shock plus eviction moratorium",
                     covid=True, moratorium=True),
    "run4": Scenario("run4", "shock, moratorium, and rental assistance",
                     covid=True, moratorium=True, assistance=True),
    "run4a": Scenario("run4a", "run4 with disbursement three times faster",
                      covid=True, moratorium=True, assistance=True,
                      assistance_rate_multiplier=3.0),
})


def load_scenarios(path: str | Path) -> dict[str, Scenario]:
    """Load scenario definitions from a YAML file.

    Each top-level key names a scenario; recognized fields are
    ``description``, ``covid``, ``moratorium``, ``assistance``,
    ``assistance_rate_multiplier``, and an ``overrides`` mapping of dotted
    parameter paths to values. Unknown fields are errors.
    """
    path = Path(path)
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a mapping of scenario names")
    known = {"description", "covid", "moratorium", "assistance",
             "assistance_rate_multiplier", "overrides"}
    out: dict[str, Scenario] = {}
    for name, spec in raw.items():
        spec = spec or {}
        if not isinstance(spec, dict):
            raise ValueError(f"{path}: scenario '{name}' must be a mapping")
        unknown = sorted(set(spec) - known)
        if unknown:
            raise ValueError(
                f"{path}: scenario '{name}' has unknown fields: {', '.join(unknown)}"
            )
        overrides = spec.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ValueError(f"{path}: scenario '{name}' overrides must be a mapping")
        out[name] = Scenario(
            name=name,
            description=str(spec.get("description", "")),
            covid=bool(spec.get("covid", False)),
            moratorium=bool(spec.get("moratorium", False)),
            assistance=bool(spec.get("assistance", False)),
            assistance_rate_multiplier=float(spec.get("assistance_rate_multiplier", 1.0)),
            overrides={str(k): float(v) for k, v in overrides.items()},
        )
    return out


@dataclass(frozen=True)
class MetricSet:
    """Headline outcomes of one run over the analysis window."""

    evictions_total: float
    filings_total: float
    arrears_end: float
    arrears_growth_window: float
    arrears_growth_36mo: float
    arrears_peak_growth: float
    crowding_mean: float
    crowding_end: float
    homeless_end: float
    homeless_peak: float
    insecure_end: float
    assistance_disbursed_end: float
    assistance_disbursed_fraction: float
    assistance_exhausted_at: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def compute_metrics(traj: Trajectory, params: ModelParams) -> MetricSet:
    """Reduce a trajectory to the reported headline metrics.

    Flow totals are left-Riemann integrals over the analysis window; stock
    readings are taken at the horizon; the 36-month arrears growth measures
    the stock change over the 36 months ending at the horizon.
    """
    clock = traj.clock
    mask = clock.window_mask()
    end = clock.horizon
    window_start = clock.burn_in

    arrears = traj["rent_owed"]
    arrears_end = float(arrears[-1])
    arrears_at_window = traj.at("rent_owed", window_start)
    arrears_at_36 = traj.at("rent_owed", max(0.0, end - 36.0))
    growth = arrears[mask] - arrears_at_window

    total = params.assistance.total_funds
    disbursed = float(traj["assistance_disbursed"][-1])
    exhausted_at = None
    if params.assistance.enabled and total > 0.0:
        funds = traj["assistance_funds"]
        hit = np.nonzero(funds <= 1e-4 * total)[0]
        if hit.size:
            exhausted_at = float(traj.times[hit[0]])

    return MetricSet(
        evictions_total=traj.window_integral("evictions_processed"),
        filings_total=traj.window_integral("eviction_filings"),
        arrears_end=arrears_end,
        arrears_growth_window=arrears_end - arrears_at_window,
        arrears_growth_36mo=arrears_end - arrears_at_36,
        arrears_peak_growth=float(growth.max()),
        crowding_mean=traj.window_mean("crowding_ratio"),
        crowding_end=float(traj["crowding_ratio"][-1]),
        homeless_end=float(traj["households_homeless"][-1]),
        homeless_peak=float(traj["households_homeless"][mask].max()),
        insecure_end=float(traj["households_insecure"][-1]),
        assistance_disbursed_end=disbursed,
        assistance_disbursed_fraction=disbursed / total if total > 0.0 else 0.0,
        assistance_exhausted_at=exhausted_at,
    )


@dataclass
class RunResult:
    """One simulated scenario: applied parameters, trajectory, and metrics."""

    scenario: Scenario
    params: ModelParams
    trajectory: Trajectory
    metrics: MetricSet
    elapsed_seconds: float


def run_scenario(
    params: ModelParams,
    scenario: Scenario,
    clock: SimClock | None = None,
) -> RunResult:
    """Apply a scenario to the base parameters and simulate it."""
    if clock is None:
        clock = SimClock()
    applied = scenario.apply(params)
    t0 = time.perf_counter()
    traj = run_model(applied, clock)
    elapsed = time.perf_counter() - t0
    return RunResult(
        scenario=scenario,
        params=applied,
        trajectory=traj,
        metrics=compute_metrics(traj, applied),
        elapsed_seconds=elapsed,
    )


def run_many(
    params: ModelParams,
    scenarios: Mapping[str, Scenario],
    clock: SimClock | None = None,
) -> dict[str, RunResult]:
    """Run several scenarios off one base parameter set, in name order."""
    return {name: run_scenario(params, scenarios[name], clock)
            for name in sorted(scenarios)}


def compare(baseline: RunResult, variant: RunResult) -> dict:
    """Per-metric comparison table: values, absolute and percent change."""
    base = baseline.metrics.as_dict()
    var = variant.metrics.as_dict()
    rows = {}
    for key, base_value in base.items():
        var_value = var[key]
        if base_value is None or var_value is None:
            rows[key] = {"baseline": base_value, "variant": var_value,
                         "abs_change": None, "pct_change": None}
            continue
        delta = var_value - base_value
        pct = delta / base_value * 100.0 if abs(base_value) > 0.0 else None
        rows[key] = {"baseline": base_value, "variant": var_value,
                     "abs_change": delta, "pct_change": pct}
    return {
        "baseline": baseline.scenario.name,
        "variant": variant.scenario.name,
        "metrics": rows,
    }


def emit_timeseries(
    result: RunResult,
    columns: list[str] | None = None,
) -> tuple[list[str], list[list]]:
    """Tabulate a run for CSV/JSON output.

    Returns ``(header, rows)``; the first two columns are the month index and
    the calendar month containing each sample. ``columns=None`` selects every
    recorded series; an explicit empty selection is an error.
    """
    traj = result.trajectory
    if columns is None:
        columns = list(traj.series)
    if not columns:
        raise ValueError(
            "empty series selection; available columns: " + ", ".join(traj.series)
        )
    missing = [c for c in columns if c not in traj.series]
    if missing:
        raise KeyError(
            f"unknown series {', '.join(missing)}; available: " + ", ".join(traj.series)
        )
    header = ["t_months", "calendar"] + list(columns)
    rows = []
    clock = traj.clock
    for k, t in enumerate(traj.times):
        row: list = [float(t), clock.calendar_label(float(t))]
        row.extend(float(traj.series[c][k]) for c in columns)
        rows.append(row)
    return header, rows
