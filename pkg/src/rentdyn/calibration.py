"""Derivative-free calibration of model constants against scenario metrics.

A calibration spec names a handful of free parameters (with bounds) and a
set of weighted targets, each target being one metric of one scenario. The
loss is the weighted sum of squared relative misses, and the search is a
bounded Nelder-Mead simplex: the model is far too nonlinear for gradients
and cheap enough (a few milliseconds per run) that a few hundred simplex
evaluations are nothing.

The search is fully deterministic: same spec, same starting parameters,
same result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml
from scipy.optimize import Bounds, minimize

from rentdyn.engine import SimClock, SimulationError
from rentdyn.params import FIELDS, ModelParams, bounds_for, default_params, \
    get_value, with_value
from rentdyn.scenarios import BUILTIN_SCENARIOS, MetricSet, Scenario, run_scenario

__all__ = [
    "CalibrationError",
    "CalibrationTarget",
    "CalibrationParameter",
    "CalibrationSpec",
    "CalibrationResult",
    "load_calibration_spec",
    "calibration_loss",
    "calibrate",
]

_METRIC_NAMES = tuple(f.name for f in fields(MetricSet))
_PARAM_PATHS = tuple(f.path for f in FIELDS)
_FAILURE_LOSS = 1e12


class CalibrationError(ValueError):
    """A calibration spec is invalid or the search cannot be set up."""


@dataclass(frozen=True)
class CalibrationTarget:
    """One fitted quantity: a metric of a named scenario and its target."""

    scenario: str
    metric: str
    value: float
    weight: float = 1.0

    @property
    def key(self) -> str:
        return f"{self.scenario}.{self.metric}"


@dataclass(frozen=True)
class CalibrationParameter:
    """One free parameter; bounds default to the registry's documented ones."""

    path: str
    lower: float
    upper: float


@dataclass(frozen=True)
class CalibrationSpec:
    """Free parameters plus weighted targets plus search options."""

    parameters: tuple[CalibrationParameter, ...]
    targets: tuple[CalibrationTarget, ...]
    max_iterations: int = 400


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of one calibration run."""

    params: ModelParams
    loss: float
    initial_loss: float
    evaluations: int
    iterations: int
    converged: bool
    fitted: dict[str, float]
    achieved: dict[str, float]


def _check_target(entry: dict, scenarios: dict[str, Scenario]) -> CalibrationTarget:
    unknown = set(entry) - {"scenario", "metric", "value", "weight"}
    if unknown:
        raise CalibrationError(f"unknown target keys {sorted(unknown)}")
    for key in ("scenario", "metric", "value"):
        if key not in entry:
            raise CalibrationError(f"target is missing {key!r}: {entry}")
    if entry["scenario"] not in scenarios:
        raise CalibrationError(f"target names unknown scenario {entry['scenario']!r}")
    if entry["metric"] not in _METRIC_NAMES:
        raise CalibrationError(f"target names unknown metric {entry['metric']!r}")
    weight = float(entry.get("weight", 1.0))
    if weight <= 0.0:
        raise CalibrationError(f"target weight must be positive: {entry}")
    return CalibrationTarget(
        scenario=str(entry["scenario"]),
        metric=str(entry["metric"]),
        value=float(entry["value"]),
        weight=weight,
    )


def _check_parameter(entry: dict) -> CalibrationParameter:
    unknown = set(entry) - {"path", "lower", "upper"}
    if unknown:
        raise CalibrationError(f"unknown parameter keys {sorted(unknown)}")
    if "path" not in entry:
        raise CalibrationError(f"parameter is missing 'path': {entry}")
    path = str(entry["path"])
    if path not in _PARAM_PATHS:
        raise CalibrationError(f"unknown parameter path {path!r}")
    reg_lo, reg_hi = bounds_for(path)
    lower = float(entry.get("lower", reg_lo))
    upper = float(entry["upper"]) if "upper" in entry else \
        (reg_hi if reg_hi is not None else math.inf)
    if lower < reg_lo or (reg_hi is not None and upper > reg_hi):
        raise CalibrationError(
            f"{path}: requested bounds [{lower}, {upper}] exceed the documented "
            f"bounds [{reg_lo}, {reg_hi}]")
    if not lower < upper:
        raise CalibrationError(f"{path}: lower bound must be below upper bound")
    return CalibrationParameter(path=path, lower=lower, upper=upper)


def load_calibration_spec(
    path: str | Path,
    scenarios: dict[str, Scenario] | None = None,
) -> CalibrationSpec:
    """Read and validate a YAML calibration spec.

    Layout::

        parameters:
          - path: covid.magnitude
            lower: 0.3          # optional, defaults to the registry bounds
            upper: 0.9
        targets:
          - scenario: run2
            metric: arrears_growth_36mo
            value: 20.4e9
            weight: 1.0         # optional
        options:
          max_iterations: 400   # optional
    """
    scenarios = scenarios if scenarios is not None else dict(BUILTIN_SCENARIOS)
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise CalibrationError("calibration spec must be a mapping")
    unknown = set(raw) - {"parameters", "targets", "options"}
    if unknown:
        raise CalibrationError(f"unknown top-level keys {sorted(unknown)}")
    if not raw.get("parameters"):
        raise CalibrationError("calibration spec lists no parameters")
    if not raw.get("targets"):
        raise CalibrationError("calibration spec lists no targets")
    parameters = tuple(_check_parameter(dict(e)) for e in raw["parameters"])
    seen = set()
    for p in parameters:
        if p.path in seen:
            raise CalibrationError(f"duplicate parameter {p.path!r}")
        seen.add(p.path)
    targets = tuple(_check_target(dict(e), scenarios) for e in raw["targets"])
    options = raw.get("options") or {}
    unknown = set(options) - {"max_iterations"}
    if unknown:
        raise CalibrationError(f"unknown option keys {sorted(unknown)}")
    max_iterations = int(options.get("max_iterations", 400))
    if max_iterations < 1:
        raise CalibrationError("max_iterations must be at least 1")
    return CalibrationSpec(parameters=parameters, targets=targets,
                           max_iterations=max_iterations)


def _achieved_metrics(
    params: ModelParams,
    spec: CalibrationSpec,
    clock: SimClock,
    scenarios: dict[str, Scenario],
) -> dict[str, float]:
    """Metric values for every target, running each scenario once."""
    needed = sorted({t.scenario for t in spec.targets})
    metric_sets = {
        name: run_scenario(params, scenarios[name], clock=clock).metrics
        for name in needed
    }
    out = {}
    for target in spec.targets:
        value = getattr(metric_sets[target.scenario], target.metric)
        if value is None:
            # "never happened" sentinel for time-of-event metrics
            value = clock.horizon + 1.0
        out[target.key] = float(value)
    return out


def calibration_loss(
    params: ModelParams,
    spec: CalibrationSpec,
    clock: SimClock | None = None,
    scenarios: dict[str, Scenario] | None = None,
) -> float:
    """Weighted sum of squared relative target misses (lower is better)."""
    clock = clock if clock is not None else SimClock()
    scenarios = scenarios if scenarios is not None else dict(BUILTIN_SCENARIOS)
    achieved = _achieved_metrics(params, spec, clock, scenarios)
    loss = 0.0
    for target in spec.targets:
        scale = abs(target.value) if target.value != 0.0 else 1.0
        miss = (achieved[target.key] - target.value) / scale
        loss += target.weight * miss * miss
    return loss


def calibrate(
    params: ModelParams | None = None,
    spec: CalibrationSpec | None = None,
    clock: SimClock | None = None,
    scenarios: dict[str, Scenario] | None = None,
) -> CalibrationResult:
    """Fit the spec'd parameters with a bounded Nelder-Mead simplex search.

    Starts from ``params`` (clipping each free value into its bounds), works
    in relative coordinates so differently-scaled parameters condition the
    simplex equally, and treats any simulation blow-up as an effectively
    infinite loss so the simplex retreats from pathological corners.
    """
    params = params if params is not None else default_params()
    if spec is None:
        raise CalibrationError("a calibration spec is required")
    clock = clock if clock is not None else SimClock()
    scenarios = scenarios if scenarios is not None else dict(BUILTIN_SCENARIOS)

    paths = [p.path for p in spec.parameters]
    x0 = np.array([float(get_value(params, path)) for path in paths])
    lower = np.array([p.lower for p in spec.parameters])
    upper = np.array([p.upper for p in spec.parameters])
    x0 = np.clip(x0, lower, upper)
    # relative coordinates: unit step = the starting magnitude (or 1 if zero)
    scale = np.where(np.abs(x0) > 0.0, np.abs(x0), 1.0)

    evaluations = 0

    def apply(z: np.ndarray) -> ModelParams:
        candidate = params
        for path, value in zip(paths, np.clip(z * scale, lower, upper)):
            candidate = with_value(candidate, path, float(value))
        return candidate

    def objective(z: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        try:
            return calibration_loss(apply(z), spec, clock, scenarios)
        except (SimulationError, FloatingPointError, OverflowError, ZeroDivisionError):
            return _FAILURE_LOSS

    initial_loss = objective(x0 / scale)
    evaluations = 0
    result = minimize(
        objective,
        x0 / scale,
        method="Nelder-Mead",
        bounds=Bounds(lower / scale, upper / scale),
        options={
            "maxiter": spec.max_iterations,
            "xatol": 1e-6,
            "fatol": 1e-10,
        },
    )
    fitted_params = apply(np.asarray(result.x))
    achieved = _achieved_metrics(fitted_params, spec, clock, scenarios)
    return CalibrationResult(
        params=fitted_params,
        loss=float(result.fun),
        initial_loss=float(initial_loss),
        evaluations=evaluations,
        iterations=int(result.nit),
        converged=bool(result.success),
        fitted={path: float(get_value(fitted_params, path)) for path in paths},
        achieved=achieved,
    )
