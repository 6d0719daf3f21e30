"""Command-line interface.

Six subcommands cover the library's workflows:

* ``simulate``  run one scenario, print its metrics, optionally write files
* ``suite``     run every scenario and print the summary table
* ``compare``   metric-by-metric difference between two scenarios
* ``sweep``     one-at-a-time sensitivity sweep with elasticities
* ``validate``  reference-mode fit statistics plus the extreme-input battery
* ``calibrate`` fit spec'd parameters and write an updated parameter file

Input problems (unknown scenario, malformed file, bad clock) exit with
status 1 before any output file is created; writes themselves are atomic,
so an interrupted run never leaves partial artifacts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from rentdyn import __version__
from rentdyn.calibration import CalibrationError, calibrate, load_calibration_spec
from rentdyn.engine import SimClock, SimulationError
from rentdyn.output import write_csv, write_json, write_manifest
from rentdyn.params import ModelParams, ParamError, ParamFileError, default_params, \
    load_params, save_params
from rentdyn.scenarios import BUILTIN_SCENARIOS, RunResult, Scenario, compare, \
    emit_timeseries, load_scenarios, run_many, run_scenario
from rentdyn.validation import extreme_conditions, reference_report, sensitivity_sweep

__all__ = ["main"]


class CliError(Exception):
    """A user-input problem that should exit with status 1."""


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--params", metavar="FILE",
                        help="parameter file (default: built-in calibration)")
    parser.add_argument("--scenarios", metavar="FILE",
                        help="scenario file (default: built-in scenario set)")
    parser.add_argument("--dt", type=float, default=0.25, metavar="MONTHS",
                        help="integration step in months (default 0.25)")
    parser.add_argument("--seed", type=int, default=None, metavar="N",
                        help="run seed, recorded in the manifest (the model is "
                             "deterministic; the seed only labels outputs)")
    parser.add_argument("--out", metavar="DIR",
                        help="directory for output artifacts (created if needed)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="time-series artifact format (default csv)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rentdyn",
        description="Rental-market dynamics: shocks, evictions, and policy runs.",
    )
    parser.add_argument("--version", action="version", version=f"rentdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("--scenario", default="run1", metavar="NAME",
                   help="scenario name (default run1)")
    p.add_argument("--series", metavar="A,B,C",
                   help="comma-separated series selection for the time-series file")
    _add_common(p)

    p = sub.add_parser("suite", help="run every scenario and summarize")
    _add_common(p)

    p = sub.add_parser("compare", help="compare two scenarios metric by metric")
    p.add_argument("--baseline", default="run1", metavar="NAME")
    p.add_argument("--variant", default="run2", metavar="NAME")
    _add_common(p)

    p = sub.add_parser("sweep", help="one-at-a-time parameter sensitivity sweep")
    p.add_argument("--scenario", default="run2", metavar="NAME",
                   help="scenario the sweep perturbs (default run2)")
    p.add_argument("--fraction", type=float, default=0.15, metavar="F",
                   help="relative perturbation per direction (default 0.15)")
    p.add_argument("--top", type=int, default=10, metavar="N",
                   help="rows to print, ranked by elasticity magnitude (default 10)")
    _add_common(p)

    p = sub.add_parser("validate", help="reference-mode fits and extreme-input checks")
    p.add_argument("--references", default="reference_modes", metavar="DIR",
                   help="directory of reference CSVs (default ./reference_modes)")
    _add_common(p)

    p = sub.add_parser("calibrate", help="fit parameters against scenario targets")
    p.add_argument("--spec", required=True, metavar="FILE",
                   help="YAML calibration spec (parameters, targets, options)")
    p.add_argument("--out-params", metavar="FILE",
                   help="write the fitted parameter file here")
    p.add_argument("--max-iterations", type=int, default=None, metavar="N",
                   help="override the spec's simplex iteration budget")
    _add_common(p)
    return parser


def _load_inputs(args) -> tuple[ModelParams, dict[str, Scenario], SimClock, str | None]:
    """Resolve parameters, scenario set, and clock; fail before any output."""
    params_file = None
    if args.params:
        try:
            params, _meta = load_params(args.params)
        except (OSError, ParamError, ParamFileError) as err:
            raise CliError(f"cannot load parameters: {err}") from err
        params_file = str(args.params)
    else:
        params = default_params()
    if args.scenarios:
        try:
            scenarios = load_scenarios(args.scenarios)
        except (OSError, ValueError) as err:
            raise CliError(f"cannot load scenarios: {err}") from err
    else:
        scenarios = dict(BUILTIN_SCENARIOS)
    try:
        clock = SimClock(dt=args.dt)
    except ValueError as err:
        raise CliError(f"bad clock: {err}") from err
    return params, scenarios, clock, params_file


def _pick_scenario(scenarios: dict[str, Scenario], name: str) -> Scenario:
    if name not in scenarios:
        known = ", ".join(sorted(scenarios))
        raise CliError(f"unknown scenario {name!r}; available: {known}")
    return scenarios[name]


def _metric_lines(result: RunResult) -> list[str]:
    m = result.metrics
    exhausted = "never" if m.assistance_exhausted_at is None \
        else f"t={m.assistance_exhausted_at:g}"
    return [
        f"evictions (window total)      {m.evictions_total:,.0f}",
        f"filings (window total)        {m.filings_total:,.0f}",
        f"arrears at end                ${m.arrears_end/1e9:,.2f}B",
        f"arrears growth (36 months)    ${m.arrears_growth_36mo/1e9:,.2f}B",
        f"crowding (window mean)        {m.crowding_mean:.3f} households/unit",
        f"homeless at end               {m.homeless_end:,.0f}",
        f"insecure at end               {m.insecure_end:,.0f}",
        f"assistance disbursed          ${m.assistance_disbursed_end/1e9:,.2f}B "
        f"({m.assistance_disbursed_fraction*100:.1f}% of funds, exhausted: {exhausted})",
    ]


def _write_run_artifacts(result: RunResult, out: Path, fmt: str,
                         columns: list[str] | None) -> list[Path]:
    header, rows = emit_timeseries(result, columns)
    name = result.scenario.name
    artifacts = []
    if fmt == "csv":
        artifacts.append(write_csv(out / f"{name}_timeseries.csv", header, rows))
    else:
        artifacts.append(write_json(out / f"{name}_timeseries.json",
                                    {"header": header, "rows": rows}))
    artifacts.append(write_json(out / f"{name}_metrics.json", result.metrics.as_dict()))
    return artifacts


def _cmd_simulate(args) -> int:
    params, scenarios, clock, params_file = _load_inputs(args)
    scenario = _pick_scenario(scenarios, args.scenario)
    columns = None
    if args.series is not None:
        columns = [c.strip() for c in args.series.split(",") if c.strip()]
    result = run_scenario(params, scenario, clock=clock)
    if columns is not None:
        try:
            emit_timeseries(result, columns)
        except (KeyError, ValueError) as err:
            raise CliError(str(err)) from err
    print(f"{scenario.name}: {scenario.description}")
    for line in _metric_lines(result):
        print("  " + line)
    if args.out:
        out = Path(args.out)
        artifacts = _write_run_artifacts(result, out, args.format, columns)
        write_manifest(out, f"simulate --scenario {scenario.name}", params, clock,
                       artifacts, [scenario.name], params_file, args.seed)
        print(f"wrote {len(artifacts)} artifact(s) + manifest to {out}")
    return 0


def _cmd_suite(args) -> int:
    params, scenarios, clock, params_file = _load_inputs(args)
    results = run_many(params, scenarios, clock=clock)
    name_w = max(len(n) for n in results)
    print(f"{'scenario':<{name_w}}  {'evictions':>12}  {'arrears_end':>12}  "
          f"{'homeless':>10}  {'crowding':>8}  {'disbursed':>10}")
    for name, result in results.items():
        m = result.metrics
        print(f"{name:<{name_w}}  {m.evictions_total:>12,.0f}  "
              f"${m.arrears_end/1e9:>10.2f}B  {m.homeless_end:>10,.0f}  "
              f"{m.crowding_mean:>8.3f}  {m.assistance_disbursed_fraction*100:>9.1f}%")
    if args.out:
        out = Path(args.out)
        artifacts = []
        for result in results.values():
            artifacts.extend(_write_run_artifacts(result, out, args.format, None))
        write_manifest(out, "suite", params, clock, artifacts,
                       list(results), params_file, args.seed)
        print(f"wrote {len(artifacts)} artifact(s) + manifest to {out}")
    return 0


def _cmd_compare(args) -> int:
    params, scenarios, clock, params_file = _load_inputs(args)
    baseline = _pick_scenario(scenarios, args.baseline)
    variant = _pick_scenario(scenarios, args.variant)
    table = compare(run_scenario(params, baseline, clock=clock),
                    run_scenario(params, variant, clock=clock))
    print(f"{args.variant} vs {args.baseline}")
    key_w = max(len(k) for k in table["metrics"])
    for key, row in table["metrics"].items():
        if row["baseline"] is None or row["variant"] is None:
            base = "never" if row["baseline"] is None else f"{row['baseline']:,.4g}"
            var = "never" if row["variant"] is None else f"{row['variant']:,.4g}"
            print(f"  {key:<{key_w}}  {base:>14} -> {var:>14}")
            continue
        pct = "" if row["pct_change"] is None else f"  ({row['pct_change']:+.1f}%)"
        print(f"  {key:<{key_w}}  {row['baseline']:>14,.4g} -> "
              f"{row['variant']:>14,.4g}{pct}")
    if args.out:
        out = Path(args.out)
        artifact = write_json(out / f"compare_{args.baseline}_vs_{args.variant}.json", table)
        write_manifest(out, f"compare --baseline {args.baseline} --variant {args.variant}",
                       params, clock, [artifact], [args.baseline, args.variant],
                       params_file, args.seed)
        print(f"wrote comparison + manifest to {out}")
    return 0


def _cmd_sweep(args) -> int:
    params, scenarios, clock, params_file = _load_inputs(args)
    scenario = _pick_scenario(scenarios, args.scenario)
    if not 0.0 < args.fraction < 1.0:
        raise CliError("--fraction must be between 0 and 1")
    base_metrics, entries = sensitivity_sweep(params, scenario, clock=clock,
                                              fraction=args.fraction)
    metric_names = list(base_metrics)
    ranked = sorted(entries, key=lambda e: -max(abs(v) for v in e.elasticities.values()))
    print(f"sweep of {len(entries)} runs (±{args.fraction*100:.0f}% on every parameter, "
          f"scenario {scenario.name}); top {min(args.top, len(ranked))} by elasticity:")
    for entry in ranked[: args.top]:
        name, value = max(entry.elasticities.items(), key=lambda kv: abs(kv[1]))
        flag = " (clamped)" if entry.clamped else ""
        print(f"  {entry.parameter:<40} {entry.direction:<4} "
              f"{name} {value:+.3f}{flag}")
    if args.out:
        out = Path(args.out)
        header = ["parameter", "direction", "baseline_value", "requested_value",
                  "applied_value", "clamped"]
        header += [f"metric_{m}" for m in metric_names]
        header += [f"elasticity_{m}" for m in metric_names]
        rows = []
        for e in entries:
            row: list = [e.parameter, e.direction, e.baseline_value,
                         e.requested_value, e.applied_value, e.clamped]
            row += [e.metrics[m] for m in metric_names]
            row += [e.elasticities[m] for m in metric_names]
            rows.append(row)
        artifacts = [
            write_csv(out / "sweep.csv", header, rows),
            write_json(out / "sweep_baseline.json", base_metrics),
        ]
        write_manifest(out, f"sweep --scenario {scenario.name} --fraction {args.fraction}",
                       params, clock, artifacts, [scenario.name], params_file, args.seed)
        print(f"wrote sweep table + manifest to {out}")
    return 0


def _cmd_validate(args) -> int:
    params, scenarios, clock, params_file = _load_inputs(args)
    results = reference_report(args.references, params, clock, scenarios)
    print("reference modes:")
    for r in results:
        if r.status == "scored":
            print(f"  [SCORED ] {r.mode}: U={r.u:.4f} "
                  f"(bias {r.bias_share:.2f}, variance {r.variance_share:.2f}, "
                  f"covariance {r.covariance_share:.2f}; n={r.n_points}, "
                  f"{r.scenario}/{r.series})")
        else:
            print(f"  [SKIPPED] {r.mode}: {r.detail}")
    checks = extreme_conditions(params, clock)
    print("extreme conditions:")
    failed = 0
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        failed += 0 if c.passed else 1
        print(f"  [{mark}] {c.name}: {c.detail}")
    if args.out:
        out = Path(args.out)
        payload = {
            "references": [vars(r) for r in results],
            "extreme_conditions": [vars(c) for c in checks],
        }
        artifact = write_json(out / "validation.json", payload)
        write_manifest(out, "validate", params, clock, [artifact],
                       sorted({r.scenario for r in results if r.scenario}),
                       params_file, args.seed)
        print(f"wrote validation report + manifest to {out}")
    return 1 if failed else 0


def _cmd_calibrate(args) -> int:
    params, scenarios, clock, params_file = _load_inputs(args)
    try:
        spec = load_calibration_spec(args.spec, scenarios)
    except (OSError, CalibrationError) as err:
        raise CliError(f"cannot load calibration spec: {err}") from err
    if args.max_iterations is not None:
        from dataclasses import replace as _replace
        spec = _replace(spec, max_iterations=args.max_iterations)
    result = calibrate(params, spec, clock=clock, scenarios=scenarios)
    print(f"loss {result.initial_loss:.6g} -> {result.loss:.6g} "
          f"after {result.evaluations} evaluations "
          f"({'converged' if result.converged else 'iteration budget hit'})")
    print("fitted parameters:")
    for path, value in result.fitted.items():
        print(f"  {path:<40} {value:.6g}")
    print("achieved targets:")
    for target in spec.targets:
        got = result.achieved[target.key]
        off = abs(got - target.value) / abs(target.value) * 100 if target.value else 0.0
        print(f"  {target.key:<40} {got:.6g} vs {target.value:.6g} ({off:.2f}% off)")
    if args.out_params:
        save_params(result.params, args.out_params, name="calibrated",
                    provenance_overrides={p: "calibrated" for p in result.fitted})
        print(f"wrote fitted parameter file to {args.out_params}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "suite": _cmd_suite,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "calibrate": _cmd_calibrate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SimulationError as err:
        print(f"simulation failed: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
