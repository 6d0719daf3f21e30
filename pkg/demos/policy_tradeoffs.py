"""What does each intervention buy, and what does it cost?

The moratorium and the assistance fund attack the same crisis from
opposite ends: one blocks the court pipeline, the other pays down the
debt that feeds it. This script quantifies the trade-off the scenario
suite encodes: the moratorium prevents far more evictions but lets
arrears keep compounding, while assistance is the only lever that
actually shrinks the debt stock.
"""

from rentdyn.params import default_params
from rentdyn.scenarios import BUILTIN_SCENARIOS, compare, run_scenario


def main():
    params = default_params()
    print("Simulating the shock with and without each intervention...")
    shock = run_scenario(params, BUILTIN_SCENARIOS["run2"])
    moratorium = run_scenario(params, BUILTIN_SCENARIOS["run3"])
    full = run_scenario(params, BUILTIN_SCENARIOS["run4"])

    step1 = compare(shock, moratorium)
    step2 = compare(moratorium, full)

    def delta(cmp_table, metric):
        row = cmp_table["metrics"][metric]
        return row["variant"] - row["baseline"]

    print()
    print("Adding the moratorium to the shock scenario:")
    print(f"  evictions:  {delta(step1, 'evictions_total') / 1e6:+8.2f}M over the window")
    print(f"  arrears:    {delta(step1, 'arrears_end') / 1e9:+8.2f}B at the horizon")
    print(f"  homeless:   {delta(step1, 'homeless_end') / 1e3:+8.0f}K at the horizon")

    print()
    print("Adding the assistance fund on top of the moratorium:")
    print(f"  evictions:  {delta(step2, 'evictions_total') / 1e6:+8.2f}M over the window")
    print(f"  arrears:    {delta(step2, 'arrears_end') / 1e9:+8.2f}B at the horizon")
    print(f"  homeless:   {delta(step2, 'homeless_end') / 1e3:+8.0f}K at the horizon")
    print(f"  (fund pays out {full.metrics.assistance_disbursed_fraction * 100:.0f}% "
          f"of ${params.assistance.total_funds / 1e9:.1f}B by the horizon)")

    print()
    print("The asymmetry to notice:")
    ev_saved = -delta(step1, "evictions_total")
    arr_added = delta(step1, "arrears_end")
    print(f"  the moratorium prevents {ev_saved / 1e6:.2f}M evictions but leaves "
          f"{arr_added / 1e9:+.2f}B MORE debt on the books,")
    print(f"  because blocked filings do nothing about the rent still coming due.")
    arr_paid = -delta(step2, "arrears_end")
    print(f"  assistance is the only lever that reduces the debt stock "
          f"({arr_paid / 1e9:+.2f}B), which is what")
    print(f"  keeps the post-moratorium rebound from undoing the gains.")

    ok = (delta(step1, "evictions_total") < 0
          and delta(step1, "arrears_end") > 0
          and delta(step2, "arrears_end") < 0)
    print()
    print("[PASS] trade-off structure holds" if ok
          else "[FAIL] trade-off structure violated")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
