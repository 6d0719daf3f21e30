"""Pre-shock stationary initialization.

Given anchor stocks, prices, and behavioral rates, solve for the flow
constants and initial dollar stocks that make the no-policy baseline
stationary: occupied/pending/foreclosed units and both household pools sit
exactly at their initial values, and arrears settle at the fixed point where
accrual balances payment plus write-off. Vacant units alone drift, at the
slow stock-decline rate (a conserved-minus-decline system cannot be flat
everywhere; the loss shows up as vacancy).

The derived fields are written back into the parameter set so a saved file
carries explicit values; nothing is re-solved behind a loaded file's back.
"""

from __future__ import annotations

from rentdyn.engine import EPS
from rentdyn.params import ModelParams, with_value
from rentdyn.model import (
    crowding_effect,
    crowding_ratio,
    overdue_pressure,
    rent_burden,
    rent_delay_effect,
    stress_effect,
)

__all__ = ["EquilibriumError", "equilibrate", "DERIVED_FIELDS"]

# fields equilibrate() overwrites; a calibrator re-tags these as calibrated
DERIVED_FIELDS: tuple[str, ...] = (
    "rent_owed_initial",
    "mortgage_owed_initial",
    "units_foreclosed_initial",
    "baseline_filing_fraction",
    "move_in_time",
    "rate_new_homelessness",
    "rate_new_insecurity",
    "landlord_income_per_unit",
)


class EquilibriumError(ValueError):
    """The anchor parameters admit no stationary baseline (a derived flow
    constant would be non-positive)."""


def equilibrate(params: ModelParams, iterations: int = 200) -> ModelParams:
    """Return ``params`` with the derived balancing fields recomputed."""
    p = params
    occupied = p.units_occupied_initial
    pending = p.units_pending_initial
    vacant = p.units_vacant_initial
    insecure = p.households_insecure_initial
    homeless = p.households_homeless_initial
    tenanted = occupied + pending
    if tenanted <= EPS:
        raise EquilibriumError("no tenanted units: cannot anchor a rental market baseline")

    rent_due = p.avg_monthly_rent * tenanted
    burden = rent_burden(p, covid_effect=0.0)
    at_rent = p.at_rent_base * rent_delay_effect(p, burden)

    # arrears fixed point: accrual = amortization + write-off from churn
    evictions = (p.eviction_proportion / p.processing_time) * pending
    rent_owed = rent_due * at_rent
    for _ in range(iterations):
        stress = stress_effect(p, rent_owed, insecure)
        moveouts = p.baseline_turnover_fraction * occupied * stress
        rent_owed = rent_due / (1.0 / at_rent + (evictions + moveouts) / tenanted)
    stress = stress_effect(p, rent_owed, insecure)
    moveouts = p.baseline_turnover_fraction * occupied * stress
    rent_paid = rent_owed / at_rent

    # mortgage fixed point against realized rental income
    mortgaged = tenanted + vacant
    mortgage_due = p.avg_monthly_mortgage * mortgaged
    income = max(rent_paid, EPS)
    mortgage_owed = mortgage_due * p.at_mortgage_base
    for _ in range(iterations):
        delay = p.mortgage_delay_curve(mortgage_owed / income)
        mortgage_owed = mortgage_due * p.at_mortgage_base * delay
    mortgage_delay = p.mortgage_delay_curve(mortgage_owed / income)

    # filing rate that keeps the pending pool level
    resolutions = pending / p.filing_resolution_time
    fore_occ = p.foreclosure_fraction_occupied * occupied * mortgage_delay
    fore_pend = p.foreclosure_fraction_occupied * pending * mortgage_delay
    filings = evictions + resolutions + fore_pend
    conflict = crowding_effect(p, crowding_ratio(insecure, tenanted, p.crowding_reference)) \
        * stress
    overdue = overdue_pressure(p, rent_owed / tenanted)
    filing_base = occupied * overdue * mortgage_delay * conflict
    if filing_base <= EPS:
        raise EquilibriumError("filing pressure base is zero: cannot balance the court pipeline")
    filing_fraction = filings / filing_base

    # vacancy refill pace that keeps occupancy level
    moveins = moveouts + fore_occ + filings - resolutions
    if moveins <= EPS:
        raise EquilibriumError(
            "occupied-unit outflows do not exceed case resolutions: "
            "no positive move-in rate can hold occupancy level"
        )
    if vacant <= EPS:
        raise EquilibriumError("no vacant units to supply the required move-in flow")
    move_in_time = vacant / moveins

    # foreclosure pipeline sized so sales balance intake
    fore_vac = p.foreclosure_fraction_vacant * vacant
    foreclosed = (fore_occ + fore_pend + fore_vac) * p.foreclosure_sale_time

    # household balance
    hpu = insecure / tenanted
    displaced = (evictions + fore_occ + fore_pend) * hpu
    entries = p.homeless_entry_fraction * displaced + p.fr_direct_homeless * insecure
    homeless_out = (p.fr_exit_homeless + p.fr_double_up_homeless + p.fr_stabilize_homeless) \
        * homeless
    new_homeless = homeless_out - entries
    if new_homeless < 0.0:
        raise EquilibriumError(
            "displacement alone exceeds homeless outflows: reduce homeless_entry_fraction "
            "or raise exit/stabilization rates"
        )
    new_insecure = entries + p.fr_stabilize_insecure * insecure \
        - (p.fr_exit_homeless + p.fr_double_up_homeless) * homeless
    if new_insecure < 0.0:
        raise EquilibriumError(
            "homeless returns exceed insecure-pool outflows: no stationary inflow exists"
        )

    out = params
    for path, value in (
        ("rent_owed_initial", rent_owed),
        ("mortgage_owed_initial", mortgage_owed),
        ("units_foreclosed_initial", foreclosed),
        ("baseline_filing_fraction", filing_fraction),
        ("move_in_time", move_in_time),
        ("rate_new_homelessness", new_homeless),
        ("rate_new_insecurity", new_insecure),
        ("landlord_income_per_unit", rent_paid / max(mortgaged, EPS)),
    ):
        out = with_value(out, path, value)
    return out
