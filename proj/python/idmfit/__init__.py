"""Incidence estimation from aggregated current-status data."""

from ._core import (
    CurrentStatusTable,
    DomainError,
    FitResult,
    NumericalError,
    ParseError,
    expit,
    fit_differential,
    fit_logit_linear,
    fit_nondifferential,
    fit_prevalence_surface,
    incidence_curve,
    incidence_from_logit_fit,
    lifetable_rates,
    logit,
    parse_current_status_csv,
    plugin_curve,
    plugin_incidence,
    prevalence_closed_form,
    read_current_status_csv,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
