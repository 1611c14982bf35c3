"""Tail variation toolkit.

Numerical classification of functions by their behaviour at infinity
(slow, regular and rapid variation, Gamma classes), the matching
representations and inverses, and the extreme-value limits they imply.
"""

from .classify import Evidence, Kind, TailClass, classify_tail
from .evt import Domain, EvtReport, domain_of_attraction, ks_distance, normalizing_constants, run_evt, simulate_maxima
from .funcmodel import (
    CatalogEntry, Distribution, DomainError, TailFunction, catalog, catalog_entry, make_analytic, transform,
)
from .hazard import HazardView, cumulative_hazard, hazard_rate, reciprocal_hazard_R
from .inverses import generalized_inverse, inverse_index_check, pi_functional
from .numlimit import DEFAULT_GRID, LimitEstimate, ProbeGrid, Verdict, estimate_limit
from .represent import RepresentationReport, gamma_decompose, karamata_decompose
from .specfile import SpecError, parse_spec

__all__ = [
    "CatalogEntry", "DEFAULT_GRID", "Distribution", "Domain", "DomainError", "Evidence", "EvtReport", "HazardView",
    "Kind", "LimitEstimate", "ProbeGrid", "RepresentationReport", "SpecError", "TailClass", "TailFunction",
    "Verdict", "catalog", "catalog_entry", "classify_tail", "cumulative_hazard", "domain_of_attraction",
    "estimate_limit", "gamma_decompose", "generalized_inverse", "hazard_rate", "inverse_index_check",
    "karamata_decompose", "ks_distance", "make_analytic", "normalizing_constants", "parse_spec", "pi_functional",
    "reciprocal_hazard_R", "run_evt", "simulate_maxima", "transform",
]
