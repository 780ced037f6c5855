"""Entanglement detection with SIC POVMs, realignment (CCNR) and PPT."""

from esic.criteria import (
    CorrelationMatrix,
    CriterionResult,
    ccnr_value,
    esic_correlation_matrix,
    esic_value,
    noise_threshold,
    ppt_value,
    pure_state_ccnr,
)
from esic.linalg import DensityMatrix, validate_density
from esic.sic import Fiducial, SicPovm, default_sic, fiducial_search, sic_from_fiducial, verify_sic

__version__ = "0.1.0"

__all__ = [
    "CorrelationMatrix",
    "CriterionResult",
    "DensityMatrix",
    "Fiducial",
    "SicPovm",
    "ccnr_value",
    "default_sic",
    "esic_correlation_matrix",
    "esic_value",
    "fiducial_search",
    "noise_threshold",
    "ppt_value",
    "pure_state_ccnr",
    "sic_from_fiducial",
    "validate_density",
    "verify_sic",
]
