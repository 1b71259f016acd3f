"""Uncertainty-principle checks for time/frequency attribution pairs."""

__version__ = "0.1.0"

from .spectral import InvalidInputError, ablate_bins, dft, idft, pack, synthesize, unpack
from .updetect import (AttributionPair, BatchSummary, DegenerateAttributionError, ViolationReport,
                       ViolationWitness, batch_detect, detect_violation)

__all__ = [
    "InvalidInputError", "ablate_bins", "dft", "idft", "pack", "synthesize", "unpack",
    "AttributionPair", "BatchSummary", "DegenerateAttributionError", "ViolationReport",
    "ViolationWitness", "batch_detect", "detect_violation",
]
