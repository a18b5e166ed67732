"""Sampling-scheme benchmark for sparse generalized polynomial chaos surrogates."""
from __future__ import annotations

__version__ = "1.0.0"

from gpce_bench.basis import InputSpec, MultiIndexSet, build_multi_index_set
from gpce_bench.errors import (
    BenchError,
    ConfigError,
    CriterionError,
    DegenerateQoiError,
    DomainError,
    GpceError,
    SamplingError,
    SolverError,
)
from gpce_bench.sampling import SampleSet, generate
from gpce_bench.surrogate import GpceModel, fit, moments, predict

__all__ = [
    "__version__",
    "BenchError",
    "ConfigError",
    "CriterionError",
    "DegenerateQoiError",
    "DomainError",
    "GpceError",
    "GpceModel",
    "InputSpec",
    "MultiIndexSet",
    "SampleSet",
    "SamplingError",
    "SolverError",
    "build_multi_index_set",
    "fit",
    "generate",
    "moments",
    "predict",
]
