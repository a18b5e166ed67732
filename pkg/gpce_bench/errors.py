"""Exception hierarchy shared by the library and the command line."""
from __future__ import annotations


class GpceError(Exception):
    """Base class for every error raised by gpce_bench."""


class DomainError(GpceError, ValueError):
    """Point outside the input domain, dimension mismatch or empty input."""


class ConfigError(GpceError, ValueError):
    """Invalid study configuration or command-line parameter."""


class CriterionError(GpceError, ValueError):
    """A design criterion is undefined for the given matrix or point set."""


class SamplingError(GpceError, RuntimeError):
    """A sampling scheme could not produce a valid design."""


class SolverError(GpceError, RuntimeError):
    """Coefficient recovery failed."""

    def __init__(self, message: str, qoi: int | None = None):
        super().__init__(message if qoi is None else f"QOI {qoi}: {message}")
        self.qoi = qoi


class DegenerateQoiError(GpceError, ValueError):
    """Every QOI of an NRMSD evaluation has a zero output range."""


class BenchError(GpceError, RuntimeError):
    """Benchmark aggregation cannot proceed (e.g. missing baseline scheme)."""
