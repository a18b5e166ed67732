"""GPCE surrogate: fit, predict, NRMSD validation, moments and JSON persistence."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from gpce_bench.basis import InputSpec, MultiIndexSet, assemble_matrix, evaluate_basis_matrix, normalize_point
from gpce_bench.errors import ConfigError, DegenerateQoiError, DomainError, SolverError
from gpce_bench.sampling import SampleSet
from gpce_bench.solver import SelectionRule, lars_lasso_fit, least_squares_pinv

logger = logging.getLogger(__name__)

MODEL_FORMAT = "gpce_bench.model/1"
SOLVERS = ("lars", "pinv")
# doubles per evaluated chunk; rows per chunk = budget // QOI count
ELEMENT_BUDGET = 10_000_000
FIRST_CHUNK_ROWS = 1024

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GpceModel:
    basis: MultiIndexSet
    spec: InputSpec
    coefficients: np.ndarray  # N_c x N_y, rows in basis order
    qoi_names: tuple[str, ...] | None = None

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=float)
        if coefs.ndim == 1:
            coefs = coefs[:, None]
        if coefs.shape[0] != self.basis.size:
            raise DomainError(f"{coefs.shape[0]} coefficient rows for a basis of {self.basis.size} terms")
        if self.spec.d != self.basis.d:
            raise DomainError(f"input spec has {self.spec.d} dimensions, basis has {self.basis.d}")
        if self.qoi_names is not None and len(self.qoi_names) != coefs.shape[1]:
            raise DomainError("qoi_names must match the number of coefficient columns")
        object.__setattr__(self, "coefficients", coefs)

    @property
    def n_qoi(self) -> int:
        return self.coefficients.shape[1]


def _observations(observations, rows: int) -> np.ndarray:
    y = np.asarray(observations, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != rows:
        raise DomainError(f"{y.shape[0]} observation rows for {rows} samples")
    return y


def fit(
    samples: SampleSet,
    observations,
    basis: MultiIndexSet,
    spec: InputSpec,
    solver: str = "lars",
    selection: SelectionRule | None = None,
    qoi_names: tuple[str, ...] | None = None,
) -> GpceModel:
    """Per-QOI coefficients of the weighted system W Psi C = W Y."""
    if solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {solver!r}")
    matrix = assemble_matrix(samples, basis, spec)
    y = _observations(observations, samples.size) * samples.weights[:, None]

    if solver == "pinv":
        try:
            coefs = least_squares_pinv(matrix, y)
        except np.linalg.LinAlgError as exc:
            raise SolverError(str(exc)) from exc
        return GpceModel(basis, spec, coefs, qoi_names)

    coefs = np.empty((basis.size, y.shape[1]))
    for k in range(y.shape[1]):
        try:
            coefs[:, k] = lars_lasso_fit(matrix, y[:, k], selection)
        except (SolverError, ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(str(exc), qoi=k) from exc
    return GpceModel(basis, spec, coefs, qoi_names)


def predict(model: GpceModel, points) -> np.ndarray:
    """N x N_y surrogate values at physical points (DomainError names out-of-bounds rows)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    xi = normalize_point(model.spec, x)
    return evaluate_basis_matrix(model.basis, xi) @ model.coefficients


@dataclass(frozen=True)
class NrmsdResult:
    per_qoi: np.ndarray  # nan for degenerate QOIs
    mean: float
    degenerate: tuple[int, ...] = ()


def nrmsd_values(predicted, reference) -> NrmsdResult:
    """RMS deviation over the output range of the reference, per QOI; mean over non-degenerate QOIs."""
    pred = np.asarray(predicted, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if pred.ndim == 1:
        pred = pred[:, None]
    if ref.ndim == 1:
        ref = ref[:, None]
    if pred.shape != ref.shape:
        raise DomainError(f"prediction shape {pred.shape} does not match reference shape {ref.shape}")
    span = ref.max(axis=0) - ref.min(axis=0)
    rmsd = np.sqrt(np.mean((pred - ref) ** 2, axis=0))
    degenerate = np.flatnonzero(span == 0.0)
    if degenerate.size == span.size:
        raise DegenerateQoiError("every QOI has a zero output range on the test set")
    if degenerate.size:
        logger.warning("excluding %d zero-range QOI(s): %s", degenerate.size, degenerate.tolist())
    with np.errstate(divide="ignore", invalid="ignore"):
        per_qoi = np.where(span > 0.0, rmsd / np.where(span > 0.0, span, 1.0), np.nan)
    return NrmsdResult(per_qoi, float(np.nanmean(per_qoi)), tuple(degenerate.tolist()))


def validation_points(spec: InputSpec, n_test: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return spec.from_hypercube(rng.random((n_test, spec.d)))


def chunk_rows(width: int, element_budget: float = ELEMENT_BUDGET) -> int:
    return max(1, int(element_budget // max(width, 1)))


def evaluate_in_chunks(
    evaluator: Evaluator, x: np.ndarray, element_budget: float = ELEMENT_BUDGET
) -> np.ndarray:
    """(N, N_y) model values, evaluated in row blocks of about ``element_budget`` doubles."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    parts = []
    start, rows = 0, FIRST_CHUNK_ROWS
    while start < x.shape[0]:
        y = np.asarray(evaluator(x[start:start + rows]), dtype=float)
        parts.append(y[:, None] if y.ndim == 1 else y)
        start += rows
        rows = chunk_rows(parts[-1].shape[1], element_budget)
    return np.concatenate(parts)


def nrmsd(model: GpceModel, evaluator: Evaluator, n_test: int = 10000, seed: int = 0) -> NrmsdResult:
    x = validation_points(model.spec, n_test, seed)
    return nrmsd_values(predict(model, x), evaluate_in_chunks(evaluator, x))


@dataclass(frozen=True)
class Moments:
    mean: np.ndarray
    std: np.ndarray


def moments(model: GpceModel) -> Moments:
    """Mean is the constant coefficient; variance the sum of the remaining squared coefficients."""
    zero = model.basis.zero_position
    mask = np.ones(model.basis.size, dtype=bool)
    mask[zero] = False
    variance = np.sum(model.coefficients[mask] ** 2, axis=0)
    return Moments(model.coefficients[zero].copy(), np.sqrt(variance))


def reference_moments_mc(
    evaluator: Evaluator,
    spec: InputSpec,
    n: int,
    seed: int,
    chunk_size: int | None = None,
    element_budget: float = ELEMENT_BUDGET,
) -> Moments:
    """Plain Monte Carlo mean and unbiased std, merged chunk by chunk (``chunk_size`` or ``element_budget``)."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    count = 0
    rows = chunk_size or FIRST_CHUNK_ROWS
    mean = None
    m2 = None
    while count < n:
        m = min(rows, n - count)
        y = np.asarray(evaluator(spec.from_hypercube(rng.random((m, spec.d)))), dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if chunk_size is None:
            rows = chunk_rows(y.shape[1], element_budget)
        chunk_mean = y.mean(axis=0)
        chunk_m2 = np.sum((y - chunk_mean) ** 2, axis=0)
        del y
        if mean is None:
            mean, m2 = chunk_mean, chunk_m2
        else:
            total = count + m
            delta = chunk_mean - mean
            mean = mean + delta * m / total
            m2 = m2 + chunk_m2 + delta**2 * count * m / total
        count += m
    std = np.sqrt(m2 / (n - 1)) if n > 1 else np.zeros_like(mean)
    return Moments(mean, std)


def sparsity(model: GpceModel, tol: float = 1e-6) -> np.ndarray:
    return np.sum(np.abs(model.coefficients) > tol, axis=0)


def model_to_dict(model: GpceModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "spec": model.spec.to_dict(),
        "basis": model.basis.to_dict(),
        "coefficients": model.coefficients.tolist(),
        "qoi_names": list(model.qoi_names) if model.qoi_names is not None else None,
    }


def model_from_dict(data: dict) -> GpceModel:
    if data.get("format") != MODEL_FORMAT:
        raise ConfigError(f"unsupported model format {data.get('format')!r}")
    names = data.get("qoi_names")
    return GpceModel(
        basis=MultiIndexSet.from_dict(data["basis"]),
        spec=InputSpec.from_dict(data["spec"]),
        coefficients=np.asarray(data["coefficients"], dtype=float),
        qoi_names=tuple(names) if names is not None else None,
    )


def save_model(model: GpceModel, path: Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), indent=2), encoding="utf-8")
    return path


def load_model(path: Path) -> GpceModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
