"""Coefficient recovery: LARS-Lasso path with model selection, and pseudo-inverse least squares."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import lars_path
from sklearn.model_selection import KFold

from gpce_bench.basis import GpceMatrix
from gpce_bench.errors import ConfigError, SolverError

logger = logging.getLogger(__name__)

SELECTION_KINDS = ("cv", "knots", "residual", "last")
PINV_RCOND = 1e-12


@dataclass(frozen=True)
class SelectionRule:
    kind: str = "cv"
    folds: int = 10
    n_knots: int | None = None
    tolerance: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SELECTION_KINDS:
            raise ConfigError(f"selection must be one of {SELECTION_KINDS}, got {self.kind!r}")
        if self.kind == "cv" and self.folds < 2:
            raise ConfigError(f"cv selection needs folds >= 2, got {self.folds}")
        if self.kind == "knots" and (self.n_knots is None or self.n_knots < 0):
            raise ConfigError("knots selection needs n_knots >= 0")
        if self.kind == "residual" and (self.tolerance is None or self.tolerance < 0):
            raise ConfigError("residual selection needs tolerance >= 0")


@dataclass(frozen=True)
class LarsPath:
    alphas: np.ndarray  # knots, decreasing, per-sample scale
    coefs: np.ndarray  # N_c x n_knots, original column scale
    chosen: int
    column_norms: np.ndarray
    cv_errors: np.ndarray | None = None

    @property
    def active_sets(self) -> list[tuple[int, ...]]:
        return [tuple(np.flatnonzero(self.coefs[:, k]).tolist()) for k in range(self.coefs.shape[1])]

    @property
    def coefficients(self) -> np.ndarray:
        return self.coefs[:, self.chosen]


def _as_array(matrix) -> np.ndarray:
    return matrix.values if isinstance(matrix, GpceMatrix) else np.atleast_2d(np.asarray(matrix, dtype=float))


def _check_finite(psi: np.ndarray, y: np.ndarray) -> None:
    if not np.all(np.isfinite(psi)):
        raise SolverError("measurement matrix contains non-finite values")
    if not np.all(np.isfinite(y)):
        raise SolverError("observations contain non-finite values")


def _column_norms(psi: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(psi, axis=0)
    norms[norms == 0.0] = 1.0
    return norms


def _path(x: np.ndarray, y: np.ndarray, method: str) -> tuple[np.ndarray, np.ndarray]:
    max_iter = max(500, 4 * x.shape[1])
    alphas, _, coefs = lars_path(x, y, method=method, max_iter=max_iter, alpha_min=0.0)
    return alphas, coefs


def _interpolate_path(alphas: np.ndarray, coefs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # zero above the first knot, the final coefficients below the last one
    x = alphas[::-1]
    c = coefs[:, ::-1]
    if x.size == 1:
        return np.repeat(c, targets.size, axis=1)
    idx = np.clip(np.searchsorted(x, targets, side="right"), 1, x.size - 1)
    x0, x1 = x[idx - 1], x[idx]
    span = x1 - x0
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(span > 0, (targets - x0) / span, 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    out = c[:, idx - 1] * (1.0 - frac) + c[:, idx] * frac
    out[:, targets >= x[-1]] = c[:, [-1]]
    out[:, targets <= x[0]] = c[:, [0]]
    return out


def _cv_errors(
    x: np.ndarray, y: np.ndarray, alphas: np.ndarray, rule: SelectionRule, method: str
) -> np.ndarray:
    n_splits = min(rule.folds, x.shape[0])
    folds = KFold(n_splits=n_splits, shuffle=True, random_state=rule.seed % (2**32))
    errors = np.zeros(alphas.size)
    for train, test in folds.split(x):
        fold_alphas, fold_coefs = _path(x[train], y[train], method)
        coefs = _interpolate_path(fold_alphas, fold_coefs, alphas)
        residual = x[test] @ coefs - y[test][:, None]
        errors += np.mean(residual**2, axis=0)
    return errors / n_splits


def _choose(x, y, alphas, coefs, rule: SelectionRule, method: str) -> tuple[int, np.ndarray | None]:
    last = alphas.size - 1
    if rule.kind == "last":
        return last, None
    if rule.kind == "knots":
        return min(rule.n_knots, last), None
    if rule.kind == "residual":
        y_norm = np.linalg.norm(y)
        rel = np.linalg.norm(x @ coefs - y[:, None], axis=0) / y_norm
        hits = np.flatnonzero(rel <= rule.tolerance)
        return (int(hits[0]) if hits.size else last), None
    if x.shape[0] < 2:
        logger.debug("cv selection needs two samples; using the final knot")
        return last, None
    errors = _cv_errors(x, y, alphas, rule, method)
    return int(np.argmin(errors)), errors


def lars_lasso_fit(
    matrix,
    y,
    selection: SelectionRule | None = None,
    method: str = "lasso",
    return_path: bool = False,
):
    """Lasso path on unit-norm columns; coefficients at the selected knot, mapped back to the input scale.

    ``method="lar"`` runs plain LARS without drop events.
    """
    psi = _as_array(matrix)
    y = np.asarray(y, dtype=float).reshape(-1)
    if psi.shape[0] < 1:
        raise SolverError("need at least one sample")
    if y.size != psi.shape[0]:
        raise SolverError(f"{y.size} observations for {psi.shape[0]} matrix rows")
    if method not in ("lasso", "lar"):
        raise ConfigError(f"method must be 'lasso' or 'lar', got {method!r}")
    _check_finite(psi, y)
    rule = selection or SelectionRule()
    norms = _column_norms(psi)

    if not np.any(y):
        zeros = np.zeros(psi.shape[1])
        if return_path:
            return LarsPath(np.zeros(1), zeros[:, None], 0, norms)
        return zeros

    x = psi / norms
    alphas, coefs = _path(x, y, method)
    chosen, cv_errors = _choose(x, y, alphas, coefs, rule, method)
    logger.debug("lasso path: %d knots, chose %d (alpha=%.3g)", alphas.size, chosen, alphas[chosen])
    original = coefs / norms[:, None]
    if return_path:
        return LarsPath(alphas, original, chosen, norms, cv_errors)
    return original[:, chosen]


def kkt_violation(matrix, y, coefs, alpha: float) -> float:
    """Largest deviation from the Lasso optimality conditions at ``alpha`` on unit-norm columns.

    Active columns must have residual correlation alpha * sign(c_j); inactive ones at most alpha.
    """
    psi = _as_array(matrix)
    y = np.asarray(y, dtype=float).reshape(-1)
    norms = _column_norms(psi)
    w = np.asarray(coefs, dtype=float) * norms
    x = psi / norms
    corr = x.T @ (y - x @ w) / x.shape[0]
    active = w != 0.0
    inactive_gap = np.maximum(np.abs(corr[~active]) - alpha, 0.0)
    active_gap = np.abs(corr[active] - alpha * np.sign(w[active]))
    return float(max(inactive_gap.max(initial=0.0), active_gap.max(initial=0.0)))


def least_squares_pinv(matrix, y) -> np.ndarray:
    """Minimum-norm least squares via the SVD pseudo-inverse (cutoff 1e-12 of the largest singular value)."""
    psi = _as_array(matrix)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != psi.shape[0]:
        raise SolverError(f"{y.shape[0]} observations for {psi.shape[0]} matrix rows")
    _check_finite(psi, y)
    return np.linalg.pinv(psi, rcond=PINV_RCOND) @ y
