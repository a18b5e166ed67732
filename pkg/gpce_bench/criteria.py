"""Scores for measurement matrices and point sets.

Matrix criteria (mutual coherence, average cross-correlation, the hybrid of
both, D-optimality) drive the greedy L1-optimal designs; distance criteria
(maximin, phi_p and their periodic variants) drive the LHS optimizers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from gpce_bench.basis import GpceMatrix
from gpce_bench.errors import CriterionError

logger = logging.getLogger(__name__)

DISTANCE_TIE_ATOL = 1e-12


@dataclass(frozen=True)
class CriterionScore:
    name: str
    value: float
    metadata: dict = field(default_factory=dict)


def _values(matrix) -> np.ndarray:
    if isinstance(matrix, GpceMatrix):
        return matrix.values
    return np.atleast_2d(np.asarray(matrix, dtype=float))


def mutual_coherence(matrix) -> float:
    psi = _values(matrix)
    if psi.shape[1] < 2:
        raise CriterionError("mutual coherence needs at least two columns")
    norms = np.linalg.norm(psi, axis=0)
    if np.any(norms == 0.0):
        raise CriterionError(f"zero column(s) {np.flatnonzero(norms == 0.0).tolist()}")
    gram = np.abs(psi.T @ psi) / np.outer(norms, norms)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def avg_cross_correlation(matrix) -> float:
    """(1/N) ||I - Psi^T Psi / M||_F^2 with N = K(K - 1), K the column count."""
    psi = _values(matrix)
    rows, k = psi.shape
    if k < 2:
        raise CriterionError("average cross-correlation needs at least two columns")
    gram = psi.T @ psi / rows
    return float(np.sum((np.eye(k) - gram) ** 2) / (k * (k - 1)))


def hybrid_scores(mu, gamma) -> np.ndarray:
    """Min-max normalized squared sum of both criteria per candidate."""
    mu = np.asarray(mu, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if mu.size == 0 or mu.shape != gamma.shape:
        raise CriterionError("mu and gamma must be non-empty and of equal length")

    def term(v: np.ndarray) -> np.ndarray:
        span = v.max() - v.min()
        if span == 0.0:
            return np.zeros_like(v)
        return ((v - v.min()) / span) ** 2

    return term(mu) + term(gamma)


def hybrid_score(mu_candidates, gamma_candidates) -> int:
    return int(np.argmin(hybrid_scores(mu_candidates, gamma_candidates)))


def d_optimality(matrix) -> CriterionScore:
    """|G^-1|^(1/N_c) with G = Psi^T Psi / M; rank-deficient surrogate det(Psi Psi^T)^(1/M) when M < N_c."""
    psi = _values(matrix)
    rows, cols = psi.shape
    if rows >= cols:
        sign, logdet = np.linalg.slogdet(psi.T @ psi / rows)
        if sign <= 0:
            return CriterionScore("D", float("inf"), {"mode": "singular"})
        return CriterionScore("D", float(np.exp(-logdet / cols)), {"mode": "full"})
    sign, logdet = np.linalg.slogdet(psi @ psi.T)
    if sign <= 0:
        return CriterionScore("D", float("inf"), {"mode": "singular"})
    return CriterionScore("D", float(np.exp(logdet / rows)), {"mode": "rank_deficient"})


def pairwise_distances(points, t: float = 2, periodic: bool = False) -> np.ndarray:
    """Condensed inter-site distances; periodic wraps each coordinate on the unit interval."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[0] < 2:
        raise CriterionError("distance criteria need at least two points")
    if not periodic:
        return pdist(x, metric="minkowski", p=t)
    i, j = np.triu_indices(x.shape[0], k=1)
    delta = np.abs(x[i] - x[j])
    delta = np.minimum(delta, 1.0 - delta)
    return np.sum(delta**t, axis=1) ** (1.0 / t)


def distance_list(points, t: float = 2, periodic: bool = False) -> tuple[np.ndarray, np.ndarray]:
    dist = np.sort(pairwise_distances(points, t=t, periodic=periodic))
    starts = np.concatenate([[True], np.diff(dist) > DISTANCE_TIE_ATOL])
    group = np.cumsum(starts) - 1
    counts = np.bincount(group)
    return dist[starts], counts


def maximin_distance(points, t: float = 2, periodic: bool = False) -> float:
    return float(pairwise_distances(points, t=t, periodic=periodic).min())


def phi_p(points, p_exp: float = 10, t: float = 2, periodic: bool = False) -> float:
    """(sum_i J_i d_i^-p)^(1/p); +inf when two points coincide."""
    dist, counts = distance_list(points, t=t, periodic=periodic)
    if dist[0] <= 0.0:
        return float("inf")
    # factor out the smallest distance so d^-p does not overflow for large p
    scaled = np.sum(counts * (dist[0] / dist) ** p_exp)
    return float(scaled ** (1.0 / p_exp) / dist[0])


def periodic_maximin_distance(points, t: float = 2) -> float:
    return maximin_distance(points, t=t, periodic=True)


def periodic_phi_p(points, p_exp: float = 10, t: float = 2) -> float:
    return phi_p(points, p_exp=p_exp, t=t, periodic=True)
