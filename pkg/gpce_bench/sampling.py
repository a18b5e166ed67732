"""Sampling schemes compared by the benchmark.

Every generator is a deterministic function of its parameters and a 64-bit
seed and returns a ``SampleSet`` in the unit hypercube [0, 1]^d:

- ``random_grid``: i.i.d. uniform points.
- ``lhs_standard``: Latin hypercube, pi = (P - U) / M per column.
- ``lhs_pool_optimal``: best of a pool of standard LHS designs (maximin or phi_p).
- ``lhs_sc_ese``: stretched-center strata (shrunk border strata) optimized by
  the enhanced stochastic evolutionary (ESE) element exchange.
- ``coherence_optimal``: Metropolis-Hastings draws from P(xi) B^2(xi) with
  weights 1 / B(xi).
- ``greedy_l1_optimal``: greedy row selection from a candidate pool under the
  MC, MC-CC, D or D-COH criterion.

``generate`` dispatches on the scheme names used in study configs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy import linalg

from gpce_bench.basis import InputSpec, MultiIndexSet, assemble_matrix, evaluate_basis_matrix
from gpce_bench.criteria import hybrid_scores, maximin_distance, phi_p
from gpce_bench.errors import ConfigError, SamplingError
from shared.utils import derive_seed

logger = logging.getLogger(__name__)

GREEDY_CRITERIA = ("MC", "MC-CC", "D", "D-COH")
_CANDIDATE_BLOCK = 5e5  # doubles per candidate row block in the coherence scan


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    weights: np.ndarray
    scheme: str
    seed: int
    order: np.ndarray | None = None

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.size != points.shape[0]:
            raise SamplingError(f"{weights.size} weights for {points.shape[0]} points")
        if points.size and (points.min() < 0.0 or points.max() > 1.0):
            raise SamplingError("sample coordinates must lie in [0, 1]")
        if np.any(weights <= 0.0) or not np.all(np.isfinite(weights)):
            raise SamplingError("sample weights must be finite and strictly positive")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def weighted(self) -> bool:
        return bool(np.any(self.weights != 1.0))

    def prefix(self, n: int) -> "SampleSet":
        """First n points (nested designs reuse prefixes of one maximal set)."""
        order = None if self.order is None else self.order[:n]
        return SampleSet(self.points[:n], self.weights[:n], self.scheme, self.seed, order)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.points, columns=[f"x{k + 1}" for k in range(self.d)])
        if self.weighted:
            df["weight"] = self.weights
        if self.order is not None:
            df["order"] = self.order.astype(int)
        return df


def _unweighted(points: np.ndarray, scheme: str, seed: int) -> SampleSet:
    return SampleSet(points, np.ones(points.shape[0]), scheme, seed)


@dataclass(frozen=True)
class GreedyConfig:
    pool_size: int
    criterion: str
    target_size: int

    def __post_init__(self):
        if self.criterion not in GREEDY_CRITERIA:
            raise ConfigError(f"criterion must be one of {GREEDY_CRITERIA}, got {self.criterion!r}")
        if self.target_size < 2:
            raise ConfigError("greedy target_size must be >= 2")
        if self.target_size > self.pool_size:
            raise SamplingError(f"pool exhausted: target {self.target_size} > pool {self.pool_size}")


@dataclass(frozen=True)
class ChainParams:
    burn_in: int = 1000
    thin: int = 10
    proposal: str = "auto"  # auto | chebyshev | uniform

    def resolve(self, basis: MultiIndexSet) -> str:
        if self.proposal == "auto":
            return "chebyshev" if basis.p >= basis.d else "uniform"
        if self.proposal not in ("chebyshev", "uniform"):
            raise ConfigError(f"unknown proposal {self.proposal!r}")
        return self.proposal


@dataclass(frozen=True)
class EseParams:
    n_outer: int = 30
    n_inner: int | None = None  # default min(50, 2M)
    threshold_init: float = 0.005  # relative to the initial phi_p
    decrease: float = 0.9
    increase: float = 1.1
    p_exp: float = 10
    t: float = 2
    periodic: bool = False


def random_grid(M: int, d: int, seed: int) -> SampleSet:
    if M < 1 or d < 1:
        raise ConfigError(f"random grid needs M >= 1 and d >= 1, got M={M}, d={d}")
    rng = np.random.default_rng(seed)
    return _unweighted(rng.random((M, d)), "random", seed)


def _stratified(rng: np.random.Generator, lower: np.ndarray, width: np.ndarray, d: int) -> np.ndarray:
    """One point per stratum [lower[j], lower[j] + width[j]] in every column, rows permuted per column."""
    M = lower.size
    design = np.empty((M, d))
    for k in range(d):
        perm = rng.permutation(M)
        u = rng.random(M)
        # (P - U) / M with P = perm + 1
        design[:, k] = lower[perm] + (1.0 - u) * width[perm]
    return np.clip(design, 0.0, 1.0)


def lhs_standard(M: int, d: int, seed: int) -> SampleSet:
    if M < 1:
        raise ConfigError(f"LHS needs M >= 1, got {M}")
    rng = np.random.default_rng(seed)
    return _unweighted(_stratified(rng, np.arange(M) / M, np.full(M, 1.0 / M), d), "lhs_std", seed)


def _distance_objective(
    criterion: str, p_exp: float, t: float, periodic: bool
) -> Callable[[np.ndarray], float]:
    """Lower is better."""
    if criterion == "maximin":
        return lambda x: -maximin_distance(x, t=t, periodic=periodic)
    if criterion == "phi_p":
        return lambda x: phi_p(x, p_exp=p_exp, t=t, periodic=periodic)
    raise ConfigError(f"pool criterion must be 'maximin' or 'phi_p', got {criterion!r}")


def lhs_pool_optimal(
    M: int,
    d: int,
    seed: int,
    n_pool: int = 100,
    criterion: str = "maximin",
    p_exp: float = 10,
    t: float = 2,
    periodic: bool = False,
) -> SampleSet:
    """Best of ``n_pool`` standard LHS designs; candidate 0 is ``lhs_standard(M, d, seed)``."""
    if n_pool < 1:
        raise ConfigError(f"n_pool must be >= 1, got {n_pool}")
    objective = _distance_objective(criterion, p_exp, t, periodic)
    best, best_score = None, np.inf
    for k in range(n_pool):
        sub_seed = seed if k == 0 else derive_seed(seed, "lhs_pool", k)
        candidate = lhs_standard(M, d, sub_seed).points
        score = objective(candidate) if M >= 2 else 0.0
        if best is None or score < best_score:
            best, best_score = candidate, score
    scheme = "lhs_mm" if criterion == "maximin" else "lhs_phip"
    return _unweighted(best, scheme, seed)


def stretched_strata(M: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """(lower, width) of M strata: border strata shrunk to alpha / M, the M - 2 interior strata equal."""
    if alpha == 1.0:
        return np.arange(M) / M, np.full(M, 1.0 / M)
    border = alpha / M
    inner = (1.0 - 2.0 * border) / (M - 2) if M > 2 else 0.0
    lower = np.concatenate([[0.0], border + inner * np.arange(M - 2), [1.0 - border]])
    width = np.concatenate([[border], np.full(M - 2, inner), [border]])
    return lower, width


def _ese_optimize(design: np.ndarray, rng: np.random.Generator, params: EseParams) -> np.ndarray:
    """Element-exchange ESE: threshold acceptance inside, best-so-far tracking outside."""
    M, d = design.shape
    if params.n_outer <= 0 or M < 2:
        return design
    objective = _distance_objective("phi_p", params.p_exp, params.t, params.periodic)
    n_inner = params.n_inner or min(50, 2 * M)
    x = design.copy()
    phi_cur = objective(x)
    best, phi_best = x.copy(), phi_cur
    phi_start = phi_cur
    threshold = params.threshold_init * phi_cur if np.isfinite(phi_cur) else 0.0
    for _ in range(params.n_outer):
        phi_before = phi_best
        for i in range(n_inner):
            col = i % d
            a, b = rng.choice(M, size=2, replace=False)
            trial = x.copy()
            trial[[a, b], col] = trial[[b, a], col]
            phi_trial = objective(trial)
            if phi_trial - phi_cur <= threshold * rng.random():
                x, phi_cur = trial, phi_trial
                if phi_cur < phi_best:
                    best, phi_best = x.copy(), phi_cur
        threshold *= params.decrease if phi_best < phi_before else params.increase
    logger.debug("ESE phi_p %.6g -> %.6g", phi_start, phi_best)
    return best


def lhs_sc_ese(
    M: int, d: int, seed: int, alpha: float = 0.25, ese_params: EseParams | None = None
) -> SampleSet:
    if M < 2:
        raise ConfigError(f"SC-ESE needs M >= 2 (border strata undefined), got {M}")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha must be in (0, 1], got {alpha}")
    rng = np.random.default_rng(seed)
    initial = _stratified(rng, *stretched_strata(M, alpha), d)
    design = _ese_optimize(initial, rng, ese_params or EseParams())
    return _unweighted(design, "lhs_sc_ese", seed)


def _draw_proposals(rng: np.random.Generator, n: int, d: int, proposal: str) -> tuple[np.ndarray, np.ndarray]:
    if proposal == "uniform":
        xi = rng.uniform(-1.0, 1.0, size=(n, d))
        return xi, np.full(n, -d * np.log(2.0))
    # Chebyshev (arcsine) density 1 / (pi sqrt(1 - x^2))
    xi = -np.cos(np.pi * rng.random((n, d)))
    xi = np.clip(xi, -1.0 + 1e-15, 1.0 - 1e-15)
    log_g = -d * np.log(np.pi) - 0.5 * np.sum(np.log1p(-(xi**2)), axis=1)
    return xi, log_g


def _basis_bound_sq(basis: MultiIndexSet, xi: np.ndarray, block: int = 20000) -> np.ndarray:
    out = np.empty(xi.shape[0])
    for start in range(0, xi.shape[0], block):
        stop = start + block
        out[start:stop] = np.sum(evaluate_basis_matrix(basis, xi[start:stop]) ** 2, axis=1)
    return out


def coherence_optimal(
    M: int, basis: MultiIndexSet, seed: int, chain_params: ChainParams | None = None
) -> SampleSet:
    """Independence Metropolis-Hastings chain targeting P(xi) B^2(xi); weights 1 / B."""
    if basis.size == 0:
        raise ConfigError("coherence-optimal sampling needs a non-empty basis")
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    params = chain_params or ChainParams()
    proposal = params.resolve(basis)
    rng = np.random.default_rng(seed)
    n_steps = params.burn_in + M * params.thin
    xi, log_g = _draw_proposals(rng, n_steps + 1, basis.d, proposal)
    b2 = _basis_bound_sq(basis, xi)
    if not np.all(np.isfinite(b2)) or np.any(b2 <= 0.0):
        raise SamplingError("non-finite or vanishing basis bound B(xi)")
    log_w = np.log(b2) - log_g  # log target / proposal, up to constants
    log_u = np.log(rng.random(n_steps))

    current = 0
    accepted = 0
    kept = np.empty(M, dtype=np.int64)
    for step in range(n_steps):
        candidate = step + 1
        if log_u[step] < log_w[candidate] - log_w[current]:
            current = candidate
            accepted += 1
        offset = step + 1 - params.burn_in
        if offset > 0 and offset % params.thin == 0:
            kept[offset // params.thin - 1] = current
    logger.info("coherence-optimal chain (%s proposal): acceptance ratio %.3f", proposal, accepted / n_steps)

    points = np.clip(0.5 * (xi[kept] + 1.0), 0.0, 1.0)
    weights = 1.0 / np.sqrt(b2[kept])
    return SampleSet(points, weights, "co", seed)


def _coherence_block(gram: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Mutual coherence of the Gram matrix ``gram + r r^T`` for each row r, one column at a time."""
    b, k = rows.shape
    diag = np.diag(gram)[None, :] + rows**2
    mu = np.zeros(b)
    buf = np.empty((b, k - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / np.sqrt(diag)
        for i in range(k - 1):
            out = buf[:, : k - 1 - i]
            np.multiply(rows[:, i : i + 1], rows[:, i + 1 :], out=out)
            out += gram[i, i + 1 :]
            np.abs(out, out=out)
            out *= inv[:, i + 1 :]
            out *= inv[:, i : i + 1]
            np.maximum(mu, out.max(axis=1), out=mu)
    # a zero column makes every pair with it fully coherent
    mu[np.any(diag == 0.0, axis=1)] = 1.0
    return np.minimum(mu, 1.0)


def _coherence_terms(
    gram: np.ndarray, n_rows: int, candidates: np.ndarray, need_gamma: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    """Mutual coherence (and average cross-correlation) after appending each candidate row.

    ``gram`` is Psi^T Psi of the rows selected so far, ``n_rows`` the row count after the append.
    """
    k = gram.shape[0]
    block = max(1, int(_CANDIDATE_BLOCK // k))
    mu = np.empty(candidates.shape[0])
    for start in range(0, candidates.shape[0], block):
        mu[start : start + block] = _coherence_block(gram, candidates[start : start + block])
    if not need_gamma:
        return mu, None
    # ||A - r r^T / m||_F^2 with A = I - G / m
    a = np.eye(k) - gram / n_rows
    sq_norm = np.sum(candidates**2, axis=1)
    quad = np.einsum("ij,ij->i", candidates @ a, candidates)
    gamma = (np.sum(a**2) - 2.0 * quad / n_rows + sq_norm**2 / n_rows**2) / (k * (k - 1))
    return mu, gamma


def _d_scores(psi_opt: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Negative log determinant growth from appending each candidate row (lower is better)."""
    m, k = psi_opt.shape
    with np.errstate(divide="ignore"):
        if m < k:
            # det([A; r][A; r]^T) = det(A A^T) * ||(I - P_rowspace(A)) r||^2
            q, _ = linalg.qr(psi_opt.T, mode="economic")
            resid = np.sum(candidates**2, axis=1) - np.sum((candidates @ q) ** 2, axis=1)
            return -np.log(np.maximum(resid, 0.0))
        # det(G + r r^T) = det(G) * (1 + r^T G^-1 r)
        gram = psi_opt.T @ psi_opt
        solved = np.linalg.lstsq(gram, candidates.T, rcond=None)[0]
        return -np.log1p(np.einsum("ij,ji->i", candidates, solved))


def greedy_scores(
    psi_opt: np.ndarray, candidates: np.ndarray, criterion: str, gram: np.ndarray | None = None
) -> np.ndarray:
    """Criterion value of [psi_opt; r] for each candidate row r; the greedy step takes the argmin."""
    if criterion in ("D", "D-COH"):
        return _d_scores(psi_opt, candidates)
    if criterion not in ("MC", "MC-CC"):
        raise ConfigError(f"unknown greedy criterion {criterion!r}")
    if gram is None:
        gram = psi_opt.T @ psi_opt
    mu, gamma = _coherence_terms(gram, psi_opt.shape[0] + 1, candidates, need_gamma=criterion == "MC-CC")
    return mu if gamma is None else hybrid_scores(mu, gamma)


def greedy_order(psi_pool: np.ndarray, target_size: int, criterion: str, first: int) -> np.ndarray:
    n_pool = psi_pool.shape[0]
    if target_size > n_pool:
        raise SamplingError(f"pool exhausted: target {target_size} > pool {n_pool}")
    selected = [int(first)]
    available = np.ones(n_pool, dtype=bool)
    available[first] = False
    gram = np.outer(psi_pool[first], psi_pool[first])
    for _ in range(1, target_size):
        candidates = np.flatnonzero(available)
        scores = greedy_scores(psi_pool[selected], psi_pool[candidates], criterion, gram)
        best = int(candidates[int(np.argmin(scores))])
        selected.append(best)
        available[best] = False
        gram += np.outer(psi_pool[best], psi_pool[best])
    return np.asarray(selected, dtype=np.int64)


def greedy_l1_optimal(
    config: GreedyConfig,
    basis: MultiIndexSet,
    spec: InputSpec | None,
    seed: int,
    chain_params: ChainParams | None = None,
) -> SampleSet:
    """Greedy selection of ``target_size`` rows from a random (or coherence-optimal) pool."""
    pool_seed = derive_seed(seed, "greedy_pool")
    if config.criterion == "D-COH":
        pool = coherence_optimal(config.pool_size, basis, pool_seed, chain_params)
    else:
        pool = random_grid(config.pool_size, basis.d, pool_seed)
    psi_pool = assemble_matrix(pool, basis, spec).values
    first = int(np.random.default_rng(seed).integers(config.pool_size))
    order = greedy_order(psi_pool, config.target_size, config.criterion, first)
    scheme = "greedy_" + config.criterion.lower().replace("-", "_")
    return SampleSet(pool.points[order], pool.weights[order], scheme, seed, order)


SCHEMES = (
    "random",
    "lhs_std",
    "lhs_mm",
    "lhs_phip",
    "lhs_sc_ese",
    "co",
    "greedy_mc",
    "greedy_mc_cc",
    "greedy_d",
    "greedy_d_coh",
)
BASIS_SCHEMES = ("co", "greedy_mc", "greedy_mc_cc", "greedy_d", "greedy_d_coh")
# designs whose prefixes are again designs of the same scheme
NESTED_SCHEMES = ("random", "co", "greedy_mc", "greedy_mc_cc", "greedy_d", "greedy_d_coh")


def generate(
    scheme: str,
    M: int,
    d: int,
    seed: int,
    basis: MultiIndexSet | None = None,
    spec: InputSpec | None = None,
    pool_size: int | None = None,
) -> SampleSet:
    """Dispatch on a scheme name; basis schemes need ``basis``."""
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
    if scheme in BASIS_SCHEMES:
        if basis is None:
            raise ConfigError(f"scheme {scheme!r} needs a basis (order, interaction order, dimension)")
        if basis.d != d:
            raise ConfigError(f"basis dimension {basis.d} does not match d={d}")
    if scheme == "random":
        return random_grid(M, d, seed)
    if scheme == "lhs_std":
        return lhs_standard(M, d, seed)
    if scheme == "lhs_mm":
        return lhs_pool_optimal(M, d, seed, criterion="maximin")
    if scheme == "lhs_phip":
        return lhs_pool_optimal(M, d, seed, criterion="phi_p")
    if scheme == "lhs_sc_ese":
        return lhs_sc_ese(M, d, seed)
    if scheme == "co":
        return coherence_optimal(M, basis, seed)
    criterion = {"greedy_mc": "MC", "greedy_mc_cc": "MC-CC", "greedy_d": "D", "greedy_d_coh": "D-COH"}[scheme]
    config = GreedyConfig(pool_size=pool_size or 10 * M, criterion=criterion, target_size=M)
    return greedy_l1_optimal(config, basis, spec, seed)
