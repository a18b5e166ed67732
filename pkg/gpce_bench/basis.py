r"""Truncated multi-index sets and the orthonormal Legendre basis.

The GPCE basis is the tensor product

    Psi_alpha(xi) = prod_k psi_{alpha_k}(xi_k),   xi in [-1, 1]^d,

with psi_n = sqrt(2n + 1) P_n orthonormal w.r.t. the uniform density 1/2 on
[-1, 1]. The index set keeps every alpha with total order ||alpha||_1 <= p and
interaction order ||alpha||_0 <= p_i.

Sample points live in the unit hypercube [0, 1]^d; they are mapped to
[-1, 1]^d for basis evaluation and to physical units (``InputSpec``) for
model evaluation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from gpce_bench.errors import DomainError

if TYPE_CHECKING:
    from gpce_bench.sampling import SampleSet

MultiIndex = tuple[int, ...]

_BOUNDS_RTOL = 1e-12


def _compositions(total: int, parts: int):
    """Ordered ways of writing ``total`` as ``parts`` positive integers."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        edges = (0, *cuts, total)
        yield tuple(b - a for a, b in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class MultiIndexSet:
    d: int
    p: int
    p_i: int
    indices: tuple[MultiIndex, ...]

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def size(self) -> int:
        return len(self.indices)

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64).reshape(len(self.indices), self.d)

    @cached_property
    def zero_position(self) -> int:
        return self.indices.index((0,) * self.d)

    def to_dict(self) -> dict:
        return {"d": self.d, "p": self.p, "p_i": self.p_i, "indices": [list(a) for a in self.indices]}

    @classmethod
    def from_dict(cls, data: dict) -> "MultiIndexSet":
        basis = build_multi_index_set(int(data["d"]), int(data["p"]), int(data["p_i"]))
        stored = tuple(tuple(int(v) for v in a) for a in data.get("indices", basis.indices))
        if stored != basis.indices:
            raise DomainError("stored multi-indices do not match A(p, p_i) in graded lexicographic order")
        return basis


def build_multi_index_set(d: int, p: int, p_i: int) -> MultiIndexSet:
    """All alpha in N_0^d with ||alpha||_1 <= p and ||alpha||_0 <= p_i, graded lexicographic."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    p = max(int(p), 0)
    p_i = max(int(p_i), 0)
    indices: list[MultiIndex] = [(0,) * d]
    for total in range(1, p + 1):
        for k in range(1, min(p_i, total, d) + 1):
            for support in itertools.combinations(range(d), k):
                for degrees in _compositions(total, k):
                    alpha = [0] * d
                    for dim, deg in zip(support, degrees):
                        alpha[dim] = deg
                    indices.append(tuple(alpha))
    indices.sort(key=lambda a: (sum(a), a))
    return MultiIndexSet(d=d, p=p, p_i=p_i, indices=tuple(indices))


def legendre_table(max_order: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    table = np.empty((x.size, max_order + 1))
    table[:, 0] = 1.0
    if max_order >= 1:
        table[:, 1] = x
    for n in range(1, max_order):
        table[:, n + 1] = ((2 * n + 1) * x * table[:, n] - n * table[:, n - 1]) / (n + 1)
    table *= np.sqrt(2.0 * np.arange(max_order + 1) + 1.0)
    return table


def eval_basis_1d(order: int, x: float) -> float:
    if order < 0:
        raise DomainError(f"polynomial order must be >= 0, got {order}")
    return float(legendre_table(order, np.array([x]))[0, order])


def eval_basis(alpha: MultiIndex, xi) -> float:
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if len(alpha) != xi.size:
        raise DomainError(f"multi-index has {len(alpha)} entries but point has {xi.size}")
    value = 1.0
    for order, x in zip(alpha, xi):
        value *= eval_basis_1d(int(order), float(x))
    return value


def evaluate_basis_matrix(basis: MultiIndexSet, xi: np.ndarray) -> np.ndarray:
    """Unweighted Psi with entries Psi_alpha_j(xi_i); xi has shape (N, d) in [-1, 1]^d."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] != basis.d:
        raise DomainError(f"points have {xi.shape[1]} dimensions, basis has {basis.d}")
    alphas = basis.array
    psi = np.ones((xi.shape[0], basis.size))
    for k in range(basis.d):
        column_orders = alphas[:, k]
        top = int(column_orders.max(initial=0))
        if top == 0:
            continue
        psi *= legendre_table(top, xi[:, k])[:, column_orders]
    return psi


@dataclass(frozen=True)
class InputSpec:
    """Independent uniform inputs given by per-dimension bounds in physical units."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise DomainError("lower and upper bounds must be non-empty and of equal length")
        bad = [k for k, (lo, hi) in enumerate(zip(lower, upper)) if not lo < hi]
        if bad:
            raise DomainError(f"lower < upper violated in dimensions {bad}")
        if self.names is not None and len(self.names) != len(lower):
            raise DomainError("names must match the number of dimensions")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def uniform(cls, d: int, lower: float = -1.0, upper: float = 1.0) -> "InputSpec":
        return cls((lower,) * d, (upper,) * d)

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower), np.asarray(self.upper)

    def out_of_bounds(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise DomainError(f"points have {x.shape[1]} dimensions, spec has {self.d}")
        lo, hi = self.bounds
        slack = _BOUNDS_RTOL * (hi - lo)
        return np.any((x < lo - slack) | (x > hi + slack) | ~np.isfinite(x), axis=1)

    def from_hypercube(self, u: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds
        return lo + np.asarray(u, dtype=float) * (hi - lo)

    def to_dict(self) -> dict:
        out = {"lower": list(self.lower), "upper": list(self.upper)}
        if self.names is not None:
            out["names"] = list(self.names)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "InputSpec":
        names = data.get("names")
        return cls(tuple(data["lower"]), tuple(data["upper"]), tuple(names) if names else None)


def normalize_point(spec: InputSpec, x_physical) -> np.ndarray:
    x = np.asarray(x_physical, dtype=float)
    rows = np.atleast_2d(x)
    bad = np.flatnonzero(spec.out_of_bounds(rows))
    if bad.size:
        raise DomainError(f"points outside the input bounds at rows {bad.tolist()}")
    lo, hi = spec.bounds
    xi = np.clip(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0)
    return xi


def denormalize_point(spec: InputSpec, xi) -> np.ndarray:
    lo, hi = spec.bounds
    return lo + 0.5 * (np.asarray(xi, dtype=float) + 1.0) * (hi - lo)


@dataclass(frozen=True)
class GpceMatrix:
    values: np.ndarray
    weighted: bool = False


def assemble_matrix(samples: "SampleSet", basis: MultiIndexSet, spec: InputSpec | None = None) -> GpceMatrix:
    """Row-weighted measurement matrix w(xi_i) Psi_alpha_j(xi_i) for points in the unit hypercube."""
    if samples.size == 0:
        raise DomainError("cannot assemble a GPCE matrix from an empty sample set")
    if samples.d != basis.d or (spec is not None and spec.d != basis.d):
        raise DomainError(f"sample dimension {samples.d} does not match basis dimension {basis.d}")
    psi = evaluate_basis_matrix(basis, 2.0 * samples.points - 1.0)
    weights = samples.weights
    weighted = bool(np.any(weights != 1.0))
    if weighted:
        psi = psi * weights[:, None]
    return GpceMatrix(values=psi, weighted=weighted)
