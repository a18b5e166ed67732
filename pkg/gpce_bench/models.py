"""Reference models of the benchmark and the problem registry used by configs and the CLI."""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from gpce_bench.basis import InputSpec
from gpce_bench.errors import ConfigError, DomainError


@dataclass(frozen=True)
class TestProblem:
    name: str
    spec: InputSpec
    evaluate: Callable[[np.ndarray], np.ndarray]  # (N, d) physical points -> (N,) or (N, N_y)
    order: int
    interaction_order: int
    n_qoi: int = 1

    __test__ = False  # not a pytest class


def ishigami(x, a: float = 7.0, b: float = 0.1, x3: float = 1.0):
    """sin x1 + a sin^2 x2 + b x3^4 sin x1 with x3 held fixed."""
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return np.sin(x1) + a * np.sin(x2) ** 2 + b * x3**4 * np.sin(x1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise DomainError(f"rosenbrock needs d >= 2, got {x.shape[-1]}")
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (head - 1.0) ** 2, axis=-1)


def lpp(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise DomainError(f"lpp needs d >= 2, got {x.shape[-1]}")
    return np.sum(x[..., :-1] * x[..., 1:], axis=-1)


ELECTRODE_NAMES = ("R_s", "R_ct", "R_d", "Q_d", "alpha_d", "Q_dl", "alpha_dl")
ELECTRODE_LOWER = (0.0, 9.0e3, 108.0e3, 3.6e-10, 0.855, 5.4e-7, 0.603)
ELECTRODE_UPPER = (1.0e3, 11.0e3, 132.0e3, 4.4e-10, 1.0, 6.6e-7, 0.737)
ELECTRODE_MEAN = (500.0, 10.0e3, 120.0e3, 4.0e-10, 0.95, 6.0e-7, 0.67)


def electrode_impedance(params, omega):
    """Randles circuit impedance; broadcasts params (..., 7) against omega.

    Z = R_s + 1 / (Q_dl (j w)^a_dl + 1 / (R_ct + R_d / (1 + R_d Q_d (j w)^a_d)))
    """
    p = np.asarray(params, dtype=float)
    r_s, r_ct, r_d, q_d, a_d, q_dl, a_dl = (p[..., k, None] for k in range(7))
    jw = 1j * np.atleast_1d(np.asarray(omega, dtype=float))
    diffusion = r_d / (1.0 + r_d * q_d * jw**a_d)
    z = r_s + 1.0 / (q_dl * jw**a_dl + 1.0 / (r_ct + diffusion))
    if np.ndim(omega) == 0:
        z = z[..., 0]
    return z


def frequency_grid(n: int = 1000, f_min: float = 1.0, f_max: float = 1.0e9) -> np.ndarray:
    if n < 1:
        raise ConfigError(f"frequency count must be >= 1, got {n}")
    return np.logspace(np.log10(f_min), np.log10(f_max), n)


def electrode_qoi_vector(params, frequencies=None):
    """[Re Z(w_1..w_F), Im Z(w_1..w_F)] with w = 2 pi f."""
    if frequencies is None:
        frequencies = frequency_grid()
    z = electrode_impedance(params, 2.0 * np.pi * np.asarray(frequencies, dtype=float))
    return np.concatenate([z.real, z.imag], axis=-1)


PROBLEMS = ("ishigami", "rosenbrock6", "lpp30", "electrode")


def get_problem(name: str, n_frequencies: int = 1000) -> TestProblem:
    if name == "ishigami":
        return TestProblem(name, InputSpec.uniform(2, -np.pi, np.pi), ishigami, order=12, interaction_order=2)
    if name == "rosenbrock6":
        return TestProblem(name, InputSpec.uniform(6), rosenbrock, order=5, interaction_order=2)
    if name == "lpp30":
        return TestProblem(name, InputSpec.uniform(30), lpp, order=2, interaction_order=2)
    if name == "electrode":
        spec = InputSpec(ELECTRODE_LOWER, ELECTRODE_UPPER, ELECTRODE_NAMES)
        evaluate = partial(electrode_qoi_vector, frequencies=frequency_grid(n_frequencies))
        return TestProblem(name, spec, evaluate, order=5, interaction_order=3, n_qoi=2 * n_frequencies)
    raise ConfigError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}")


def qoi_names(problem: TestProblem) -> tuple[str, ...] | None:
    if problem.name != "electrode":
        return None
    n = problem.n_qoi // 2
    return tuple(f"re_{k}" for k in range(n)) + tuple(f"im_{k}" for k in range(n))
