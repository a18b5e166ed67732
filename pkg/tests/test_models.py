import cmath
import math
import pickle

import numpy as np
import pytest

from gpce_bench.basis import build_multi_index_set
from gpce_bench.errors import ConfigError, DomainError
from gpce_bench.models import (
    ELECTRODE_MEAN,
    PROBLEMS,
    electrode_impedance,
    electrode_qoi_vector,
    frequency_grid,
    get_problem,
    ishigami,
    lpp,
    qoi_names,
    rosenbrock,
)
from gpce_bench.sampling import random_grid
from gpce_bench.solver import SelectionRule
from gpce_bench.surrogate import fit, nrmsd, sparsity


def test_ishigami_values():
    assert ishigami([0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
    assert ishigami([np.pi / 2, np.pi / 2]) == pytest.approx(8.1)
    assert ishigami([-np.pi / 2, 0.0]) == pytest.approx(-1.1)


def test_ishigami_odd_in_first_input():
    x = random_grid(50, 2, seed=0).points * 2 * np.pi - np.pi
    flipped = x * np.array([-1.0, 1.0])
    assert np.allclose(ishigami(x) - 7 * np.sin(x[:, 1]) ** 2, -(ishigami(flipped) - 7 * np.sin(x[:, 1]) ** 2))


def test_rosenbrock_values():
    assert rosenbrock(np.ones(6)) == 0.0
    assert rosenbrock(np.zeros(6)) == 5.0
    assert rosenbrock([1.0, 2.0]) == 100.0
    assert np.all(rosenbrock(random_grid(100, 6, seed=1).points * 2 - 1) >= 0.0)
    with pytest.raises(DomainError):
        rosenbrock([1.0])


def test_lpp_values():
    assert lpp(np.zeros(30)) == 0.0
    assert lpp(np.ones(30)) == 29.0
    assert lpp([1.0, 2.0, 3.0]) == 8.0
    with pytest.raises(DomainError):
        lpp([1.0])


def test_electrode_limits():
    assert electrode_impedance(ELECTRODE_MEAN, 1e15) == pytest.approx(500.0, abs=1e-2)
    low = electrode_impedance(ELECTRODE_MEAN, 1e-9)
    assert low.real == pytest.approx(130.5e3, rel=1e-4)
    assert abs(low.imag) <= 1.0


def test_electrode_matches_hand_decomposition_at_1khz():
    r_s, r_ct, r_d, q_d, a_d, q_dl, a_dl = ELECTRODE_MEAN
    w = 2 * math.pi * 1000.0

    def cpe(q, a):
        return q * w**a * cmath.exp(1j * a * math.pi / 2)

    z_diff = r_d / (1 + r_d * cpe(q_d, a_d))
    expected = r_s + 1 / (cpe(q_dl, a_dl) + 1 / (r_ct + z_diff))
    got = complex(electrode_impedance(ELECTRODE_MEAN, w))
    assert abs(got - expected) <= 1e-10 * abs(expected)


def test_electrode_is_capacitive_across_the_band():
    z = electrode_impedance(ELECTRODE_MEAN, 2 * np.pi * frequency_grid(200))
    assert z.shape == (200,)
    assert np.all(z.imag <= 0.0)
    assert np.all(z.real >= 500.0 - 1e-9)


def test_electrode_broadcasts_parameter_rows():
    params = np.tile(ELECTRODE_MEAN, (3, 1))
    z = electrode_impedance(params, 2 * np.pi * frequency_grid(5))
    assert z.shape == (3, 5)
    assert np.allclose(z[0], z[2])


def test_electrode_qoi_vector_layout():
    freqs = frequency_grid(8)
    qoi = electrode_qoi_vector(np.asarray(ELECTRODE_MEAN)[None, :], freqs)
    assert qoi.shape == (1, 16)
    z = electrode_impedance(ELECTRODE_MEAN, 2 * np.pi * freqs[0])
    assert qoi[0, 0] == pytest.approx(z.real)
    assert qoi[0, 8] == pytest.approx(z.imag)


def test_frequency_grid():
    freqs = frequency_grid(1000)
    assert freqs[0] == pytest.approx(1.0)
    assert freqs[-1] == pytest.approx(1e9)
    assert np.all(np.diff(freqs) > 0)
    with pytest.raises(ConfigError):
        frequency_grid(0)


@pytest.mark.parametrize("name", PROBLEMS)
def test_registry_problems_evaluate_on_their_domain(name):
    problem = get_problem(name, n_frequencies=10)
    x = problem.spec.from_hypercube(random_grid(5, problem.spec.d, seed=2).points)
    y = np.asarray(problem.evaluate(x))
    assert y.shape[0] == 5
    assert np.all(np.isfinite(y))
    pickle.dumps(problem.evaluate)


def test_registry_metadata():
    assert get_problem("ishigami").spec.d == 2
    assert get_problem("lpp30").spec.d == 30
    electrode = get_problem("electrode", n_frequencies=4)
    assert electrode.n_qoi == 8
    assert qoi_names(electrode)[:2] == ("re_0", "re_1")
    assert qoi_names(electrode)[4] == "im_0"
    assert qoi_names(get_problem("ishigami")) is None
    with pytest.raises(ConfigError):
        get_problem("sobol_g")


@pytest.mark.slow
def test_lpp_expansion_has_one_term_per_product():
    problem = get_problem("lpp30")
    basis = build_multi_index_set(30, problem.order, problem.interaction_order)
    samples = random_grid(300, 30, seed=3)
    y = problem.evaluate(problem.spec.from_hypercube(samples.points))
    model = fit(samples, y, basis, problem.spec, selection=SelectionRule("last"))
    assert sparsity(model, tol=1e-8).tolist() == [29]
    assert nrmsd(model, problem.evaluate, n_test=2000, seed=2).mean < 1e-8
