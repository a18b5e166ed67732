import itertools
import json

import numpy as np
import pandas as pd
import pytest

from gpce_bench.bench import (
    ConvergenceRecord,
    SchemeEntry,
    StudyConfig,
    _relative_errors,
    convergence_stats,
    error_crossing,
    mann_whitney_u_one_tailed,
    n_for_rate,
    read_summary,
    records_frame,
    relative_overview,
    run_study,
    success_rate_curve,
    success_rates_frame,
    summarize,
    write_csv,
)
from gpce_bench.errors import BenchError, ConfigError
from gpce_bench.surrogate import Moments

SIZES = (10, 20, 30)
CURVES = {
    "random": [[1e-1, 1e-3, 1e-4], [1e-1, 1e-1, 1e-3], [1e-1, 1e-1, 1e-3]],
    "a": [[1e-3, 1e-4, 1e-5]] * 3,
    "b": [[0.5, 0.5, 0.5]] * 3,
}


def _records():
    rows = []
    for scheme, reps in CURVES.items():
        for rep, errors in enumerate(reps):
            for n, e in zip(SIZES, errors):
                rows.append(ConvergenceRecord(scheme, rep, n, e, 0.5, e, e))
    return records_frame(rows)


def _config(**overrides):
    data = {
        "problem": {"name": "ishigami"},
        "schemes": ["random"],
        "grid": {"start": 10, "stop": 30, "step": 10},
    }
    data.update(overrides)
    return data


def test_error_crossing_interpolates_in_log_error():
    assert error_crossing([(20, 1e-2), (30, 1e-4)], 1e-3).n == pytest.approx(25.0, abs=1e-12)
    assert error_crossing([(20, 1e-4), (30, 1e-5)], 1e-3).n == 20.0
    assert error_crossing([(20, 1e-1), (30, 1e-2)], 1e-3).n is None


def test_error_crossing_flags_recrossing():
    crossing = error_crossing([(10, 1e-1), (20, 1e-4), (30, 1e-2)], 1e-3)
    assert crossing.n == pytest.approx(10 + 10 * 2 / 3)
    assert crossing.recross
    assert not error_crossing([(10, 1e-1), (20, 1e-4)], 1e-3).recross


def test_error_crossing_monotone_in_threshold():
    curve = [(10, 0.3), (20, 0.05), (30, 0.004), (40, 0.0002)]
    crossings = [error_crossing(curve, t).n for t in (1e-1, 1e-2, 1e-3)]
    assert crossings == sorted(crossings)


def test_n_for_rate():
    assert n_for_rate([(40, 0.9), (44, 1.0)], 0.95) == pytest.approx(42.0)
    assert n_for_rate([(10, 1.0), (20, 1.0)], 0.95) == 10.0
    assert n_for_rate([(10, 0.2), (20, 0.5)], 0.95) is None


def test_success_rate_counts_missing_entries_as_failures():
    records = records_frame([ConvergenceRecord("random", 0, 10, 1e-4, 0.5, 0.0, 0.0)])
    assert success_rate_curve(records, 1e-3, repetitions=2) == [(10, 0.5)]
    assert success_rate_curve(records, 1e-3) == [(10, 1.0)]


def test_success_rate_fills_sizes_without_records():
    rows = [ConvergenceRecord("random", rep, n, 1e-4, 0.5, 0.0, 0.0) for rep in range(2) for n in SIZES]
    for rep in range(2):
        rows.append(ConvergenceRecord("c", rep, 10, 1e-1, 0.5, 0.0, 0.0))
        rows.append(ConvergenceRecord("c", rep, 30, 1e-5, 0.5, 0.0, 0.0))
    records = records_frame(rows)
    assert success_rate_curve(records, 1e-3, "c") == [(10, 0.0), (20, 0.0), (30, 1.0)]
    assert success_rate_curve(records, 1e-3, "c", sizes=[10, 20, 30, 40])[-1] == (40, 0.0)
    summary = summarize(records, [1e-3])
    assert summary.set_index("grid").loc["c", "n_sr95"] == pytest.approx(29.5)
    rates = success_rates_frame(records, [1e-3], metrics=["nrmsd"], sizes=[10, 20, 30, 40])
    assert len(rates[rates["scheme"] == "c"]) == 4


def test_mann_whitney_exact_cases():
    assert mann_whitney_u_one_tailed([1, 2, 3], [4, 5, 6]) == pytest.approx(0.05)
    assert mann_whitney_u_one_tailed([1, 2, 3], [1, 2, 3]) >= 0.5
    assert mann_whitney_u_one_tailed([4, 5, 6], [1, 2, 3]) >= 0.95


def test_mann_whitney_undefined_values_rank_last():
    assert mann_whitney_u_one_tailed([1.0, 2.0], [None, float("nan")]) == pytest.approx(1 / 6)
    with pytest.raises(BenchError):
        mann_whitney_u_one_tailed([], [1.0])


@pytest.mark.parametrize("seed", range(5))
def test_mann_whitney_normal_approximation_close_to_exact(seed):
    values = np.random.default_rng(seed).permutation(16).astype(float)
    a, b = values[:8], values[8:]
    exact = mann_whitney_u_one_tailed(a, b, method="exact")
    approx = mann_whitney_u_one_tailed(a, b, method="normal")
    assert abs(exact - approx) <= 0.02


def test_mann_whitney_normal_approximation_over_every_rank_sum():
    # no ties: p depends on the rank sum only, so one split per U value covers every configuration
    splits = {}
    for positions in itertools.combinations(range(16), 8):
        splits.setdefault(sum(positions), positions)
    assert len(splits) == 65
    values = np.arange(16, dtype=float)
    for positions in splits.values():
        mask = np.zeros(16, dtype=bool)
        mask[list(positions)] = True
        exact = mann_whitney_u_one_tailed(values[mask], values[~mask], method="exact")
        approx = mann_whitney_u_one_tailed(values[mask], values[~mask], method="normal")
        assert abs(exact - approx) <= 0.02


def test_summarize_known_crossings():
    summary = summarize(_records(), [1e-2])
    assert summary["grid"].tolist() == ["random", "a", "b"]
    base, a, b = (summary.iloc[i] for i in range(3))
    assert base["n_eps_median"] == pytest.approx(25.0)
    assert base["n_eps_std"] == pytest.approx(np.std([15.0, 25.0, 25.0], ddof=1))
    assert base["n_sr95"] == pytest.approx(29.25)
    assert base["n_sr99"] == pytest.approx(29.85)
    assert pd.isna(base["p_value"])
    assert base["rel_n_eps"] == pytest.approx(1.0)
    assert a["n_eps_median"] == 10.0
    assert a["n_sr95"] == 10.0
    assert a["p_value"] == pytest.approx(0.05)
    assert a["rel_n_eps"] == pytest.approx(0.4)
    assert pd.isna(b["n_eps_median"])
    assert pd.isna(b["rel_n_eps"])


def test_summarize_ignores_record_order():
    records = _records()
    shuffled = records.sample(frac=1.0, random_state=0).reset_index(drop=True)
    pd.testing.assert_frame_equal(summarize(records, [1e-2, 1e-3]), summarize(shuffled, [1e-2, 1e-3]))


def test_summarize_needs_the_baseline():
    with pytest.raises(BenchError):
        summarize(_records(), [1e-2], baseline="lhs_std")
    with pytest.raises(ConfigError):
        summarize(_records(), [1e-2], metric="bias")


def test_written_summary_marks_undefined_cells(tmp_path):
    path = write_csv(summarize(_records(), [1e-2]), tmp_path / "summary.csv")
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["grid", "n_eps_median", "n_eps_std"]
    assert lines[3].startswith("b,-,-")
    assert lines[1].split(",")[5] == "-"
    reread = read_summary(path)
    assert np.isnan(reread.loc[2, "n_eps_median"])
    assert reread.loc[0, "n_eps_median"] == 25.0


def test_success_rates_and_overview_frames():
    records = _records()
    rates = success_rates_frame(records, [1e-2], metrics=["nrmsd"])
    random_rates = rates[rates["scheme"] == "random"]["rate"].tolist()
    assert random_rates == pytest.approx([0.0, 1 / 3, 1.0])
    summary = summarize(records, [1e-2])
    overview = relative_overview({"p1": summary, "p2": summary})
    row = overview[overview["grid"] == "a"].iloc[0]
    assert row["rel_n_eps"] == pytest.approx(0.4)
    assert row["problems"] == 2
    stats = convergence_stats(records)
    assert stats["count"].unique().tolist() == [3]


def test_relative_moment_errors_fall_back_to_absolute():
    reference = Moments(np.array([0.0, 2.0]), np.array([1.0, 0.0]))
    estimate = Moments(np.array([0.1, 2.2]), np.array([1.5, 0.3]))
    mean_err, std_err = _relative_errors(estimate, reference, 10_000)
    assert mean_err == pytest.approx((0.1 + 0.1) / 2)
    assert std_err == pytest.approx((0.5 + 0.3) / 2)


def test_config_grid_range_and_round_trip():
    config = StudyConfig.from_dict(_config())
    assert config.sizes == (10, 20, 30)
    assert config.schemes == (SchemeEntry("random", "random", "lars"),)
    assert StudyConfig.from_dict(config.to_dict()) == config


def test_config_errors_name_the_offending_key():
    bad = _config(schemes=["random", {"grid": "lhs_std", "grids": 1}])
    with pytest.raises(ConfigError, match=r"schemes\[1\]\.grids"):
        StudyConfig.from_dict(bad)
    with pytest.raises(ConfigError, match=r"schemes\[0\]\.grid"):
        StudyConfig.from_dict(_config(schemes=["sobol"]))
    with pytest.raises(ConfigError, match="study.repetitions"):
        StudyConfig.from_dict(_config(study={"repetitions": 1}))
    with pytest.raises(ConfigError, match="increasing"):
        StudyConfig.from_dict(_config(grid={"sizes": [20, 10]}))
    with pytest.raises(ConfigError, match="baseline"):
        StudyConfig.from_dict(_config(schemes=["lhs_std"]))
    with pytest.raises(ConfigError, match="unknown config key"):
        StudyConfig.from_dict(_config(extra=True))


def test_config_from_json_rejects_invalid_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        StudyConfig.from_json(path)
    path.write_text(json.dumps(_config()))
    assert StudyConfig.from_json(path).problem == "ishigami"


def _tiny_study(**overrides):
    values = dict(
        problem="ishigami",
        schemes=(SchemeEntry("random", "random"), SchemeEntry("lhs_std", "lhs_std")),
        sizes=(10, 15, 20),
        order=3,
        interaction_order=2,
        folds=3,
        master_seed=7,
        repetitions=2,
        n_test=300,
        n_reference=2000,
    )
    values.update(overrides)
    return StudyConfig(**values)


def test_study_is_reproducible():
    first = records_frame(run_study(_tiny_study()))
    second = records_frame(run_study(_tiny_study()))
    assert len(first) == 12
    pd.testing.assert_frame_equal(first, second)
    assert np.all(first["nrmsd"] > 0)


@pytest.mark.slow
def test_study_does_not_depend_on_worker_count():
    config = _tiny_study()
    pd.testing.assert_frame_equal(
        records_frame(run_study(config, jobs=1)), records_frame(run_study(config, jobs=2))
    )


def test_least_squares_on_exact_polynomial_is_converged():
    config = _tiny_study(
        problem="rosenbrock6",
        schemes=(SchemeEntry("random_l2", "random", "pinv"),),
        sizes=(200, 300),
        order=4,
        baseline="random_l2",
        n_reference=1000,
    )
    records = records_frame(run_study(config))
    assert len(records) == 4
    assert np.all(records["nrmsd"] < 1e-8)
