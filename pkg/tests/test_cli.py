import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from gpce_bench.basis import InputSpec, build_multi_index_set
import gpce_bench.bench as bench_module
from gpce_bench.bench import ConvergenceRecord, StudyConfig, records_frame, summarize, write_csv
from gpce_bench.cli import FULL_FREQUENCIES, PRESET_DIR, full_resolution, main
from gpce_bench.errors import ConfigError
from gpce_bench.surrogate import GpceModel, predict, save_model

TINY_CONFIG = {
    "problem": {"name": "ishigami", "order": 3, "interaction_order": 2},
    "schemes": ["random", {"label": "lhs", "grid": "lhs_std"}],
    "grid": {"sizes": [10, 15, 20]},
    "solver": {"name": "lars", "folds": 3},
    "seeds": {"master": 5},
    "study": {"repetitions": 2, "thresholds": [0.01, 0.1], "n_test": 300, "n_reference": 2000},
}


def _write_config(tmp_path: Path, data: dict) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def test_bench_writes_reports_and_is_reproducible(tmp_path, capsys):
    config = _write_config(tmp_path, TINY_CONFIG)
    first, second = tmp_path / "run1", tmp_path / "run2"
    assert main(["bench", str(config), "--out", str(first), "--jobs", "1", "--plot-data"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "ok"
    for name in ("records.csv", "summary.csv", "success_rates.csv", "convergence_stats.csv", "manifest.json"):
        assert (first / name).exists()
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert len(manifest["outputs"]) == 4

    assert main(["bench", str(config), "--out", str(second), "--jobs", "1"]) == 0
    assert (first / "records.csv").read_bytes() == (second / "records.csv").read_bytes()
    summary = pd.read_csv(first / "summary.csv", na_values=["-"])
    assert set(summary["metric"]) == {"nrmsd", "mean_err", "std_err"}
    assert summary["grid"].iloc[0] == "random"


def test_bench_rejects_unknown_scheme(tmp_path, caplog):
    config = _write_config(tmp_path, {**TINY_CONFIG, "schemes": ["sobol"]})
    assert main(["bench", str(config), "--out", str(tmp_path / "out")]) == 1
    assert "schemes[0].grid" in caplog.text


def test_bench_rejects_unknown_preset(tmp_path):
    assert main(["bench", "--preset", "no-such-preset", "--out", str(tmp_path / "out")]) == 1


def test_bench_failure_keeps_finished_records(tmp_path, monkeypatch, capsys):
    real_run_unit = bench_module.run_unit

    def failing_run_unit(ctx, entry, rep):
        if entry.label == "random" and rep == 1:
            raise RuntimeError("boom")
        return real_run_unit(ctx, entry, rep)

    monkeypatch.setattr(bench_module, "run_unit", failing_run_unit)
    config = _write_config(tmp_path, TINY_CONFIG)
    out = tmp_path / "out"
    assert main(["bench", str(config), "--out", str(out), "--jobs", "1"]) == 2
    assert json.loads(capsys.readouterr().out)["status"] == "failed"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert "boom" in manifest["error"]
    records = pd.read_csv(out / "records.csv")
    assert set(records["scheme"]) == {"random"}
    assert set(records["rep"]) == {0}
    assert not (out / "summary.csv").exists()


@pytest.mark.parametrize("path", sorted(PRESET_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_presets_parse(path):
    config = StudyConfig.from_json(path)
    assert config.repetitions >= 1
    assert config.schemes


def test_preset_names():
    names = {p.stem for p in PRESET_DIR.glob("*.json")}
    assert names == {"ishigami-fig3", "rosenbrock-fig5", "lpp-fig7", "electrode-fig9-reduced"}


def test_full_flag_restores_all_frequencies():
    reduced = StudyConfig.from_json(PRESET_DIR / "electrode-fig9-reduced.json")
    assert reduced.n_frequencies == 64
    assert full_resolution(reduced).n_frequencies == FULL_FREQUENCIES == 1000
    with pytest.raises(ConfigError):
        full_resolution(StudyConfig.from_json(PRESET_DIR / "ishigami-fig3.json"))


def test_full_flag_rejected_for_other_problems(tmp_path):
    out = tmp_path / "out"
    assert main(["bench", "--preset", "ishigami-fig3", "--full", "--out", str(out)]) == 1
    assert not (out / "manifest.json").exists()


def test_sample_writes_a_stratified_design(tmp_path, capsys):
    out = tmp_path / "lhs.csv"
    assert main(["sample", "--scheme", "lhs-std", "-M", "4", "-d", "2", "--seed", "3", "--out", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["rows"] == 4
    df = pd.read_csv(out)
    assert list(df.columns) == ["x1", "x2"]
    for col in ("x1", "x2"):
        assert sorted(np.floor(df[col] * 4).astype(int).tolist()) == [0, 1, 2, 3]


def test_sample_greedy_records_pool_order(tmp_path):
    out = tmp_path / "greedy.csv"
    args = ["sample", "--scheme", "greedy-mc", "-M", "5", "-d", "2", "--order", "2", "--pool-size", "20"]
    assert main(args + ["--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert "order" in df.columns
    assert df["order"].nunique() == 5


def test_sample_basis_scheme_needs_a_basis(tmp_path):
    out = tmp_path / "co.csv"
    assert main(["sample", "--scheme", "co", "-M", "5", "-d", "2", "--out", str(out)]) == 1
    assert not out.exists()


def test_fit_then_moments(tmp_path, capsys):
    model = tmp_path / "ishigami.json"
    args = ["fit", "--problem", "ishigami", "--scheme", "random", "-M", "300", "--seed", "1", "--n-test", "1000"]
    assert main(args + ["--out", str(model)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["basis_size"] == 91
    assert report["nrmsd"] < 0.05
    assert main(["moments", "--model", str(model)]) == 0
    m = json.loads(capsys.readouterr().out)
    assert m["mean"][0] == pytest.approx(3.5, abs=0.1)
    assert m["std"][0] == pytest.approx(2.5942, abs=0.1)


def test_predict_reports_out_of_domain_rows(tmp_path, capsys):
    basis = build_multi_index_set(2, 2, 2)
    model = GpceModel(basis, InputSpec.uniform(2), np.linspace(1.0, 0.0, basis.size))
    model_path = save_model(model, tmp_path / "model.json")
    points = pd.DataFrame({"x1": [0.0, 2.0, 0.5], "x2": [0.0, 0.0, -0.5]})
    points.to_csv(tmp_path / "points.csv", index=False)
    out = tmp_path / "pred.csv"
    code = main(["predict", "--model", str(model_path), "--points", str(tmp_path / "points.csv"), "--out", str(out)])
    assert code == 2
    report = json.loads(capsys.readouterr().out)
    assert [e["row"] for e in report["errors"]] == [1]
    written = pd.read_csv(out)
    assert written["row"].tolist() == [0, 2]
    expected = predict(model, points.to_numpy()[[0, 2]])[:, 0]
    assert np.allclose(written["y1"].to_numpy(), expected, rtol=1e-12)


def test_overview_combines_summaries(tmp_path):
    rows = []
    for scheme, errors in (("random", [1e-1, 1e-3]), ("lhs", [1e-3, 1e-4])):
        for rep in range(2):
            rows += [ConvergenceRecord(scheme, rep, n, e, 0.5, e, e) for n, e in zip((10, 20), errors)]
    summary = summarize(records_frame(rows), [1e-2])
    paths = []
    for name in ("p1", "p2"):
        paths.append(f"{name}={write_csv(summary, tmp_path / f'{name}.csv')}")
    out = tmp_path / "overview.csv"
    assert main(["overview", *paths, "--out", str(out)]) == 0
    overview = pd.read_csv(out, na_values=["-"])
    assert overview.loc[overview["grid"] == "lhs", "rel_n_eps"].iloc[0] == pytest.approx(10 / 15)
