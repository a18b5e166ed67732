from __future__ import annotations

import argparse
import json
import logging
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from gpce_bench import __version__
from gpce_bench.basis import InputSpec, build_multi_index_set
from gpce_bench.bench import (
    METRICS,
    StudyConfig,
    convergence_stats,
    iter_study,
    read_summary,
    records_frame,
    relative_overview,
    success_rates_frame,
    summarize,
    write_csv,
)
from gpce_bench.errors import ConfigError, GpceError
from gpce_bench.models import get_problem, qoi_names
from gpce_bench.sampling import BASIS_SCHEMES, SCHEMES, generate
from gpce_bench.solver import SelectionRule
from gpce_bench.surrogate import fit, load_model, moments, nrmsd, predict, save_model, sparsity
from shared.utils import derive_seed, ensure_dir, sha256_file, utcnow_iso

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path("config/config.json")
PRESET_DIR = Path(__file__).resolve().parents[1] / "config" / "presets"

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
FULL_FREQUENCIES = 1000


@dataclass
class RunManifest:
    run_at: str
    config: dict
    seed: int
    jobs: int
    version: str = __version__
    git: str | None = None
    status: str = "ok"
    error: str | None = None
    elapsed_s: float | None = None
    outputs: list[dict] = field(default_factory=list)

    def add_output(self, path: Path) -> None:
        self.outputs.append({"path": str(path), "sha256": sha256_file(path)})

    def write(self, path: Path) -> Path:
        path.write_text(json.dumps(asdict(self), indent=2))
        return path


def git_commit() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None


def resolve_config(config: str | None, preset: str | None) -> Path:
    if config and preset:
        raise ConfigError("give either a config path or --preset, not both")
    if preset:
        path = PRESET_DIR / f"{preset}.json"
        if not path.exists():
            available = sorted(p.stem for p in PRESET_DIR.glob("*.json"))
            raise ConfigError(f"--preset: unknown preset {preset!r}; available: {', '.join(available)}")
        return path
    path = Path(config) if config else DEFAULT_CONFIG
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return path


def full_resolution(config: StudyConfig) -> StudyConfig:
    if config.problem != "electrode":
        raise ConfigError(f"--full: only the electrode problem has a reduced mode, got {config.problem!r}")
    return replace(config, n_frequencies=FULL_FREQUENCIES)


def _write_reports(records: list, config: StudyConfig, out_dir: Path, manifest: RunManifest, plot_data: bool):
    frame = records_frame(records)
    manifest.add_output(write_csv(frame, out_dir / "records.csv"))
    summary = pd.concat(
        [summarize(frame, config.thresholds, config.baseline, m, config.repetitions, config.sizes) for m in METRICS],
        ignore_index=True,
    )
    manifest.add_output(write_csv(summary, out_dir / "summary.csv"))
    rates = success_rates_frame(frame, config.thresholds, repetitions=config.repetitions, sizes=config.sizes)
    manifest.add_output(write_csv(rates, out_dir / "success_rates.csv"))
    if plot_data:
        manifest.add_output(write_csv(convergence_stats(frame), out_dir / "convergence_stats.csv"))


def cmd_bench(args) -> int:
    config_path = resolve_config(args.config, args.preset)
    config = StudyConfig.from_json(config_path)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.full:
        config = full_resolution(config)
    out_dir = ensure_dir(Path(args.out))

    started = time.perf_counter()
    manifest = RunManifest(utcnow_iso(), config.to_dict(), config.master_seed, args.jobs, git=git_commit())
    code = EXIT_OK
    records: list = []
    try:
        for unit in iter_study(config, jobs=args.jobs):
            records.extend(unit)
        _write_reports(records, config, out_dir, manifest, args.plot_data)
    except Exception as exc:  # noqa: BLE001
        logger.error("bench failed: %s: %s", type(exc).__name__, exc)
        manifest.status, manifest.error = "failed", f"{type(exc).__name__}: {exc}"
        code = EXIT_RUNTIME
        if records and not manifest.outputs:
            manifest.add_output(write_csv(records_frame(records), out_dir / "records.csv"))
    manifest.elapsed_s = round(time.perf_counter() - started, 3)
    manifest_path = manifest.write(out_dir / "manifest.json")

    print(json.dumps({
        "run_at": manifest.run_at,
        "status": manifest.status,
        "config": str(config_path),
        "seed": manifest.seed,
        "elapsed_s": manifest.elapsed_s,
        "outputs": [o["path"] for o in manifest.outputs] + [str(manifest_path)],
    }, indent=2))
    return code


def _scheme(name: str) -> str:
    scheme = name.replace("-", "_")
    if scheme not in SCHEMES:
        raise ConfigError(f"--scheme: unknown scheme {name!r}; expected one of {', '.join(SCHEMES)}")
    return scheme


def _design_inputs(args, scheme: str):
    """(d, basis or None, spec) from --problem or from --dim/--order/--interaction-order."""
    if args.problem:
        problem = get_problem(args.problem, args.n_frequencies)
        spec = problem.spec
        order = problem.order if args.order is None else args.order
        p_i = problem.interaction_order if args.interaction_order is None else args.interaction_order
        return spec.d, build_multi_index_set(spec.d, order, p_i), spec
    if args.dim is None:
        raise ConfigError("--dim is required without --problem")
    spec = InputSpec.uniform(args.dim)
    if args.order is None:
        if scheme in BASIS_SCHEMES:
            raise ConfigError(f"--scheme {scheme} needs a basis: give --problem or --order")
        return args.dim, None, spec
    p_i = args.order if args.interaction_order is None else args.interaction_order
    return args.dim, build_multi_index_set(args.dim, args.order, p_i), spec


def cmd_sample(args) -> int:
    scheme = _scheme(args.scheme)
    d, basis, spec = _design_inputs(args, scheme)
    samples = generate(scheme, args.size, d, args.seed, basis, spec, pool_size=args.pool_size)
    out = Path(args.out)
    ensure_dir(out.parent)
    samples.to_frame().to_csv(out, index=False)
    print(json.dumps({
        "run_at": utcnow_iso(),
        "scheme": scheme,
        "rows": samples.size,
        "d": d,
        "weighted": samples.weighted,
        "seed": args.seed,
        "path": str(out),
    }, indent=2))
    return EXIT_OK


def cmd_fit(args) -> int:
    scheme = _scheme(args.scheme)
    problem = get_problem(args.problem, args.n_frequencies)
    d, basis, spec = _design_inputs(args, scheme)
    samples = generate(scheme, args.size, d, args.seed, basis, spec, pool_size=args.pool_size)
    y = problem.evaluate(spec.from_hypercube(samples.points))
    selection = SelectionRule(kind="cv", folds=args.folds, seed=derive_seed(args.seed, "cv"))
    model = fit(samples, y, basis, spec, args.solver, selection, qoi_names(problem))
    out = Path(args.out)
    ensure_dir(out.parent)
    save_model(model, out)
    error = nrmsd(model, problem.evaluate, n_test=args.n_test, seed=derive_seed(args.seed, "test"))
    print(json.dumps({
        "run_at": utcnow_iso(),
        "problem": problem.name,
        "scheme": scheme,
        "solver": args.solver,
        "n": samples.size,
        "basis_size": basis.size,
        "nonzero": sparsity(model).tolist(),
        "nrmsd": error.mean,
        "model": str(out),
    }, indent=2))
    return EXIT_OK


def _point_columns(df: pd.DataFrame, spec: InputSpec) -> np.ndarray:
    if spec.names and all(n in df.columns for n in spec.names):
        return df[list(spec.names)].to_numpy(dtype=float)
    named = [f"x{k + 1}" for k in range(spec.d)]
    if all(c in df.columns for c in named):
        return df[named].to_numpy(dtype=float)
    numeric = df.select_dtypes("number")
    if numeric.shape[1] < spec.d:
        raise ConfigError(f"--points: need {spec.d} numeric columns, found {numeric.shape[1]}")
    return numeric.iloc[:, : spec.d].to_numpy(dtype=float)


def cmd_predict(args) -> int:
    model = load_model(Path(args.model))
    points = _point_columns(pd.read_csv(args.points), model.spec)
    bad = model.spec.out_of_bounds(points)
    names = list(model.qoi_names) if model.qoi_names else [f"y{k + 1}" for k in range(model.n_qoi)]
    values = np.full((points.shape[0], model.n_qoi), np.nan)
    if np.any(~bad):
        values[~bad] = predict(model, points[~bad])
    out = Path(args.out)
    ensure_dir(out.parent)
    frame = pd.DataFrame(values, columns=names)
    frame.insert(0, "row", np.arange(points.shape[0]))
    frame[~bad].to_csv(out, index=False)
    errors = [{"row": int(i), "error": "point outside the input bounds"} for i in np.flatnonzero(bad)]
    report = {"run_at": utcnow_iso(), "rows": int((~bad).sum()), "path": str(out), "errors": errors}
    print(json.dumps(report, indent=2))
    if errors:
        logger.error("%d row(s) outside the input bounds", len(errors))
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_moments(args) -> int:
    model = load_model(Path(args.model))
    m = moments(model)
    names = list(model.qoi_names) if model.qoi_names else [f"y{k + 1}" for k in range(model.n_qoi)]
    print(json.dumps({
        "model": args.model,
        "qoi": names,
        "mean": m.mean.tolist(),
        "std": m.std.tolist(),
    }, indent=2))
    return EXIT_OK


def cmd_overview(args) -> int:
    summaries = {}
    for item in args.summaries:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).parent.name or Path(item).stem, item
        if not Path(path).exists():
            raise ConfigError(f"summary file not found: {path}")
        summaries[name] = read_summary(Path(path))
    overview = relative_overview(summaries)
    out = Path(args.out)
    ensure_dir(out.parent)
    write_csv(overview, out)
    report = {"run_at": utcnow_iso(), "problems": list(summaries), "rows": len(overview), "path": str(out)}
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _add_design_args(p: argparse.ArgumentParser, problem_required: bool = False) -> None:
    p.add_argument("--scheme", required=True, help=f"one of {', '.join(SCHEMES)} (hyphens allowed)")
    p.add_argument("-M", "--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--problem", required=problem_required)
    p.add_argument("-d", "--dim", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--interaction-order", type=int)
    p.add_argument("--pool-size", type=int)
    p.add_argument("--n-frequencies", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpce-bench", description="GPCE sampling-scheme benchmark")
    ap.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="run a convergence study")
    p.add_argument("config", nargs="?", help=f"study config (default {DEFAULT_CONFIG})")
    p.add_argument("--preset")
    p.add_argument("--full", action="store_true", help="electrode presets: all 1000 frequencies (2000 QOIs)")
    p.add_argument("--out", default="outputs/bench")
    p.add_argument("--seed", type=int, help="override seeds.master")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--plot-data", action="store_true", help="also write convergence_stats.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sample", help="write a sample set as CSV")
    _add_design_args(p)
    p.add_argument("--out", default="outputs/samples.csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a surrogate and write it as JSON")
    _add_design_args(p, problem_required=True)
    p.add_argument("--solver", default="lars", choices=["lars", "pinv"])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--n-test", type=int, default=10000)
    p.add_argument("--out", default="outputs/model.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a saved surrogate at points from a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out", default="outputs/predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("moments", help="print mean and std of a saved surrogate")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("overview", help="average baseline-relative columns over several summaries")
    p.add_argument("summaries", nargs="+", help="summary.csv paths, optionally as name=path")
    p.add_argument("--out", default="outputs/overview.csv")
    p.set_defaults(func=cmd_overview)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except GpceError as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
