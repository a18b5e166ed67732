"""Repeated convergence studies and their statistics.

``run_study`` fits one surrogate per (scheme, repetition, N) and records the
NRMSD on a shared test set, the mutual coherence of the measurement matrix and
the errors of the first two moments. The remaining functions turn those
records into crossing points, success rates, Mann-Whitney p-values and the
summary tables written by ``gpce-bench bench``.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import norm, rankdata

from gpce_bench.basis import MultiIndexSet, assemble_matrix, build_multi_index_set
from gpce_bench.criteria import mutual_coherence
from gpce_bench.errors import BenchError, ConfigError, CriterionError, GpceError
from gpce_bench.models import PROBLEMS, TestProblem, get_problem, qoi_names
from gpce_bench.sampling import NESTED_SCHEMES, SCHEMES, SampleSet, generate
from gpce_bench.solver import SelectionRule
from gpce_bench.surrogate import (
    Moments,
    evaluate_in_chunks,
    fit,
    moments,
    nrmsd_values,
    predict,
    reference_moments_mc,
    validation_points,
)
from shared.utils import derive_seed, format_sig

logger = logging.getLogger(__name__)

METRICS = ("nrmsd", "mean_err", "std_err")
RECORD_COLUMNS = ["scheme", "rep", "n", "nrmsd", "mu", "mean_err", "std_err"]
SUMMARY_COLUMNS = [
    "grid",
    "n_eps_median",
    "n_eps_std",
    "n_sr95",
    "n_sr99",
    "p_value",
    "metric",
    "threshold",
    "recross",
    "rel_n_eps",
    "rel_n_sr95",
    "rel_n_sr99",
]
EXACT_MAX_N = 8


# --- configuration -------------------------------------------------------

@dataclass(frozen=True)
class SchemeEntry:
    label: str
    grid: str
    solver: str = "lars"


_TOP_KEYS = {"problem", "schemes", "grid", "solver", "seeds", "study"}
_PROBLEM_KEYS = {"name", "order", "interaction_order", "n_frequencies"}
_SCHEME_KEYS = {"label", "grid", "solver"}
_GRID_KEYS = {"sizes", "start", "stop", "step"}
_SOLVER_KEYS = {"name", "folds"}
_SEED_KEYS = {"master"}
_STUDY_KEYS = {"repetitions", "thresholds", "n_test", "n_reference", "pool_factor", "baseline"}
_SOLVER_NAMES = ("lars", "pinv")


def _section(data: Mapping, key: str, allowed: set, required: bool = False) -> dict:
    value = data.get(key, {} if not required else None)
    if value is None:
        raise ConfigError(f"missing section {key!r}")
    if not isinstance(value, Mapping):
        raise ConfigError(f"{key}: expected an object")
    _reject_unknown(value, allowed, key)
    return dict(value)


def _reject_unknown(data: Mapping, allowed: set, path: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"unknown config key {where}")


def _int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _solver_name(value, path: str) -> str:
    if value not in _SOLVER_NAMES:
        raise ConfigError(f"{path}: unknown solver {value!r}; expected one of {', '.join(_SOLVER_NAMES)}")
    return value


@dataclass(frozen=True)
class StudyConfig:
    problem: str
    schemes: tuple[SchemeEntry, ...]
    sizes: tuple[int, ...]
    order: int | None = None
    interaction_order: int | None = None
    n_frequencies: int = 1000
    solver: str = "lars"
    folds: int = 10
    master_seed: int = 0
    repetitions: int = 30
    thresholds: tuple[float, ...] = (1e-3, 1e-2, 1e-1)
    n_test: int = 10000
    n_reference: int = 10**7
    pool_factor: int = 10
    baseline: str = "random"

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            expected = ", ".join(PROBLEMS)
            raise ConfigError(f"problem.name: unknown problem {self.problem!r}; expected one of {expected}")
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise ConfigError("grid: sample sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError("grid: sample sizes must be strictly increasing")
        if self.repetitions < 2:
            raise ConfigError(f"study.repetitions: must be >= 2, got {self.repetitions}")
        labels = [s.label for s in self.schemes]
        if not labels:
            raise ConfigError("schemes: at least one scheme is required")
        if len(set(labels)) != len(labels):
            raise ConfigError("schemes: labels must be unique")
        if self.baseline not in labels:
            raise ConfigError(f"study.baseline: {self.baseline!r} is not one of the scheme labels {labels}")

    @property
    def max_size(self) -> int:
        return self.sizes[-1]

    @classmethod
    def from_dict(cls, data: Mapping) -> "StudyConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(data, _TOP_KEYS, "")
        problem = _section(data, "problem", _PROBLEM_KEYS, required=True)
        grid = _section(data, "grid", _GRID_KEYS, required=True)
        solver = _section(data, "solver", _SOLVER_KEYS)
        seeds = _section(data, "seeds", _SEED_KEYS)
        study = _section(data, "study", _STUDY_KEYS)

        if "name" not in problem:
            raise ConfigError("problem.name: required")
        solver_name = _solver_name(solver.get("name", "lars"), "solver.name")
        schemes = cls._parse_schemes(data.get("schemes"), solver_name)

        if "sizes" in grid:
            if set(grid) != {"sizes"}:
                raise ConfigError("grid: use either sizes or start/stop/step")
            sizes = tuple(_int(n, f"grid.sizes[{i}]", 1) for i, n in enumerate(grid["sizes"]))
        else:
            missing = [k for k in ("start", "stop", "step") if k not in grid]
            if missing:
                raise ConfigError(f"grid.{missing[0]}: required without grid.sizes")
            start = _int(grid["start"], "grid.start", 1)
            stop = _int(grid["stop"], "grid.stop", start)
            step = _int(grid["step"], "grid.step", 1)
            sizes = tuple(range(start, stop + 1, step))

        thresholds = study.get("thresholds", [1e-3, 1e-2, 1e-1])
        if not thresholds or any(not isinstance(t, (int, float)) or t <= 0 for t in thresholds):
            raise ConfigError("study.thresholds: expected a non-empty list of positive numbers")

        def optional_int(key: str, minimum: int):
            value = problem.get(key)
            return None if value is None else _int(value, f"problem.{key}", minimum)

        return cls(
            problem=str(problem["name"]),
            schemes=schemes,
            sizes=sizes,
            order=optional_int("order", 0),
            interaction_order=optional_int("interaction_order", 0),
            n_frequencies=_int(problem.get("n_frequencies", 1000), "problem.n_frequencies", 1),
            solver=solver_name,
            folds=_int(solver.get("folds", 10), "solver.folds", 2),
            master_seed=_int(seeds.get("master", 0), "seeds.master", 0),
            repetitions=_int(study.get("repetitions", 30), "study.repetitions"),
            thresholds=tuple(float(t) for t in thresholds),
            n_test=_int(study.get("n_test", 10000), "study.n_test", 2),
            n_reference=_int(study.get("n_reference", 10**7), "study.n_reference", 2),
            pool_factor=_int(study.get("pool_factor", 10), "study.pool_factor", 1),
            baseline=str(study.get("baseline", "random")),
        )

    @staticmethod
    def _parse_schemes(raw, default_solver: str) -> tuple[SchemeEntry, ...]:
        if not isinstance(raw, list):
            raise ConfigError("schemes: expected a list")
        entries = []
        for i, item in enumerate(raw):
            path = f"schemes[{i}]"
            if isinstance(item, str):
                item = {"grid": item}
            if not isinstance(item, Mapping):
                raise ConfigError(f"{path}: expected a grid name or an object")
            _reject_unknown(item, _SCHEME_KEYS, path)
            grid = item.get("grid")
            if grid not in SCHEMES:
                raise ConfigError(f"{path}.grid: unknown grid {grid!r}; expected one of {', '.join(SCHEMES)}")
            solver = _solver_name(item.get("solver", default_solver), f"{path}.solver")
            entries.append(SchemeEntry(label=str(item.get("label", grid)), grid=grid, solver=solver))
        return tuple(entries)

    @classmethod
    def from_json(cls, path: Path) -> "StudyConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        problem = {"name": self.problem, "n_frequencies": self.n_frequencies}
        if self.order is not None:
            problem["order"] = self.order
        if self.interaction_order is not None:
            problem["interaction_order"] = self.interaction_order
        return {
            "problem": problem,
            "schemes": [asdict(s) for s in self.schemes],
            "grid": {"sizes": list(self.sizes)},
            "solver": {"name": self.solver, "folds": self.folds},
            "seeds": {"master": self.master_seed},
            "study": {
                "repetitions": self.repetitions,
                "thresholds": list(self.thresholds),
                "n_test": self.n_test,
                "n_reference": self.n_reference,
                "pool_factor": self.pool_factor,
                "baseline": self.baseline,
            },
        }


# --- study ---------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRecord:
    scheme: str
    rep: int
    n: int
    nrmsd: float
    mu: float
    mean_err: float
    std_err: float


@dataclass(frozen=True)
class StudyContext:
    config: StudyConfig
    problem: TestProblem
    basis: MultiIndexSet
    x_test: np.ndarray
    y_test: np.ndarray
    reference: Moments


def prepare_study(config: StudyConfig) -> StudyContext:
    problem = get_problem(config.problem, config.n_frequencies)
    order = problem.order if config.order is None else config.order
    p_i = problem.interaction_order if config.interaction_order is None else config.interaction_order
    basis = build_multi_index_set(problem.spec.d, order, p_i)
    x_test = validation_points(problem.spec, config.n_test, derive_seed(config.master_seed, "test"))
    y_test = evaluate_in_chunks(problem.evaluate, x_test)
    reference = reference_moments_mc(
        problem.evaluate, problem.spec, config.n_reference, derive_seed(config.master_seed, "reference")
    )
    logger.info(
        "study %s: d=%d, N_c=%d, %d scheme(s) x %d repetitions, sizes %s",
        problem.name, problem.spec.d, basis.size, len(config.schemes), config.repetitions, list(config.sizes),
    )
    return StudyContext(config, problem, basis, x_test, y_test, reference)


def _relative_errors(estimate: Moments, reference: Moments, n_reference: int) -> tuple[float, float]:
    """Relative moment errors averaged over QOIs; absolute where the reference is indistinguishable from 0."""
    mean_scale = np.abs(reference.mean)
    mean_zero = mean_scale <= 3.0 * reference.std / math.sqrt(n_reference)
    mean_err = np.abs(estimate.mean - reference.mean) / np.where(mean_zero, 1.0, mean_scale)
    std_zero = reference.std <= 1e-12
    std_err = np.abs(estimate.std - reference.std) / np.where(std_zero, 1.0, reference.std)
    return float(np.mean(mean_err)), float(np.mean(std_err))


def _evaluate_size(
    ctx: StudyContext, entry: SchemeEntry, rep: int, samples: SampleSet, y, seed: int
) -> ConvergenceRecord:
    problem = ctx.problem
    selection = SelectionRule(kind="cv", folds=ctx.config.folds, seed=derive_seed(seed, "cv", samples.size))
    model = fit(samples, y, ctx.basis, problem.spec, entry.solver, selection, qoi_names(problem))
    error = nrmsd_values(predict(model, ctx.x_test), ctx.y_test).mean
    try:
        mu = mutual_coherence(assemble_matrix(samples, ctx.basis, problem.spec))
    except CriterionError:
        mu = float("nan")
    mean_err, std_err = _relative_errors(moments(model), ctx.reference, ctx.config.n_reference)
    return ConvergenceRecord(entry.label, rep, samples.size, error, mu, mean_err, std_err)


def _design(ctx: StudyContext, entry: SchemeEntry, n: int, seed: int) -> SampleSet:
    pool = ctx.config.pool_factor * ctx.config.max_size
    return generate(entry.grid, n, ctx.basis.d, seed, ctx.basis, ctx.problem.spec, pool_size=pool)


def run_unit(ctx: StudyContext, entry: SchemeEntry, rep: int) -> list[ConvergenceRecord]:
    """All grid sizes of one (scheme, repetition); failures become missing records."""
    config = ctx.config
    seed = derive_seed(config.master_seed, entry.label, rep)
    spec = ctx.problem.spec
    records: list[ConvergenceRecord] = []
    nested = entry.grid in NESTED_SCHEMES
    if nested:
        try:
            full = _design(ctx, entry, config.max_size, seed)
        except GpceError as exc:
            logger.warning("%s rep %d: sampling failed: %s", entry.label, rep, exc)
            return records
        y_full = np.asarray(ctx.problem.evaluate(spec.from_hypercube(full.points)), dtype=float)

    for n in config.sizes:
        try:
            if nested:
                samples, y = full.prefix(n), y_full[:n]
            else:
                samples = _design(ctx, entry, n, derive_seed(seed, n))
                y = ctx.problem.evaluate(spec.from_hypercube(samples.points))
            records.append(_evaluate_size(ctx, entry, rep, samples, y, seed))
        except GpceError as exc:
            logger.warning("%s rep %d N=%d: recorded as missing: %s", entry.label, rep, n, exc)
            continue
    logger.info("%s rep %d: %d/%d sizes recorded", entry.label, rep, len(records), len(config.sizes))
    return records


def iter_study(config: StudyConfig, jobs: int = 1) -> Iterator[list[ConvergenceRecord]]:
    """Records of each (scheme, repetition) unit, yielded in submission order as units finish."""
    ctx = prepare_study(config)
    units = [(entry, rep) for entry in config.schemes for rep in range(config.repetitions)]
    parallel = Parallel(n_jobs=jobs, return_as="generator")
    yield from parallel(delayed(run_unit)(ctx, entry, rep) for entry, rep in units)


def run_study(config: StudyConfig, jobs: int = 1) -> list[ConvergenceRecord]:
    return [record for unit in iter_study(config, jobs) for record in unit]


# --- statistics ----------------------------------------------------------

@dataclass(frozen=True)
class Crossing:
    n: float | None
    recross: bool = False


def error_crossing(curve: Sequence[tuple[float, float]], threshold: float) -> Crossing:
    """First N where the error reaches ``threshold``, interpolated linearly in (N, log10 eps)."""
    points = [(float(n), float(e)) for n, e in curve if np.isfinite(e)]
    for i, (n1, e1) in enumerate(points):
        if e1 > threshold:
            continue
        recross = any(e > threshold for _, e in points[i + 1:])
        if i == 0:
            return Crossing(n1, recross)
        n0, e0 = points[i - 1]
        if e1 <= 0.0:
            return Crossing(n1, recross)
        frac = (math.log10(threshold) - math.log10(e0)) / (math.log10(e1) - math.log10(e0))
        return Crossing(n0 + frac * (n1 - n0), recross)
    return Crossing(None, False)


def records_frame(records: Iterable[ConvergenceRecord]) -> pd.DataFrame:
    rows = [asdict(r) for r in records]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def _as_frame(records) -> pd.DataFrame:
    return records if isinstance(records, pd.DataFrame) else records_frame(records)


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")


def scheme_crossings(
    records, scheme: str, threshold: float, metric: str = "nrmsd", repetitions: int | None = None
) -> list[Crossing]:
    """One crossing per repetition; repetitions without records never cross."""
    df = _as_frame(records)
    df = df[df["scheme"] == scheme]
    reps = sorted(df["rep"].unique()) if repetitions is None else range(repetitions)
    out = []
    for rep in reps:
        curve = df[df["rep"] == rep].sort_values("n")
        out.append(error_crossing(list(zip(curve["n"], curve[metric])), threshold))
    return out


def success_rate_curve(
    records,
    threshold: float,
    scheme: str | None = None,
    metric: str = "nrmsd",
    repetitions: int | None = None,
    sizes: Sequence[int] | None = None,
) -> list[tuple[int, float]]:
    """(N, fraction of repetitions with error <= threshold) per grid size.

    Missing entries count as failures, including sizes where no repetition of
    ``scheme`` left a record; the grid is ``sizes`` or every N in ``records``.
    """
    _check_metric(metric)
    df = _as_frame(records)
    grid = sorted(int(n) for n in (df["n"].unique() if sizes is None else set(sizes)))
    if scheme is not None:
        df = df[df["scheme"] == scheme]
    total = repetitions if repetitions is not None else df["rep"].nunique()
    if total == 0:
        return [(n, 0.0) for n in grid]
    hits = df[df[metric] <= threshold].groupby("n").size()
    return [(n, int(hits.get(n, 0)) / total) for n in grid]


def n_for_rate(curve: Sequence[tuple[float, float]], q: float) -> float | None:
    """Smallest N at which the success rate reaches q, interpolated linearly between grid sizes."""
    for i, (n1, r1) in enumerate(curve):
        if r1 < q - 1e-12:
            continue
        if i == 0:
            return float(n1)
        n0, r0 = curve[i - 1]
        return float(n0 + (q - r0) / (r1 - r0) * (n1 - n0))
    return None


def _rank_sum_exact_p(a: np.ndarray, b: np.ndarray) -> float:
    combined = np.concatenate([a, b])
    ranks = rankdata(combined)
    observed = ranks[: a.size].sum()
    hits = total = 0
    for positions in itertools.combinations(range(combined.size), a.size):
        total += 1
        if ranks[list(positions)].sum() <= observed + 1e-9:
            hits += 1
    return hits / total


def _normal_p(a: np.ndarray, b: np.ndarray) -> float:
    n_a, n_b = a.size, b.size
    n = n_a + n_b
    ranks = rankdata(np.concatenate([a, b]))
    u = ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0
    _, ties = np.unique(ranks, return_counts=True)
    tie_term = np.sum(ties**3 - ties) / (n * (n - 1))
    sigma = math.sqrt(n_a * n_b / 12.0 * ((n + 1) - tie_term))
    if sigma == 0.0:
        return 1.0
    z = (u + 0.5 - n_a * n_b / 2.0) / sigma
    return float(norm.cdf(z))


def mann_whitney_u_one_tailed(sample_a, sample_b, method: str = "auto") -> float:
    """P-value for "a tends to be smaller than b"; undefined values (None/nan) rank as +inf."""
    a = np.array([np.inf if v is None or not np.isfinite(v) else v for v in sample_a], dtype=float)
    b = np.array([np.inf if v is None or not np.isfinite(v) else v for v in sample_b], dtype=float)
    if a.size == 0 or b.size == 0:
        raise BenchError("Mann-Whitney test needs two non-empty samples")
    if method not in ("auto", "exact", "normal"):
        raise ConfigError(f"method must be auto, exact or normal, got {method!r}")
    exact = method == "exact" or (method == "auto" and max(a.size, b.size) <= EXACT_MAX_N)
    return _rank_sum_exact_p(a, b) if exact else _normal_p(a, b)


def _ratio(value, reference):
    if value is None or reference is None or reference == 0:
        return None
    return value / reference


def _median_std(crossings: list[Crossing]) -> tuple[float | None, float | None]:
    values = np.array([np.inf if c.n is None else c.n for c in crossings])
    median = float(np.median(values)) if values.size else np.inf
    defined = values[np.isfinite(values)]
    std = float(np.std(defined, ddof=1)) if defined.size >= 2 else None
    return (median if np.isfinite(median) else None), std


def summarize(
    records,
    thresholds: Sequence[float],
    baseline: str = "random",
    metric: str = "nrmsd",
    repetitions: int | None = None,
    sizes: Sequence[int] | None = None,
) -> pd.DataFrame:
    """Per threshold and scheme: crossing median/std, N_sr95, N_sr99 and the p-value against the baseline."""
    _check_metric(metric)
    df = _as_frame(records)
    schemes = set(df["scheme"].unique())
    if baseline not in schemes:
        raise BenchError(f"baseline scheme {baseline!r} has no records")
    order = [baseline] + sorted(schemes - {baseline})
    reps = {s: repetitions or int(df.loc[df["scheme"] == s, "rep"].max()) + 1 for s in order}

    rows = []
    for threshold in thresholds:
        crossings = {s: scheme_crossings(df, s, threshold, metric, reps[s]) for s in order}
        base_values = [c.n for c in crossings[baseline]]
        stats = {}
        for s in order:
            median, std = _median_std(crossings[s])
            curve = success_rate_curve(df, threshold, s, metric, reps[s], sizes)
            stats[s] = (median, std, n_for_rate(curve, 0.95), n_for_rate(curve, 0.99))
        base = stats[baseline]
        for s in order:
            median, std, sr95, sr99 = stats[s]
            p_value = None
            if s != baseline:
                p_value = mann_whitney_u_one_tailed([c.n for c in crossings[s]], base_values)
            rows.append({
                "grid": s,
                "n_eps_median": median,
                "n_eps_std": std,
                "n_sr95": sr95,
                "n_sr99": sr99,
                "p_value": p_value,
                "metric": metric,
                "threshold": threshold,
                "recross": sum(c.recross for c in crossings[s]),
                "rel_n_eps": _ratio(median, base[0]),
                "rel_n_sr95": _ratio(sr95, base[2]),
                "rel_n_sr99": _ratio(sr99, base[3]),
            })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def success_rates_frame(
    records,
    thresholds: Sequence[float],
    metrics: Sequence[str] = METRICS,
    repetitions: int | None = None,
    sizes: Sequence[int] | None = None,
) -> pd.DataFrame:
    df = _as_frame(records)
    rows = []
    for metric, threshold in itertools.product(metrics, thresholds):
        for scheme in df["scheme"].unique():
            reps = repetitions or int(df.loc[df["scheme"] == scheme, "rep"].max()) + 1
            for n, rate in success_rate_curve(df, threshold, scheme, metric, reps, sizes):
                rows.append(
                    {"metric": metric, "threshold": threshold, "scheme": scheme, "n": n, "rate": rate}
                )
    return pd.DataFrame(rows, columns=["metric", "threshold", "scheme", "n", "rate"])


def relative_overview(summaries: Mapping[str, pd.DataFrame]) -> pd.DataFrame:
    """Average of the baseline-relative columns over several problems, per metric, threshold and grid."""
    if not summaries:
        raise BenchError("no summaries to combine")
    frames = []
    for problem, summary in summaries.items():
        frame = summary[["metric", "threshold", "grid", "rel_n_eps", "rel_n_sr95", "rel_n_sr99"]].copy()
        frame["problem"] = problem
        frames.append(frame)
    combined = pd.concat(frames, ignore_index=True)
    for col in ("rel_n_eps", "rel_n_sr95", "rel_n_sr99"):
        combined[col] = pd.to_numeric(combined[col], errors="coerce")
    grouped = combined.groupby(["metric", "threshold", "grid"], sort=True)
    out = grouped[["rel_n_eps", "rel_n_sr95", "rel_n_sr99"]].mean()
    out["problems"] = grouped["problem"].nunique()
    return out.reset_index()


def convergence_stats(records) -> pd.DataFrame:
    """Median and quartiles of NRMSD and mutual coherence per scheme and N (box-plot data)."""
    df = _as_frame(records)
    grouped = df.groupby(["scheme", "n"], sort=True)
    out = pd.DataFrame({
        "count": grouped["nrmsd"].count(),
        "nrmsd_q25": grouped["nrmsd"].quantile(0.25),
        "nrmsd_median": grouped["nrmsd"].median(),
        "nrmsd_q75": grouped["nrmsd"].quantile(0.75),
        "mu_q25": grouped["mu"].quantile(0.25),
        "mu_median": grouped["mu"].median(),
        "mu_q75": grouped["mu"].quantile(0.75),
    })
    return out.reset_index()


# --- report files --------------------------------------------------------

def _cell(value):
    if isinstance(value, str):
        return value
    return format_sig(None if value is None else float(value))


def _render(df: pd.DataFrame) -> pd.DataFrame:
    out = df.copy()
    for col in out.columns:
        if out[col].dtype == object or pd.api.types.is_float_dtype(out[col]):
            out[col] = out[col].map(_cell)
    return out


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    _render(df).to_csv(path, index=False)
    return path


def read_summary(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, na_values=["-"])
