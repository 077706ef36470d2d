"""Random instances, the end-to-end pipeline, and CSV experiment sweeps.

Instances draw ``d`` distinct indices uniformly without replacement and
i.i.d. amplitudes uniform on (0, 1], then normalize.  Every instance seed
is derived from ``(master seed, sparsity index, repetition)``: points and
repetitions can run in any order, or in parallel, with identical output,
and all F_min / M settings at one sparsity see the same instances.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .approx_optimizer import DEFAULT_INTERVALS, ApproxOptimizer
from .circuit_ir import circuit_singles_cost, circuit_ucr_cost
from .errors import InvariantError, ValidationError
from .exact_optimizer import optimize_exact
from .fidelity_bound import amplification_table, lower_bound
from .simulator import overlap, simulate
from .state_model import (
    SparseState,
    build_preparation_tree,
    compute_baseline_angles,
    normalize_and_validate,
)

CSV_VERSION = 1
AMPLITUDE_MODEL = "uniform(0,1] then normalized"
EXPERIMENTS = ("merge_ratio", "cost_comparison", "estimator_gap", "approx_vs_exact", "m_sweep")
TOL = 1e-10


def d_from_density(n: int, density: float) -> int:
    d = max(1, int(round(density * 2**n)))
    if d > 2**n:
        raise ValidationError(f"density {density} asks for {d} > 2^{n} amplitudes")
    return d


def instance_seed(master: int, group: int, rep: int) -> int:
    return int(np.random.SeedSequence([master, group, rep]).generate_state(1)[0])


def random_instance(n: int, d: int, seed: int) -> SparseState:
    if n < 1:
        raise ValidationError(f"need at least one qubit, got n={n}")
    if not 1 <= d <= 2**n:
        raise ValidationError(f"d={d} outside [1, 2^{n}]")
    rng = np.random.default_rng(seed)
    if d == 2**n:
        idx = np.arange(d, dtype=np.int64)
    else:
        idx = rng.choice(2**n, size=d, replace=False)
    amps = 1.0 - rng.random(d)  # (0, 1]
    return normalize_and_validate(zip(idx.tolist(), amps.tolist()), n)


@dataclass
class ResultRecord:
    seed: int | None
    n: int
    d: int
    cnots_unmerged_singles: int
    cnots_merged_singles: int
    cnots_after_exact: int
    cnots_ucr_only: int
    cnots_after_approx: int | None = None
    f_min: float | None = None
    intervals: int | None = None
    f_est: float | None = None
    f_true: float | None = None
    f_lb: float | None = None
    wall_time: float = 0.0

    def violations(self) -> list[str]:
        out = []
        if self.cnots_after_exact > min(self.cnots_ucr_only, self.cnots_unmerged_singles):
            out.append("exact cost exceeds min(singles, ucr)")
        if self.cnots_after_approx is not None and self.cnots_after_approx > self.cnots_after_exact:
            out.append("approximate cost exceeds exact cost")
        if self.f_true is not None and self.f_lb is not None and self.f_true < self.f_lb - TOL:
            out.append(f"overlap {self.f_true} below lower bound {self.f_lb}")
        if self.f_est is not None and self.f_min is not None and self.f_est < self.f_min - TOL:
            out.append(f"estimate {self.f_est} below f_min {self.f_min}")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def run_pipeline(
    state: SparseState,
    f_min: float | None = None,
    intervals: int = DEFAULT_INTERVALS,
    seed: int | None = None,
    check: bool = True,
) -> ResultRecord:
    """Baseline, exact and (if ``f_min`` is given) approximate optimization.

    With ``f_min=None`` only the exact stage runs and the approximate
    fields stay ``None``.
    """
    start = time.perf_counter()
    tree = build_preparation_tree(state)
    baseline = compute_baseline_angles(tree)
    base_circuit = baseline.to_circuit()
    exact = optimize_exact(baseline, tree)
    rec = ResultRecord(
        seed=seed,
        n=state.n,
        d=state.d,
        cnots_unmerged_singles=circuit_singles_cost(base_circuit),
        cnots_merged_singles=circuit_singles_cost(exact.optimized),
        cnots_after_exact=exact.cost.total,
        cnots_ucr_only=circuit_ucr_cost(base_circuit),
    )
    if f_min is not None:
        if not 0.0 < f_min <= 1.0:
            raise ValidationError(f"f_min must lie in (0, 1], got {f_min}")
        opt = ApproxOptimizer(baseline, tree, start=exact.optimized)
        opt.run(f_min, intervals)
        res = opt.result()
        table = amplification_table(baseline, res.optimized, tree)
        rec.cnots_after_approx = res.cost.total
        rec.f_min = f_min
        rec.intervals = intervals
        rec.f_est = res.f_est
        rec.f_lb = lower_bound(res.clusters, table)
        rec.f_true = overlap(simulate(res.optimized), state)
    rec.wall_time = time.perf_counter() - start
    if check:
        bad = rec.violations()
        if bad:
            raise InvariantError("; ".join(bad))
    return rec


# ---------------------------------------------------------------- experiments

@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 20
    sparsities: Sequence[float] = (1e-5, 1e-4, 1e-3, 1e-2)
    f_mins: Sequence[float] = (0.9, 0.95, 0.99)
    intervals: Sequence[int] = (DEFAULT_INTERVALS,)
    reps: int = 20
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.reps < 1:
            raise ValidationError("need at least one repetition")
        for D in self.sparsities:
            d_from_density(self.n, D)
        for f in self.f_mins:
            if not 0.0 < f <= 1.0:
                raise ValidationError(f"f_min must lie in (0, 1], got {f}")
        for m in self.intervals:
            if m < 1:
                raise ValidationError(f"need at least one interval, got {m}")

    @classmethod
    def defaults(cls, experiment: str, **overrides) -> "ExperimentConfig":
        """Per-experiment defaults matching the figure set-ups at desk scale."""
        base: dict = {"experiment": experiment}
        if experiment == "estimator_gap":
            base.update(n=15, sparsities=(1e-3,), f_mins=(0.8, 0.85, 0.9, 0.95, 0.99))
        elif experiment == "approx_vs_exact":
            base.update(sparsities=(1e-5, 1e-4, 1e-3))
        elif experiment == "m_sweep":
            base.update(sparsities=(5e-5,), f_mins=(0.95,), intervals=(5, 10, 20, 40))
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)


@dataclass(frozen=True)
class Point:
    index: int
    group: int  # sparsity index; instances are shared within a group
    sparsity: float
    d: int
    f_min: float | None
    intervals: int | None


def _ratio(num: float, den: float) -> float:
    # nothing to reduce counts as no reduction
    return num / den if den else 1.0


METRICS: dict[str, tuple[str, ...]] = {
    "merge_ratio": ("merged_over_unmerged",),
    "cost_comparison": ("ucr_only", "unmerged_singles", "merged_singles", "exact", "exact_over_ucr"),
    "estimator_gap": ("est_minus_true", "true_minus_lb", "f_true"),
    "approx_vs_exact": ("approx_over_exact", "f_true"),
    "m_sweep": ("approx_over_exact", "f_true"),
}


def metrics(experiment: str, rec: ResultRecord) -> dict[str, float]:
    if experiment == "merge_ratio":
        return {"merged_over_unmerged": _ratio(rec.cnots_merged_singles, rec.cnots_unmerged_singles)}
    if experiment == "cost_comparison":
        return {
            "ucr_only": rec.cnots_ucr_only,
            "unmerged_singles": rec.cnots_unmerged_singles,
            "merged_singles": rec.cnots_merged_singles,
            "exact": rec.cnots_after_exact,
            "exact_over_ucr": _ratio(rec.cnots_after_exact, rec.cnots_ucr_only),
        }
    if experiment == "estimator_gap":
        return {"est_minus_true": rec.f_est - rec.f_true, "true_minus_lb": rec.f_true - rec.f_lb, "f_true": rec.f_true}
    return {"approx_over_exact": _ratio(rec.cnots_after_approx, rec.cnots_after_exact), "f_true": rec.f_true}


def points(config: ExperimentConfig) -> list[Point]:
    exact_only = config.experiment in ("merge_ratio", "cost_comparison")
    out = []
    for group, D in enumerate(config.sparsities):
        d = d_from_density(config.n, D)
        if exact_only:
            out.append(Point(len(out), group, D, d, None, None))
            continue
        for f in config.f_mins:
            for m in config.intervals:
                out.append(Point(len(out), group, D, d, f, m))
    return out


def _run_one(args: tuple[int, int, Point, int]) -> ResultRecord:
    n, master, point, rep = args
    seed = instance_seed(master, point.group, rep)
    state = random_instance(n, point.d, seed)
    return run_pipeline(state, point.f_min, point.intervals or DEFAULT_INTERVALS, seed=seed)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    points: list[Point]
    records: list[list[ResultRecord]] = field(default_factory=list)

    def rows(self) -> list[dict]:
        out = []
        for point, recs in zip(self.points, self.records):
            per_metric: dict[str, list[float]] = {}
            for rec in recs:
                for name, value in metrics(self.config.experiment, rec).items():
                    per_metric.setdefault(name, []).append(float(value))
            for name in METRICS[self.config.experiment]:
                vals = per_metric[name]
                out.append({
                    "point": point.index, "sparsity": point.sparsity, "d": point.d,
                    "f_min": point.f_min, "intervals": point.intervals, "metric": name,
                    "mean": math.fsum(vals) / len(vals), "min": min(vals), "max": max(vals),
                    "reps": len(vals),
                })
        return out

    def to_csv(self) -> str:
        return format_csv(self.config, self.rows())


def run_experiment(
    config: ExperimentConfig, progress: Callable[[Point, int], None] | None = None
) -> ExperimentResult:
    pts = points(config)
    result = ExperimentResult(config, pts)
    for point in pts:
        jobs = [(config.n, config.seed, point, rep) for rep in range(config.reps)]
        if config.jobs > 1:
            with ProcessPoolExecutor(config.jobs) as pool:
                recs = list(pool.map(_run_one, jobs))
        else:
            recs = [_run_one(j) for j in jobs]
        result.records.append(recs)
        if progress is not None:
            progress(point, len(recs))
    return result


COLUMNS = ("experiment", "n", "point", "sparsity", "d", "f_min", "intervals", "metric", "mean", "min", "max", "reps")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def format_csv(config: ExperimentConfig, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# grprep experiment csv v{CSV_VERSION}: one row per (point, metric); mean/min/max over reps\n")
    buf.write(
        f"# experiment={config.experiment} n={config.n} reps={config.reps} seed={config.seed} "
        f"amplitudes={AMPLITUDE_MODEL} seeding=SeedSequence(master,sparsity_index,rep)\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        full = dict(row, experiment=config.experiment, n=config.n)
        writer.writerow([_fmt(full[c]) for c in COLUMNS])
    return buf.getvalue()


def parse_csv_rows(text: str) -> list[dict[str, str]]:
    """Read back rows written by :func:`format_csv` (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))
