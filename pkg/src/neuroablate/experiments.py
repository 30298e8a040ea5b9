"""Repeated BP-vs-EA training runs with post-training ablation sweeps."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ablation import ORIGINAL, apply, enumerate_plans
from .bp import BPConfig, LearningCurve, train_bp
from .datasets import Dataset, holdout_split
from .ea import EAConfig, evolve
from .errors import ConfigError, DivergenceError, NotReachedError
from .netcore import Network, Topology, classify_batch, predict

TRAINERS = ("bp", "ea")
CATEGORIES = ("original", "hidden", "input", "hidden-pair", "mixed")
RECORD_FIELDS = ["trainer", "seed", "plan_label", "plan_category", "success_pct", "collapsed_class", "status"]
SUMMARY_FIELDS = ["trainer", "category", "mean_pct", "sd_pct", "n"]


@dataclass(frozen=True)
class Holdout:
    fraction: float
    seed: int = 0


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: Dataset
    topology: Topology
    repetitions: int = 20
    bp: BPConfig = field(default_factory=BPConfig)
    ea: EAConfig = field(default_factory=EAConfig)
    ablation: str = "singles"  # none | singles | pairs | all
    eval_split: str | Holdout = "full"
    base_seed: int = 0
    trainers: tuple[str, ...] = TRAINERS
    ablation_mode: str = "beta"

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.ablation not in ("none", "singles", "pairs", "all"):
            raise ConfigError(f"unknown ablation set {self.ablation!r}")
        if self.eval_split != "full" and not isinstance(self.eval_split, Holdout):
            raise ConfigError("eval_split must be 'full' or a Holdout")
        for t in self.trainers:
            if t not in TRAINERS:
                raise ConfigError(f"unknown trainer {t!r}")
        if (self.dataset.n_inputs, self.dataset.n_classes) != (
            self.topology.n_inputs,
            self.topology.n_outputs,
        ):
            raise ConfigError(
                f"topology {self.topology} does not fit dataset "
                f"({self.dataset.n_inputs} inputs, {self.dataset.n_classes} classes)"
            )

    def splits(self) -> tuple[Dataset, Dataset]:
        if self.eval_split == "full":
            return self.dataset, self.dataset
        return holdout_split(self.dataset, self.eval_split.fraction, self.eval_split.seed)


@dataclass(frozen=True)
class RunRecord:
    trainer: str
    seed: int
    plan_label: str
    plan_category: str
    success_pct: float
    collapsed_class: int | None = None
    status: str = "ok"  # "ok" or "diverged"

    @property
    def failed(self) -> bool:
        return self.status != "ok"


@dataclass(frozen=True)
class StatsSummary:
    trainer: str
    category: str
    mean: float
    sd: float
    n: int
    excluded: int = 0


@dataclass
class RepetitionResult:
    seed: int
    records: list[RunRecord]
    curves: dict[str, LearningCurve]
    networks: dict[str, Network]


# metrics -------------------------------------------------------------------


def classification_success(net: Network, d: Dataset) -> float:
    """Percentage of cases whose argmax output matches the target class."""
    pred = classify_batch(predict(net, d.inputs))
    return 100.0 * float(np.count_nonzero(pred == d.labels)) / len(d)


def detect_collapse(net: Network, d: Dataset) -> int | None:
    """The class index if every case is assigned to that one class."""
    pred = classify_batch(predict(net, d.inputs))
    first = int(pred[0])
    return first if np.all(pred == first) else None


def convergence_ratio(bp_curve: LearningCurve, ea_curve: LearningCurve, threshold_error_pct: float) -> float:
    """BP epochs over EA generations needed to reach ``threshold_error_pct``."""
    b = bp_curve.first_at_or_below(threshold_error_pct)
    e = ea_curve.first_at_or_below(threshold_error_pct)
    missing = [name for name, v in (("bp", b), ("ea", e)) if v is None]
    if missing:
        raise NotReachedError(missing)
    return b / e


# protocol ------------------------------------------------------------------


def _evaluate(trainer, seed, net, plans, eval_set, mode):
    out = []
    for plan in [ORIGINAL, *plans]:
        ablated = apply(net, plan, mode) if plan.items else net
        out.append(
            RunRecord(
                trainer,
                seed,
                plan.label,
                plan.category,
                classification_success(ablated, eval_set),
                detect_collapse(ablated, eval_set),
            )
        )
    return out


def run_repetition(spec: ExperimentSpec, rep: int) -> RepetitionResult:
    seed = spec.base_seed + rep
    train, evaluation = spec.splits()
    plans = enumerate_plans(spec.topology, spec.ablation)
    records, curves, nets = [], {}, {}
    for trainer in spec.trainers:
        try:
            if trainer == "bp":
                net, curve = train_bp(spec.topology, train, replace(spec.bp, seed=seed))
            else:
                net, curve = evolve(spec.topology, train, replace(spec.ea, seed=seed))
        except DivergenceError:
            records.extend(
                RunRecord(trainer, seed, p.label, p.category, math.nan, None, "diverged")
                for p in [ORIGINAL, *plans]
            )
            continue
        curves[trainer] = curve
        nets[trainer] = net
        records.extend(_evaluate(trainer, seed, net, plans, evaluation, spec.ablation_mode))
    return RepetitionResult(seed, records, curves, nets)


def records_of(results) -> list[RunRecord]:
    """Flatten repetition results into trainer, seed, plan order."""
    order = {t: i for i, t in enumerate(TRAINERS)}
    results = sorted(results, key=lambda r: r.seed)
    records = [rec for r in results for rec in r.records]
    # stable sort keeps plan enumeration order within each (trainer, seed)
    return sorted(records, key=lambda rec: (order[rec.trainer], rec.seed))


def execute(spec: ExperimentSpec, jobs: int = 1) -> list[RepetitionResult]:
    """Run every repetition, optionally across ``jobs`` worker processes."""
    reps = range(spec.repetitions)
    if jobs <= 1:
        results = [run_repetition(spec, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_repetition, [spec] * spec.repetitions, reps))
    return sorted(results, key=lambda r: r.seed)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[RunRecord]:
    """All records, ordered by trainer, seed, then plan enumeration order."""
    return records_of(execute(spec, jobs))


def summarize(records, ddof: int = 0) -> list[StatsSummary]:
    """Mean and SD of success per trainer and plan category.

    ``ddof=0`` gives the population SD, ``ddof=1`` the sample SD. Diverged
    records are left out and counted in ``excluded``.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    groups = defaultdict(list)
    excluded = defaultdict(int)
    for r in records:
        key = (r.trainer, r.plan_category)
        if r.failed:
            excluded[key] += 1
            groups.setdefault(key, [])
        else:
            groups[key].append(r.success_pct)
    t_order = {t: i for i, t in enumerate(TRAINERS)}
    c_order = {c: i for i, c in enumerate(CATEGORIES)}
    out = []
    for key in sorted(groups, key=lambda k: (t_order.get(k[0], 99), c_order.get(k[1], 99), k)):
        v = np.array(groups[key], dtype=np.float64)
        n = len(v)
        mean = float(v.mean()) if n else math.nan
        sd = float(v.std(ddof=ddof)) if n > ddof else math.nan
        out.append(StatsSummary(key[0], key[1], mean, sd, n, excluded[key]))
    return out


# csv ------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow(
                [_fmt(v) for v in (r.trainer, r.seed, r.plan_label, r.plan_category,
                                   r.success_pct, r.collapsed_class, r.status)]
            )


def read_records_csv(path) -> list[RunRecord]:
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(
                RunRecord(
                    row["trainer"],
                    int(row["seed"]),
                    row["plan_label"],
                    row["plan_category"],
                    float(row["success_pct"]) if row["success_pct"] else math.nan,
                    int(row["collapsed_class"]) if row["collapsed_class"] else None,
                    row.get("status") or "ok",
                )
            )
    return out


def write_summary_csv(summary, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for s in summary:
            w.writerow([s.trainer, s.category, _fmt(s.mean), _fmt(s.sd), s.n])
