"""End-to-end fuzzing campaigns: unfiltered and ML-pre-filtered runs,
generalization evaluation, cross-operator comparison with statistics, and
injected-bug retention analysis.

Candidate generation is seed-deterministic and identical across arms; the
pre-filter only decides what gets executed. In filtered mode the oracle is
additionally consulted on every candidate to record a ground-truth
confusion matrix; this is evaluation bookkeeping and never influences
filtering.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from shapegate import datagen, encoding, learners, registry as reg, stats
from shapegate.datagen import GenerationConfig
from shapegate.values import InputTuple

Generator = Callable[[int, int], List[InputTuple]]


class InsufficientTriggersError(Exception):
    pass


def random_generator(op: reg.OperatorSpec) -> Generator:
    def gen(n: int, seed: int) -> List[InputTuple]:
        return datagen.gen_random(op.space, GenerationConfig(n_samples=n, seed=seed))

    return gen


def weak_generator(op: reg.OperatorSpec, relax: str) -> Generator:
    def gen(n: int, seed: int) -> List[InputTuple]:
        return datagen.gen_weak(op, GenerationConfig(n_samples=n, seed=seed), relax)

    return gen


# ---------------------------------------------------------------------------
# Filters


class ModelFilter:
    """A trained classifier consulted on encoded candidates."""

    def __init__(self, model: learners.TrainedModel):
        self.model = model
        self.name = model.family

    def decide(self, tuples: Sequence[InputTuple], X: np.ndarray) -> np.ndarray:
        labels, _ = learners.predict_batch(self.model, X)
        return labels.astype(bool)


class OracleFilter:
    """Perfect filter: the oracle itself wrapped as a classifier."""

    def __init__(self, op: reg.OperatorSpec):
        self.op = op
        self.name = "oracle"

    def decide(self, tuples: Sequence[InputTuple], X: np.ndarray) -> np.ndarray:
        return np.array([self.op.oracle(t).ok for t in tuples], dtype=bool)


class ConstantFilter:
    def __init__(self, value: bool):
        self.value = value
        self.name = f"constant_{value}"

    def decide(self, tuples: Sequence[InputTuple], X: np.ndarray) -> np.ndarray:
        return np.full(len(tuples), self.value, dtype=bool)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class StageTimings:
    generation_s: float
    processing_s: float
    inference_s: float
    execution_s: float
    executed_count: int

    @property
    def total_s(self) -> float:
        return (
            self.generation_s + self.processing_s + self.inference_s + self.execution_s
        )


@dataclass(frozen=True)
class FuzzReport:
    operator: str
    mode: str
    candidates: int
    executed: int
    valid_executed: int
    invalid_executed: int
    filtered_out: int
    confusion: stats.ConfusionMatrix
    pass_rate: Optional[float]
    valid_per_second: float
    timings: StageTimings
    seed: int
    bugs_triggered: int = 0

    def __post_init__(self):
        assert self.executed == self.valid_executed + self.invalid_executed
        assert self.executed + self.filtered_out == self.candidates

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "mode": self.mode,
            "candidates": self.candidates,
            "executed": self.executed,
            "valid_executed": self.valid_executed,
            "invalid_executed": self.invalid_executed,
            "filtered_out": self.filtered_out,
            "tp": self.confusion.tp,
            "fp": self.confusion.fp,
            "tn": self.confusion.tn,
            "fn": self.confusion.fn,
            "pass_rate": self.pass_rate,
            "valid_per_second": self.valid_per_second,
            "bugs_triggered": self.bugs_triggered,
            "seed": self.seed,
            "timings": {
                "generation_s": self.timings.generation_s,
                "processing_s": self.timings.processing_s,
                "inference_s": self.timings.inference_s,
                "execution_s": self.timings.execution_s,
                "executed_count": self.timings.executed_count,
            },
        }


def run_unfiltered(
    op: reg.OperatorSpec,
    generator: Generator,
    n: int,
    seed: int,
    sleep: bool = True,
) -> FuzzReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    t0 = time.perf_counter()
    tuples = generator(n, seed)
    gen_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    valid = invalid = bugs = 0
    for t in tuples:
        res = reg.execute(op, t, sleep=sleep)
        if res.outcome.ok:
            valid += 1
            bugs += int(res.bug_triggered)
        else:
            invalid += 1
    exec_s = time.perf_counter() - t0

    timings = StageTimings(gen_s, 0.0, 0.0, exec_s, n)
    total = timings.total_s
    return FuzzReport(
        operator=op.name,
        mode="unfiltered",
        candidates=n,
        executed=n,
        valid_executed=valid,
        invalid_executed=invalid,
        filtered_out=0,
        confusion=stats.ConfusionMatrix(tp=valid, fp=invalid, tn=0, fn=0),
        pass_rate=stats.pass_rate(valid, n),
        valid_per_second=valid / total if total > 0 else 0.0,
        timings=timings,
        seed=seed,
    )


def run_filtered(
    op: reg.OperatorSpec,
    generator: Generator,
    filt,
    n: int,
    seed: int,
    batch_size: Optional[int] = None,
    sleep: bool = True,
) -> FuzzReport:
    """Process n candidates in batches: encode the batch, one batch
    inference, execute only predicted-valid candidates."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if batch_size is not None and batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    schema = encoding.build_schema(op.space)
    if isinstance(filt, ModelFilter):
        if filt.model.n_features != schema.width:
            raise learners.PredictError(
                "model width does not match the operator's feature schema"
            )
        if filt.model.schema_hash and filt.model.schema_hash != schema.hash():
            raise learners.PredictError("model schema hash mismatch")

    t0 = time.perf_counter()
    tuples = generator(n, seed)
    gen_s = time.perf_counter() - t0

    bs = batch_size or n
    proc_s = infer_s = exec_s = 0.0
    executed = valid = invalid = bugs = 0
    cm = stats.ConfusionMatrix()
    for start in range(0, n, bs):
        batch = tuples[start : start + bs]

        t0 = time.perf_counter()
        X = encoding.encode_batch(batch, op.space, schema)
        proc_s += time.perf_counter() - t0

        t0 = time.perf_counter()
        accept = filt.decide(batch, X)
        infer_s += time.perf_counter() - t0

        t0 = time.perf_counter()
        for t, a in zip(batch, accept):
            if not a:
                continue
            res = reg.execute(op, t, sleep=sleep)
            executed += 1
            if res.outcome.ok:
                valid += 1
                bugs += int(res.bug_triggered)
            else:
                invalid += 1
        exec_s += time.perf_counter() - t0

        # Ground-truth bookkeeping (free in the stub setting, not timed).
        truth = np.array([op.oracle(t).ok for t in batch], dtype=bool)
        cm = cm + stats.confusion(accept, truth)

    timings = StageTimings(gen_s, proc_s, infer_s, exec_s, executed)
    total = timings.total_s
    return FuzzReport(
        operator=op.name,
        mode="filtered",
        candidates=n,
        executed=executed,
        valid_executed=valid,
        invalid_executed=invalid,
        filtered_out=n - executed,
        confusion=cm,
        pass_rate=stats.pass_rate(valid, executed),
        valid_per_second=valid / total if total > 0 else 0.0,
        timings=timings,
        seed=seed,
        bugs_triggered=bugs,
    )


# ---------------------------------------------------------------------------
# Generalization


@dataclass(frozen=True)
class GeneralizationReport:
    operator: str
    eval: stats.EvalReport
    n: int
    seed: int
    strategy: str
    train_positives: Optional[int]
    low_support: bool

    def to_dict(self) -> dict:
        d = self.eval.to_dict()
        d.update(
            {
                "operator": self.operator,
                "n": self.n,
                "seed": self.seed,
                "strategy": self.strategy,
                "train_positives": self.train_positives,
                "low_support": self.low_support,
            }
        )
        return d


def generalize(
    op: reg.OperatorSpec,
    model: learners.TrainedModel,
    n: int = 50_000,
    seed: int = 1,
    strategy: str = "random",
    relax: str = "partial",
) -> GeneralizationReport:
    """Evaluate a model on n freshly generated labeled samples drawn with
    the training strategy but a new seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ds = datagen.generate_dataset(
        op, GenerationConfig(n_samples=n, seed=seed), strategy, relax
    )
    schema = encoding.build_schema(op.space)
    X = encoding.encode_batch(ds.tuples(), op.space, schema)
    pred, _ = learners.predict_batch(model, X)
    rep = stats.precision_recall(stats.confusion(pred, ds.labels()))
    train_pos = model.meta.get("train_positives")
    train_pos = int(train_pos) if train_pos is not None else None
    return GeneralizationReport(
        operator=op.name,
        eval=rep,
        n=n,
        seed=seed,
        strategy=strategy,
        train_positives=train_pos,
        low_support=train_pos is not None and train_pos < 100,
    )


# ---------------------------------------------------------------------------
# Cross-operator comparison


@dataclass(frozen=True)
class CampaignResult:
    pairs: Tuple[Tuple[FuzzReport, FuzzReport], ...]  # (unfiltered, filtered)
    incomplete: Tuple[str, ...]
    mean_pass_rate_unfiltered: Optional[float]
    mean_pass_rate_filtered: Optional[float]
    mean_valid_per_second_unfiltered: float
    mean_valid_per_second_filtered: float
    mean_invalid_unfiltered: float
    mean_invalid_filtered: float
    ks_unfiltered: Optional[stats.StatResult]
    ks_filtered: Optional[stats.StatResult]
    wilcoxon: stats.StatResult
    cohens_d: Optional[float]

    def summary_rows(self) -> List[dict]:
        rows = []
        for unf, fil in self.pairs:
            for r in (unf, fil):
                rows.append(
                    {
                        "operator": r.operator,
                        "mode": r.mode,
                        "avg_time_s": r.timings.total_s,
                        "total_time_s": r.timings.total_s,
                        "invalid": r.invalid_executed,
                        "pass_rate": r.pass_rate,
                        "valid_per_second": r.valid_per_second,
                    }
                )
        return rows

    def summary_csv(self) -> str:
        header = "operator,mode,avg_time_s,total_time_s,invalid,pass_rate,valid_per_s"
        lines = [header]
        for row in self.summary_rows():
            pr = "" if row["pass_rate"] is None else f"{row['pass_rate']:.4f}"
            lines.append(
                f"{row['operator']},{row['mode']},{row['avg_time_s']:.3f},"
                f"{row['total_time_s']:.3f},{row['invalid']},{pr},"
                f"{row['valid_per_second']:.2f}"
            )
        lines.append(
            f"MEAN,unfiltered,,,{self.mean_invalid_unfiltered:.1f},"
            f"{self.mean_pass_rate_unfiltered:.4f},"
            f"{self.mean_valid_per_second_unfiltered:.2f}"
        )
        lines.append(
            f"MEAN,filtered,,,{self.mean_invalid_filtered:.1f},"
            f"{self.mean_pass_rate_filtered:.4f},"
            f"{self.mean_valid_per_second_filtered:.2f}"
        )
        return "\n".join(lines) + "\n"


def compare(
    ops: Sequence[reg.OperatorSpec],
    filters: Dict[str, object],
    n: int = 5_000,
    seed: int = 0,
    relax: str = "partial",
    batch_size: Optional[int] = None,
    sleep: bool = True,
) -> CampaignResult:
    """Run both arms per operator with paired seeds and compute campaign
    statistics over the per-operator pass rates."""
    if len(ops) < 2:
        raise ValueError("compare needs at least 2 operators")
    pairs: List[Tuple[FuzzReport, FuzzReport]] = []
    incomplete: List[str] = []
    for i, op in enumerate(ops):
        op_seed = seed + 1000 * i
        gen = weak_generator(op, relax)
        try:
            unf = run_unfiltered(op, gen, n, op_seed, sleep=sleep)
            fil = run_filtered(
                op, gen, filters[op.name], n, op_seed, batch_size=batch_size, sleep=sleep
            )
            pairs.append((unf, fil))
        except (datagen.UnsatisfiableError, KeyError, learners.PredictError):
            incomplete.append(op.name)

    pr_unf = [p[0].pass_rate for p in pairs if p[0].pass_rate is not None]
    pr_fil = [p[1].pass_rate for p in pairs if p[1].pass_rate is not None]

    def maybe(fn, *args):
        try:
            return fn(*args)
        except (stats.DegenerateSampleError, ValueError):
            return None

    return CampaignResult(
        pairs=tuple(pairs),
        incomplete=tuple(incomplete),
        mean_pass_rate_unfiltered=float(np.mean(pr_unf)) if pr_unf else None,
        mean_pass_rate_filtered=float(np.mean(pr_fil)) if pr_fil else None,
        mean_valid_per_second_unfiltered=float(
            np.mean([p[0].valid_per_second for p in pairs])
        ),
        mean_valid_per_second_filtered=float(
            np.mean([p[1].valid_per_second for p in pairs])
        ),
        mean_invalid_unfiltered=float(np.mean([p[0].invalid_executed for p in pairs])),
        mean_invalid_filtered=float(np.mean([p[1].invalid_executed for p in pairs])),
        ks_unfiltered=maybe(stats.ks_normal, pr_unf),
        ks_filtered=maybe(stats.ks_normal, pr_fil),
        wilcoxon=stats.wilcoxon_rank_sum(pr_fil, pr_unf),
        cohens_d=maybe(stats.cohens_d, pr_fil, pr_unf),
    )


# ---------------------------------------------------------------------------
# Injected-bug retention


@dataclass(frozen=True)
class BugReport:
    operator: str
    description: str
    triggers_found: int
    triggers_predicted_valid: int
    seed: int

    @property
    def success_ratio(self) -> float:
        return self.triggers_predicted_valid / self.triggers_found

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "description": self.description,
            "triggers_found": self.triggers_found,
            "triggers_predicted_valid": self.triggers_predicted_valid,
            "success_ratio": self.success_ratio,
            "seed": self.seed,
        }


def bug_campaign(
    op: reg.OperatorSpec, filt, n: int, seed: int
) -> BugReport:
    """Sample n valid tuples, keep the bug triggers, report the fraction the
    filter would still execute."""
    if op.bug is None:
        raise ValueError(f"operator {op.name!r} has no injected bug")
    if n < 1:
        raise ValueError("n must be >= 1")
    valid_tuples = datagen.gen_weak(
        op, GenerationConfig(n_samples=n, seed=seed), "full"
    )
    triggers = [t for t in valid_tuples if op.bug.trigger(t)]
    if not triggers:
        raise InsufficientTriggersError(
            f"no bug trigger for {op.name} within {n} valid samples"
        )
    schema = encoding.build_schema(op.space)
    X = encoding.encode_batch(triggers, op.space, schema)
    accept = filt.decide(triggers, X)
    return BugReport(
        operator=op.name,
        description=op.bug.description,
        triggers_found=len(triggers),
        triggers_predicted_valid=int(np.sum(accept)),
        seed=seed,
    )
