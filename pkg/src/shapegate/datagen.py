"""Training data generation: random sampling, pairwise covering arrays,
weak-constraint generators, execution labeling, and dataset splitting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from shapegate import registry as reg
from shapegate.values import (
    BoolV,
    FLOAT_MAX,
    FLOAT_MIN,
    FLOAT_SPECIAL_PROB,
    FLOAT_SPECIALS,
    FloatV,
    InputTuple,
    IntV,
    INT_MAX,
    INT_MIN,
    MAX_ARITY,
    MAX_RANK,
    ParamSpace,
    ParamSpec,
    Shape,
    StrV,
    TensorListV,
    TensorV,
    Value,
    require_kinds,
)


class UnsatisfiableError(Exception):
    """Rejection sampling exhausted its budget without a valid tuple."""


class DegenerateSplitError(Exception):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    n_samples: int = 10_000
    seed: int = 0
    pairwise_levels_per_param: int = 8
    allow_nonfinite_floats: bool = False

    def __post_init__(self):
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")
        if self.pairwise_levels_per_param < 2:
            raise ValueError("pairwise_levels_per_param must be >= 2")


@dataclass(frozen=True)
class LabeledSample:
    args: InputTuple
    valid: bool
    message: Optional[str] = None

    def __post_init__(self):
        if self.valid and self.message is not None:
            raise ValueError("valid samples carry no message")
        if not self.valid and not self.message:
            raise ValueError("invalid samples carry a rejection message")


@dataclass(frozen=True)
class Dataset:
    operator: str
    samples: Tuple[LabeledSample, ...]
    seed: int
    strategy: str

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def tuples(self) -> List[InputTuple]:
        return [s.args for s in self.samples]

    def labels(self) -> np.ndarray:
        return np.fromiter(
            (s.valid for s in self.samples), dtype=np.int8, count=len(self.samples)
        )


# ---------------------------------------------------------------------------
# Random strategy


def _sample_shape(rng: np.random.Generator) -> Shape:
    rank = int(rng.integers(0, MAX_RANK + 1))
    return tuple(int(d) for d in rng.integers(0, 11, size=rank))


def _sample_float(rng: np.random.Generator, cfg: GenerationConfig) -> float:
    if rng.random() < FLOAT_SPECIAL_PROB:
        return float(FLOAT_SPECIALS[int(rng.integers(0, len(FLOAT_SPECIALS)))])
    return float(rng.uniform(FLOAT_MIN, FLOAT_MAX))


def sample_value(
    rng: np.random.Generator, spec: ParamSpec, cfg: GenerationConfig
) -> Value:
    if spec.kind == "tensor":
        return TensorV(_sample_shape(rng))
    if spec.kind == "tensor_list":
        arity = int(rng.integers(1, MAX_ARITY + 1))
        return TensorListV(tuple(_sample_shape(rng) for _ in range(arity)))
    if spec.kind == "int":
        lo, hi = spec.int_bounds or (INT_MIN, INT_MAX)
        return IntV(int(rng.integers(lo, hi + 1)))
    if spec.kind == "float":
        return FloatV(_sample_float(rng, cfg))
    if spec.kind == "bool":
        return BoolV(bool(rng.integers(0, 2)))
    if spec.kind == "str":
        choices = spec.str_choices or ()
        return StrV(choices[int(rng.integers(0, len(choices)))])
    raise AssertionError(spec.kind)


def gen_random(space: ParamSpace, cfg: GenerationConfig) -> List[InputTuple]:
    """Uniform independent sampling inside the generator bounds."""
    rng = np.random.default_rng(cfg.seed)
    return [
        tuple(sample_value(rng, p, cfg) for p in space) for _ in range(cfg.n_samples)
    ]


# ---------------------------------------------------------------------------
# Pairwise strategy

_STRATA_DIMS = (0, 1, 2, 3, 5, 10)
_RANK_BUCKETS = ((0, 1), (2, 3), (4, 5), (6, 6))
_INT_BOUNDARY = (-1, 0, 1, 2, 3)


def _bucket_shape(rng: np.random.Generator, lo: int, hi: int) -> Shape:
    rank = int(rng.integers(lo, hi + 1))
    return tuple(
        int(_STRATA_DIMS[i]) for i in rng.integers(0, len(_STRATA_DIMS), size=rank)
    )


def _tensor_levels(rng: np.random.Generator, n: int) -> List[Value]:
    # Two shapes per rank bucket, then top up / trim to n distinct shapes.
    shapes: List[Shape] = []
    for lo, hi in _RANK_BUCKETS:
        for _ in range(2):
            for _attempt in range(50):
                s = _bucket_shape(rng, lo, hi)
                if s not in shapes:
                    shapes.append(s)
                    break
    while len(shapes) < n:
        s = _bucket_shape(rng, 0, MAX_RANK)
        if s not in shapes:
            shapes.append(s)
    return [TensorV(s) for s in shapes[:n]]


def _tensor_list_levels(rng: np.random.Generator, n: int) -> List[Value]:
    levels: List[Value] = []
    for i in range(n):
        arity = i % MAX_ARITY + 1
        members = []
        for _ in range(arity):
            rank = 1 if rng.random() < 0.6 else int(rng.integers(0, 3))
            members.append(
                tuple(
                    int(_STRATA_DIMS[j])
                    for j in rng.integers(0, len(_STRATA_DIMS), size=rank)
                )
            )
        levels.append(TensorListV(tuple(members)))
    return levels


def _int_levels(rng: np.random.Generator, spec: ParamSpec, n: int) -> List[Value]:
    # Half boundary values, half uniform draws, classic boundary-value mix.
    lo, hi = spec.int_bounds or (INT_MIN, INT_MAX)
    vals: List[int] = [v for v in _INT_BOUNDARY if lo <= v <= hi][: n // 2 + 1]
    while len(vals) < n:
        v = int(rng.integers(lo, hi + 1))
        if v not in vals or hi - lo + 1 <= len(vals):
            vals.append(v)
    return [IntV(v) for v in vals[:n]]


def build_level_pool(
    space: ParamSpace, cfg: GenerationConfig, rng: Optional[np.random.Generator] = None
) -> Dict[str, List[Value]]:
    """Finite per-parameter value lists for the pairwise strategy."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = cfg.pairwise_levels_per_param
    pool: Dict[str, List[Value]] = {}
    for p in space:
        if p.kind == "tensor":
            pool[p.name] = _tensor_levels(rng, n)
        elif p.kind == "tensor_list":
            pool[p.name] = _tensor_list_levels(rng, n)
        elif p.kind == "int":
            pool[p.name] = _int_levels(rng, p, n)
        elif p.kind == "float":
            pool[p.name] = [FloatV(_sample_float(rng, cfg)) for _ in range(n)]
        elif p.kind == "bool":
            pool[p.name] = [BoolV(False), BoolV(True)]
        elif p.kind == "str":
            pool[p.name] = [StrV(c) for c in (p.str_choices or ())[:n]]
    return pool


def _uncovered_pairs(n_params: int, pool_sizes: Sequence[int]):
    pairs = set()
    for i in range(n_params):
        for j in range(i + 1, n_params):
            for a in range(pool_sizes[i]):
                for b in range(pool_sizes[j]):
                    pairs.add((i, j, a, b))
    return pairs


def build_covering_suite(
    pool: Dict[str, List[Value]],
    space: ParamSpace,
    rng: np.random.Generator,
    n_candidates: int = 50,
) -> List[InputTuple]:
    """Greedy pairwise covering array: at each step, of `n_candidates` random
    rows keep the one covering the most uncovered level pairs."""
    names = [p.name for p in space]
    sizes = [len(pool[nm]) for nm in names]
    k = len(names)
    if k == 1:
        return [(lvl,) for lvl in pool[names[0]]]
    uncovered = _uncovered_pairs(k, sizes)
    suite_idx: List[Tuple[int, ...]] = []
    while uncovered:
        best_row = None
        best_gain = -1
        for _ in range(n_candidates):
            row = tuple(int(rng.integers(0, s)) for s in sizes)
            gain = sum(
                1
                for i in range(k)
                for j in range(i + 1, k)
                if (i, j, row[i], row[j]) in uncovered
            )
            if gain > best_gain:
                best_gain = gain
                best_row = row
        assert best_row is not None
        if best_gain == 0:
            # Force progress: repair a random uncovered pair into the row.
            i, j, a, b = next(iter(uncovered))
            row = list(best_row)
            row[i], row[j] = a, b
            best_row = tuple(row)
        suite_idx.append(best_row)
        for i in range(k):
            for j in range(i + 1, k):
                uncovered.discard((i, j, best_row[i], best_row[j]))
    return [
        tuple(pool[names[i]][row[i]] for i in range(k)) for row in suite_idx
    ]


def gen_pairwise(space: ParamSpace, cfg: GenerationConfig) -> List[InputTuple]:
    """Pairwise covering suite, cycled from its first row until n_samples."""
    if len(space) < 1:
        raise ValueError("pairwise generation needs at least one parameter")
    rng = np.random.default_rng(cfg.seed)
    pool = build_level_pool(space, cfg, rng)
    suite = build_covering_suite(pool, space, rng)
    out: List[InputTuple] = []
    while len(out) < cfg.n_samples:
        take = min(len(suite), cfg.n_samples - len(out))
        out.extend(suite[:take])
    return out


# ---------------------------------------------------------------------------
# Weak generators

RELAXATION_LEVELS = ("none", "partial", "full")
FULL_RELAXATION_BUDGET = 1_000_000


def gen_weak(
    op: reg.OperatorSpec, cfg: GenerationConfig, relax: str
) -> List[InputTuple]:
    """Emulate a constraint-extraction generator of configurable strength.

    none: uniform random. partial: the operator's frozen weak sampler
    (a fixed constraint subset enforced). full: rejection sampling against
    the oracle, using the partial sampler as the proposal distribution.
    """
    if relax not in RELAXATION_LEVELS:
        raise ValueError(f"unknown relaxation level {relax!r}")
    if relax == "none":
        return gen_random(op.space, cfg)
    if op.partial_sampler is None:
        raise ValueError(f"operator {op.name!r} has no partial sampler")
    rng = np.random.default_rng(cfg.seed)
    if relax == "partial":
        return [op.partial_sampler(rng) for _ in range(cfg.n_samples)]
    out: List[InputTuple] = []
    rejections = 0
    while len(out) < cfg.n_samples:
        t = op.partial_sampler(rng)
        if op.oracle(t).ok:
            out.append(t)
        else:
            rejections += 1
            if rejections > FULL_RELAXATION_BUDGET:
                raise UnsatisfiableError(
                    f"no valid tuple for {op.name} within "
                    f"{FULL_RELAXATION_BUDGET} rejections"
                )
    return out


# ---------------------------------------------------------------------------
# Labeling and splitting


def label(
    op: reg.OperatorSpec, tuples: Iterable[InputTuple], seed: int = 0, strategy: str = "random"
) -> Dataset:
    samples = []
    for t in tuples:
        outcome = reg.validate(op, t)
        samples.append(
            LabeledSample(t, outcome.ok, None if outcome.ok else outcome.message)
        )
    return Dataset(op.name, tuple(samples), seed, strategy)


def generate_dataset(
    op: reg.OperatorSpec, cfg: GenerationConfig, strategy: str, relax: str = "partial"
) -> Dataset:
    if strategy == "random":
        tuples = gen_random(op.space, cfg)
    elif strategy == "pairwise":
        tuples = gen_pairwise(op.space, cfg)
    elif strategy == "weak":
        tuples = gen_weak(op, cfg, relax)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return label(op, tuples, seed=cfg.seed, strategy=strategy)


def split_dataset(
    ds: Dataset, ratio: float, seed: int
) -> Tuple[Dataset, Dataset]:
    """Stratified shuffle split; class proportions preserved within one
    sample per class."""
    if not 0 < ratio < 1:
        raise ValueError("ratio must be in (0, 1)")
    if len(ds) < 2:
        raise DegenerateSplitError("cannot split a dataset with < 2 samples")
    rng = np.random.default_rng(seed)
    train_idx: List[int] = []
    test_idx: List[int] = []
    labels = ds.labels()
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        if len(idx) == 0:
            continue
        perm = rng.permutation(idx)
        n_train = int(round(len(idx) * ratio))
        n_train = min(max(n_train, 0), len(idx))
        train_idx.extend(perm[:n_train].tolist())
        test_idx.extend(perm[n_train:].tolist())
    train_idx.sort()
    test_idx.sort()
    train = Dataset(ds.operator, tuple(ds.samples[i] for i in train_idx), ds.seed, ds.strategy)
    test = Dataset(ds.operator, tuple(ds.samples[i] for i in test_idx), ds.seed, ds.strategy)
    return train, test


def class_stats(ds: Dataset) -> Tuple[int, int, Optional[float]]:
    """(positives, negatives, positive ratio); ratio None on an empty set."""
    pos = int(ds.labels().sum())
    neg = len(ds) - pos
    ratio = pos / len(ds) if len(ds) else None
    return pos, neg, ratio


# ---------------------------------------------------------------------------
# Serialization (line-delimited records)

FORMAT_VERSION = 1


def value_to_obj(v: Value):
    if isinstance(v, TensorV):
        return {"kind": "tensor", "shape": list(v.shape)}
    if isinstance(v, TensorListV):
        return {"kind": "tensor_list", "shapes": [list(s) for s in v.items]}
    if isinstance(v, IntV):
        return {"kind": "int", "value": v.value}
    if isinstance(v, FloatV):
        return {"kind": "float", "value": v.value}
    if isinstance(v, BoolV):
        return {"kind": "bool", "value": v.value}
    if isinstance(v, StrV):
        return {"kind": "str", "value": v.value}
    raise TypeError(type(v))


def value_from_obj(o) -> Value:
    k = o["kind"]
    if k == "tensor":
        return TensorV(tuple(o["shape"]))
    if k == "tensor_list":
        return TensorListV(tuple(tuple(s) for s in o["shapes"]))
    if k == "int":
        return IntV(int(o["value"]))
    if k == "float":
        return FloatV(float(o["value"]))
    if k == "bool":
        return BoolV(bool(o["value"]))
    if k == "str":
        return StrV(str(o["value"]))
    raise ValueError(f"unknown value kind {k!r}")


def dataset_to_jsonl(ds: Dataset) -> str:
    lines = [
        json.dumps(
            {
                "format_version": FORMAT_VERSION,
                "op": ds.operator,
                "seed": ds.seed,
                "strategy": ds.strategy,
                "n": len(ds),
            },
            sort_keys=True,
        )
    ]
    for s in ds.samples:
        rec = {
            "op": ds.operator,
            "args": [value_to_obj(v) for v in s.args],
            "label": "valid" if s.valid else "invalid",
            "message": s.message,
        }
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + "\n"


def dataset_from_jsonl(text: str) -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty dataset file")
    meta = json.loads(lines[0])
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError("unsupported dataset format version")
    samples = []
    for ln in lines[1:]:
        rec = json.loads(ln)
        samples.append(
            LabeledSample(
                tuple(value_from_obj(a) for a in rec["args"]),
                rec["label"] == "valid",
                rec["message"],
            )
        )
    return Dataset(meta["op"], tuple(samples), meta["seed"], meta["strategy"])
