import numpy as np
import pytest
from hypothesis import given, strategies as st

from shapegate import datagen, registry as reg
from shapegate.datagen import (
    Dataset,
    GenerationConfig,
    LabeledSample,
    build_covering_suite,
    build_level_pool,
    class_stats,
    dataset_from_jsonl,
    dataset_to_jsonl,
    gen_pairwise,
    gen_random,
    gen_weak,
    generate_dataset,
    split_dataset,
    value_from_obj,
    value_to_obj,
)
from shapegate.values import (
    BoolV,
    FloatV,
    IntV,
    StrV,
    TensorListV,
    TensorV,
    conforms,
)

ALL_OPS = reg.list_operators()
OP_NAMES = [op.name for op in ALL_OPS]


def test_config_validation():
    with pytest.raises(ValueError):
        GenerationConfig(n_samples=-1)
    with pytest.raises(ValueError):
        GenerationConfig(pairwise_levels_per_param=1)


def test_labeled_sample_message_iff_invalid():
    args = (TensorV((1,)),)
    with pytest.raises(ValueError):
        LabeledSample(args, valid=True, message="nope")
    with pytest.raises(ValueError):
        LabeledSample(args, valid=False)
    assert LabeledSample(args, valid=False, message="bad").message == "bad"


@pytest.mark.parametrize("name", OP_NAMES)
def test_random_samples_respect_generator_bounds(name):
    op = reg.default_registry().get(name)
    for t in gen_random(op.space, GenerationConfig(n_samples=300, seed=5)):
        assert conforms(op.space, t).ok


def test_random_covers_all_ranks():
    op = reg.default_registry().get("matrix_inverse")
    ranks = {
        len(t[0].shape)
        for t in gen_random(op.space, GenerationConfig(n_samples=2000, seed=1))
    }
    assert ranks == set(range(7))


def test_generation_is_seed_deterministic():
    op = reg.default_registry().get("bmm")
    cfg = GenerationConfig(n_samples=200, seed=42)
    for strategy in ("random", "pairwise", "weak"):
        a = generate_dataset(op, cfg, strategy)
        b = generate_dataset(op, cfg, strategy)
        assert dataset_to_jsonl(a) == dataset_to_jsonl(b)
    c = generate_dataset(op, GenerationConfig(n_samples=200, seed=43), "random")
    assert dataset_to_jsonl(c) != dataset_to_jsonl(
        generate_dataset(op, cfg, "random")
    )


# ---------------------------------------------------------------------------
# Pairwise


def count_uncovered(suite, pool, space):
    """Independent pair-coverage checker: enumerate every pair of levels of
    every pair of parameters and scan the suite for a witness."""
    names = [p.name for p in space]
    missing = 0
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            for a in pool[names[i]]:
                for b in pool[names[j]]:
                    if not any(
                        row[i] == a and row[j] == b for row in suite
                    ):
                        missing += 1
    return missing


@pytest.mark.parametrize("name", OP_NAMES)
def test_pairwise_full_pair_coverage(name):
    op = reg.default_registry().get(name)
    cfg = GenerationConfig(n_samples=10, seed=3)
    rng = np.random.default_rng(cfg.seed)
    pool = build_level_pool(op.space, cfg, rng)
    suite = build_covering_suite(pool, op.space, rng)
    assert count_uncovered(suite, pool, op.space) == 0


def test_level_pool_sizes():
    op = reg.default_registry().get("max_pool2d")
    cfg = GenerationConfig(seed=0, pairwise_levels_per_param=8)
    pool = build_level_pool(op.space, cfg)
    assert len(pool["input"]) == 8
    assert len(pool["kernel_size"]) == 8
    # tensor levels are distinct shapes
    shapes = [lvl.shape for lvl in pool["input"]]
    assert len(set(shapes)) == len(shapes)


def test_pairwise_cycles_suite_to_n_samples():
    op = reg.default_registry().get("dot")
    cfg = GenerationConfig(n_samples=500, seed=9)
    tuples = gen_pairwise(op.space, cfg)
    assert len(tuples) == 500
    rng = np.random.default_rng(9)
    pool = build_level_pool(op.space, cfg, rng)
    suite = build_covering_suite(pool, op.space, rng)
    assert tuples[: len(suite)] == suite
    assert tuples[len(suite)] == suite[0]


def test_single_param_pairwise_is_level_enumeration():
    op = reg.default_registry().get("matrix_inverse")
    cfg = GenerationConfig(n_samples=8, seed=2)
    tuples = gen_pairwise(op.space, cfg)
    assert len(tuples) == 8
    assert len(set(tuples)) == 8


# ---------------------------------------------------------------------------
# Weak generators


def test_weak_none_equals_random():
    op = reg.default_registry().get("top_k")
    cfg = GenerationConfig(n_samples=100, seed=8)
    assert gen_weak(op, cfg, "none") == gen_random(op.space, cfg)


@pytest.mark.parametrize("name", OP_NAMES)
def test_weak_full_yields_only_valid(name):
    op = reg.default_registry().get(name)
    for t in gen_weak(op, GenerationConfig(n_samples=50, seed=4), "full"):
        assert op.oracle(t).ok


def test_weak_partial_lands_in_trainable_band():
    # the frozen samplers must leave both classes well represented
    for op in ALL_OPS:
        ds = generate_dataset(
            op, GenerationConfig(n_samples=2000, seed=6), "weak", "partial"
        )
        _, _, ratio = class_stats(ds)
        assert 0.05 < ratio < 0.6, (op.name, ratio)


def test_weak_unknown_level_rejected():
    op = ALL_OPS[0]
    with pytest.raises(ValueError):
        gen_weak(op, GenerationConfig(n_samples=1, seed=0), "total")


def test_weak_unsatisfiable_budget():
    never = reg.OperatorSpec(
        name="never",
        space=ALL_OPS[0].space,
        oracle=lambda t: reg.ValidationOutcome.rejected("no"),
        constraint="unsatisfiable",
        partial_sampler=ALL_OPS[0].partial_sampler,
    )
    budget = datagen.FULL_RELAXATION_BUDGET
    datagen.FULL_RELAXATION_BUDGET = 200
    try:
        with pytest.raises(datagen.UnsatisfiableError):
            gen_weak(never, GenerationConfig(n_samples=1, seed=0), "full")
    finally:
        datagen.FULL_RELAXATION_BUDGET = budget


# ---------------------------------------------------------------------------
# Splitting


def test_split_partitions_and_stratifies():
    op = reg.default_registry().get("top_k")
    ds = generate_dataset(op, GenerationConfig(n_samples=1000, seed=12), "weak")
    train, test = split_dataset(ds, 0.8, 12)
    assert len(train) + len(test) == len(ds)
    combined = sorted(train.samples + test.samples, key=id)
    assert set(map(id, combined)) == set(map(id, ds.samples))
    pos, _, ratio = class_stats(ds)
    tr_pos, _, tr_ratio = class_stats(train)
    te_pos, _, _ = class_stats(test)
    assert tr_pos + te_pos == pos
    assert abs(tr_ratio - ratio) < 0.01
    assert len(train) == round(
        round(np.sum(ds.labels() == 0) * 0.8) + round(pos * 0.8)
    )


def test_split_deterministic():
    op = reg.default_registry().get("dot")
    ds = generate_dataset(op, GenerationConfig(n_samples=300, seed=1), "weak")
    a = split_dataset(ds, 0.8, 5)
    b = split_dataset(ds, 0.8, 5)
    assert a[0].samples == b[0].samples and a[1].samples == b[1].samples


def test_split_rejects_bad_inputs():
    op = reg.default_registry().get("dot")
    ds = generate_dataset(op, GenerationConfig(n_samples=10, seed=1), "weak")
    with pytest.raises(ValueError):
        split_dataset(ds, 1.0, 0)
    tiny = Dataset(ds.operator, ds.samples[:1], ds.seed, ds.strategy)
    with pytest.raises(datagen.DegenerateSplitError):
        split_dataset(tiny, 0.8, 0)


def test_class_stats_empty():
    empty = Dataset("dot", (), 0, "random")
    assert class_stats(empty) == (0, 0, None)


# ---------------------------------------------------------------------------
# Serialization


def test_jsonl_roundtrip():
    op = reg.default_registry().get("max_pool2d")
    ds = generate_dataset(op, GenerationConfig(n_samples=150, seed=3), "weak")
    back = dataset_from_jsonl(dataset_to_jsonl(ds))
    assert back == ds


def test_jsonl_rejects_bad_version():
    with pytest.raises(ValueError):
        dataset_from_jsonl('{"format_version": 99, "op": "x", "seed": 0, "strategy": "random", "n": 0}\n')
    with pytest.raises(ValueError):
        dataset_from_jsonl("")


values_st = st.one_of(
    st.lists(st.integers(0, 10), max_size=6).map(lambda s: TensorV(tuple(s))),
    st.lists(
        st.lists(st.integers(0, 10), max_size=6).map(tuple), min_size=1, max_size=4
    ).map(lambda ss: TensorListV(tuple(ss))),
    st.integers(-100, 100).map(IntV),
    st.floats(-1000, 1000, allow_nan=False).map(FloatV),
    st.booleans().map(BoolV),
    st.sampled_from(["sum", "mean", "none"]).map(StrV),
)


@given(values_st)
def test_value_object_roundtrip(v):
    assert value_from_obj(value_to_obj(v)) == v
