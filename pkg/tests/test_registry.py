import pytest

from shapegate import registry as reg
from shapegate.datagen import GenerationConfig, gen_random
from shapegate.values import IntV, ParamSpace, ParamSpec, SpecError, TensorV

from conftest import exhaustive_grid
from oracle_refs import REFS

ALL_OPS = reg.list_operators()
OP_NAMES = [op.name for op in ALL_OPS]


def test_twelve_builtins_registered():
    assert len(ALL_OPS) == 12
    assert len(set(OP_NAMES)) == 12


@pytest.mark.parametrize("name", OP_NAMES)
def test_oracle_matches_independent_reimplementation(name):
    op = reg.default_registry().get(name)
    ref = REFS[name]
    for args in exhaustive_grid(name):
        got = op.oracle(args).ok
        want = ref(args)
        assert got == want, f"{name}{args}: oracle={got} ref={want}"


@pytest.mark.parametrize("name", OP_NAMES)
def test_oracle_purity(name):
    op = reg.default_registry().get(name)
    tuples = gen_random(op.space, GenerationConfig(n_samples=1000, seed=7))
    for t in tuples:
        assert op.oracle(t) == op.oracle(t)


@pytest.mark.parametrize("name", OP_NAMES)
def test_rejections_always_carry_messages(name):
    op = reg.default_registry().get(name)
    tuples = gen_random(op.space, GenerationConfig(n_samples=500, seed=11))
    for t in tuples:
        outcome = op.oracle(t)
        if not outcome.ok:
            assert outcome.message


def test_first_violated_check_decides_the_message():
    bmm = reg.default_registry().get("bmm")
    # rank check fires before the batch-size check
    out = bmm.oracle((TensorV((2, 2)), TensorV((3, 2, 2))))
    assert "3D" in out.message
    # ranks fine, batch mismatch fires before the inner-dim check
    out = bmm.oracle((TensorV((2, 1, 1)), TensorV((3, 9, 9))))
    assert "batch size" in out.message
    mp = reg.default_registry().get("max_pool2d")
    out = mp.oracle((TensorV((5,)), IntV(-3), IntV(0), IntV(-1)))
    assert "3D or 4D" in out.message


@pytest.mark.parametrize(
    "name", [op.name for op in ALL_OPS if op.bug is not None]
)
def test_bug_triggers_imply_validity(name):
    op = reg.default_registry().get(name)
    tuples = gen_random(op.space, GenerationConfig(n_samples=10_000, seed=23))
    for t in tuples:
        if op.bug.trigger(t):
            assert op.oracle(t).ok, f"trigger on rejected tuple: {t}"


def test_at_least_six_operators_carry_bugs():
    assert sum(1 for op in ALL_OPS if op.bug is not None) >= 6


def test_every_operator_has_a_partial_sampler():
    assert all(op.partial_sampler is not None for op in ALL_OPS)


def test_validate_raises_on_kind_mismatch():
    op = reg.default_registry().get("dot")
    with pytest.raises(SpecError):
        reg.validate(op, (TensorV((2,)), IntV(2)))
    with pytest.raises(SpecError):
        reg.validate(op, (TensorV((2,)),))


def test_execute_reports_bug_trigger():
    op = reg.default_registry().get("dot")  # bug: empty vectors
    res = reg.execute(op, (TensorV((0,)), TensorV((0,))), sleep=False)
    assert res.outcome.ok and res.bug_triggered
    res = reg.execute(op, (TensorV((3,)), TensorV((3,))), sleep=False)
    assert res.outcome.ok and not res.bug_triggered
    res = reg.execute(op, (TensorV((3,)), TensorV((4,))), sleep=False)
    assert not res.outcome.ok and not res.bug_triggered
    assert res.elapsed_s >= 0


def test_validation_outcome_requires_message():
    with pytest.raises(ValueError):
        reg.ValidationOutcome(False)


def test_registry_register_and_lookup():
    r = reg.Registry(include_builtins=False)
    assert r.names() == []
    op = ALL_OPS[0]
    r.register(op)
    assert op.name in r
    assert r.get(op.name) is op
    with pytest.raises(ValueError):
        r.register(op)
    with pytest.raises(KeyError):
        r.get("nope")


def test_catalog_text_lists_all_operators():
    text = reg.default_registry().catalog_text()
    for name in OP_NAMES:
        assert name + "(" in text
    assert "constraint:" in text


def test_custom_operator_registration():
    space = ParamSpace((ParamSpec("x", "tensor"),))
    op = reg.OperatorSpec(
        name="always_ok",
        space=space,
        oracle=lambda t: reg.ValidationOutcome.valid(),
        constraint="anything goes",
    )
    r = reg.Registry()
    r.register(op)
    assert reg.validate(op, (TensorV((1,)),)).ok
