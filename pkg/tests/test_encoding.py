import numpy as np
import pytest

from shapegate import registry as reg
from shapegate.datagen import GenerationConfig, gen_random
from shapegate.encoding import (
    EncodingError,
    PAD,
    build_schema,
    dataset_to_csv,
    encode,
    encode_batch,
)
from shapegate.values import (
    IntV,
    ParamSpace,
    ParamSpec,
    StrV,
    TensorListV,
    TensorV,
)

T_INT_SPACE = ParamSpace((ParamSpec("t", "tensor"), ParamSpec("k", "int")))


def test_width_arithmetic():
    # tensor: 1 rank col + 6 dim cols; scalar: 1 col
    assert build_schema(T_INT_SPACE).width == 8
    # tensor_list: 1 arity col + 4 * (1 + 6)
    tl = ParamSpace((ParamSpec("ts", "tensor_list"),))
    assert build_schema(tl).width == 29


def test_column_names_follow_pattern():
    names = build_schema(T_INT_SPACE).column_names()
    assert names == ["t.rank", "t.d0", "t.d1", "t.d2", "t.d3", "t.d4", "t.d5", "k"]


def test_tensor_encoding_layout():
    schema = build_schema(ParamSpace((ParamSpec("t", "tensor"),)))
    row = encode((TensorV((10, 3, 4)),), schema_space(schema), schema)
    assert row.tolist() == [3, 10, 3, 4, PAD, PAD, PAD]


def schema_space(schema):
    # helper: reconstruct the one-tensor space used above
    return ParamSpace((ParamSpec("t", "tensor"),))


def test_rank0_is_all_pads_after_rank_column():
    schema = build_schema(ParamSpace((ParamSpec("t", "tensor"),)))
    row = encode((TensorV(()),), schema_space(schema), schema)
    assert row.tolist() == [0] + [PAD] * 6


def test_tensor_list_encoding_layout():
    space = ParamSpace((ParamSpec("ts", "tensor_list"),))
    schema = build_schema(space)
    row = encode((TensorListV(((2,), (3, 4))),), space, schema)
    assert row[0] == 2  # arity
    assert row[1:8].tolist() == [1, 2, PAD, PAD, PAD, PAD, PAD]
    assert row[8:15].tolist() == [2, 3, 4, PAD, PAD, PAD, PAD]
    assert row[15:].tolist() == [PAD] * 14  # absent slots


def test_str_codes_dense_in_enumeration_order():
    space = ParamSpace((ParamSpec("mode", "str", str_choices=("a", "b", "c")),))
    schema = build_schema(space)
    assert [schema.category_code("mode", c) for c in ("a", "b", "c")] == [0, 1, 2]
    assert encode((StrV("c"),), space, schema).tolist() == [2.0]
    with pytest.raises(EncodingError):
        schema.category_code("mode", "d")
    with pytest.raises(EncodingError):
        schema.category_code("other", "a")


def test_kind_mismatch_raises_with_row_index():
    schema = build_schema(T_INT_SPACE)
    good = (TensorV((1,)), IntV(3))
    bad = (IntV(0), IntV(3))
    with pytest.raises(EncodingError, match="row 1"):
        encode_batch([good, bad], T_INT_SPACE, schema)


def test_injectivity_on_shapes():
    from oracle_refs import shapes_upto

    space = ParamSpace((ParamSpec("t", "tensor"),))
    schema = build_schema(space)
    rows = {
        tuple(encode((TensorV(s),), space, schema)) for s in shapes_upto(4, 3)
    }
    assert len(rows) == len(shapes_upto(4, 3))


@pytest.mark.parametrize("name", [op.name for op in reg.list_operators()])
def test_batch_equals_single_bitwise(name):
    op = reg.default_registry().get(name)
    schema = build_schema(op.space)
    tuples = gen_random(op.space, GenerationConfig(n_samples=200, seed=17))
    X = encode_batch(tuples, op.space, schema)
    assert X.shape == (200, schema.width)
    for i, t in enumerate(tuples):
        single = encode(t, op.space, schema)
        assert np.array_equal(X[i], single)


def test_schema_hash_stable_and_space_sensitive():
    s1 = build_schema(T_INT_SPACE)
    s2 = build_schema(T_INT_SPACE)
    assert s1.hash() == s2.hash()
    assert len(s1.hash()) == 16
    other = build_schema(ParamSpace((ParamSpec("t", "tensor"),)))
    assert other.hash() != s1.hash()


def test_csv_serialization():
    schema = build_schema(T_INT_SPACE)
    tuples = [(TensorV((2, 3)), IntV(-1)), (TensorV(()), IntV(5))]
    X = encode_batch(tuples, T_INT_SPACE, schema)
    text = dataset_to_csv(X, [1, 0], schema)
    lines = text.strip().split("\n")
    assert lines[0] == "t.rank,t.d0,t.d1,t.d2,t.d3,t.d4,t.d5,k,label"
    assert lines[1] == "2,2,3,-1,-1,-1,-1,-1,1"
    assert lines[2] == "0,-1,-1,-1,-1,-1,-1,5,0"
