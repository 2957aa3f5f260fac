"""Fixed-width numeric encoding of argument tuples (shape abstraction).

Tensors contribute one rank column plus MAX_RANK dim columns; tensor lists
one arity column plus MAX_ARITY padded tensor slots; scalars one column
each. Absent slots hold the pad sentinel -1 (legal dims and category codes
are >= 0, so the sentinel is unambiguous there; plain int columns may hold
-1 legitimately and get no special treatment).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from shapegate.values import (
    BoolV,
    FloatV,
    InputTuple,
    IntV,
    MAX_ARITY,
    MAX_RANK,
    ParamSpace,
    StrV,
    TensorListV,
    TensorV,
)

PAD = -1.0


class EncodingError(Exception):
    pass


@dataclass(frozen=True)
class FeatureSchema:
    columns: Tuple[Tuple[str, str], ...]  # (column name, source kind)
    category_maps: Tuple[Tuple[str, Tuple[str, ...]], ...]  # param -> enumeration

    @property
    def width(self) -> int:
        return len(self.columns)

    def column_names(self) -> List[str]:
        return [c[0] for c in self.columns]

    def category_code(self, param: str, value: str) -> int:
        for name, choices in self.category_maps:
            if name == param:
                try:
                    return choices.index(value)
                except ValueError:
                    raise EncodingError(
                        f"string {value!r} not in enumeration of {param!r}"
                    ) from None
        raise EncodingError(f"no category map for parameter {param!r}")

    def hash(self) -> str:
        payload = json.dumps(
            {"columns": list(self.columns), "maps": list(self.category_maps)},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _tensor_columns(prefix: str) -> List[Tuple[str, str]]:
    cols = [(f"{prefix}.rank", "tensor")]
    cols.extend((f"{prefix}.d{i}", "tensor") for i in range(MAX_RANK))
    return cols


def build_schema(space: ParamSpace) -> FeatureSchema:
    cols: List[Tuple[str, str]] = []
    maps: List[Tuple[str, Tuple[str, ...]]] = []
    for p in space:
        if p.kind == "tensor":
            cols.extend(_tensor_columns(p.name))
        elif p.kind == "tensor_list":
            cols.append((f"{p.name}.arity", "tensor_list"))
            for s in range(MAX_ARITY):
                cols.extend(_tensor_columns(f"{p.name}.t{s}"))
        elif p.kind in ("int", "float", "bool"):
            cols.append((p.name, p.kind))
        elif p.kind == "str":
            cols.append((p.name, "str"))
            maps.append((p.name, tuple(p.str_choices or ())))
    return FeatureSchema(tuple(cols), tuple(maps))


def _encode_shape(out: np.ndarray, pos: int, shape: Sequence[int]) -> int:
    out[pos] = len(shape)
    for i in range(MAX_RANK):
        out[pos + 1 + i] = shape[i] if i < len(shape) else PAD
    return pos + 1 + MAX_RANK


def encode_into(
    out: np.ndarray, args: InputTuple, space: ParamSpace, schema: FeatureSchema
) -> None:
    pos = 0
    for p, v in zip(space.params, args):
        if v.kind != p.kind:
            raise EncodingError(
                f"parameter {p.name!r}: expected {p.kind}, got {v.kind}"
            )
        if isinstance(v, TensorV):
            pos = _encode_shape(out, pos, v.shape)
        elif isinstance(v, TensorListV):
            out[pos] = len(v.items)
            pos += 1
            for s in range(MAX_ARITY):
                if s < len(v.items):
                    pos = _encode_shape(out, pos, v.items[s])
                else:
                    out[pos : pos + 1 + MAX_RANK] = PAD
                    pos += 1 + MAX_RANK
        elif isinstance(v, (IntV, FloatV)):
            out[pos] = v.value
            pos += 1
        elif isinstance(v, BoolV):
            out[pos] = 1.0 if v.value else 0.0
            pos += 1
        elif isinstance(v, StrV):
            out[pos] = schema.category_code(p.name, v.value)
            pos += 1
    assert pos == schema.width


def encode(args: InputTuple, space: ParamSpace, schema: FeatureSchema) -> np.ndarray:
    out = np.empty(schema.width, dtype=np.float64)
    encode_into(out, args, space, schema)
    return out


def encode_batch(
    tuples: Sequence[InputTuple], space: ParamSpace, schema: FeatureSchema
) -> np.ndarray:
    """Row-major matrix; row i equals encode(tuples[i]). The first failing
    row aborts with its index."""
    X = np.empty((len(tuples), schema.width), dtype=np.float64)
    for i, t in enumerate(tuples):
        try:
            encode_into(X[i], t, space, schema)
        except EncodingError as e:
            raise EncodingError(f"row {i}: {e}") from None
    return X


def dataset_to_csv(
    X: np.ndarray, labels: Sequence[int], schema: FeatureSchema
) -> str:
    """Comma-separated dataset: feature columns then a `label` column."""
    header = ",".join(schema.column_names() + ["label"])
    lines = [header]
    for row, y in zip(X, labels):
        cells = [repr(float(v)) if v != int(v) else str(int(v)) for v in row]
        cells.append(str(int(y)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
