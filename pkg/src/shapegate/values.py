"""Typed value universe for operator arguments.

Tensors never carry element data: a tensor is its shape, a tuple of
dimension lengths. Generator bounds (rank, dim, int ranges) are module-level
constants; hand-built values may exceed them, `conforms` reports it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

MAX_RANK = 6
DIM_MIN, DIM_MAX = 0, 10
INT_MIN, INT_MAX = -100, 100
FLOAT_MIN, FLOAT_MAX = -1000.0, 1000.0
FLOAT_SPECIALS = (0.0, -1.0, 1.0)
FLOAT_SPECIAL_PROB = 0.05
MAX_ARITY = 4

Shape = Tuple[int, ...]

KINDS = ("tensor", "tensor_list", "int", "float", "bool", "str")


class SpecError(Exception):
    """A value does not match the kind its parameter spec requires."""


@dataclass(frozen=True)
class TensorV:
    shape: Shape

    kind = "tensor"

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        if any(d < 0 for d in self.shape):
            raise ValueError(f"negative dimension in shape {self.shape}")


@dataclass(frozen=True)
class IntV:
    value: int

    kind = "int"


@dataclass(frozen=True)
class FloatV:
    value: float

    kind = "float"


@dataclass(frozen=True)
class BoolV:
    value: bool

    kind = "bool"


@dataclass(frozen=True)
class StrV:
    value: str

    kind = "str"


@dataclass(frozen=True)
class TensorListV:
    items: Tuple[Shape, ...]

    kind = "tensor_list"

    def __post_init__(self):
        object.__setattr__(
            self, "items", tuple(tuple(int(d) for d in s) for s in self.items)
        )


Value = Union[TensorV, IntV, FloatV, BoolV, StrV, TensorListV]
InputTuple = Tuple[Value, ...]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    str_choices: Optional[Tuple[str, ...]] = None
    int_bounds: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "str":
            if not self.str_choices:
                raise ValueError(f"str parameter {self.name!r} needs str_choices")
            object.__setattr__(self, "str_choices", tuple(self.str_choices))
        elif self.str_choices is not None:
            raise ValueError(f"str_choices only allowed for kind=str ({self.name!r})")
        if self.int_bounds is not None:
            lo, hi = self.int_bounds
            if lo > hi:
                raise ValueError(f"empty int_bounds for {self.name!r}")
            object.__setattr__(self, "int_bounds", (int(lo), int(hi)))


@dataclass(frozen=True)
class ParamSpace:
    params: Tuple[ParamSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names: {names}")

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self):
        return iter(self.params)


@dataclass(frozen=True)
class FieldDiagnostic:
    name: str
    kind_ok: bool
    bounds_ok: bool
    detail: str = ""


@dataclass(frozen=True)
class ConformanceReport:
    ok: bool
    fields: Tuple[FieldDiagnostic, ...] = field(default_factory=tuple)
    detail: str = ""


def numel(shape: Sequence[int]) -> int:
    """Number of elements of a tensor with this shape; 1 for rank 0."""
    return math.prod(shape)


def broadcastable(a: Sequence[int], b: Sequence[int]) -> bool:
    """Trailing-aligned broadcast compatibility: per aligned dim pair,
    lengths are equal or one of them is 1."""
    for da, db in zip(reversed(a), reversed(b)):
        if da != db and da != 1 and db != 1:
            return False
    return True


def _shape_in_bounds(shape: Shape) -> bool:
    return len(shape) <= MAX_RANK and all(DIM_MIN <= d <= DIM_MAX for d in shape)


def _check_value(spec: ParamSpec, value: Value) -> FieldDiagnostic:
    if value.kind != spec.kind:
        return FieldDiagnostic(
            spec.name, False, False, f"expected {spec.kind}, got {value.kind}"
        )
    bounds_ok = True
    detail = ""
    if isinstance(value, TensorV):
        if not _shape_in_bounds(value.shape):
            bounds_ok = False
            detail = f"shape {value.shape} outside generator bounds"
    elif isinstance(value, TensorListV):
        if not (1 <= len(value.items) <= MAX_ARITY):
            bounds_ok = False
            detail = f"arity {len(value.items)} outside [1, {MAX_ARITY}]"
        elif not all(_shape_in_bounds(s) for s in value.items):
            bounds_ok = False
            detail = "member shape outside generator bounds"
    elif isinstance(value, IntV):
        lo, hi = spec.int_bounds or (INT_MIN, INT_MAX)
        if not lo <= value.value <= hi:
            bounds_ok = False
            detail = f"int {value.value} outside [{lo}, {hi}]"
    elif isinstance(value, StrV):
        if value.value not in (spec.str_choices or ()):
            bounds_ok = False
            detail = f"string {value.value!r} not in enumeration"
    elif isinstance(value, FloatV):
        if not math.isfinite(value.value):
            bounds_ok = False
            detail = "non-finite float"
    return FieldDiagnostic(spec.name, True, bounds_ok, detail)


def conforms(space: ParamSpace, args: InputTuple) -> ConformanceReport:
    """Check an argument tuple against a parameter space.

    Reports per-parameter kind and generator-bound conformance; the overall
    flag is the conjunction. Pure, never raises for mismatches.
    """
    if len(args) != len(space):
        return ConformanceReport(
            False, (), f"arity mismatch: got {len(args)}, expected {len(space)}"
        )
    diags = tuple(_check_value(p, v) for p, v in zip(space.params, args))
    ok = all(d.kind_ok and d.bounds_ok for d in diags)
    return ConformanceReport(ok, diags)


def kinds_match(space: ParamSpace, args: InputTuple) -> bool:
    return len(args) == len(space) and all(
        v.kind == p.kind for p, v in zip(space.params, args)
    )


def require_kinds(space: ParamSpace, args: InputTuple) -> None:
    if len(args) != len(space):
        raise SpecError(f"arity mismatch: got {len(args)}, expected {len(space)}")
    for p, v in zip(space.params, args):
        if v.kind != p.kind:
            raise SpecError(f"parameter {p.name!r}: expected {p.kind}, got {v.kind}")
    for p, v in zip(space.params, args):
        if isinstance(v, StrV) and v.value not in (p.str_choices or ()):
            raise SpecError(f"parameter {p.name!r}: {v.value!r} not in enumeration")
