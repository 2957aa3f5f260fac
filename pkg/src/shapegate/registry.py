"""Built-in operator catalog.

Each operator ships a deterministic validity oracle that stands in for the
input-validation code of a real DL library: rank checks first, then size
checks, then relational checks, with the first violated check deciding the
rejection message. A subset of operators additionally carries an injected
bug predicate (satisfiable only by valid tuples) for retention experiments,
and every operator has a partial-relaxation sampler emulating a weak
constraint-extraction generator.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from shapegate.values import (
    InputTuple,
    ParamSpace,
    ParamSpec,
    Shape,
    SpecError,
    TensorListV,
    TensorV,
    IntV,
    require_kinds,
)

DEFAULT_EXEC_COST_VALID_US = 1000.0
DEFAULT_EXEC_COST_REJECTED_US = 100.0


@dataclass(frozen=True)
class ValidationOutcome:
    ok: bool
    message: Optional[str] = None

    def __post_init__(self):
        if not self.ok and not self.message:
            raise ValueError("rejection requires a non-empty message")

    @staticmethod
    def valid() -> "ValidationOutcome":
        return ValidationOutcome(True)

    @staticmethod
    def rejected(message: str) -> "ValidationOutcome":
        return ValidationOutcome(False, message)


@dataclass(frozen=True)
class BugPredicate:
    description: str
    trigger: Callable[[InputTuple], bool]


@dataclass(frozen=True)
class ExecutionResult:
    outcome: ValidationOutcome
    bug_triggered: bool
    elapsed_s: float


@dataclass(frozen=True)
class OperatorSpec:
    name: str
    space: ParamSpace
    oracle: Callable[[InputTuple], ValidationOutcome]
    constraint: str
    bug: Optional[BugPredicate] = None
    partial_sampler: Optional[Callable[[np.random.Generator], InputTuple]] = None
    exec_cost_valid_us: float = DEFAULT_EXEC_COST_VALID_US
    exec_cost_rejected_us: float = DEFAULT_EXEC_COST_REJECTED_US


def validate(op: OperatorSpec, args: InputTuple) -> ValidationOutcome:
    """Run the operator's validity oracle. Kind mismatches are SpecErrors,
    not rejections: a rejection models the library's fail-fast checks on a
    well-typed call."""
    require_kinds(op.space, args)
    return op.oracle(args)


def execute(
    op: OperatorSpec, args: InputTuple, sleep: bool = True
) -> ExecutionResult:
    """Simulate one call: validate, burn the per-call latency, then (only on
    valid calls) evaluate the injected bug predicate."""
    start = time.perf_counter()
    outcome = validate(op, args)
    cost_us = op.exec_cost_valid_us if outcome.ok else op.exec_cost_rejected_us
    if sleep and cost_us > 0:
        time.sleep(cost_us * 1e-6)
    bug = bool(outcome.ok and op.bug is not None and op.bug.trigger(args))
    return ExecutionResult(outcome, bug, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# Oracles


def _t(args: InputTuple, i: int) -> Shape:
    return args[i].shape  # type: ignore[union-attr]


def _i(args: InputTuple, i: int) -> int:
    return args[i].value  # type: ignore[union-attr]


def _oracle_bmm(args: InputTuple) -> ValidationOutcome:
    a, b = _t(args, 0), _t(args, 1)
    if len(a) != 3:
        return ValidationOutcome.rejected("batch1 must be a 3D tensor")
    if len(b) != 3:
        return ValidationOutcome.rejected("batch2 must be a 3D tensor")
    if a[0] != b[0]:
        return ValidationOutcome.rejected(
            "batch1 and batch2 must have the same batch size"
        )
    if a[2] != b[1]:
        return ValidationOutcome.rejected(
            f"mat1 and mat2 shapes cannot be multiplied ({a[1]}x{a[2]} and {b[1]}x{b[2]})"
        )
    return ValidationOutcome.valid()


def _oracle_dot(args: InputTuple) -> ValidationOutcome:
    a, b = _t(args, 0), _t(args, 1)
    if len(a) != 1 or len(b) != 1:
        return ValidationOutcome.rejected("1D tensors expected")
    if a[0] != b[0]:
        return ValidationOutcome.rejected(
            f"inconsistent tensor size, expected tensors to have same number "
            f"of elements, but got {a[0]} and {b[0]}"
        )
    return ValidationOutcome.valid()


def _oracle_broadcast_to(args: InputTuple) -> ValidationOutcome:
    inp, target = _t(args, 0), _t(args, 1)
    if len(target) < len(inp):
        return ValidationOutcome.rejected(
            "broadcast_to: the number of sizes provided must be greater or "
            "equal to the number of dimensions in the tensor"
        )
    for d, t in zip(reversed(inp), reversed(target)):
        if d != t and d != 1:
            return ValidationOutcome.rejected(
                f"broadcast_to: cannot expand dimension of size {d} to {t}"
            )
    return ValidationOutcome.valid()


def _oracle_cartesian_prod(args: InputTuple) -> ValidationOutcome:
    items = args[0].items  # type: ignore[union-attr]
    for s in items:
        if len(s) != 1:
            return ValidationOutcome.rejected(
                f"Expect a 1D vector, but got shape {list(s)}"
            )
    return ValidationOutcome.valid()


def _oracle_max_pool2d(args: InputTuple) -> ValidationOutcome:
    inp = _t(args, 0)
    k, s, p = _i(args, 1), _i(args, 2), _i(args, 3)
    if len(inp) not in (3, 4):
        return ValidationOutcome.rejected("non-empty 3D or 4D input tensor expected")
    if k < 1:
        return ValidationOutcome.rejected("kernel size must be greater than zero")
    if s <= 0:
        return ValidationOutcome.rejected("stride must be greater than zero")
    if p < 0:
        return ValidationOutcome.rejected("pad must be non-negative")
    if 2 * p > k:
        return ValidationOutcome.rejected(
            "pad should be at most half of kernel size"
        )
    if k > min(inp[-2], inp[-1]) + 2 * p:
        return ValidationOutcome.rejected(
            f"kernel size ({k}) larger than padded input spatial size"
        )
    return ValidationOutcome.valid()


def _oracle_matrix_inverse(args: InputTuple) -> ValidationOutcome:
    t = _t(args, 0)
    if len(t) < 2:
        return ValidationOutcome.rejected("input must have at least 2 dimensions")
    if t[-1] != t[-2]:
        return ValidationOutcome.rejected(
            f"input must be batches of square matrices, got {t[-2]} by {t[-1]}"
        )
    return ValidationOutcome.valid()


def _oracle_top_k(args: InputTuple) -> ValidationOutcome:
    t, k = _t(args, 0), _i(args, 1)
    if len(t) < 1:
        return ValidationOutcome.rejected("input must have at least 1 dimension")
    if k < 0:
        return ValidationOutcome.rejected("k must be non-negative")
    if k > t[-1]:
        return ValidationOutcome.rejected(
            f"selected index k out of range: k ({k}) > last dimension ({t[-1]})"
        )
    return ValidationOutcome.valid()


def _oracle_split(args: InputTuple) -> ValidationOutcome:
    t, ns, axis = _t(args, 0), _i(args, 1), _i(args, 2)
    if ns < 1:
        return ValidationOutcome.rejected("num_splits must be at least 1")
    rank = len(t)
    if not (-rank <= axis < rank):
        return ValidationOutcome.rejected(
            f"axis {axis} out of range for tensor of rank {rank}"
        )
    dim = t[axis]
    if dim % ns != 0:
        return ValidationOutcome.rejected(
            f"Number of ways to split should evenly divide the split "
            f"dimension, but got num_splits {ns} and dimension size {dim}"
        )
    return ValidationOutcome.valid()


def _oracle_sigmoid_grad(args: InputTuple) -> ValidationOutcome:
    y, dy = _t(args, 0), _t(args, 1)
    if y != dy:
        return ValidationOutcome.rejected(
            f"y and dy must have the same shape, got {list(y)} and {list(dy)}"
        )
    return ValidationOutcome.valid()


def _oracle_addr(args: InputTuple) -> ValidationOutcome:
    inp, v1, v2 = _t(args, 0), _t(args, 1), _t(args, 2)
    if len(v1) != 1:
        return ValidationOutcome.rejected("addr: Expected 1-D argument vec1")
    if len(v2) != 1:
        return ValidationOutcome.rejected("addr: Expected 1-D argument vec2")
    if len(inp) > 2:
        return ValidationOutcome.rejected(
            "addr: input must be broadcastable to a matrix"
        )
    target = (v1[0], v2[0])
    for d, t in zip(reversed(inp), reversed(target)):
        if d != t and d != 1:
            return ValidationOutcome.rejected(
                f"addr: input shape {list(inp)} is not broadcastable to "
                f"[{target[0]}, {target[1]}]"
            )
    return ValidationOutcome.valid()


def _oracle_pairwise_distance(args: InputTuple) -> ValidationOutcome:
    x1, x2 = _t(args, 0), _t(args, 1)
    if len(x1) not in (1, 2) or len(x2) not in (1, 2):
        return ValidationOutcome.rejected("pairwise_distance: expected 1D or 2D input")
    if x1[-1] != x2[-1]:
        return ValidationOutcome.rejected(
            f"pairwise_distance: last dimensions must match, got {x1[-1]} and {x2[-1]}"
        )
    if len(x1) == 2 and len(x2) == 2 and x1[0] != x2[0] and x1[0] != 1 and x2[0] != 1:
        return ValidationOutcome.rejected(
            "pairwise_distance: tensors are not broadcastable"
        )
    return ValidationOutcome.valid()


def _oracle_index_select(args: InputTuple) -> ValidationOutcome:
    t, dim, idx = _t(args, 0), _i(args, 1), _t(args, 2)
    rank = len(t)
    if rank < 1:
        return ValidationOutcome.rejected(
            "index_select: cannot select on a 0-dim tensor"
        )
    if not (-rank <= dim < rank):
        return ValidationOutcome.rejected(
            f"Dimension out of range (expected to be in range of [{-rank}, "
            f"{rank - 1}], but got {dim})"
        )
    if len(idx) > 1:
        return ValidationOutcome.rejected(
            "index_select(): Index is supposed to be a vector"
        )
    return ValidationOutcome.valid()


# ---------------------------------------------------------------------------
# Partial-relaxation samplers (weak-generator emulation)
#
# Each sampler enforces a fixed subset of the operator's constraints and
# leaves the rest to chance, occasionally "repairing" the relaxed check so
# the valid fraction lands in a trainable 15-35% band.


def _rdim(rng) -> int:
    return int(rng.integers(0, 11))


def _rshape(rng, rank: int) -> Shape:
    return tuple(int(d) for d in rng.integers(0, 11, size=rank))


def _partial_bmm(rng) -> InputTuple:
    b, n, m, p = _rdim(rng), _rdim(rng), _rdim(rng), _rdim(rng)
    inner = m if rng.random() < 0.20 else _rdim(rng)
    return (TensorV((b, n, m)), TensorV((b, inner, p)))


def _partial_dot(rng) -> InputTuple:
    d1 = _rdim(rng)
    d2 = d1 if rng.random() < 0.20 else _rdim(rng)
    return (TensorV((d1,)), TensorV((d2,)))


def _partial_broadcast_to(rng) -> InputTuple:
    tr = int(rng.integers(0, 7))
    target = _rshape(rng, tr)
    ir = int(rng.integers(max(0, tr - 2), tr + 1))
    dims = []
    for t in target[tr - ir :]:
        r = rng.random()
        dims.append(t if r < 0.35 else (1 if r < 0.40 else _rdim(rng)))
    return (TensorV(tuple(dims)), TensorV(target))


def _partial_cartesian_prod(rng) -> InputTuple:
    arity = int(rng.integers(1, 5))
    items = []
    for _ in range(arity):
        rank = 1 if rng.random() < 0.55 else 2
        items.append(_rshape(rng, rank))
    return (TensorListV(tuple(items)),)


def _partial_max_pool2d(rng) -> InputTuple:
    rank = int(rng.integers(3, 5))
    return (
        TensorV(_rshape(rng, rank)),
        IntV(int(rng.integers(1, 13))),
        IntV(int(rng.integers(1, 4))),
        IntV(int(rng.integers(0, 7))),
    )


def _partial_matrix_inverse(rng) -> InputTuple:
    rank = int(rng.integers(2, 7))
    s = list(_rshape(rng, rank))
    if rng.random() < 0.20:
        s[-1] = s[-2]
    return (TensorV(tuple(s)),)


def _partial_top_k(rng) -> InputTuple:
    rank = int(rng.integers(1, 7))
    return (TensorV(_rshape(rng, rank)), IntV(int(rng.integers(0, 20))))


def _partial_split(rng) -> InputTuple:
    rank = int(rng.integers(1, 7))
    return (
        TensorV(_rshape(rng, rank)),
        IntV(int(rng.integers(2, 7))),
        IntV(int(rng.integers(-rank, rank))),
    )


def _partial_sigmoid_grad(rng) -> InputTuple:
    y = _rshape(rng, int(rng.integers(0, 7)))
    dy = tuple(d if rng.random() < 0.5 else _rdim(rng) for d in y)
    return (TensorV(y), TensorV(dy))


def _partial_addr(rng) -> InputTuple:
    n, m = _rdim(rng), _rdim(rng)
    rank = int(rng.integers(1, 3))
    target = (n, m)[2 - rank :]
    dims = []
    for t in target:
        r = rng.random()
        dims.append(t if r < 0.25 else (1 if r < 0.30 else _rdim(rng)))
    return (TensorV(tuple(dims)), TensorV((n,)), TensorV((m,)))


def _partial_pairwise_distance(rng) -> InputTuple:
    r1, r2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    x1 = _rshape(rng, r1)
    x2 = list(_rshape(rng, r2))
    if rng.random() < 0.25:
        x2[-1] = x1[-1]
    return (TensorV(x1), TensorV(tuple(x2)))


def _partial_index_select(rng) -> InputTuple:
    rank = int(rng.integers(1, 7))
    idx_rank = int(rng.integers(0, 2))
    return (
        TensorV(_rshape(rng, rank)),
        IntV(int(rng.integers(-12, 12))),
        TensorV(_rshape(rng, idx_rank)),
    )


# ---------------------------------------------------------------------------
# Bug predicates. The raw condition is conjoined with the oracle so triggers
# are valid by construction.


def _bug(description: str, oracle, raw) -> BugPredicate:
    return BugPredicate(description, lambda t: oracle(t).ok and raw(t))


def _builtin_operators() -> List[OperatorSpec]:
    tensor = lambda name: ParamSpec(name, "tensor")  # noqa: E731
    integer = lambda name: ParamSpec(name, "int")  # noqa: E731

    ops = [
        OperatorSpec(
            name="bmm",
            space=ParamSpace((tensor("input"), tensor("mat2"))),
            oracle=_oracle_bmm,
            constraint="both inputs rank 3; input=(b,n,m), mat2=(b,m,p)",
            bug=_bug(
                "miscompiled kernel for batch size >= 5",
                _oracle_bmm,
                lambda t: t[0].shape[0] >= 5,
            ),
            partial_sampler=_partial_bmm,
        ),
        OperatorSpec(
            name="dot",
            space=ParamSpace((tensor("input"), tensor("tensor"))),
            oracle=_oracle_dot,
            constraint="both inputs rank 1 with equal element counts",
            bug=_bug(
                "crash on empty vectors",
                _oracle_dot,
                lambda t: t[0].shape[0] == 0,
            ),
            partial_sampler=_partial_dot,
        ),
        OperatorSpec(
            name="broadcast_to",
            space=ParamSpace((tensor("input"), tensor("shape"))),
            oracle=_oracle_broadcast_to,
            constraint=(
                "len(shape) >= input rank; trailing-aligned dims equal target or 1"
            ),
            partial_sampler=_partial_broadcast_to,
        ),
        OperatorSpec(
            name="cartesian_prod",
            space=ParamSpace((ParamSpec("tensors", "tensor_list"),)),
            oracle=_oracle_cartesian_prod,
            constraint="every member tensor has rank 1",
            bug=_bug(
                "wrong result ordering for three or more inputs",
                _oracle_cartesian_prod,
                lambda t: len(t[0].items) >= 3,
            ),
            partial_sampler=_partial_cartesian_prod,
        ),
        OperatorSpec(
            name="max_pool2d",
            space=ParamSpace(
                (
                    tensor("input"),
                    integer("kernel_size"),
                    integer("stride"),
                    integer("padding"),
                )
            ),
            oracle=_oracle_max_pool2d,
            constraint=(
                "rank in {3,4}; kernel>=1; stride>0; 0<=padding<=kernel/2; "
                "kernel <= min spatial + 2*padding"
            ),
            bug=_bug(
                "degenerate 1x1 kernel with stride > 1 reads stale memory",
                _oracle_max_pool2d,
                lambda t: t[1].value == 1 and t[2].value > 1,
            ),
            partial_sampler=_partial_max_pool2d,
        ),
        OperatorSpec(
            name="matrix_inverse",
            space=ParamSpace((tensor("tensor"),)),
            oracle=_oracle_matrix_inverse,
            constraint="rank >= 2 and the last two dimensions equal",
            bug=_bug(
                "numerical blow-up for matrices of size >= 4",
                _oracle_matrix_inverse,
                lambda t: t[0].shape[-1] >= 4,
            ),
            partial_sampler=_partial_matrix_inverse,
        ),
        OperatorSpec(
            name="top_k",
            space=ParamSpace((tensor("input"), integer("k"))),
            oracle=_oracle_top_k,
            constraint="rank >= 1 and 0 <= k <= last dimension",
            bug=_bug(
                "off-by-one when k equals the last dimension",
                _oracle_top_k,
                lambda t: t[1].value > 0 and t[1].value == t[0].shape[-1],
            ),
            partial_sampler=_partial_top_k,
        ),
        OperatorSpec(
            name="split",
            space=ParamSpace(
                (tensor("value"), integer("num_splits"), integer("axis"))
            ),
            oracle=_oracle_split,
            constraint=(
                "num_splits >= 1; axis in [-rank, rank); dimension at axis "
                "divisible by num_splits"
            ),
            bug=_bug(
                "size-1 chunks corrupted when num_splits equals the dimension",
                _oracle_split,
                lambda t: t[1].value >= 2
                and t[1].value == t[0].shape[t[2].value],
            ),
            partial_sampler=_partial_split,
        ),
        OperatorSpec(
            name="sigmoid_grad",
            space=ParamSpace((tensor("y"), tensor("dy"))),
            oracle=_oracle_sigmoid_grad,
            constraint="y and dy have identical shapes",
            bug=_bug(
                "scalar gradient path returns garbage",
                _oracle_sigmoid_grad,
                lambda t: len(t[0].shape) == 0,
            ),
            partial_sampler=_partial_sigmoid_grad,
        ),
        OperatorSpec(
            name="addr",
            space=ParamSpace((tensor("input"), tensor("vec1"), tensor("vec2"))),
            oracle=_oracle_addr,
            constraint=(
                "vec1 and vec2 rank 1 (sizes n, m); input broadcastable to (n, m)"
            ),
            bug=_bug(
                "accumulator overflow for outer products larger than 8x8",
                _oracle_addr,
                lambda t: t[1].shape[0] >= 8 and t[2].shape[0] >= 8,
            ),
            partial_sampler=_partial_addr,
        ),
        OperatorSpec(
            name="pairwise_distance",
            space=ParamSpace((tensor("x1"), tensor("x2"))),
            oracle=_oracle_pairwise_distance,
            constraint=(
                "both ranks in {1,2}; equal last dims; leading dims broadcastable"
            ),
            partial_sampler=_partial_pairwise_distance,
        ),
        OperatorSpec(
            name="index_select",
            space=ParamSpace((tensor("input"), integer("dim"), tensor("index"))),
            oracle=_oracle_index_select,
            constraint="input rank >= 1; dim in [-rank, rank); index rank <= 1",
            partial_sampler=_partial_index_select,
        ),
    ]
    return ops


class Registry:
    """Ordered, name-unique collection of operator specs."""

    def __init__(self, include_builtins: bool = True):
        self._ops: Dict[str, OperatorSpec] = {}
        if include_builtins:
            for op in _builtin_operators():
                self.register(op)

    def register(self, op: OperatorSpec) -> None:
        if op.name in self._ops:
            raise ValueError(f"operator {op.name!r} already registered")
        self._ops[op.name] = op

    def get(self, name: str) -> OperatorSpec:
        try:
            return self._ops[name]
        except KeyError:
            raise KeyError(f"unknown operator {name!r}") from None

    def list_operators(self) -> List[OperatorSpec]:
        return list(self._ops.values())

    def names(self) -> List[str]:
        return list(self._ops.keys())

    def __contains__(self, name: str) -> bool:
        return name in self._ops

    def catalog_text(self) -> str:
        """Human-readable catalog: name, signature, constraint."""
        lines = []
        for op in self.list_operators():
            sig = ", ".join(f"{p.name}: {p.kind}" for p in op.space)
            lines.append(f"{op.name}({sig})")
            lines.append(f"    constraint: {op.constraint}")
            if op.bug is not None:
                lines.append(f"    injected bug: {op.bug.description}")
        return "\n".join(lines) + "\n"


_DEFAULT: Optional[Registry] = None


def default_registry() -> Registry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Registry()
    return _DEFAULT


def list_operators() -> List[OperatorSpec]:
    return default_registry().list_operators()
