"""Shared grid builders for exhaustive oracle checks."""

import pytest

from shapegate.values import IntV, TensorListV, TensorV

from oracle_refs import shapes_upto


def exhaustive_grid(op_name):
    """Exhaustive small argument grids, one per operator: rank <= 3 and
    dims <= 3 for tensors (trimmed where the combinatorics explode), small
    signed ranges for ints."""
    s33 = [TensorV(s) for s in shapes_upto(3, 3)]
    s23 = [TensorV(s) for s in shapes_upto(2, 3)]
    if op_name in ("bmm", "dot", "broadcast_to", "sigmoid_grad", "pairwise_distance"):
        return [(a, b) for a in s33 for b in s33]
    if op_name == "cartesian_prod":
        members = shapes_upto(2, 2)
        grid = [(TensorListV((m,)),) for m in members]
        grid.extend(
            (TensorListV((m1, m2)),) for m1 in members for m2 in members
        )
        return grid
    if op_name == "max_pool2d":
        return [
            (t, IntV(k), IntV(st), IntV(p))
            for t in s33
            for k in range(-1, 5)
            for st in range(-1, 4)
            for p in range(-1, 4)
        ]
    if op_name == "matrix_inverse":
        return [(t,) for t in s33]
    if op_name == "top_k":
        return [(t, IntV(k)) for t in s33 for k in range(-1, 5)]
    if op_name == "split":
        return [
            (t, IntV(ns), IntV(ax))
            for t in s33
            for ns in range(0, 5)
            for ax in range(-4, 4)
        ]
    if op_name == "addr":
        return [(i, v1, v2) for i in s23 for v1 in s23 for v2 in s23]
    if op_name == "index_select":
        return [
            (t, IntV(d), idx)
            for t in s33
            for d in range(-4, 4)
            for idx in s23
        ]
    raise KeyError(op_name)


@pytest.fixture(scope="session")
def registry():
    from shapegate.registry import default_registry

    return default_registry()


# One line per acceptance criterion, echoed after the test summary so the
# verdicts survive output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
