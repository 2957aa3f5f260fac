"""Independent re-implementations of the built-in validity constraints.

Written directly from the constraint formulas as plain boolean predicates,
deliberately not sharing code with the package, so grid comparisons against
the registry oracles are meaningful.
"""

from itertools import product


def shapes_upto(max_rank, max_dim):
    out = [()]
    for r in range(1, max_rank + 1):
        out.extend(product(range(max_dim + 1), repeat=r))
    return out


def ref_bmm(args):
    a, b = args[0].shape, args[1].shape
    return (
        len(a) == 3
        and len(b) == 3
        and a[0] == b[0]
        and a[2] == b[1]
    )


def ref_dot(args):
    a, b = args[0].shape, args[1].shape
    return len(a) == 1 and len(b) == 1 and a[0] == b[0]


def ref_broadcast_to(args):
    inp, tgt = args[0].shape, args[1].shape
    if len(inp) > len(tgt):
        return False
    # align on the right
    pad = len(tgt) - len(inp)
    return all(inp[i] in (1, tgt[pad + i]) for i in range(len(inp)))


def ref_cartesian_prod(args):
    return all(len(s) == 1 for s in args[0].items)


def ref_max_pool2d(args):
    s = args[0].shape
    k, st, p = args[1].value, args[2].value, args[3].value
    return (
        len(s) in (3, 4)
        and k >= 1
        and st >= 1
        and p >= 0
        and 2 * p <= k
        and k <= min(s[-2], s[-1]) + 2 * p
    )


def ref_matrix_inverse(args):
    s = args[0].shape
    return len(s) >= 2 and s[-1] == s[-2]


def ref_top_k(args):
    s, k = args[0].shape, args[1].value
    return len(s) >= 1 and 0 <= k <= s[-1]


def ref_split(args):
    s, ns, ax = args[0].shape, args[1].value, args[2].value
    if ns < 1:
        return False
    if ax < -len(s) or ax >= len(s):
        return False
    return s[ax] % ns == 0


def ref_sigmoid_grad(args):
    return args[0].shape == args[1].shape


def ref_addr(args):
    inp, v1, v2 = args[0].shape, args[1].shape, args[2].shape
    if len(v1) != 1 or len(v2) != 1 or len(inp) > 2:
        return False
    tgt = (v1[0], v2[0])
    pad = 2 - len(inp)
    return all(inp[i] in (1, tgt[pad + i]) for i in range(len(inp)))


def ref_pairwise_distance(args):
    x1, x2 = args[0].shape, args[1].shape
    if len(x1) not in (1, 2) or len(x2) not in (1, 2):
        return False
    if x1[-1] != x2[-1]:
        return False
    if len(x1) == 2 and len(x2) == 2:
        return x1[0] == x2[0] or 1 in (x1[0], x2[0])
    return True


def ref_index_select(args):
    s, dim, idx = args[0].shape, args[1].value, args[2].shape
    return (
        len(s) >= 1
        and -len(s) <= dim < len(s)
        and len(idx) <= 1
    )


REFS = {
    "bmm": ref_bmm,
    "dot": ref_dot,
    "broadcast_to": ref_broadcast_to,
    "cartesian_prod": ref_cartesian_prod,
    "max_pool2d": ref_max_pool2d,
    "matrix_inverse": ref_matrix_inverse,
    "top_k": ref_top_k,
    "split": ref_split,
    "sigmoid_grad": ref_sigmoid_grad,
    "addr": ref_addr,
    "pairwise_distance": ref_pairwise_distance,
    "index_select": ref_index_select,
}
