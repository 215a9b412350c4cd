"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp


def all_nodes(depth: int) -> list[str]:
    return ["".join(b) for k in range(depth + 1) for b in itertools.product("01", repeat=k)]


def leaves_under(node: str, depth: int) -> set[str]:
    return {node + "".join(b) for b in itertools.product("01", repeat=depth - len(node))}


@lru_cache(maxsize=None)
def _antichains(node: str, depth: int) -> tuple[frozenset, ...]:
    # every antichain of the subtree rooted at node, including the empty one
    if len(node) == depth:
        return (frozenset(), frozenset({node}))
    left, right = _antichains(node + "0", depth), _antichains(node + "1", depth)
    out = [a | b for a in left for b in right]
    out.append(frozenset({node}))
    return tuple(out)


def brute_force_cover_sizes(depth: int, revoked: set[str]) -> list[int]:
    """Sizes of every antichain whose subtrees are clean and cover exactly the clean leaves."""
    clean = set(itertools.chain.from_iterable(
        [("".join(b))] for b in itertools.product("01", repeat=depth))) - set(revoked)
    sizes = []
    for ac in _antichains("", depth):
        covered: set[str] = set()
        ok = True
        for n in ac:
            under = leaves_under(n, depth)
            if under & revoked:
                ok = False
                break
            covered |= under
        if ok and covered == clean:
            sizes.append(len(ac))
    return sizes


def ilp_min_cover(depth: int, revoked: set[str]) -> int:
    """Minimum number of clean subtrees that partition the clean leaves, via MILP."""
    nodes = [n for n in all_nodes(depth) if not leaves_under(n, depth) & revoked]
    clean = sorted(set("".join(b) for b in itertools.product("01", repeat=depth)) - revoked)
    if not clean:
        return 0
    idx = {n: i for i, n in enumerate(nodes)}
    A = np.zeros((len(clean), len(nodes)))
    for r, leaf in enumerate(clean):
        for j in range(depth + 1):
            if leaf[:j] in idx:
                A[r, idx[leaf[:j]]] = 1
    res = milp(c=np.ones(len(nodes)), integrality=np.ones(len(nodes)),
               bounds=Bounds(0, 1), constraints=LinearConstraint(A, 1, 1))
    assert res.success, res.message
    return int(round(res.fun))


def antichain_min_table(depth: int) -> dict[int, int]:
    """Walk every antichain, keeping the smallest size seen per covered-leaf bitmask.

    Leaf ``i`` (label ``format(i, 'b')`` padded) is bit ``i``. An antichain of
    subtrees covering exactly the clean leaves is a condition-satisfying cover,
    so ``table[clean_mask]`` is the brute-force minimum for that revoked set.
    """
    def walk(node: str) -> dict[int, int]:
        lo = int(node.ljust(depth, "0"), 2) if depth else 0
        full = ((1 << (1 << (depth - len(node)))) - 1) << lo
        if len(node) == depth:
            return {0: 0, full: 1}
        left, right = walk(node + "0"), walk(node + "1")
        out: dict[int, int] = {}
        for ma, sa in left.items():
            for mb, sb in right.items():
                m, s = ma | mb, sa + sb
                if s < out.get(m, 1 << 30):
                    out[m] = s
        out[full] = 1
        return out
    return walk("")
