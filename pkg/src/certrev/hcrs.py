"""Hierarchical revocation over a complete binary tree of serials.

Leaves are the ``2**l`` bit strings of length ``l``; node ``u`` is the
parent of ``u + "0"`` and ``u + "1"``; the empty string is the root. Every
node carries its own hash chain ``F^D(r)``. On day ``i`` the CA releases
``F^(D-i)(r)`` only for the maximal subtrees free of revoked leaves, so one
value vouches for a whole clean subtree.

Only the binary tree is built; a c-ary variant would replace
``_children`` and the path encoding.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable

from certrev.codec import DecodeError, Reader, Writer
from certrev.model import Verdict
from certrev.primitives import MODERN_WIDTH, Digest, derive, iterate

ROOT = ""


def node_name(node: str) -> str:
    return node if node else "φ"


def leaf_label(index: int, depth: int) -> str:
    if not 0 <= index < (1 << depth):
        raise ValueError(f"leaf {index} outside a depth-{depth} tree")
    return format(index, f"0{depth}b") if depth else ""


def depth_for(population: int) -> int:
    if population < 1:
        raise ValueError("population must be positive")
    return max(1, math.ceil(math.log2(population)))


def is_leaf(label: str, depth: int) -> bool:
    return len(label) == depth and all(c in "01" for c in label)


def _children(node: str) -> tuple[str, str]:
    return node + "0", node + "1"


def prefixes(label: str) -> list[str]:
    return [label[:j] for j in range(len(label) + 1)]


def padded_revoked(population: int, depth: int, revoked: Iterable[int] = ()) -> set[str]:
    """Leaf labels of ``revoked`` plus the virtual leaves beyond ``population``."""
    out = {leaf_label(s, depth) for s in revoked}
    out.update(leaf_label(s, depth) for s in range(population, 1 << depth))
    return out


def hcrs_cover(depth: int, revoked: Iterable[str]) -> set[str]:
    """Minimum set of day verification nodes: clean nodes with a dirty parent."""
    revoked = set(revoked)
    for leaf in revoked:
        if not is_leaf(leaf, depth):
            raise ValueError(f"{leaf!r} is not a leaf of a depth-{depth} tree")
    if not revoked:
        return {ROOT}
    dirty = {p for leaf in revoked for p in prefixes(leaf)}
    cover = set()
    for node in dirty:
        if len(node) < depth:
            cover.update(c for c in _children(node) if c not in dirty)
    return cover


def excluded_nodes(depth: int, revoked: Iterable[str]) -> set[str]:
    """Interior nodes barred from the cover: every proper ancestor of a revoked leaf."""
    return {p for leaf in revoked for p in prefixes(leaf)[:-1]}


def covered_leaves(depth: int, nodes: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for n in nodes:
        rest = depth - len(n)
        for k in range(1 << rest):
            out.add(n + (format(k, f"0{rest}b") if rest else ""))
    return out


@dataclass
class HcrsCertPath:
    leaf: str
    path_anchors: list[Digest]

    def __post_init__(self) -> None:
        if len(self.path_anchors) != len(self.leaf) + 1:
            raise ValueError("need one anchor per node from root to leaf")


class HcrsTree:
    """CA-side tree. Node seeds are derived from one master secret."""

    def __init__(self, depth: int, D: int = 365, width: int = MODERN_WIDTH,
                 secret: bytes | None = None) -> None:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        if D < 1:
            raise ValueError("D must be >= 1")
        self.depth = depth
        self.D = D
        self.width = width
        self._secret = secret if secret is not None else os.urandom(32)
        self._anchors: dict[str, Digest] = {}
        self._last_revoked: set[str] = set()
        self._last_day = 0

    @property
    def leaf_count(self) -> int:
        return 1 << self.depth

    def seed(self, node: str) -> Digest:
        if len(node) > self.depth or any(c not in "01" for c in node):
            raise ValueError(f"{node!r} is not a node of this tree")
        return derive(self._secret, b"hcrs:" + node.encode(), self.width)

    def anchor(self, node: str) -> Digest:
        a = self._anchors.get(node)
        if a is None:
            a = self._anchors[node] = iterate(self.seed(node), self.D)
        return a

    def value(self, node: str, day: int) -> Digest:
        if not 1 <= day <= self.D:
            raise ValueError(f"day {day} outside 1..{self.D}")
        return iterate(self.seed(node), self.D - day)

    def cert_path(self, leaf: str) -> HcrsCertPath:
        if not is_leaf(leaf, self.depth):
            raise ValueError(f"{leaf!r} is not a leaf")
        return HcrsCertPath(leaf, [self.anchor(p) for p in prefixes(leaf)])


@dataclass
class VerificationNodeSet:
    day: int
    nodes: set[str]
    values: dict[str, Digest] = field(default_factory=dict)

    def encode(self) -> bytes:
        w = Writer().u32(self.day).u32(len(self.nodes))
        for n in sorted(self.nodes):
            w.raw(encode_node(n)).raw(self.values[n])
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes, width: int) -> "VerificationNodeSet":
        r = Reader(data)
        day, n = r.u32(), r.u32()
        values = {}
        for _ in range(n):
            node = decode_node(r)
            values[node] = r.raw(width)
        r.expect_end()
        return cls(day, set(values), values)


def encode_node(node: str) -> bytes:
    """Depth octet followed by the bits packed MSB-first."""
    nbytes = (len(node) + 7) // 8
    v = int(node, 2) << (nbytes * 8 - len(node)) if node else 0
    return bytes((len(node),)) + v.to_bytes(nbytes, "big")


def decode_node(r: Reader) -> str:
    n = r.u8()
    nbytes = (n + 7) // 8
    raw = int.from_bytes(r.raw(nbytes), "big")
    pad = nbytes * 8 - n
    if raw & ((1 << pad) - 1):
        raise DecodeError("non-zero padding bits in node label")
    return format(raw >> pad, f"0{n}b") if n else ""


def hcrs_daily_update(tree: HcrsTree, revoked: Iterable[str], day: int) -> VerificationNodeSet:
    if not 1 <= day <= tree.D:
        raise ValueError(f"day {day} outside 1..{tree.D}")
    revoked = set(revoked)
    if day > tree._last_day and not tree._last_revoked <= revoked:
        raise ValueError("revoked sets must not shrink from one day to the next")
    nodes = hcrs_cover(tree.depth, revoked)
    tree._last_revoked, tree._last_day = revoked, day
    return VerificationNodeSet(day, nodes, {n: tree.value(n, day) for n in nodes})


class HcrsDirectory:
    def __init__(self, depth: int) -> None:
        self.depth = depth
        self.current: VerificationNodeSet | None = None

    def ingest(self, update: VerificationNodeSet) -> None:
        self.current = VerificationNodeSet(update.day, set(update.nodes), dict(update.values))


def hcrs_answer(directory: HcrsDirectory, leaf: str) -> tuple[str, Digest] | None:
    """Deepest covering ancestor of ``leaf`` with its value, or None (refused)."""
    cur = directory.current
    if cur is None:
        raise ValueError("directory has not ingested an update")
    if not is_leaf(leaf, directory.depth):
        return None
    for j in range(len(leaf), -1, -1):
        node = leaf[:j]
        if node in cur.values:
            return node, cur.values[node]
    return None


def hcrs_verify(cert_path: HcrsCertPath, node: str, value: Digest, day: int) -> Verdict:
    if not cert_path.leaf.startswith(node) or day < 1:
        return Verdict.INVALID
    if len(value) != len(cert_path.path_anchors[0]):
        return Verdict.INVALID
    if iterate(value, day) == cert_path.path_anchors[len(node)]:
        return Verdict.VALID
    return Verdict.INVALID


def answer_bytes(day: int, answer: tuple[str, Digest] | None) -> bytes:
    w = Writer().u32(day)
    if answer is None:
        return w.u8(0).getvalue()
    node, value = answer
    return w.u8(1).raw(encode_node(node)).raw(value).getvalue()


def decode_answer(data: bytes, width: int) -> tuple[int, tuple[str, Digest] | None]:
    """Inverse of :func:`answer_bytes`; rejects any non-canonical encoding."""
    r = Reader(data)
    day, found = r.u32(), r.u8()
    if found not in (0, 1):
        raise DecodeError("answer flag must be 0 or 1")
    if not found:
        r.expect_end()
        return day, None
    node = decode_node(r)
    value = r.raw(width)
    r.expect_end()
    return day, (node, value)
