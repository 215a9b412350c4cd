"""Authenticated dictionary of revoked serials on a hashed 2-3 tree.

Leaves hold ``(serial, revocation day)`` in ascending serial order and all
sit at one depth; every interior node has two or three children. An
interior digest hashes, for each child, its key range and digest, under
an arity tag. Updates rehash only the nodes on the insertion or deletion
path (plus split/merge siblings), which the returned report counts.

Absence of a serial is proved by the two neighbouring leaves around it.
Because positions and ranges are bound into the digests, the verifier can
check that the two leaves really are adjacent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from certrev.codec import DecodeError, Reader, Writer
from certrev.model import Verdict
from certrev.primitives import (
    MODERN_WIDTH,
    TAG_EMPTY,
    TAG_LEAF,
    TAG_NODE2,
    TAG_NODE3,
    Digest,
    Signature,
    sign,
    tagged_hash,
)


def empty_root(width: int = MODERN_WIDTH) -> Digest:
    return tagged_hash(TAG_EMPTY, b"", width)


def _leaf_digest(serial: int, day: int, width: int) -> Digest:
    return tagged_hash(TAG_LEAF, Writer().u64(serial).u32(day).getvalue(), width)


def _interior_digest(entries, width: int) -> Digest:
    w = Writer()
    for lo, hi, d in entries:
        w.u64(lo).u64(hi).raw(d)
    return tagged_hash(TAG_NODE2 if len(entries) == 2 else TAG_NODE3, w.getvalue(), width)


class _Node:
    __slots__ = ("children", "key", "day", "digest", "lo", "hi")

    def __init__(self, children=None, key=0, day=0):
        self.children = children
        self.key = key
        self.day = day
        self.digest = b""
        self.lo = key
        self.hi = key

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass(frozen=True)
class UpdateReport:
    recomputed: int
    positions: tuple[tuple[int, ...], ...]
    depth: int


class TwoThreeTree:
    def __init__(self, width: int = MODERN_WIDTH) -> None:
        self.width = width
        self.root: _Node | None = None
        self.size = 0

    # -- queries -----------------------------------------------------------

    @property
    def root_hash(self) -> Digest:
        return empty_root(self.width) if self.root is None else self.root.digest

    @property
    def depth(self) -> int:
        """Edges from the root to any leaf; -1 for the empty tree."""
        d, node = -1, self.root
        while node is not None:
            d += 1
            node = None if node.is_leaf else node.children[0]
        return d

    def __len__(self) -> int:
        return self.size

    def __contains__(self, serial: int) -> bool:
        return self._leaf_path(serial) is not None

    def leaves(self) -> Iterator[tuple[int, int]]:
        def walk(n: _Node):
            if n.is_leaf:
                yield n.key, n.day
            else:
                for c in n.children:
                    yield from walk(c)
        if self.root is not None:
            yield from walk(self.root)

    def keys(self) -> list[int]:
        return [k for k, _ in self.leaves()]

    # -- hashing -----------------------------------------------------------

    def _rehash(self, node: _Node) -> None:
        if node.is_leaf:
            node.digest = _leaf_digest(node.key, node.day, self.width)
            node.lo = node.hi = node.key
        else:
            cs = node.children
            node.digest = _interior_digest([(c.lo, c.hi, c.digest) for c in cs], self.width)
            node.lo, node.hi = cs[0].lo, cs[-1].hi

    @staticmethod
    def _descend_index(node: _Node, key: int) -> int:
        for i, c in enumerate(node.children):
            if key <= c.hi:
                return i
        return len(node.children) - 1

    # -- updates -----------------------------------------------------------

    def insert(self, serial: int, day: int = 0) -> UpdateReport:
        if not 0 <= serial < 1 << 64:
            raise ValueError("serial must fit in 64 bits")
        if serial in self:
            raise KeyError(f"serial {serial} already present")
        leaf = _Node(key=serial, day=day)
        self._rehash(leaf)
        touched = [leaf]
        if self.root is None:
            self.root = leaf
        elif self.root.is_leaf:
            pair = sorted([self.root, leaf], key=lambda n: n.key)
            self.root = _Node(children=pair)
            self._rehash(self.root)
            touched.append(self.root)
        else:
            split = self._insert(self.root, leaf, touched)
            if split is not None:
                self.root = _Node(children=[self.root, split])
                self._rehash(self.root)
                touched.append(self.root)
        self.size += 1
        return self._report(touched)

    def _insert(self, node: _Node, leaf: _Node, touched: list) -> _Node | None:
        cs = node.children
        if cs[0].is_leaf:
            i = 0
            while i < len(cs) and cs[i].key < leaf.key:
                i += 1
            cs.insert(i, leaf)
        else:
            i = self._descend_index(node, leaf.key)
            split = self._insert(cs[i], leaf, touched)
            if split is not None:
                cs.insert(i + 1, split)
        new = None
        if len(cs) == 4:
            new = _Node(children=cs[2:])
            node.children = cs[:2]
            self._rehash(new)
            touched.append(new)
        self._rehash(node)
        touched.append(node)
        return new

    def delete(self, serial: int) -> UpdateReport:
        if serial not in self:
            raise KeyError(f"serial {serial} not present")
        touched: list[_Node] = []
        if self.root.is_leaf:
            self.root = None
        elif self._delete(self.root, serial, touched):
            self.root = self.root.children[0]
        self.size -= 1
        return self._report(touched)

    def _delete(self, node: _Node, key: int, touched: list) -> bool:
        cs = node.children
        if cs[0].is_leaf:
            del cs[next(i for i, c in enumerate(cs) if c.key == key)]
        else:
            i = self._descend_index(node, key)
            if self._delete(cs[i], key, touched):
                self._fix_underflow(node, i, touched)
        if len(node.children) < 2:
            return True
        self._rehash(node)
        touched.append(node)
        return False

    def _fix_underflow(self, parent: _Node, i: int, touched: list) -> None:
        cs = parent.children
        child = cs[i]
        left = cs[i - 1] if i > 0 else None
        right = cs[i + 1] if i + 1 < len(cs) else None
        if left is not None and len(left.children) == 3:
            child.children.insert(0, left.children.pop())
            changed = [left, child]
        elif right is not None and len(right.children) == 3:
            child.children.append(right.children.pop(0))
            changed = [child, right]
        elif left is not None:
            left.children.append(child.children[0])
            del cs[i]
            changed = [left]
        else:
            right.children.insert(0, child.children[0])
            del cs[i]
            changed = [right]
        for n in changed:
            self._rehash(n)
            touched.append(n)

    def _report(self, touched: list[_Node]) -> UpdateReport:
        ids = {id(n) for n in touched}
        positions = []
        if self.root is not None and id(self.root) in ids:
            stack: list[tuple[_Node, tuple[int, ...]]] = [(self.root, ())]
            while stack:
                n, pos = stack.pop()
                positions.append(pos)
                if not n.is_leaf:
                    for j, c in enumerate(n.children):
                        if id(c) in ids:
                            stack.append((c, pos + (j,)))
        return UpdateReport(len(touched), tuple(sorted(positions)), self.depth)

    # -- proofs ------------------------------------------------------------

    def _leaf_path(self, serial: int) -> list[tuple[_Node, int]] | None:
        node, path = self.root, []
        if node is None:
            return None
        while not node.is_leaf:
            i = self._descend_index(node, serial)
            path.append((node, i))
            node = node.children[i]
        return path if node.key == serial else None

    def _extreme_path(self, serial: int, below: bool) -> list[tuple[_Node, int]] | None:
        """Path to the largest leaf < serial (below) or smallest leaf > serial."""
        node, path = self.root, []
        if node is None:
            return None
        if node.is_leaf:
            ok = node.key < serial if below else node.key > serial
            return [] if ok else None
        while not node.is_leaf:
            cs = node.children
            if below:
                cand = [j for j, c in enumerate(cs) if c.lo < serial]
                j = cand[-1] if cand else None
            else:
                cand = [j for j, c in enumerate(cs) if c.hi > serial]
                j = cand[0] if cand else None
            if j is None:
                return None
            path.append((node, j))
            node = cs[j]
        return path

    def _membership(self, path: list[tuple[_Node, int]]) -> "MembershipProof":
        leaf = path[-1][0].children[path[-1][1]] if path else self.root
        steps = []
        for node, i in reversed(path):
            sibs = tuple((c.lo, c.hi, c.digest) for j, c in enumerate(node.children) if j != i)
            steps.append(PathStep(i, len(node.children), sibs))
        return MembershipProof(leaf.key, leaf.day, tuple(steps))

    def prove(self, serial: int) -> "MembershipProof | NonMembershipProof":
        path = self._leaf_path(serial)
        if path is not None:
            return self._membership(path)
        lp = self._extreme_path(serial, below=True)
        rp = self._extreme_path(serial, below=False)
        return NonMembershipProof(None if lp is None else self._membership(lp),
                                  None if rp is None else self._membership(rp))

    def bulletin(self, day: int, issuer: str = "ca") -> "Bulletin":
        return Bulletin(day, self.root_hash, sign(issuer, Writer().u32(day).raw(self.root_hash).getvalue()))

    # -- checks ------------------------------------------------------------

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural or hashing invariant fails."""
        if self.root is None:
            assert self.size == 0
            return
        depths: set[int] = set()
        count = 0

        def walk(n: _Node, d: int) -> None:
            nonlocal count
            if n.is_leaf:
                depths.add(d)
                count += 1
                assert n.digest == _leaf_digest(n.key, n.day, self.width), "stale leaf digest"
                return
            assert len(n.children) in (2, 3), f"interior node with {len(n.children)} children"
            for c in n.children:
                walk(c, d + 1)
            for a, b in zip(n.children, n.children[1:]):
                assert a.hi < b.lo, "children out of order"
            entries = [(c.lo, c.hi, c.digest) for c in n.children]
            assert n.digest == _interior_digest(entries, self.width), "stale interior digest"
            assert (n.lo, n.hi) == (n.children[0].lo, n.children[-1].hi), "stale key range"

        walk(self.root, 0)
        assert len(depths) == 1, f"leaves at depths {sorted(depths)}"
        assert count == self.size, "size counter out of sync"
        keys = self.keys()
        assert all(a < b for a, b in zip(keys, keys[1:])), "leaf keys not increasing"


def tt_insert(tree: TwoThreeTree, serial: int, day: int = 0) -> UpdateReport:
    return tree.insert(serial, day)


def tt_delete(tree: TwoThreeTree, serial: int) -> UpdateReport:
    return tree.delete(serial)


def tt_prove(tree: TwoThreeTree, serial: int):
    return tree.prove(serial)


@dataclass(frozen=True)
class PathStep:
    position: int
    arity: int
    siblings: tuple[tuple[int, int, Digest], ...]


@dataclass(frozen=True)
class MembershipProof:
    serial: int
    day: int
    steps: tuple[PathStep, ...]

    def write(self, w: Writer) -> None:
        w.u64(self.serial).u32(self.day).u8(len(self.steps))
        for st in self.steps:
            w.u8(st.arity << 4 | st.position)
            for lo, hi, d in st.siblings:
                w.u64(lo).u64(hi).raw(d)

    @classmethod
    def read(cls, r: Reader, width: int) -> "MembershipProof":
        serial, day, n = r.u64(), r.u32(), r.u8()
        steps = []
        for _ in range(n):
            b = r.u8()
            arity, pos = b >> 4, b & 0x0F
            if arity not in (2, 3) or pos >= arity:
                raise DecodeError(f"bad arity/position octet {b:#x}")
            sibs = tuple((r.u64(), r.u64(), r.raw(width)) for _ in range(arity - 1))
            steps.append(PathStep(pos, arity, sibs))
        return cls(serial, day, tuple(steps))

    def encode(self) -> bytes:
        w = Writer().u8(0x4D)
        self.write(w)
        return w.getvalue()


@dataclass(frozen=True)
class NonMembershipProof:
    left: MembershipProof | None
    right: MembershipProof | None

    def encode(self) -> bytes:
        w = Writer().u8(0x4E).u8((self.left is not None) | (self.right is not None) << 1)
        for p in (self.left, self.right):
            if p is not None:
                p.write(w)
        return w.getvalue()


def decode_proof(data: bytes, width: int = MODERN_WIDTH) -> MembershipProof | NonMembershipProof:
    r = Reader(data)
    tag = r.u8()
    if tag == 0x4D:
        out = MembershipProof.read(r, width)
    elif tag == 0x4E:
        flags = r.u8()
        if flags > 3:
            raise DecodeError("bad flags")
        left = MembershipProof.read(r, width) if flags & 1 else None
        right = MembershipProof.read(r, width) if flags & 2 else None
        out = NonMembershipProof(left, right)
    else:
        raise DecodeError(f"bad proof tag {tag:#x}")
    r.expect_end()
    return out


@dataclass(frozen=True)
class Bulletin:
    day: int
    root_hash: Digest
    signature: Signature


def _fold(p: MembershipProof, width: int) -> Digest | None:
    h = _leaf_digest(p.serial, p.day, width)
    lo = hi = p.serial
    for st in p.steps:
        if st.arity not in (2, 3) or not 0 <= st.position < st.arity or len(st.siblings) != st.arity - 1:
            return None
        entries = list(st.siblings)
        entries.insert(st.position, (lo, hi, h))
        for a, b in zip(entries, entries[1:]):
            if not a[1] < b[0]:
                return None
        if any(e[0] > e[1] or len(e[2]) != width for e in entries):
            return None
        h = _interior_digest(entries, width)
        lo, hi = entries[0][0], entries[-1][1]
    return h


def _adjacent(left: MembershipProof, right: MembershipProof) -> bool:
    if len(left.steps) != len(right.steps):
        return False
    # walk from the root downwards
    ls, rs = left.steps[::-1], right.steps[::-1]
    k = 0
    while k < len(ls) and ls[k].position == rs[k].position:
        k += 1
    if k == len(ls) or rs[k].position != ls[k].position + 1:
        return False
    return all(a.position == a.arity - 1 for a in ls[k + 1:]) and all(b.position == 0 for b in rs[k + 1:])


def tt_verify(root: Digest, proof, serial: int) -> Verdict:
    width = len(root)
    if isinstance(proof, MembershipProof):
        if proof.serial == serial and _fold(proof, width) == root:
            return Verdict.REVOKED
        return Verdict.INVALID
    if not isinstance(proof, NonMembershipProof):
        return Verdict.INVALID
    left, right = proof.left, proof.right
    if left is None and right is None:
        return Verdict.VALID if root == empty_root(width) else Verdict.INVALID
    for p, ok in ((left, left is None or left.serial < serial), (right, right is None or right.serial > serial)):
        if not ok or (p is not None and _fold(p, width) != root):
            return Verdict.INVALID
    if left is None:
        adjacent = all(st.position == 0 for st in right.steps)
    elif right is None:
        adjacent = all(st.position == st.arity - 1 for st in left.steps)
    else:
        adjacent = _adjacent(left, right)
    return Verdict.VALID if adjacent else Verdict.INVALID


def tt_verify_bytes(root: Digest, data: bytes, serial: int) -> Verdict:
    try:
        proof = decode_proof(data, len(root))
    except (DecodeError, ValueError):
        return Verdict.INVALID
    return tt_verify(root, proof, serial)
