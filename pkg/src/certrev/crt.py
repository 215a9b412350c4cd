"""Certificate revocation trees over range statements.

The issuer partitions the whole (CA key hash, serial) space into
statements such that every point matches exactly one of them, hashes
the statements into a binary tree and publishes the root. A proof is the
matching statement plus the sibling digests up to the root.

Level ``i + 1`` pairs neighbours of level ``i``; an odd trailing node is
hashed alone, so with 11 leaves the level sizes are 11, 6, 3, 2, 1.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass
from typing import Sequence

from certrev.codec import DecodeError, Reader, Writer
from certrev.model import Verdict
from certrev.primitives import MODERN_WIDTH, Digest, Signature, leaf_hash, merkle_pair, merkle_single, sign


class _Inf:
    __slots__ = ("sign",)

    def __init__(self, sign: int) -> None:
        self.sign = sign

    def __repr__(self) -> str:
        return "-∞" if self.sign < 0 else "∞"

    def __reduce__(self):
        return (_inf, (self.sign,))


NEG_INF = _Inf(-1)
POS_INF = _Inf(1)


def _inf(sign: int) -> _Inf:
    return NEG_INF if sign < 0 else POS_INF


def _lt(a, b) -> bool:
    if a is NEG_INF:
        return b is not NEG_INF
    if a is POS_INF or b is NEG_INF:
        return False
    if b is POS_INF:
        return True
    return a < b


def _le(a, b) -> bool:
    return a is b or a == b or _lt(a, b)


class Kind(enum.IntEnum):
    UNKNOWN_CA = 0
    CA_RANGE = 1


@dataclass(frozen=True)
class Statement:
    """Either "CA_low < CA_X < CA_high: unknown CA" or
    "CA_X = ca and x_low <= X < x_high: X revoked iff X = revoked_iff"."""

    kind: Kind
    ca_low: object
    ca_high: object
    x_low: object = NEG_INF
    x_high: object = POS_INF
    revoked_iff: object = NEG_INF

    def matches(self, ca: bytes, serial: int) -> bool:
        if self.kind is Kind.UNKNOWN_CA:
            return _lt(self.ca_low, ca) and _lt(ca, self.ca_high)
        return ca == self.ca_low and _le(self.x_low, serial) and _lt(serial, self.x_high)

    def verdict(self, serial: int) -> Verdict:
        if self.kind is Kind.UNKNOWN_CA:
            return Verdict.UNKNOWN
        return Verdict.REVOKED if serial == self.revoked_iff else Verdict.VALID

    def encode(self) -> bytes:
        w = Writer().u8(int(self.kind))
        _put_ca(w, self.ca_low)
        _put_ca(w, self.ca_high)
        if self.kind is Kind.CA_RANGE:
            _put_serial(w, self.x_low)
            _put_serial(w, self.x_high)
            _put_serial(w, self.revoked_iff)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "Statement":
        try:
            kind = Kind(r.u8())
        except ValueError as e:
            raise DecodeError(str(e)) from None
        lo, hi = _get_ca(r), _get_ca(r)
        if kind is Kind.UNKNOWN_CA:
            return cls(kind, lo, hi)
        return cls(kind, lo, hi, _get_serial(r), _get_serial(r), _get_serial(r))

    def describe(self, names: dict[bytes, str] | None = None) -> str:
        names = names or {}

        def ca(v) -> str:
            if isinstance(v, _Inf):
                return repr(v)
            return names.get(v, v.hex())

        def x(v) -> str:
            return repr(v) if isinstance(v, _Inf) else str(v)

        if self.kind is Kind.UNKNOWN_CA:
            return (f"If: {ca(self.ca_low)} < CA_X < {ca(self.ca_high)}"
                    "  Then: Unknown CA (revocation status unknown)")
        return (f"If: CA_X = {ca(self.ca_low)} and {x(self.x_low)} <= X < {x(self.x_high)}"
                f"  Then: X is revoked if and only if X = {x(self.revoked_iff)}")


def _put_ca(w: Writer, v) -> None:
    if v is NEG_INF:
        w.u8(0)
    elif v is POS_INF:
        w.u8(2)
    else:
        w.u8(1).u8(len(v)).raw(v)


def _get_ca(r: Reader):
    tag = r.u8()
    if tag == 0:
        return NEG_INF
    if tag == 2:
        return POS_INF
    if tag == 1:
        return r.raw(r.u8())
    raise DecodeError(f"bad bound tag {tag}")


def _put_serial(w: Writer, v) -> None:
    if v is NEG_INF:
        w.u8(0)
    elif v is POS_INF:
        w.u8(2)
    else:
        w.u8(1).u64(v)


def _get_serial(r: Reader):
    tag = r.u8()
    if tag == 0:
        return NEG_INF
    if tag == 2:
        return POS_INF
    if tag == 1:
        return r.u64()
    raise DecodeError(f"bad bound tag {tag}")


def crt_build_statements(cas: Sequence[tuple[bytes, Sequence[int]]]) -> list[Statement]:
    """Partition statements for CAs given as ``(key hash, revoked serials)``, both ascending."""
    out: list[Statement] = []
    prev = NEG_INF
    for ca, serials in cas:
        if prev is not NEG_INF and not prev < ca:
            raise ValueError(f"CA hashes must be strictly increasing (duplicate or out of order at {ca.hex()})")
        if any(b <= a for a, b in zip(serials, serials[1:])):
            raise ValueError(f"serials of CA {ca.hex()} must be strictly increasing")
        out.append(Statement(Kind.UNKNOWN_CA, prev, ca))
        lows = [NEG_INF, *serials]
        highs = [*serials, POS_INF]
        for lo, hi in zip(lows, highs):
            out.append(Statement(Kind.CA_RANGE, ca, ca, lo, hi, lo))
        prev = ca
    out.append(Statement(Kind.UNKNOWN_CA, prev, POS_INF))
    return out


SIDE_LEFT = 0   # sibling sits to the left of the running hash
SIDE_RIGHT = 1
SIDE_SINGLE = 2  # no sibling: odd trailing node hashed alone


@dataclass(frozen=True)
class CrtProof:
    statement: Statement
    leaf_index: int
    co_path: tuple[tuple[int, Digest | None], ...]

    def encode(self) -> bytes:
        w = Writer().raw(self.statement.encode()).u32(self.leaf_index).u8(len(self.co_path))
        for side, d in self.co_path:
            w.u8(side)
            if side != SIDE_SINGLE:
                w.raw(d)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes, width: int = MODERN_WIDTH) -> "CrtProof":
        r = Reader(data)
        st = Statement.read(r)
        idx, n = r.u32(), r.u8()
        path = []
        for _ in range(n):
            side = r.u8()
            if side == SIDE_SINGLE:
                path.append((side, None))
            elif side in (SIDE_LEFT, SIDE_RIGHT):
                path.append((side, r.raw(width)))
            else:
                raise DecodeError(f"bad side {side}")
        r.expect_end()
        return cls(st, idx, tuple(path))


class CrtTree:
    def __init__(self, statements: Sequence[Statement], width: int = MODERN_WIDTH,
                 issuer: str = "crt-issuer") -> None:
        if not statements:
            raise ValueError("need at least one statement")
        self.statements = list(statements)
        self.width = width
        level = [leaf_hash(s.encode(), width) for s in self.statements]
        self.levels: list[list[Digest]] = [level]
        while len(level) > 1:
            nxt = []
            for j in range(0, len(level), 2):
                if j + 1 < len(level):
                    nxt.append(merkle_pair(level[j], level[j + 1]))
                else:
                    nxt.append(merkle_single(level[j]))
            self.levels.append(nxt)
            level = nxt
        self.root: Digest = level[0]
        self.signature: Signature = sign(issuer, self.root)
        # nodes hashed by this (full) build
        self.touched = sum(len(lv) for lv in self.levels)
        self._index()

    def _index(self) -> None:
        self._cas: list[bytes] = []
        self._ca_first: list[int] = []
        self._ca_serials: list[list[int]] = []
        self._gaps: list[int] = []
        for j, s in enumerate(self.statements):
            if s.kind is Kind.UNKNOWN_CA:
                self._gaps.append(j)
            elif s.x_low is NEG_INF:
                self._cas.append(s.ca_low)
                self._ca_first.append(j)
                self._ca_serials.append([])
            else:
                self._ca_serials[-1].append(s.x_low)

    def node(self, level: int, j: int) -> Digest:
        return self.levels[level][j]

    def find(self, ca: bytes, serial: int) -> int:
        i = bisect.bisect_left(self._cas, ca)
        if i < len(self._cas) and self._cas[i] == ca:
            return self._ca_first[i] + bisect.bisect_right(self._ca_serials[i], serial)
        return self._gaps[i]

    def co_path(self, index: int) -> tuple[tuple[int, Digest | None], ...]:
        path = []
        for level in self.levels[:-1]:
            sib = index ^ 1
            if sib >= len(level):
                path.append((SIDE_SINGLE, None))
            else:
                path.append((SIDE_LEFT if sib < index else SIDE_RIGHT, level[sib]))
            index >>= 1
        return tuple(path)

    def supporting_positions(self, index: int) -> list[tuple[int, int]]:
        """``(level, j)`` of each sibling digest in the co-path."""
        out = []
        for lvl, level in enumerate(self.levels[:-1]):
            if (index ^ 1) < len(level):
                out.append((lvl, index ^ 1))
            index >>= 1
        return out


def crt_build_tree(statements: Sequence[Statement], width: int = MODERN_WIDTH) -> CrtTree:
    return CrtTree(statements, width)


def crt_lookup(tree: CrtTree, ca: bytes, serial: int) -> CrtProof:
    j = tree.find(ca, serial)
    return CrtProof(tree.statements[j], j, tree.co_path(j))


def fold(proof: CrtProof, width: int) -> tuple[Digest, int, list[Digest]] | None:
    """Fold the statement hash up the co-path; returns (root, final index, intermediates)."""
    h = leaf_hash(proof.statement.encode(), width)
    idx = proof.leaf_index
    trail = [h]
    for side, d in proof.co_path:
        if side == SIDE_SINGLE:
            if idx & 1:
                return None
            h = merkle_single(h)
        elif side == SIDE_LEFT:
            if not idx & 1 or d is None or len(d) != width:
                return None
            h = merkle_pair(d, h)
        elif side == SIDE_RIGHT:
            if idx & 1 or d is None or len(d) != width:
                return None
            h = merkle_pair(h, d)
        else:
            return None
        idx >>= 1
        trail.append(h)
    return h, idx, trail


def crt_verify(root: Digest, proof: CrtProof, ca: bytes, serial: int) -> Verdict:
    if not proof.statement.matches(ca, serial):
        return Verdict.INVALID
    folded = fold(proof, len(root))
    if folded is None:
        return Verdict.INVALID
    h, idx, _ = folded
    if idx != 0 or h != root:
        return Verdict.INVALID
    return proof.statement.verdict(serial)


def crt_verify_bytes(root: Digest, data: bytes, ca: bytes, serial: int) -> Verdict:
    try:
        proof = CrtProof.decode(data, len(root))
    except (DecodeError, ValueError):
        return Verdict.INVALID
    return crt_verify(root, proof, ca, serial)
