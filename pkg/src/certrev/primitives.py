"""Hash-chain iteration, Merkle node hashing and the modeled CA signature.

One SHA-256 instance backs every primitive. Each use prefixes its own
one-octet tag so chain steps, single-child nodes, pair nodes, leaves and
2-3 tree interior nodes can never collide with each other.
"""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass

from certrev.codec import Reader, Writer

Digest = bytes

TAG_CHAIN = 0x00
TAG_SINGLE = 0x01
TAG_PAIR = 0x02
TAG_LEAF = 0x03
TAG_NODE2 = 0x04
TAG_NODE3 = 0x05
TAG_EMPTY = 0x06
TAG_SIGN = 0x07
TAG_DERIVE = 0x08

_CHAIN_PREFIX = bytes((TAG_CHAIN,))
_CHAIN_HASHER = hashlib.sha256(_CHAIN_PREFIX)

MODERN_WIDTH = 32
# 100-bit chain values rounded up to whole octets
NARROW_WIDTH = 13
MIN_WIDTH_BITS = 80


def _h(tag: int, *parts: bytes) -> bytes:
    h = hashlib.sha256(bytes((tag,)))
    for p in parts:
        h.update(p)
    return h.digest()


@dataclass(frozen=True)
class ChainParams:
    depth: int
    width: int = 100

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("chain depth must be >= 1")
        if self.width < MIN_WIDTH_BITS or self.width > 256:
            raise ValueError(f"chain width must be in [{MIN_WIDTH_BITS}, 256] bits")

    @property
    def octets(self) -> int:
        return (self.width + 7) // 8


def width_for_mode(mode: str) -> int:
    if mode == "paper":
        return NARROW_WIDTH
    if mode == "modern":
        return MODERN_WIDTH
    raise ValueError(f"unknown width mode {mode!r}")


def step(x: Digest) -> Digest:
    """One application of the one-way function; output keeps the input width."""
    return hashlib.sha256(_CHAIN_PREFIX + x).digest()[: len(x)]


def iterate(seed: Digest, k: int) -> Digest:
    """Apply the one-way function ``k`` times to ``seed``."""
    if k < 0:
        raise ValueError("iteration count must be non-negative")
    x = bytes(seed)
    n = len(x)
    # copying a hasher already fed the tag beats rehashing the tag every step
    fresh = _CHAIN_HASHER.copy
    for _ in range(k):
        h = fresh()
        h.update(x)
        x = h.digest()[:n]
    return x


def merkle_pair(left: Digest, right: Digest) -> Digest:
    if len(left) != len(right):
        raise ValueError(f"digest width mismatch: {len(left)} != {len(right)}")
    return _h(TAG_PAIR, left, right)[: len(left)]


def merkle_single(only: Digest) -> Digest:
    return _h(TAG_SINGLE, only)[: len(only)]


def leaf_hash(data: bytes, width: int = MODERN_WIDTH) -> Digest:
    return _h(TAG_LEAF, data)[:width]


def tagged_hash(tag: int, data: bytes, width: int = MODERN_WIDTH) -> Digest:
    return _h(tag, data)[:width]


def derive(secret: bytes, label: bytes, width: int) -> Digest:
    """Deterministic per-label secret (e.g. one chain seed per tree node)."""
    return _h(TAG_DERIVE, secret, label)[:width]


def random_digest(width: int, rng: random.Random | None = None) -> Digest:
    if rng is None:
        return os.urandom(width)
    return rng.randbytes(width)


@dataclass(frozen=True)
class Signature:
    """Stand-in for a CA signature: signer id plus a hash of the signed bytes.

    No key material is involved; verification recomputes the hash. Schemes
    only need signatures to be bound to their payload and signer.
    """

    signer: str
    payload_hash: bytes

    SIZE_HINT = 1 + 2 + 32

    def encode(self) -> bytes:
        return Writer().u8(TAG_SIGN).blob(self.signer.encode()).raw(self.payload_hash).getvalue()

    @classmethod
    def decode(cls, r: Reader) -> "Signature":
        if r.u8() != TAG_SIGN:
            raise ValueError("bad signature tag")
        signer = r.blob().decode()
        return cls(signer, r.raw(32))

    def verifies(self, signer: str, payload: bytes) -> bool:
        return self.signer == signer and self.payload_hash == _h(TAG_SIGN, signer.encode(), payload)


def sign(signer: str, payload: bytes) -> Signature:
    return Signature(signer, _h(TAG_SIGN, signer.encode(), payload))
