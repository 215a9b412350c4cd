from __future__ import annotations

import hashlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certrev.codec import DecodeError, Reader, Writer
from certrev.primitives import (
    NARROW_WIDTH,
    ChainParams,
    Signature,
    iterate,
    leaf_hash,
    merkle_pair,
    merkle_single,
    sign,
    step,
    width_for_mode,
)

# F applied three times to 0x00..01, computed once with bare hashlib (tag octet 0x00) and frozen
SEED_32 = bytes(31) + b"\x01"
SEED_13 = bytes(12) + b"\x01"
ITER3_32 = "cde53866047b25f0c7af20f881a64dba3c2b1d83155d114e7d935ceeb013d466"
ITER3_13 = "f984fe4016057bc6f1acd74d9f"

digests = st.binary(min_size=32, max_size=32)


def test_iterate_zero_is_identity():
    assert iterate(SEED_32, 0) == SEED_32


def test_iterate_pinned_vectors():
    assert iterate(SEED_32, 3).hex() == ITER3_32
    assert iterate(SEED_13, 3).hex() == ITER3_13


def test_iterate_matches_three_single_steps():
    assert iterate(SEED_32, 3) == step(step(step(SEED_32)))


def test_iterate_365_is_364_then_one():
    s = hashlib.sha256(b"seed").digest()
    assert iterate(s, 365) == iterate(iterate(s, 364), 1)


def test_iterate_rejects_negative():
    with pytest.raises(ValueError):
        iterate(SEED_32, -1)


@given(digests, st.integers(0, 40), st.integers(0, 40))
@settings(max_examples=60)
def test_composition(s, a, b):
    assert iterate(s, a + b) == iterate(iterate(s, a), b)


@given(st.binary(min_size=13, max_size=32), st.integers(0, 20))
@settings(max_examples=40)
def test_chain_keeps_width(s, k):
    assert len(iterate(s, k)) == len(s)


def test_merkle_pair_order_sensitive():
    a, b = leaf_hash(b"a"), leaf_hash(b"b")
    assert merkle_pair(a, b) != merkle_pair(b, a)


def test_merkle_pair_width_mismatch():
    with pytest.raises(ValueError):
        merkle_pair(bytes(32), bytes(13))


def test_single_is_not_identity_nor_pair():
    x = leaf_hash(b"x")
    assert merkle_single(x) != x
    assert merkle_single(x) == merkle_single(x)
    assert merkle_single(x) != merkle_pair(x, x)


def test_four_leaf_root_by_hand():
    leaves = [leaf_hash(bytes([i])) for i in range(4)]
    n10 = hashlib.sha256(b"\x02" + leaves[0] + leaves[1]).digest()
    n11 = hashlib.sha256(b"\x02" + leaves[2] + leaves[3]).digest()
    root = hashlib.sha256(b"\x02" + n10 + n11).digest()
    assert merkle_pair(merkle_pair(leaves[0], leaves[1]), merkle_pair(leaves[2], leaves[3])) == root


def test_single_over_pair_position():
    # an odd trailing node at one level is lifted by single hashing
    a, b = leaf_hash(b"p"), leaf_hash(b"q")
    n = merkle_pair(a, b)
    assert merkle_single(n) == hashlib.sha256(b"\x01" + n).digest()


def test_one_wayness_proxy():
    rng = random.Random(11)
    target = iterate(rng.randbytes(32), 5)
    hits = sum(1 for _ in range(1 << 16) if step(rng.randbytes(NARROW_WIDTH)) == target[:NARROW_WIDTH])
    assert hits == 0


def test_chain_params():
    p = ChainParams(365)
    assert p.octets == NARROW_WIDTH
    with pytest.raises(ValueError):
        ChainParams(0)
    with pytest.raises(ValueError):
        ChainParams(10, width=64)
    assert width_for_mode("modern") == 32
    with pytest.raises(ValueError):
        width_for_mode("other")


def test_signature_roundtrip_and_binding():
    sig = sign("ca0", b"payload")
    assert sig.verifies("ca0", b"payload")
    assert not sig.verifies("ca1", b"payload")
    assert not sig.verifies("ca0", b"payloaD")
    assert Signature.decode(Reader(sig.encode())) == sig


def test_codec_roundtrip_and_errors():
    data = Writer().u8(1).u16(2).u32(3).u64(4).i32(-5).blob(b"xy").getvalue()
    r = Reader(data)
    assert (r.u8(), r.u16(), r.u32(), r.u64(), r.i32(), r.blob()) == (1, 2, 3, 4, -5, b"xy")
    r.expect_end()
    with pytest.raises(DecodeError):
        Reader(b"\x00").u32()
    with pytest.raises(DecodeError):
        Reader(b"\x00").expect_end()
