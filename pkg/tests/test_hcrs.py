from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from certrev.codec import DecodeError, Reader
from certrev.hcrs import (
    HcrsDirectory,
    HcrsTree,
    VerificationNodeSet,
    answer_bytes,
    covered_leaves,
    decode_answer,
    decode_node,
    encode_node,
    excluded_nodes,
    hcrs_answer,
    hcrs_cover,
    hcrs_daily_update,
    hcrs_verify,
    leaf_label,
    padded_revoked,
)
from certrev.model import Verdict
from certrev.primitives import iterate

from oracles import brute_force_cover_sizes, ilp_min_cover

EXAMPLE_LEAVES = {"0100", "0101", "1111"}


def _random_revoked(rng: random.Random, depth: int) -> set[str]:
    n = 1 << depth
    r = rng.randint(1, max(1, n // 2))
    return {leaf_label(i, depth) for i in rng.sample(range(n), r)}


def test_sixteen_leaf_cover():
    assert hcrs_cover(4, EXAMPLE_LEAVES) == {"00", "011", "10", "110", "1110"}
    assert excluded_nodes(4, EXAMPLE_LEAVES) == {"010", "111", "01", "11", "0", "1", ""}


def test_sixteen_leaf_brute_force_minimum():
    sizes = brute_force_cover_sizes(4, EXAMPLE_LEAVES)
    assert sizes and min(sizes) == 5
    assert ilp_min_cover(4, EXAMPLE_LEAVES) == 5


def test_no_revocations_releases_root():
    assert hcrs_cover(5, set()) == {""}


def test_everything_revoked_releases_nothing():
    assert hcrs_cover(3, {leaf_label(i, 3) for i in range(8)}) == set()


def test_cover_rejects_non_leaves():
    with pytest.raises(ValueError):
        hcrs_cover(4, {"01"})


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_matches_antichain_enumeration(depth):
    rng = random.Random(depth)
    for _ in range(40):
        rev = _random_revoked(rng, depth)
        assert len(hcrs_cover(depth, rev)) == min(brute_force_cover_sizes(depth, rev))


@pytest.mark.parametrize("depth", [4, 5, 6])
def test_matches_ilp(depth):
    rng = random.Random(100 + depth)
    for _ in range(30):
        rev = _random_revoked(rng, depth)
        assert len(hcrs_cover(depth, rev)) == ilp_min_cover(depth, rev)


@settings(max_examples=150, deadline=None)
@given(depth=st.integers(1, 8), data=st.data())
def test_cover_partitions_clean_leaves(depth, data):
    n = 1 << depth
    rev = {leaf_label(i, depth) for i in data.draw(st.sets(st.integers(0, n - 1), max_size=n))}
    cover = hcrs_cover(depth, rev)
    clean = {leaf_label(i, depth) for i in range(n)} - rev
    assert covered_leaves(depth, cover) == clean
    assert sum(1 << (depth - len(c)) for c in cover) == len(clean)
    # condition 2: each chosen node's parent reaches a revoked leaf
    for c in cover:
        assert c[:-1] in excluded_nodes(depth, rev) or not rev


def test_size_bound_all_depths():
    rng = random.Random(7)
    for depth in range(1, 11):
        n = 1 << depth
        for _ in range(200):
            rev = _random_revoked(rng, depth)
            r = len(rev)
            assert len(hcrs_cover(depth, rev)) <= r * math.ceil(math.log2(n / r))


def test_padding_marks_virtual_leaves():
    assert padded_revoked(5, 3, [1]) == {"001", "101", "110", "111"}


def test_node_codec_roundtrip_and_strict_padding():
    for node in ["", "0", "1", "0110", "1" * 9, "0" * 16]:
        assert decode_node(Reader(encode_node(node))) == node
    with pytest.raises(DecodeError):
        decode_node(Reader(bytes((3, 0b01100001))))


def test_answer_codec_strict():
    assert decode_answer(answer_bytes(4, None), 32) == (4, None)
    data = answer_bytes(4, ("01", b"\x11" * 32))
    assert decode_answer(data, 32) == (4, ("01", b"\x11" * 32))
    bad = bytearray(data)
    bad[4] = 2
    with pytest.raises(DecodeError):
        decode_answer(bytes(bad), 32)


def test_end_to_end_valid_over_days():
    depth, D = 5, 40
    tree = HcrsTree(depth, D=D, secret=b"k" * 32)
    d = HcrsDirectory(depth)
    rng = random.Random(3)
    revoked: set[str] = set()
    for day in range(1, D + 1):
        if rng.random() < 0.4:
            revoked.add(leaf_label(rng.randrange(32), depth))
        upd = VerificationNodeSet.decode(hcrs_daily_update(tree, revoked, day).encode(), tree.width)
        d.ingest(upd)
        for i in range(32):
            leaf = leaf_label(i, depth)
            ans = hcrs_answer(d, leaf)
            if leaf in revoked:
                assert ans is None
            else:
                assert ans is not None
                assert hcrs_verify(tree.cert_path(leaf), *ans, day) is Verdict.VALID


def test_stale_value_is_invalid():
    tree = HcrsTree(4, D=20, secret=b"s" * 32)
    path = tree.cert_path("0011")
    old = tree.value("00", 3)
    assert hcrs_verify(path, "00", old, 3) is Verdict.VALID
    assert hcrs_verify(path, "00", old, 4) is Verdict.INVALID
    # right value presented under the wrong node
    assert hcrs_verify(path, "0", old, 3) is Verdict.INVALID
    # a node off the leaf's path
    assert hcrs_verify(path, "01", tree.value("01", 3), 3) is Verdict.INVALID


def test_anchor_is_D_iterations():
    tree = HcrsTree(3, D=12, secret=b"x" * 32)
    assert iterate(tree.value("1", 5), 5) == tree.anchor("1")
    assert iterate(tree.seed("1"), 12) == tree.anchor("1")


def test_revoked_sets_cannot_shrink():
    tree = HcrsTree(3, D=10, secret=b"y" * 32)
    hcrs_daily_update(tree, {"001"}, 1)
    with pytest.raises(ValueError):
        hcrs_daily_update(tree, set(), 2)
