from __future__ import annotations

import random

import pytest

from certrev.crs import (
    CrsAnswer,
    CrsAuthority,
    CrsDailyUpdate,
    CrsDirectory,
    CrsIssued,
    chain_value,
    crs_answer,
    crs_daily_update,
    crs_issue,
    crs_verify,
)
from certrev.model import RevocationState, Verdict
from certrev.primitives import NARROW_WIDTH, iterate, step


def _authority(n: int = 40, D: int = 30, seed: int = 1):
    auth = CrsAuthority("ca0", D=D, serial_bits=10, seed=seed)
    st = RevocationState("ca0")
    for s in range(n):
        auth.issue(st, s, 0)
    return auth, st


def test_issue_anchor_is_365_iterations():
    ext, sec = crs_issue(1, 0, 365, rng=random.Random(0))
    assert iterate(sec.y_seed, 365) == ext.y_anchor
    assert step(sec.n_seed) == ext.n_anchor
    assert len(ext.y_anchor) == NARROW_WIDTH


def test_minimal_chain():
    ext, sec = crs_issue(1, 0, 1, rng=random.Random(0))
    assert ext.y_anchor == iterate(sec.y_seed, 1)
    with pytest.raises(ValueError):
        crs_issue(1, 0, 0)


def test_seeds_do_not_collide():
    rng = random.Random(4)
    seeds = {crs_issue(i, 0, 1, rng=rng)[1].y_seed for i in range(10_000)}
    assert len(seeds) == 10_000


def test_day_one_value_is_364_iterations():
    ext, sec = crs_issue(1, 0, 365, rng=random.Random(2))
    issued = CrsIssued(1, 0, ext, sec)
    upd = crs_daily_update([issued], set(), 1, serial_bits=4)
    assert upd.values[1] == iterate(sec.y_seed, 364) == chain_value(sec, 365, 1)
    assert crs_verify(ext, upd.values[1], 1) is Verdict.VALID


def test_daily_update_rejects_day_zero():
    auth, st = _authority(4)
    with pytest.raises(ValueError):
        auth.daily_update(st, 0)


def test_bitmap_agreement_and_expiry():
    auth, st = _authority(20, D=10)
    st.revoke(3, 4)
    d = CrsDirectory("ca0")
    for day in range(1, 13):
        d.ingest(auth.daily_update(st, day))
        ones = set(d.bitmap.ones())
        assert set(d.values) == ones
        # certificates issued on day 0 answer on days 1..D only
        assert ones == (set(range(20)) if day <= 10 else set())
        if day > 10:
            assert not crs_answer(d, 5).found


def test_revoked_value_is_constant():
    auth, st = _authority(10)
    st.revoke(7, 5)
    d = CrsDirectory("ca0")
    seen = set()
    for day in range(1, 20):
        upd = auth.daily_update(st, day)
        if day == 5:
            assert upd.values[7] == auth.issued[7].secrets.n_seed
        elif day > 5:
            # the Directory keeps N0; the CA does not resend it
            assert 7 not in upd.values
        d.ingest(upd)
        if day >= 5:
            seen.add(crs_answer(d, 7).value)
            assert crs_verify(auth.issued[7].ext, crs_answer(d, 7).value, day) is Verdict.REVOKED
    assert seen == {auth.issued[7].secrets.n_seed}


def test_full_push_resends_no_values():
    auth, st = _authority(10)
    st.revoke(2, 3)
    upd = auth.daily_update(st, 9, full=True)
    assert upd.values[2] == auth.issued[2].secrets.n_seed


def test_directory_rejects_unsigned_or_incomplete():
    auth, st = _authority(5)
    upd = auth.daily_update(st, 1)
    upd.bitmap.signature = None
    with pytest.raises(ValueError):
        CrsDirectory("ca0").ingest(upd)
    upd = auth.daily_update(st, 2)
    upd.values.pop(3)
    with pytest.raises(ValueError):
        CrsDirectory("ca0").ingest(upd)


def test_update_and_answer_roundtrip():
    auth, st = _authority(12)
    st.revoke(4, 2)
    upd = auth.daily_update(st, 2)
    back = CrsDailyUpdate.decode(upd.encode(), NARROW_WIDTH)
    assert back.values == upd.values and back.reasons == upd.reasons
    assert back.bitmap.ones() == upd.bitmap.ones()
    d = CrsDirectory("ca0")
    d.ingest(back)
    a = crs_answer(d, 4)
    assert CrsAnswer.decode(a.encode()) == a
    missing = crs_answer(d, 1000)
    assert not missing.found and missing.day == 2


def test_verify_rules():
    ext, sec = crs_issue(1, 0, 20, rng=random.Random(9))
    assert crs_verify(ext, chain_value(sec, 20, 7), 7) is Verdict.VALID
    assert crs_verify(ext, sec.n_seed, 13) is Verdict.REVOKED
    # a day-(i-1) value presented on day i overshoots the anchor
    assert crs_verify(ext, chain_value(sec, 20, 6), 7) is Verdict.INVALID
    assert crs_verify(ext, chain_value(sec, 20, 7), 0) is Verdict.INVALID
    assert crs_verify(ext, None, 3) is Verdict.INVALID
    assert crs_verify(ext, b"short", 3) is Verdict.INVALID


def test_directory_cannot_step_back_a_day():
    auth, st = _authority(8, D=15)
    d = CrsDirectory("ca0")
    for day in range(1, 6):
        d.ingest(auth.daily_update(st, day))
    # with day-5 values only, nothing the Directory holds verifies for day 4's exponent
    for s, v in d.values.items():
        assert iterate(v, 4) != auth.issued[s].ext.y_anchor


def test_random_digests_invalid():
    ext, _ = crs_issue(1, 0, 365, rng=random.Random(3))
    rng = random.Random(17)
    for _ in range(200):
        assert crs_verify(ext, rng.randbytes(NARROW_WIDTH), rng.randint(1, 365)) is Verdict.INVALID
