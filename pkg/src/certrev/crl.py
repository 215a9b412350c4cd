"""Certificate revocation lists: full, delta, segmented and over-issued.

Entries are ``(serial, revocation day, reason)`` triples encoded as
8 + 4 + 1 octets. Certificates on hold are listed with reason code 6
and their hold start day; expired certificates are dropped.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from certrev.codec import Reader, Writer
from certrev.model import REASON_HOLD, RevocationState
from certrev.primitives import Signature, sign

ENTRY_SIZE = 8 + 4 + 1
_CRL_MAGIC = 0x43  # 'C'
_DELTA_MAGIC = 0x44  # 'D'


@dataclass(frozen=True, order=True)
class CrlEntry:
    serial: int
    day: int
    reason: int = 1

    def encode(self, w: Writer) -> None:
        w.u64(self.serial).u32(self.day).u8(self.reason)

    @classmethod
    def decode(cls, r: Reader) -> "CrlEntry":
        return cls(r.u64(), r.u32(), r.u8())


@dataclass(frozen=True)
class IssuanceSchedule:
    """When full lists (or their segments) are issued.

    ``period`` is the lifetime of one list in days. With an over-issue
    factor ``k`` a fresh list appears every ``period / k`` days while each
    stays valid for the full period. ``stagger_offsets`` are fractions of
    the period at which successive segments are issued.
    """

    period: float
    over_issue_factor: int = 1
    stagger_offsets: tuple[float, ...] = (0.0,)

    def __post_init__(self) -> None:
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.over_issue_factor < 1:
            raise ValueError("over_issue_factor must be >= 1")
        offs = self.stagger_offsets
        if not offs or any(not 0.0 <= o < 1.0 for o in offs):
            raise ValueError("stagger offsets must lie in [0, 1)")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValueError("stagger offsets must be strictly increasing")

    @classmethod
    def staggered(cls, period: float, intervals: int, over_issue_factor: int = 1) -> "IssuanceSchedule":
        return cls(period, over_issue_factor, tuple(j / intervals for j in range(intervals)))

    @property
    def segment_count(self) -> int:
        return len(self.stagger_offsets)

    def period_ticks(self, ticks_per_day: int) -> int:
        return round(self.period * ticks_per_day)

    def issue_times(self, horizon_ticks: int, ticks_per_day: int = 24,
                    start: int | None = None) -> list[tuple[int, int]]:
        """``(tick, segment)`` pairs for every issuance in ``[start, horizon_ticks)``.

        ``start`` defaults to one period before zero so lists covering tick 0
        already exist (warm start).
        """
        p = self.period_ticks(ticks_per_day)
        step = p / self.over_issue_factor
        if start is None:
            start = -p
        out = []
        first = math.floor((start - p) / step) - 1
        n = first
        while True:
            base = n * step
            if base >= horizon_ticks:
                break
            for seg, off in enumerate(self.stagger_offsets):
                t = round(base + off * p)
                if start <= t < horizon_ticks:
                    out.append((t, seg))
            n += 1
        out.sort()
        return out

    def current_lists(self, tick: int, ticks_per_day: int = 24) -> list[tuple[int, int]]:
        """Issuances whose validity window ``[t, t + period)`` contains ``tick``."""
        p = self.period_ticks(ticks_per_day)
        return [(t, s) for t, s in self.issue_times(tick + 1, ticks_per_day, start=tick - p - 1)
                if t <= tick < t + p]


@dataclass(frozen=True)
class Crl:
    issuer: str
    this_update: int
    next_update: int
    entries: tuple[CrlEntry, ...]
    signature: Signature | None = None

    def __post_init__(self) -> None:
        if self.next_update <= self.this_update:
            raise ValueError("next_update must follow this_update")
        serials = [e.serial for e in self.entries]
        if any(b <= a for a, b in zip(serials, serials[1:])):
            raise ValueError("CRL entries must be strictly ascending by serial")

    def body(self) -> bytes:
        w = Writer().u8(_CRL_MAGIC).blob(self.issuer.encode())
        w.u32(self.this_update).u32(self.next_update).u32(len(self.entries))
        for e in self.entries:
            e.encode(w)
        return w.getvalue()

    def encode(self) -> bytes:
        sig = self.signature or sign(self.issuer, self.body())
        return self.body() + sig.encode()

    @classmethod
    def decode(cls, data: bytes) -> "Crl":
        r = Reader(data)
        if r.u8() != _CRL_MAGIC:
            raise ValueError("not a CRL")
        issuer = r.blob().decode()
        this_update, next_update, n = r.u32(), r.u32(), r.u32()
        entries = tuple(CrlEntry.decode(r) for _ in range(n))
        sig = Signature.decode(r)
        r.expect_end()
        crl = cls(issuer, this_update, next_update, entries, sig)
        if not sig.verifies(issuer, crl.body()):
            raise ValueError("CRL signature does not verify")
        return crl

    @functools.cached_property
    def serials(self) -> frozenset[int]:
        return frozenset(e.serial for e in self.entries)

    def lists(self, serial: int) -> bool:
        return serial in self.serials

    def entry_map(self) -> dict[int, CrlEntry]:
        return {e.serial: e for e in self.entries}

    def size(self) -> int:
        return len(self.encode())


def _entries_from(listed: dict[int, tuple[int, int]]) -> tuple[CrlEntry, ...]:
    return tuple(CrlEntry(s, d, r) for s, (d, r) in sorted(listed.items()))


def issue_crl(state: RevocationState, day: int, schedule: IssuanceSchedule) -> Crl:
    """Full list of the serials revoked (or held) and not expired on ``day``."""
    entries = _entries_from(state.listed(day))
    crl = Crl(state.issuer, day, day + max(1, math.ceil(schedule.period)), entries)
    return Crl(crl.issuer, crl.this_update, crl.next_update, entries, sign(state.issuer, crl.body()))


@dataclass(frozen=True)
class DeltaCrl:
    issuer: str
    base_ref: int
    this_update: int
    next_update: int
    added: tuple[CrlEntry, ...]
    # serials of base entries whose certificates expired since the base
    expired: tuple[int, ...] = ()
    # (serial, hold start, hold end or None) for holds overlapping (base, this_update]
    on_hold_history: tuple[tuple[int, int, int | None], ...] = ()
    signature: Signature | None = None

    def body(self) -> bytes:
        w = Writer().u8(_DELTA_MAGIC).blob(self.issuer.encode())
        w.u32(self.base_ref).u32(self.this_update).u32(self.next_update)
        w.u32(len(self.added))
        for e in self.added:
            e.encode(w)
        w.u32(len(self.expired))
        for s in self.expired:
            w.u64(s)
        w.u32(len(self.on_hold_history))
        for serial, start, end in self.on_hold_history:
            # end 0xFFFFFFFF marks a hold still open
            w.u64(serial).u32(start).u32(0xFFFFFFFF if end is None else end)
        return w.getvalue()

    def encode(self) -> bytes:
        sig = self.signature or sign(self.issuer, self.body())
        return self.body() + sig.encode()

    @classmethod
    def decode(cls, data: bytes) -> "DeltaCrl":
        r = Reader(data)
        if r.u8() != _DELTA_MAGIC:
            raise ValueError("not a delta-CRL")
        issuer = r.blob().decode()
        base_ref, this_update, next_update = r.u32(), r.u32(), r.u32()
        added = tuple(CrlEntry.decode(r) for _ in range(r.u32()))
        expired = tuple(r.u64() for _ in range(r.u32()))
        hist = []
        for _ in range(r.u32()):
            serial, start, end = r.u64(), r.u32(), r.u32()
            hist.append((serial, start, None if end == 0xFFFFFFFF else end))
        sig = Signature.decode(r)
        r.expect_end()
        d = cls(issuer, base_ref, this_update, next_update, added, expired, tuple(hist), sig)
        if not sig.verifies(issuer, d.body()):
            raise ValueError("delta-CRL signature does not verify")
        return d

    def size(self) -> int:
        return len(self.encode())


def issue_delta(state: RevocationState, base: Crl, day: int, next_update: int | None = None) -> DeltaCrl:
    if base.issuer != state.issuer:
        raise ValueError(f"base CRL belongs to {base.issuer!r}, not {state.issuer!r}")
    if base.this_update > day:
        raise ValueError(f"base CRL of day {base.this_update} is newer than day {day}")
    current = state.listed(day)
    base_map = base.entry_map()
    added = tuple(CrlEntry(s, d, r) for s, (d, r) in current.items()
                  if base_map.get(s) != CrlEntry(s, d, r))
    expired = tuple(_expired_since(state, base.this_update, day))
    history = tuple(state.hold_history(base.this_update, day))
    nu = day + 1 if next_update is None else next_update
    d = DeltaCrl(state.issuer, base.this_update, day, nu, added, expired, history)
    return DeltaCrl(d.issuer, d.base_ref, d.this_update, d.next_update, d.added, d.expired,
                    d.on_hold_history, sign(state.issuer, d.body()))


def _expired_since(state: RevocationState, after: int, upto: int) -> list[int]:
    """Listed-at-some-point serials whose certificates expired in ``(after, upto]``."""
    out = []
    for s in sorted(set(state.revocations) | set(state.holds)):
        rec = state.certs[s]
        if not after < rec.expiry_day <= upto:
            continue
        starts = [state.revocations[s][0]] if s in state.revocations else []
        starts += [iv[0] for iv in state.holds.get(s, ())]
        if min(starts) < rec.expiry_day:
            out.append(s)
    return out


def reconstruct(base: Crl, delta: DeltaCrl, allow_newer_base: bool = False) -> set[CrlEntry]:
    """Entry set of the full list on the delta's day, rebuilt from base + delta.

    With ``allow_newer_base`` any base issued between the delta's base and
    the delta itself is accepted, which is how a delta against the oldest
    unexpired over-issued list serves holders of newer lists.
    """
    if delta.issuer != base.issuer:
        raise ValueError("delta and base come from different issuers")
    ok = (delta.base_ref <= base.this_update <= delta.this_update if allow_newer_base
          else delta.base_ref == base.this_update)
    if not ok:
        raise ValueError(f"delta refers to base of day {delta.base_ref}, "
                         f"got base of day {base.this_update}")
    entries = base.entry_map()
    for s in delta.expired:
        entries.pop(s, None)
    released = {(s, start) for s, start, end in delta.on_hold_history if end is not None}
    for s, e in list(entries.items()):
        if e.reason == REASON_HOLD and (s, e.day) in released:
            del entries[s]
    for e in delta.added:
        entries[e.serial] = e
    return set(entries.values())


def oldest_unexpired(crls: Iterable[Crl], day: int) -> Crl:
    live = [c for c in crls if c.this_update <= day < c.next_update]
    if not live:
        raise LookupError(f"no unexpired CRL on day {day}")
    return min(live, key=lambda c: c.this_update)


def residue_segmenter(segment_count: int) -> Callable[[int], int]:
    return lambda serial: serial % segment_count


@dataclass
class SegmentedCrlSet:
    segment_count: int
    segments: list[Crl]
    segment_of: Callable[[int], int] = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.segment_count < 1:
            raise ValueError("segment_count must be positive")
        if self.segment_of is None:
            self.segment_of = residue_segmenter(self.segment_count)


def issue_segmented(state: RevocationState, day: int, schedule: IssuanceSchedule,
                    segment_count: int | None = None,
                    segment_of: Callable[[int], int] | None = None) -> SegmentedCrlSet:
    n = segment_count or schedule.segment_count
    seg_of = segment_of or residue_segmenter(n)
    full = issue_crl(state, day, schedule)
    parts: list[list[CrlEntry]] = [[] for _ in range(n)]
    for e in full.entries:
        parts[seg_of(e.serial)].append(e)
    segs = []
    for p in parts:
        c = Crl(full.issuer, full.this_update, full.next_update, tuple(p))
        segs.append(Crl(c.issuer, c.this_update, c.next_update, c.entries, sign(c.issuer, c.body())))
    return SegmentedCrlSet(n, segs, seg_of)


def segment_lookup(crl_set: SegmentedCrlSet, serial: int) -> Crl:
    return crl_set.segments[crl_set.segment_of(serial)]


def entries_csv(entries: Sequence[CrlEntry] | Iterable[CrlEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["serial", "revocation_day", "reason"])
    for e in sorted(entries):
        w.writerow([e.serial, e.day, e.reason])
    return buf.getvalue()
