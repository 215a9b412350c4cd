"""Hash-chain certificate status directory (YES chain / NO preimage).

Each certificate embeds ``Y = F^D(Y0)`` and ``N = F(N0)``. On day ``i`` of
its validity the CA releases ``F^(D-i)(Y0)`` for a good certificate or
``N0`` for a revoked one, together with a signed bitmap of every serial
that is answerable that day. Day ``i`` counts from the issue day, so a
certificate with ``D`` validity days is answerable on days ``1..D``.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field
from typing import Iterable

from certrev.codec import Reader, Writer
from certrev.model import CertRecord, RevocationState, Verdict
from certrev.primitives import (
    NARROW_WIDTH,
    Digest,
    Signature,
    iterate,
    random_digest,
    sign,
    step,
)

DEFAULT_SERIAL_BITS = 20


@dataclass(frozen=True)
class CrsCertExtension:
    y_anchor: Digest
    n_anchor: Digest
    validity_days: int

    def __post_init__(self) -> None:
        if self.validity_days < 1:
            raise ValueError("validity_days must be >= 1")
        if len(self.y_anchor) != len(self.n_anchor):
            raise ValueError("anchors must share the chain width")


@dataclass(frozen=True)
class CrsSecrets:
    y_seed: Digest
    n_seed: Digest


@dataclass(frozen=True)
class CrsIssued:
    serial: int
    issue_day: int
    ext: CrsCertExtension
    secrets: CrsSecrets

    def chain_day(self, day: int) -> int:
        return day - self.issue_day

    @functools.cached_property
    def chain(self) -> list[Digest]:
        """``chain[k] = F^k(Y_0)`` for k = 0..D, built once so daily pushes cost one lookup."""
        out = [self.secrets.y_seed]
        push = out.append
        for _ in range(self.ext.validity_days):
            push(step(out[-1]))
        return out

    def value(self, i: int) -> Digest:
        if not 1 <= i <= self.ext.validity_days:
            raise ValueError(f"day {i} outside validity 1..{self.ext.validity_days}")
        return self.chain[self.ext.validity_days - i]


def crs_issue(serial: int, issue_day: int, D: int, width: int = NARROW_WIDTH,
              rng: random.Random | None = None) -> tuple[CrsCertExtension, CrsSecrets]:
    if D < 1:
        raise ValueError("D must be >= 1")
    y0 = random_digest(width, rng)
    n0 = random_digest(width, rng)
    return CrsCertExtension(iterate(y0, D), step(n0), D), CrsSecrets(y0, n0)


def chain_value(secrets: CrsSecrets, D: int, i: int) -> Digest:
    """The YES value released on chain day ``i``."""
    if not 1 <= i <= D:
        raise ValueError(f"day {i} outside validity 1..{D}")
    return iterate(secrets.y_seed, D - i)


@dataclass
class StatusBitmap:
    day: int
    serial_bits: int = DEFAULT_SERIAL_BITS
    bits: bytearray = field(default=None, repr=False)  # type: ignore[assignment]
    signature: Signature | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.serial_bits <= 32:
            raise ValueError("serial_bits must be in 1..32")
        size = max(1, (1 << self.serial_bits) // 8)
        if self.bits is None:
            self.bits = bytearray(size)
        elif len(self.bits) != size:
            raise ValueError("bitmap length does not match serial width")

    def set(self, serial: int) -> None:
        if not 0 <= serial < (1 << self.serial_bits):
            raise ValueError(f"serial {serial} outside {self.serial_bits}-bit space")
        self.bits[serial >> 3] |= 0x80 >> (serial & 7)

    def get(self, serial: int) -> bool:
        if not 0 <= serial < (1 << self.serial_bits):
            return False
        return bool(self.bits[serial >> 3] & (0x80 >> (serial & 7)))

    def ones(self) -> list[int]:
        out = []
        for i, b in enumerate(self.bits):
            if b:
                for k in range(8):
                    if b & (0x80 >> k):
                        out.append(i * 8 + k)
        return out

    def body(self) -> bytes:
        return Writer().u8(0x42).u32(self.day).u8(self.serial_bits).raw(bytes(self.bits)).getvalue()

    def seal(self, issuer: str) -> "StatusBitmap":
        self.signature = sign(issuer, self.body())
        return self

    def encode(self) -> bytes:
        if self.signature is None:
            raise ValueError("bitmap is unsigned")
        return self.body() + self.signature.encode()

    @classmethod
    def decode(cls, r: Reader) -> "StatusBitmap":
        if r.u8() != 0x42:
            raise ValueError("not a status bitmap")
        day, sbits = r.u32(), r.u8()
        bits = bytearray(r.raw(max(1, (1 << sbits) // 8)))
        return cls(day, sbits, bits, Signature.decode(r))


@dataclass
class CrsDailyUpdate:
    bitmap: StatusBitmap
    values: dict[int, Digest]
    reasons: dict[int, int] = field(default_factory=dict)
    full: bool = False

    @property
    def day(self) -> int:
        return self.bitmap.day

    def encode(self) -> bytes:
        w = Writer().raw(self.bitmap.encode()).u8(1 if self.full else 0)
        w.u32(len(self.values))
        for serial in sorted(self.values):
            w.u32(serial).raw(self.values[serial])
        w.u32(len(self.reasons))
        for serial in sorted(self.reasons):
            w.u32(serial).u8(self.reasons[serial])
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes, width: int) -> "CrsDailyUpdate":
        r = Reader(data)
        bitmap = StatusBitmap.decode(r)
        full = bool(r.u8())
        values = {}
        for _ in range(r.u32()):
            s = r.u32()
            values[s] = r.raw(width)
        reasons = {}
        for _ in range(r.u32()):
            s = r.u32()
            reasons[s] = r.u8()
        r.expect_end()
        return cls(bitmap, values, reasons, full)


def crs_daily_update(certs: Iterable[CrsIssued], revoked: dict | set[int], day: int,
                     issuer: str = "ca", serial_bits: int = DEFAULT_SERIAL_BITS,
                     full: bool = False) -> CrsDailyUpdate:
    """Bitmap plus released values for ``day``.

    ``revoked`` maps serial -> revocation day, or -> (day, reason); a plain
    set means "revoked today". ``N0`` is sent on the revocation day (or the
    certificate's first answerable day) and otherwise only in ``full``
    pushes; the Directory keeps it in between.
    """
    if day < 1:
        raise ValueError("days are numbered from 1")
    if not isinstance(revoked, dict):
        revoked = {s: day for s in revoked}
    bitmap = StatusBitmap(day, serial_bits)
    values: dict[int, Digest] = {}
    reasons: dict[int, int] = {}
    for c in certs:
        i = c.chain_day(day)
        if not 1 <= i <= c.ext.validity_days:
            continue
        bitmap.set(c.serial)
        rev = revoked.get(c.serial)
        rday, reason = rev if isinstance(rev, tuple) else (rev, 1)
        if rday is not None and rday <= day:
            if full or rday == day or i == 1:
                values[c.serial] = c.secrets.n_seed
                reasons[c.serial] = reason
        else:
            values[c.serial] = c.value(i)
    return CrsDailyUpdate(bitmap.seal(issuer), values, reasons, full)


class CrsAuthority:
    """CA side: issues certificates with chain anchors and builds daily pushes."""

    def __init__(self, issuer: str = "ca", D: int = 365, width: int = NARROW_WIDTH,
                 serial_bits: int = DEFAULT_SERIAL_BITS, seed: int | None = None) -> None:
        self.issuer = issuer
        self.D = D
        self.width = width
        self.serial_bits = serial_bits
        self._rng = random.Random(seed) if seed is not None else None
        self.issued: dict[int, CrsIssued] = {}

    def issue(self, state: RevocationState, serial: int, issue_day: int) -> CertRecord:
        ext, secrets = crs_issue(serial, issue_day, self.D, self.width, self._rng)
        rec = state.issue(serial, issue_day, issue_day + self.D + 1)
        rec.anchors["crs"] = ext
        self.issued[serial] = CrsIssued(serial, issue_day, ext, secrets)
        return rec

    def daily_update(self, state: RevocationState, day: int, full: bool = False) -> CrsDailyUpdate:
        return crs_daily_update(self.issued.values(), dict(state.revocations), day, self.issuer,
                                self.serial_bits, full)


@dataclass(frozen=True)
class CrsAnswer:
    day: int
    serial: int
    value: Digest | None

    @property
    def found(self) -> bool:
        return self.value is not None

    def encode(self) -> bytes:
        w = Writer().u32(self.day).u32(self.serial)
        if self.value is None:
            return w.u8(0).getvalue()
        return w.u8(len(self.value)).raw(self.value).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> "CrsAnswer":
        r = Reader(data)
        day, serial, n = r.u32(), r.u32(), r.u8()
        value = r.raw(n) if n else None
        r.expect_end()
        return cls(day, serial, value)


class CrsDirectory:
    """Stores the latest day's values; swaps snapshots atomically on ingest."""

    def __init__(self, issuer: str = "ca") -> None:
        self.issuer = issuer
        self.bitmap: StatusBitmap | None = None
        self.values: dict[int, Digest] = {}
        self._no_values: dict[int, Digest] = {}

    @property
    def day(self) -> int | None:
        return None if self.bitmap is None else self.bitmap.day

    def ingest(self, update: CrsDailyUpdate) -> None:
        bm = update.bitmap
        if bm.signature is None or not bm.signature.verifies(self.issuer, bm.body()):
            raise ValueError("bitmap signature does not verify")
        no_values = dict(self._no_values)
        for s in update.reasons:
            no_values[s] = update.values[s]
        values: dict[int, Digest] = {}
        for s in bm.ones():
            if s in update.values:
                values[s] = update.values[s]
            elif s in no_values:
                values[s] = no_values[s]
            else:
                raise ValueError(f"update for day {bm.day} carries no value for serial {s}")
        self._no_values = {s: v for s, v in no_values.items() if bm.get(s)}
        self.bitmap, self.values = bm, values


def crs_answer(directory: CrsDirectory, serial: int) -> CrsAnswer:
    if directory.bitmap is None:
        raise ValueError("directory has not ingested an update")
    value = directory.values.get(serial) if directory.bitmap.get(serial) else None
    return CrsAnswer(directory.bitmap.day, serial, value)


def crs_verify(ext: CrsCertExtension, value: Digest | None, i: int) -> Verdict:
    if value is None or len(value) != len(ext.y_anchor) or not 1 <= i <= ext.validity_days:
        return Verdict.INVALID
    if iterate(value, i) == ext.y_anchor:
        return Verdict.VALID
    if step(value) == ext.n_anchor:
        return Verdict.REVOKED
    return Verdict.INVALID
