"""Certificate records and the CA's authoritative revocation state."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

REASON_UNSPECIFIED = 0
REASON_KEY_COMPROMISE = 1
REASON_HOLD = 6


class Verdict(enum.Enum):
    VALID = "valid"
    REVOKED = "revoked"
    UNKNOWN = "unknown"
    INVALID = "invalid"

    def __str__(self) -> str:
        return self.value


@dataclass
class CertRecord:
    serial: int
    issuer: str
    issue_day: int
    expiry_day: int
    # scheme anchors embedded at issuance, e.g. {"crs.y": ..., "crs.n": ...}
    anchors: dict[str, object] = field(default_factory=dict)

    def live(self, day: int) -> bool:
        return self.issue_day <= day < self.expiry_day


class RevocationState:
    """Per-CA record of issued certificates, revocations and holds.

    Days are integers. A certificate is live on ``day`` when
    ``issue_day <= day < expiry_day``. Revocations are permanent; holds are
    half-open intervals ``[start, end)`` with ``end=None`` while open.
    """

    def __init__(self, issuer: str = "ca") -> None:
        self.issuer = issuer
        self.certs: dict[int, CertRecord] = {}
        self.revocations: dict[int, tuple[int, int]] = {}
        self.holds: dict[int, list[list]] = {}

    def copy(self) -> "RevocationState":
        st = RevocationState(self.issuer)
        st.certs = dict(self.certs)
        st.revocations = dict(self.revocations)
        st.holds = {s: [list(iv) for iv in ivs] for s, ivs in self.holds.items()}
        return st

    def issue(self, serial: int, issue_day: int, expiry_day: int) -> CertRecord:
        if serial in self.certs:
            raise ValueError(f"serial {serial} already issued")
        if expiry_day <= issue_day:
            raise ValueError("expiry must follow issuance")
        rec = CertRecord(serial, self.issuer, issue_day, expiry_day)
        self.certs[serial] = rec
        return rec

    def revoke(self, serial: int, day: int, reason: int = REASON_KEY_COMPROMISE) -> None:
        if serial not in self.certs:
            raise KeyError(serial)
        if serial in self.revocations:
            raise ValueError(f"serial {serial} already revoked")
        if reason == REASON_HOLD:
            raise ValueError("use hold() for certificate holds")
        if self.on_hold(serial, day):
            self.release(serial, day)
        self.revocations[serial] = (day, reason)

    def hold(self, serial: int, day: int) -> None:
        if serial not in self.certs:
            raise KeyError(serial)
        if self.is_revoked(serial, day) or self.on_hold(serial, day):
            raise ValueError(f"serial {serial} cannot be put on hold")
        self.holds.setdefault(serial, []).append([day, None])

    def release(self, serial: int, day: int) -> None:
        ivs = self.holds.get(serial)
        if not ivs or ivs[-1][1] is not None:
            raise ValueError(f"serial {serial} is not on hold")
        if day <= ivs[-1][0]:
            raise ValueError("hold must last at least one day")
        ivs[-1][1] = day

    def is_revoked(self, serial: int, day: int) -> bool:
        rev = self.revocations.get(serial)
        return rev is not None and rev[0] <= day

    def on_hold(self, serial: int, day: int) -> bool:
        for start, end in self.holds.get(serial, ()):
            if start <= day and (end is None or day < end):
                return True
        return False

    def hold_start(self, serial: int, day: int) -> int | None:
        for start, end in self.holds.get(serial, ()):
            if start <= day and (end is None or day < end):
                return start
        return None

    def live(self, serial: int, day: int) -> bool:
        rec = self.certs.get(serial)
        return rec is not None and rec.live(day)

    def status(self, serial: int, day: int) -> Verdict:
        if not self.live(serial, day):
            return Verdict.UNKNOWN
        if self.is_revoked(serial, day) or self.on_hold(serial, day):
            return Verdict.REVOKED
        return Verdict.VALID

    def listed(self, day: int) -> dict[int, tuple[int, int]]:
        """Live serials a CRL issued on ``day`` must list: serial -> (day, reason)."""
        out: dict[int, tuple[int, int]] = {}
        for serial, (rday, reason) in self.revocations.items():
            if rday <= day and self.certs[serial].live(day):
                out[serial] = (rday, reason)
        for serial in self.holds:
            if serial in out or not self.certs[serial].live(day):
                continue
            start = self.hold_start(serial, day)
            if start is not None:
                out[serial] = (start, REASON_HOLD)
        return dict(sorted(out.items()))

    def revoked_serials(self, day: int) -> set[int]:
        """Live serials that are revoked or on hold on ``day``."""
        return set(self.listed(day))

    def live_serials(self, day: int) -> list[int]:
        return sorted(s for s, rec in self.certs.items() if rec.live(day))

    def hold_history(self, after: int, upto: int) -> list[tuple[int, int, int | None]]:
        """Hold intervals overlapping days ``(after, upto]``, as (serial, start, end)."""
        out = []
        for serial, ivs in sorted(self.holds.items()):
            for start, end in ivs:
                if start > upto:
                    continue
                if end is not None and end <= after:
                    continue
                # an end later than ``upto`` is not yet known to the issuer
                out.append((serial, start, end if end is not None and end <= upto else None))
        return out
