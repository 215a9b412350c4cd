"""Adapters putting each revocation scheme behind one harness contract.

Every adapter offers ``daily_update(day)`` (what the CA pushes to the
Directory that day), ``answer(serial, day)`` (the proof bytes a user
receives) and ``verify(serial, proof, day)`` (the relying party's
verdict). Adapters for the hash-chain schemes switch to a lazy mode for
large populations: payload sizes come from the encoding's size formula
and chain values are only computed for serials that are actually queried.
``tests/test_sim.py`` checks the formula against real encodings.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Protocol

from certrev import crs, hcrs
from certrev.authdict import TwoThreeTree, tt_verify_bytes
from certrev.codec import Writer
from certrev.crl import Crl, IssuanceSchedule, issue_crl
from certrev.crt import CrtTree, crt_build_statements, crt_lookup, crt_verify_bytes
from certrev.model import RevocationState, Verdict
from certrev.primitives import (
    MODERN_WIDTH,
    derive,
    iterate,
    step,
    width_for_mode,
)

FULL_PIPELINE_LIMIT = 4096


@dataclass
class World:
    """Certificate population split over CAs, with one revocation state each."""

    states: list[RevocationState]
    users_per_ca: int
    population: int
    validity_days: int
    secret: bytes = b"\x00" * 32

    def ca_of(self, serial: int) -> int:
        return serial // self.users_per_ca

    def state_of(self, serial: int) -> RevocationState:
        return self.states[self.ca_of(serial)]

    def status(self, serial: int, day: int) -> Verdict:
        return self.state_of(serial).status(serial, day)

    def members(self, ca: int) -> range:
        lo = ca * self.users_per_ca
        return range(lo, min(self.population, lo + self.users_per_ca))


@dataclass
class DirectoryPayload:
    issuer: str
    day: int
    size: int
    entries: int = 0
    touched: int = 0
    data: bytes | None = field(default=None, repr=False)


class RevocationScheme(Protocol):
    name: str

    def daily_update(self, day: int) -> list[DirectoryPayload]: ...

    def answer(self, serial: int, day: int) -> bytes: ...

    def verify(self, serial: int, proof: bytes, day: int) -> Verdict: ...


def request_bytes(issuer: str, serial: int, day: int) -> bytes:
    return Writer().u8(0x51).blob(issuer.encode()).u64(serial).u32(day).getvalue()


def _sig_size(issuer: str) -> int:
    return 1 + 2 + len(issuer.encode()) + 32


class CrlScheme:
    """Full CRL fetched on every validation (no verifier caching)."""

    name = "crl"

    def __init__(self, world: World, period: float) -> None:
        self.world = world
        self.schedule = IssuanceSchedule(period)
        self._current: dict[int, Crl] = {}
        self._bytes: dict[int, bytes] = {}

    def daily_update(self, day: int) -> list[DirectoryPayload]:
        out = []
        for ca, st in enumerate(self.world.states):
            crl = self._current.get(ca)
            if crl is None or day >= crl.next_update:
                crl = issue_crl(st, day, self.schedule)
                self._current[ca] = crl
                self._bytes[ca] = crl.encode()
                out.append(DirectoryPayload(st.issuer, day, len(self._bytes[ca]), len(crl.entries),
                                            data=self._bytes[ca]))
        return out

    def answer(self, serial: int, day: int) -> bytes:
        return self._bytes[self.world.ca_of(serial)]

    def verify(self, serial: int, proof: bytes, day: int) -> Verdict:
        try:
            crl = Crl.decode(proof)
        except ValueError:
            return Verdict.INVALID
        if crl.issuer != self.world.state_of(serial).issuer or not crl.this_update <= day < crl.next_update:
            return Verdict.INVALID
        return Verdict.REVOKED if crl.lists(serial) else Verdict.VALID


class CrsScheme:
    name = "crs"

    def __init__(self, world: World, width: int, serial_bits: int, lazy: bool | None = None) -> None:
        self.world = world
        self.width = width
        self.D = world.validity_days
        self.serial_bits = serial_bits
        self.lazy = world.population > FULL_PIPELINE_LIMIT if lazy is None else lazy
        self._issued: dict[int, crs.CrsIssued] = {}
        self._dirs = [crs.CrsDirectory(st.issuer) for st in world.states]

    def issued(self, serial: int) -> crs.CrsIssued:
        c = self._issued.get(serial)
        if c is None:
            key = serial.to_bytes(8, "big")
            y0 = derive(self.world.secret, b"crs.y" + key, self.width)
            n0 = derive(self.world.secret, b"crs.n" + key, self.width)
            rec = self.world.state_of(serial).certs[serial]
            ext = crs.CrsCertExtension(iterate(y0, self.D), step(n0), self.D)
            c = self._issued[serial] = crs.CrsIssued(serial, rec.issue_day, ext, crs.CrsSecrets(y0, n0))
        return c

    def _sent(self, ca: int, day: int) -> tuple[int, int]:
        """(values sent, of which NO values) on ``day`` for CA ``ca``'s certificates."""
        st = self.world.states[ca]
        values = nos = 0
        for s in self.world.members(ca):
            rec = st.certs[s]
            i = day - rec.issue_day
            if not 1 <= i <= self.D:
                continue
            rev = st.revocations.get(s)
            if rev is not None and rev[0] <= day:
                if rev[0] == day or i == 1:
                    values += 1
                    nos += 1
            else:
                values += 1
        return values, nos

    def daily_update(self, day: int) -> list[DirectoryPayload]:
        out = []
        for ca, st in enumerate(self.world.states):
            if self.lazy:
                values, nos = self._sent(ca, day)
                bitmap = 1 + 4 + 1 + max(1, (1 << self.serial_bits) // 8) + _sig_size(st.issuer)
                size = bitmap + 1 + 4 + values * (4 + self.width) + 4 + nos * 5
                out.append(DirectoryPayload(st.issuer, day, size, values))
                continue
            certs = [self.issued(s) for s in self.world.members(ca)]
            upd = crs.crs_daily_update(certs, dict(st.revocations), day, st.issuer, self.serial_bits)
            self._dirs[ca].ingest(upd)
            data = upd.encode()
            out.append(DirectoryPayload(st.issuer, day, len(data), len(upd.values), data=data))
        return out

    def answer(self, serial: int, day: int) -> bytes:
        if not self.lazy:
            return crs.crs_answer(self._dirs[self.world.ca_of(serial)], serial).encode()
        st = self.world.state_of(serial)
        c = self.issued(serial)
        i = day - c.issue_day
        if not st.live(serial, day) or not 1 <= i <= self.D:
            value = None
        elif st.is_revoked(serial, day):
            value = c.secrets.n_seed
        else:
            value = c.value(i)
        return crs.CrsAnswer(day, serial, value).encode()

    def verify(self, serial: int, proof: bytes, day: int) -> Verdict:
        try:
            ans = crs.CrsAnswer.decode(proof)
        except ValueError:
            return Verdict.INVALID
        if ans.serial != serial or ans.day != day:
            return Verdict.INVALID
        if ans.value is None:
            return Verdict.UNKNOWN
        c = self.issued(serial)
        return crs.crs_verify(c.ext, ans.value, day - c.issue_day)


class HcrsScheme:
    name = "hcrs"

    def __init__(self, world: World, width: int = MODERN_WIDTH, lazy: bool | None = None) -> None:
        self.world = world
        self.width = width
        self.depth = hcrs.depth_for(world.users_per_ca)
        self.lazy = world.population > FULL_PIPELINE_LIMIT if lazy is None else lazy
        self.trees = [hcrs.HcrsTree(self.depth, world.validity_days, width,
                                    derive(world.secret, f"hcrs{ca}".encode(), 32))
                      for ca in range(len(world.states))]
        self._dirs = [hcrs.HcrsDirectory(self.depth) for _ in world.states]
        self._cover: dict[int, set[str]] = {}
        self._values: dict[tuple[int, str, int], bytes] = {}
        self._paths: dict[int, hcrs.HcrsCertPath] = {}
        self.day = 0

    def leaf(self, serial: int) -> str:
        return hcrs.leaf_label(serial - self.world.members(self.world.ca_of(serial)).start, self.depth)

    def _revoked_leaves(self, ca: int, day: int) -> set[str]:
        members = self.world.members(ca)
        st = self.world.states[ca]
        local = [s - members.start for s in st.revoked_serials(day)]
        # unissued and expired slots count as revoked leaves
        dead = [s - members.start for s in members if not st.live(s, day)]
        return hcrs.padded_revoked(len(members), self.depth, local + dead)

    def daily_update(self, day: int) -> list[DirectoryPayload]:
        out = []
        self.day = day
        for ca, st in enumerate(self.world.states):
            revoked = self._revoked_leaves(ca, day)
            if self.lazy:
                cover = hcrs.hcrs_cover(self.depth, revoked)
                size = 8 + sum(len(hcrs.encode_node(n)) + self.width for n in cover)
                self._cover[ca] = cover
                out.append(DirectoryPayload(st.issuer, day, size, len(cover)))
                continue
            vns = hcrs.hcrs_daily_update(self.trees[ca], revoked, day)
            self._dirs[ca].ingest(vns)
            self._cover[ca] = vns.nodes
            data = vns.encode()
            out.append(DirectoryPayload(st.issuer, day, len(data), len(vns.nodes), data=data))
        return out

    def answer(self, serial: int, day: int) -> bytes:
        ca = self.world.ca_of(serial)
        leaf = self.leaf(serial)
        if not self.lazy:
            return hcrs.answer_bytes(day, hcrs.hcrs_answer(self._dirs[ca], leaf))
        cover = self._cover[ca]
        node = next((leaf[:j] for j in range(len(leaf), -1, -1) if leaf[:j] in cover), None)
        if node is None:
            return hcrs.answer_bytes(day, None)
        key = (ca, node, day)
        v = self._values.get(key)
        if v is None:
            v = self._values[key] = self.trees[ca].value(node, day)
        return hcrs.answer_bytes(day, (node, v))

    def verify(self, serial: int, proof: bytes, day: int) -> Verdict:
        try:
            pday, ans = hcrs.decode_answer(proof, self.width)
        except ValueError:
            return Verdict.INVALID
        if pday != day:
            return Verdict.INVALID
        if ans is None:
            # a refusal carries no proof of validity, so the relying party rejects
            return Verdict.REVOKED
        node, value = ans
        path = self._paths.get(serial)
        if path is None:
            path = self._paths[serial] = self.trees[self.world.ca_of(serial)].cert_path(self.leaf(serial))
        return hcrs.hcrs_verify(path, node, value, day)


def ca_hash(issuer: str) -> bytes:
    return hashlib.sha256(issuer.encode()).digest()


class CrtScheme:
    name = "crt"

    def __init__(self, world: World, width: int = MODERN_WIDTH) -> None:
        self.world = world
        self.width = width
        self.tree: CrtTree | None = None
        self._hashes = [ca_hash(st.issuer) for st in world.states]

    def daily_update(self, day: int) -> list[DirectoryPayload]:
        cas = sorted((self._hashes[i], sorted(st.revoked_serials(day)))
                     for i, st in enumerate(self.world.states))
        statements = crt_build_statements(cas)
        self.tree = CrtTree(statements, self.width)
        size = sum(len(s.encode()) for s in statements) + self.width + len(self.tree.signature.encode())
        return [DirectoryPayload("crt-issuer", day, size, len(statements), self.tree.touched)]

    def answer(self, serial: int, day: int) -> bytes:
        return crt_lookup(self.tree, self._hashes[self.world.ca_of(serial)], serial).encode()

    def verify(self, serial: int, proof: bytes, day: int) -> Verdict:
        return crt_verify_bytes(self.tree.root, proof, self._hashes[self.world.ca_of(serial)], serial)


class TwoThreeScheme:
    name = "nn"

    def __init__(self, world: World, width: int = MODERN_WIDTH) -> None:
        self.world = world
        self.width = width
        self.trees = [TwoThreeTree(width) for _ in world.states]
        self.initial_touched = 0
        self._known: list[set[int]] = [set() for _ in world.states]
        self._started = False

    def _sync(self, ca: int, day: int) -> tuple[int, int]:
        st, tree, known = self.world.states[ca], self.trees[ca], self._known[ca]
        listed = st.listed(day)
        now = set(listed)
        touched = changed = 0
        for s in sorted(known - now):
            touched += tree.delete(s).recomputed
            changed += 1
        for s in sorted(now - known):
            touched += tree.insert(s, listed[s][0]).recomputed
            changed += 1
        self._known[ca] = now
        return touched, changed

    def daily_update(self, day: int) -> list[DirectoryPayload]:
        if not self._started:
            for ca in range(len(self.trees)):
                self.initial_touched += self._sync(ca, day - 1)[0]
            self._started = True
        out = []
        for ca, st in enumerate(self.world.states):
            touched, changed = self._sync(ca, day)
            bulletin = 4 + self.width + _sig_size(st.issuer)
            # recomputed digests with their positions, plus the new leaves' contents
            size = touched * (self.width + 1 + self.trees[ca].depth + 1) + changed * 12 + bulletin
            out.append(DirectoryPayload(st.issuer, day, size, changed, touched))
        return out

    def answer(self, serial: int, day: int) -> bytes:
        return self.trees[self.world.ca_of(serial)].prove(serial).encode()

    def verify(self, serial: int, proof: bytes, day: int) -> Verdict:
        return tt_verify_bytes(self.trees[self.world.ca_of(serial)].root_hash, proof, serial)


def make_scheme(name: str, world: World, *, period: float = 14.0, chain_width: str = "paper",
                serial_bits: int = 20, lazy: bool | None = None):
    if name == "crl":
        return CrlScheme(world, period)
    if name == "crs":
        return CrsScheme(world, width_for_mode(chain_width), serial_bits, lazy)
    if name == "hcrs":
        return HcrsScheme(world, width_for_mode(chain_width), lazy)
    if name == "crt":
        return CrtScheme(world)
    if name == "nn":
        return TwoThreeScheme(world)
    raise ValueError(f"no query adapter for scheme {name!r}")


__all__ = [
    "CrlScheme", "CrsScheme", "CrtScheme", "DirectoryPayload", "HcrsScheme", "RevocationScheme",
    "TwoThreeScheme", "World", "ca_hash", "make_scheme", "request_bytes",
]
