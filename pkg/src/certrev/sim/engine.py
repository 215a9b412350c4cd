"""Tick-driven simulation of CA pushes, verifier queries and their cost.

Time advances in ticks (``ticks_per_day`` per day, hourly by default);
day ``d`` (1-based) covers ticks ``[(d-1)T, dT)``. Revocations take
effect at the start of their day. Every tick each verifier performs a
Poisson number of validations, each for a uniformly drawn certificate.

CRL-family schemes model relying-party caching: a verifier keeps each
list it fetched until that list's next update and fetches the newest one
on its first validation after expiry (``crl_fetch = cache``), or fetches
on every validation (``crl_fetch = per-validation``). Caches start warm,
each verifier holding one of the lists valid at tick 0 chosen uniformly,
so over-issued lists have uniformly spread expiry times from the start.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from certrev.crl import Crl, DeltaCrl, IssuanceSchedule, issue_delta, issue_segmented, reconstruct
from certrev.model import RevocationState, Verdict
from certrev.ocsp import ResponderNetwork, StatusRequest, chain
from certrev.primitives import derive
from certrev.sim.ledger import (
    CA_TO_DIRECTORY,
    DIRECTORY_TO_USER,
    USER_TO_DIRECTORY,
    TrafficLedger,
)
from certrev.sim.scenario import Scenario, ScenarioError
from certrev.sim.schemes import World, make_scheme, request_bytes

DIRECTORY = "directory"
USERS = "users"


@dataclass
class SimResult:
    scenario: Scenario
    ledger: TrafficLedger
    validations: int = 0
    audited: int = 0
    failures: list[tuple] = field(default_factory=list)
    payload_entries: list[int] = field(default_factory=list)
    node_touches: int = 0
    initial_touches: int = 0
    responses: int = 0
    response_bytes: int = 0

    @property
    def horizon_ticks(self) -> int:
        return self.scenario.horizon * self.scenario.ticks_per_day

    def request_series(self) -> list[int]:
        return self.ledger.requests_per_tick(link_class=USER_TO_DIRECTORY, start=0, end=self.horizon_ticks)

    def peak_request_rate(self) -> int:
        return max(self.request_series(), default=0)

    def high_load_fraction(self, threshold: float = 0.5) -> float:
        series = self.request_series()
        peak = max(series, default=0)
        if peak == 0:
            return 0.0
        return sum(1 for r in series if r > threshold * peak) / len(series)

    @property
    def mean_proof_bytes(self) -> float:
        return self.response_bytes / self.responses if self.responses else 0.0


def build_world(sc: Scenario, rng: np.random.Generator) -> World:
    if sc.horizon > sc.validity_days:
        raise ScenarioError("horizon must not exceed validity_days (certificates are issued on day 0)")
    states = [RevocationState(f"ca{c}") for c in range(sc.ca_count)]
    world = World(states, sc.users_per_ca, sc.population, sc.validity_days,
                  derive(sc.seed.to_bytes(8, "big"), b"world", 32))
    for c, st in enumerate(states):
        members = world.members(c)
        for s in members:
            st.issue(s, 0, sc.validity_days + 1)
        order = rng.permutation(len(members))
        k = round(len(members) * sc.revoked_fraction)
        for j in order[:k]:
            st.revoke(members.start + int(j), 0)
        nxt = k
        for day in range(1, sc.horizon + 1):
            n = int(rng.poisson(sc.new_revocations_per_day))
            for j in order[nxt:nxt + n]:
                st.revoke(members.start + int(j), day)
            nxt = min(len(order), nxt + n)
    return world


def _arrivals(rng: np.random.Generator, sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """(verifier index, certificate serial) for every validation in one tick."""
    rate = sc.validations_per_user_per_day / sc.ticks_per_day
    if rate <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    counts = rng.poisson(rate, sc.verifiers)
    who = np.repeat(np.arange(sc.verifiers), counts)
    serials = rng.integers(0, sc.population, size=who.size)
    return who, serials


@dataclass
class _Doc:
    crl: Crl | DeltaCrl
    issue: int
    expire: int
    stream: int
    size: int
    base: int = -1  # for deltas: doc id of the base list


class _Feed:
    """All lists issued during a run, grouped into streams (CA x segment, or CA base/delta)."""

    def __init__(self, n_streams: int) -> None:
        self.docs: list[_Doc] = []
        self.by_stream: list[list[int]] = [[] for _ in range(n_streams)]

    def add(self, doc: _Doc) -> int:
        self.docs.append(doc)
        i = len(self.docs) - 1
        self.by_stream[doc.stream].append(i)
        return i

    def freeze(self) -> None:
        for ids in self.by_stream:
            ids.sort(key=lambda i: self.docs[i].issue)
        self._ticks = [np.array([self.docs[i].issue for i in ids]) for ids in self.by_stream]
        self._ids = [np.array(ids) for ids in self.by_stream]

    def latest(self, stream: int, tick: int) -> int:
        k = int(np.searchsorted(self._ticks[stream], tick, side="right")) - 1
        if k < 0:
            raise LookupError(f"no list in stream {stream} before tick {tick}")
        return int(self._ids[stream][k])

    def latest_vec(self, streams: np.ndarray, tick: int) -> np.ndarray:
        out = np.empty(streams.size, np.int64)
        for st in np.unique(streams):
            out[streams == st] = self.latest(int(st), tick)
        return out

    def current(self, stream: int, tick: int) -> list[int]:
        return [i for i in self.by_stream[stream] if self.docs[i].issue <= tick < self.docs[i].expire]


def _crl_day(tick: int, T: int) -> int:
    return max(0, tick // T + 1)


def _schedule(sc: Scenario) -> IssuanceSchedule:
    if sc.stagger and sc.segments > 1:
        return IssuanceSchedule.staggered(sc.crl_period, sc.segments, sc.over_issue)
    return IssuanceSchedule(sc.crl_period, sc.over_issue)


def _build_crl_feed(sc: Scenario, world: World) -> _Feed:
    T, S = sc.ticks_per_day, sc.segments
    schedule = _schedule(sc)
    P = schedule.period_ticks(T)
    feed = _Feed(sc.ca_count * S)
    memo: dict[tuple[int, int], object] = {}
    for tick, seg in schedule.issue_times(sc.horizon * T, T):
        segs = [seg] if sc.stagger and S > 1 else range(S)
        for c, st in enumerate(world.states):
            d = _crl_day(tick, T)
            crl_set = memo.get((c, d))
            if crl_set is None:
                crl_set = memo[(c, d)] = issue_segmented(st, d, schedule, S)
            for j in segs:
                crl = crl_set.segments[j]
                feed.add(_Doc(crl, tick, tick + P, c * S + j, crl.size()))
    feed.freeze()
    return feed


def _build_delta_feed(sc: Scenario, world: World) -> _Feed:
    """Streams ``2c`` (base lists) and ``2c + 1`` (deltas) per CA."""
    T, k = sc.ticks_per_day, sc.over_issue
    schedule = IssuanceSchedule(sc.crl_period, k)
    P = schedule.period_ticks(T)
    feed = _Feed(2 * sc.ca_count)
    base_ticks = [t for t, _ in schedule.issue_times(sc.horizon * T, T)]
    bases: list[list[int]] = [[] for _ in world.states]
    for c, st in enumerate(world.states):
        for t in base_ticks:
            crl = issue_segmented(st, _crl_day(t, T), schedule, 1).segments[0]
            bases[c].append(feed.add(_Doc(crl, t, t + P, 2 * c, crl.size())))
    if k == 1:
        delta_ticks = [t for t in range(-T, sc.horizon * T, T)]
        life = T
    else:
        delta_ticks = base_ticks
        life = round(P / k)
    for c, st in enumerate(world.states):
        for t in delta_ticks:
            live = [i for i in bases[c] if feed.docs[i].issue <= t < feed.docs[i].expire]
            if not live:
                continue
            pick = min(live, key=lambda i: feed.docs[i].issue) if k > 1 else max(live, key=lambda i: feed.docs[i].issue)
            base = feed.docs[pick].crl
            d = _crl_day(t, T)
            delta = issue_delta(st, base, d, next_update=max(d + 1, _crl_day(t + life, T)))
            feed.add(_Doc(delta, t, t + life, 2 * c + 1, delta.size(), base=pick))
    feed.freeze()
    return feed


class _Auditor:
    def __init__(self, world: World, enabled: bool) -> None:
        self.world = world
        self.enabled = enabled
        self.checked = 0
        self.failures: list[tuple] = []
        self._seen: set = set()

    def check(self, key, serial: int, day: int, got: Verdict) -> None:
        if not self.enabled or key in self._seen:
            return
        self._seen.add(key)
        self.checked += 1
        want = self.world.status(serial, day)
        if got is not want:
            self.failures.append((serial, day, str(got), str(want)))


def run(sc: Scenario) -> SimResult:
    """Simulate ``sc``; deterministic for a given scenario (including its seed)."""
    rng = np.random.Generator(np.random.PCG64(sc.seed))
    world = build_world(sc, rng)
    result = SimResult(sc, TrafficLedger())
    if sc.scheme in ("crl", "delta-crl"):
        _run_crl_family(sc, world, rng, result)
    elif sc.scheme == "ocsp":
        _run_ocsp(sc, world, rng, result)
    else:
        _run_queries(sc, world, rng, result)
    return result


def _push(ledger: TrafficLedger, issuer: str, tick: int, size: int) -> None:
    ledger.add(issuer, DIRECTORY, tick, size, request=False, link_class=CA_TO_DIRECTORY)


def _run_crl_family(sc: Scenario, world: World, rng: np.random.Generator, result: SimResult) -> None:
    T = sc.ticks_per_day
    ledger = result.ledger
    delta_mode = sc.scheme == "delta-crl"
    feed = _build_delta_feed(sc, world) if delta_mode else _build_crl_feed(sc, world)
    for doc in feed.docs:
        if 0 <= doc.issue < sc.horizon * T:
            issuer = world.states[doc.stream // (2 if delta_mode else sc.segments)].issuer
            _push(ledger, issuer, doc.issue, doc.size)
    audit = _Auditor(world, sc.audit)
    req_size = len(request_bytes(world.states[0].issuer, 0, 0))
    cold = sc.crl_fetch == "per-validation"
    V = sc.verifiers
    n_streams = len(feed.by_stream)

    # warm start: each verifier holds one of the lists valid at tick 0
    held = np.full((V, n_streams), -1, np.int64)
    for st in range(n_streams):
        cur = feed.current(st, 0)
        if cur:
            held[:, st] = np.array(cur)[rng.integers(0, len(cur), V)]
    expire = np.array([d.expire for d in feed.docs] + [-1])[held]
    issue_of = np.array([d.issue for d in feed.docs])
    base_of = np.array([d.base for d in feed.docs])
    recon: dict[tuple[int, int], set[int]] = {}

    for tick in range(sc.horizon * T):
        day = tick // T + 1
        who, serials = _arrivals(rng, sc)
        if who.size == 0:
            continue
        result.validations += who.size
        ca = serials // sc.users_per_ca
        fetched = 0
        nbytes = 0
        if not delta_mode:
            stream = ca * sc.segments + serials % sc.segments
            if cold:
                docs = feed.latest_vec(stream, tick)
                fetched = who.size
                nbytes = int(sum(feed.docs[i].size for i in docs))
            else:
                pair = who * n_streams + stream
                upair, first = np.unique(pair, return_index=True)
                uw, us = who[first], stream[first]
                need = expire[uw, us] <= tick
                if need.any():
                    new = feed.latest_vec(us[need], tick)
                    held[uw[need], us[need]] = new
                    expire[uw[need], us[need]] = [feed.docs[i].expire for i in new]
                    fetched = int(need.sum())
                    nbytes = int(sum(feed.docs[i].size for i in new))
                docs = held[who, stream]
            for doc_id, serial in zip(docs.tolist(), serials.tolist()):
                crl = feed.docs[doc_id].crl
                got = Verdict.REVOKED if crl.lists(serial) else Verdict.VALID
                audit.check((doc_id, serial), serial, crl.this_update, got)
        else:
            bstream, dstream = 2 * ca, 2 * ca + 1
            pair = who * n_streams + dstream
            upair, first = np.unique(pair, return_index=True)
            uw, ub, ud = who[first], bstream[first], dstream[first]
            need_d = np.ones(uw.size, bool) if cold else expire[uw, ud] <= tick
            if need_d.any():
                new = feed.latest_vec(ud[need_d], tick)
                held[uw[need_d], ud[need_d]] = new
                expire[uw[need_d], ud[need_d]] = [feed.docs[i].expire for i in new]
                fetched += int(need_d.sum())
                nbytes += int(sum(feed.docs[i].size for i in new))
            dcur = held[uw, ud]
            want_base = base_of[dcur]
            hb = held[uw, ub]
            if cold:
                need_b = np.ones(uw.size, bool)
            elif sc.over_issue > 1:
                hb_issue = np.where(hb >= 0, issue_of[np.maximum(hb, 0)], -10**9)
                need_b = (hb < 0) | (hb_issue < issue_of[want_base]) | (expire[uw, ub] <= tick)
            else:
                need_b = hb != want_base
            if need_b.any():
                if sc.over_issue > 1 and not cold:
                    newb = feed.latest_vec(ub[need_b], tick)
                else:
                    newb = want_base[need_b]
                held[uw[need_b], ub[need_b]] = newb
                expire[uw[need_b], ub[need_b]] = [feed.docs[i].expire for i in newb]
                fetched += int(need_b.sum())
                nbytes += int(sum(feed.docs[i].size for i in newb))
            bdocs, ddocs = held[who, bstream], held[who, dstream]
            for b, d, serial in zip(bdocs.tolist(), ddocs.tolist(), serials.tolist()):
                key = (b, d)
                s = recon.get(key)
                if s is None:
                    entries = reconstruct(feed.docs[b].crl, feed.docs[d].crl, allow_newer_base=sc.over_issue > 1)
                    s = recon[key] = {e.serial for e in entries}
                got = Verdict.REVOKED if serial in s else Verdict.VALID
                audit.check((b, d, serial), serial, feed.docs[d].crl.this_update, got)
        if fetched:
            ledger.add(USERS, DIRECTORY, tick, fetched * req_size, count=fetched, link_class=USER_TO_DIRECTORY)
            ledger.add(DIRECTORY, USERS, tick, nbytes, request=False, link_class=DIRECTORY_TO_USER)
            result.responses += fetched
            result.response_bytes += nbytes
    result.audited, result.failures = audit.checked, audit.failures


def _run_queries(sc: Scenario, world: World, rng: np.random.Generator, result: SimResult) -> None:
    T = sc.ticks_per_day
    ledger = result.ledger
    scheme = make_scheme(sc.scheme, world, period=sc.crl_period, chain_width=sc.chain_width,
                         serial_bits=max(sc.serial_bits, math.ceil(math.log2(max(2, sc.population)))))
    audit = _Auditor(world, sc.audit)
    req_size = len(request_bytes(world.states[0].issuer, 0, 0))
    for day in range(1, sc.horizon + 1):
        day_tick = (day - 1) * T
        entries = 0
        for p in scheme.daily_update(day):
            _push(ledger, p.issuer, day_tick, p.size)
            entries += p.entries
            result.node_touches += p.touched
        result.payload_entries.append(entries)
        proofs: dict[int, bytes] = {}
        for tick in range(day_tick, day_tick + T):
            _, serials = _arrivals(rng, sc)
            if serials.size == 0:
                continue
            result.validations += serials.size
            nbytes = 0
            uniq, counts = np.unique(serials, return_counts=True)
            for serial, n in zip(uniq.tolist(), counts.tolist()):
                proof = proofs.get(serial)
                if proof is None:
                    proof = proofs[serial] = scheme.answer(serial, day)
                    audit.check((serial, day), serial, day, scheme.verify(serial, proof, day))
                nbytes += n * len(proof)
            ledger.add(USERS, DIRECTORY, tick, serials.size * req_size, count=serials.size,
                       link_class=USER_TO_DIRECTORY)
            ledger.add(DIRECTORY, USERS, tick, nbytes, request=False, link_class=DIRECTORY_TO_USER)
            result.responses += serials.size
            result.response_bytes += nbytes
    result.initial_touches = getattr(scheme, "initial_touched", 0)
    result.audited, result.failures = audit.checked, audit.failures


def _run_ocsp(sc: Scenario, world: World, rng: np.random.Generator, result: SimResult) -> None:
    T = sc.ticks_per_day
    ledger = result.ledger
    net = ResponderNetwork(chain(sc.ocsp_hops, cache_ttl=sc.ocsp_cache_ttl),
                           {st.issuer: st for st in world.states}, T, ledger=ledger)
    first = "R1"
    audit_ok = 0
    for tick in range(sc.horizon * T):
        if tick % T == 0:
            net.invalidate(tick)
        _, serials = _arrivals(rng, sc)
        for serial in serials.tolist():
            issuer = world.states[serial // sc.users_per_ca].issuer
            resp, delivered = net.query(USERS, first, StatusRequest(issuer, serial, sc.ocsp_max_age), tick)
            result.validations += 1
            result.responses += 1
            result.response_bytes += len(resp.encode())
            if sc.audit:
                want = net.authoritative(issuer, serial, resp.produced_at)
                fresh = delivered - resp.produced_at <= sc.ocsp_max_age
                if resp.verdict is not want or not fresh:
                    result.failures.append((serial, tick, str(resp.verdict), str(want)))
                audit_ok += 1
    ledger.link_class[(USERS, first)] = USER_TO_DIRECTORY
    ledger.link_class[(first, USERS)] = DIRECTORY_TO_USER
    result.audited = audit_ok


def cost_report(result: SimResult) -> dict[str, float]:
    """Bytes and money per link class; cost is kilobytes times ``cost_per_kb``."""
    sc = result.scenario
    by_class = result.ledger.bytes_by_class()
    total = result.ledger.total_bytes
    out: dict[str, float] = {}
    for cls in (CA_TO_DIRECTORY, DIRECTORY_TO_USER, USER_TO_DIRECTORY):
        out[f"{cls}_bytes"] = by_class.get(cls, 0)
        out[f"{cls}_cost"] = result.ledger.cost(sc.cost_per_kb, cls)
    out["other_bytes"] = total - sum(by_class.get(c, 0) for c in (CA_TO_DIRECTORY, DIRECTORY_TO_USER, USER_TO_DIRECTORY))
    out["total_bytes"] = total
    out["total_cost"] = result.ledger.cost(sc.cost_per_kb)
    out["yearly_cost"] = out["total_cost"] * 365 / sc.horizon
    # share of all traffic spent delivering revocation data to relying parties
    out["download_share"] = by_class.get(DIRECTORY_TO_USER, 0) / total if total else 0.0
    return out


COMPARE_COLUMNS = ["scheme", "ca_to_directory_bytes", "directory_to_user_bytes", "user_to_directory_bytes",
                   "total_bytes", "total_cost", "peak_request_rate", "mean_proof_bytes",
                   "payload_entries", "node_touches", "validations", "audit_failures"]


def compare(scenarios: Sequence[Scenario]) -> tuple[str, list[SimResult]]:
    """Run each scenario and tabulate one CSV row per scheme."""
    shared = ("population", "users_per_ca", "revoked_fraction", "horizon", "seed")
    for sc in scenarios[1:]:
        for k in shared:
            if getattr(sc, k) != getattr(scenarios[0], k):
                raise ScenarioError(f"scenarios differ in {k}; comparisons need a shared population")
    results = [run(sc) for sc in scenarios]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for r in results:
        rep = cost_report(r)
        w.writerow([r.scenario.scheme, rep["ca_to_directory_bytes"], rep["directory_to_user_bytes"],
                    rep["user_to_directory_bytes"], rep["total_bytes"], f"{rep['total_cost']:.6f}",
                    r.peak_request_rate(), f"{r.mean_proof_bytes:.3f}", sum(r.payload_entries),
                    r.node_touches, r.validations, len(r.failures)])
    return buf.getvalue(), results


def summary(result: SimResult) -> str:
    sc = result.scenario
    rep = cost_report(result)
    lines = [
        f"scenario {sc.name}: scheme={sc.scheme} population={sc.population} horizon={sc.horizon}d seed={sc.seed}",
        f"validations={result.validations} audited={result.audited} audit_failures={len(result.failures)}",
        f"peak_request_rate={result.peak_request_rate()} per tick",
    ]
    for key in ("ca_to_directory", "directory_to_user", "user_to_directory"):
        lines.append(f"{key}: {rep[key + '_bytes']} bytes, cost {rep[key + '_cost']:.4f}")
    lines.append(f"total: {rep['total_bytes']} bytes, cost {rep['total_cost']:.4f}")
    return "\n".join(lines) + "\n"


__all__ = ["SimResult", "build_world", "compare", "cost_report", "run", "summary"]
