"""OCSP-style responder network with caching and forwarding.

A responder answers from its cache when the cached response is young
enough for the client, otherwise forwards to its neighbours in order and
caches what comes back. A co-located responder reads the CA's state
directly and never forwards. Time is measured in simulator ticks; the
CA's state is indexed by day (``tick // ticks_per_day``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from certrev.codec import Writer
from certrev.model import RevocationState, Verdict
from certrev.primitives import Signature, sign
from certrev.sim.ledger import TrafficLedger

GOOD, REVOKED, UNKNOWN = Verdict.VALID, Verdict.REVOKED, Verdict.UNKNOWN
_VERDICT_CODE = {GOOD: 0, REVOKED: 1, UNKNOWN: 2}


@dataclass(frozen=True)
class StatusRequest:
    issuer: str
    serial: int
    max_age: int

    def __post_init__(self) -> None:
        if self.max_age < 0:
            raise ValueError("max_age must be non-negative")

    def encode(self) -> bytes:
        return Writer().u8(0x51).blob(self.issuer.encode()).u64(self.serial).u32(self.max_age).getvalue()


@dataclass(frozen=True)
class StatusResponse:
    issuer: str
    serial: int
    verdict: Verdict
    produced_at: int
    responder: str
    signature: Signature | None = None

    def body(self) -> bytes:
        return (Writer().u8(0x52).blob(self.issuer.encode()).u64(self.serial)
                .u8(_VERDICT_CODE[self.verdict]).u32(self.produced_at)
                .blob(self.responder.encode()).getvalue())

    def encode(self) -> bytes:
        sig = self.signature or sign(self.responder, self.body())
        return self.body() + sig.encode()


@dataclass
class ResponderNode:
    id: str
    neighbours: list[str] = field(default_factory=list)
    co_located: bool = False
    # responses older than this are evicted; None keeps them until the client's max_age rejects them
    cache_ttl: int | None = None
    service_time: int = 0
    cache: dict[tuple[str, int], StatusResponse] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0

    def __post_init__(self) -> None:
        if self.co_located and self.neighbours:
            raise ValueError(f"co-located responder {self.id} must not forward")


def invalidate_on_update(node: ResponderNode, now: int) -> int:
    """Evict cache entries older than the node's TTL; returns how many went."""
    if node.cache_ttl is None:
        return 0
    stale = [k for k, r in node.cache.items() if now - r.produced_at > node.cache_ttl]
    for k in stale:
        del node.cache[k]
    return len(stale)


class ResponderNetwork:
    def __init__(self, nodes: list[ResponderNode], authorities: Mapping[str, RevocationState],
                 ticks_per_day: int = 24, hop_limit: int = 16,
                 ledger: TrafficLedger | None = None) -> None:
        self.nodes = {n.id: n for n in nodes}
        for n in nodes:
            for nb in n.neighbours:
                if nb not in self.nodes:
                    raise ValueError(f"{n.id} forwards to unknown responder {nb}")
        self.authorities = dict(authorities)
        self.ticks_per_day = ticks_per_day
        self.hop_limit = hop_limit
        self.ledger = ledger if ledger is not None else TrafficLedger()
        self.upstream_requests = 0

    def authoritative(self, issuer: str, serial: int, tick: int) -> Verdict:
        state = self.authorities.get(issuer)
        if state is None:
            return UNKNOWN
        return state.status(serial, tick // self.ticks_per_day)

    def query(self, client: str, node_id: str, request: StatusRequest, now: int) -> tuple[StatusResponse, int]:
        """Client-facing entry point; returns the response and its delivery tick."""
        self.ledger.add(client, node_id, now, len(request.encode()))
        resp, delivered = self.handle(node_id, request, now, set(), 0)
        self.ledger.add(node_id, client, delivered, len(resp.encode()), request=False)
        return resp, delivered

    def handle(self, node_id: str, request: StatusRequest, now: int,
               visited: set[str], back_latency: int) -> tuple[StatusResponse, int]:
        """Serve ``request`` arriving at ``node_id`` at tick ``now``.

        ``back_latency`` is how long a response sent from here takes to
        reach the client; freshness is judged at delivery time.
        """
        node = self.nodes[node_id]
        key = (request.issuer, request.serial)
        ready = now + node.service_time
        delivered = ready + back_latency

        cached = node.cache.get(key)
        if cached is not None:
            too_old = node.cache_ttl is not None and ready - cached.produced_at > node.cache_ttl
            if not too_old and delivered - cached.produced_at <= request.max_age:
                node.hits += 1
                return cached, delivered
        node.misses += 1

        if node.co_located:
            if back_latency > request.max_age:
                return self._unknown(node, request, ready), delivered
            verdict = self.authoritative(request.issuer, request.serial, ready)
            resp = self._signed(StatusResponse(request.issuer, request.serial, verdict, ready, node.id))
            node.cache[key] = resp
            return resp, delivered

        if len(visited) >= self.hop_limit:
            return self._unknown(node, request, ready), delivered
        visited = visited | {node_id}
        for nb in node.neighbours:
            if nb in visited:
                continue
            self.upstream_requests += 1
            self.ledger.add(node_id, nb, ready, len(request.encode()))
            resp, nb_delivered = self.handle(nb, request, ready, visited, back_latency)
            self.ledger.add(nb, node_id, nb_delivered - back_latency, len(resp.encode()), request=False)
            if resp.verdict is not UNKNOWN and nb_delivered - resp.produced_at <= request.max_age:
                node.cache[key] = resp
                return resp, nb_delivered
        return self._unknown(node, request, ready), delivered

    @staticmethod
    def _signed(resp: StatusResponse) -> StatusResponse:
        return StatusResponse(*_fields(resp), sign(resp.responder, resp.body()))

    def _unknown(self, node: ResponderNode, request: StatusRequest, at: int) -> StatusResponse:
        return self._signed(StatusResponse(request.issuer, request.serial, UNKNOWN, at, node.id))

    def invalidate(self, now: int) -> int:
        return sum(invalidate_on_update(n, now) for n in self.nodes.values())


def _fields(r: StatusResponse) -> tuple:
    return (r.issuer, r.serial, r.verdict, r.produced_at, r.responder)


def chain(length: int, *, cache_ttl: int | None = None, service_time: int = 0) -> list[ResponderNode]:
    """``length`` caching responders in a line ending at a co-located one."""
    ids = [f"R{i + 1}" for i in range(length)] + ["CA"]
    nodes = [ResponderNode(ids[i], [ids[i + 1]], cache_ttl=cache_ttl, service_time=service_time)
             for i in range(length)]
    nodes.append(ResponderNode("CA", co_located=True, service_time=service_time))
    return nodes
