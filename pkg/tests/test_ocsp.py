from __future__ import annotations

import pytest

from certrev.model import RevocationState, Verdict
from certrev.ocsp import ResponderNetwork, ResponderNode, StatusRequest, StatusResponse, chain, invalidate_on_update
from certrev.primitives import sign

from workloads import run_ocsp


def _net(ttl=None, service_time=0, hops=2):
    st = RevocationState("ca0")
    for s in range(10):
        st.issue(s, 0, 100)
    st.revoke(3, 2)
    return st, ResponderNetwork(chain(hops, cache_ttl=ttl, service_time=service_time), {"ca0": st})


def test_cold_query_reaches_ca_and_caches():
    _, net = _net()
    resp, t = net.query("c", "R1", StatusRequest("ca0", 3, 100), 60)
    assert resp.verdict is Verdict.REVOKED and resp.responder == "CA" and t == 60
    assert net.upstream_requests == 2
    resp2, _ = net.query("c", "R1", StatusRequest("ca0", 3, 100), 61)
    assert resp2 == resp and net.upstream_requests == 2
    assert net.nodes["R1"].hits == 1


def test_status_follows_authoritative_day():
    _, net = _net()
    early, _ = net.query("c", "R1", StatusRequest("ca0", 3, 0), 24)
    later, _ = net.query("c", "R1", StatusRequest("ca0", 3, 0), 48)
    assert early.verdict is Verdict.VALID and later.verdict is Verdict.REVOKED


def test_max_age_forces_refresh():
    _, net = _net()
    net.query("c", "R1", StatusRequest("ca0", 1, 5), 10)
    net.query("c", "R1", StatusRequest("ca0", 1, 5), 16)
    assert net.upstream_requests == 4


def test_unknown_issuer():
    _, net = _net()
    resp, _ = net.query("c", "R1", StatusRequest("nobody", 1, 5), 0)
    assert resp.verdict is Verdict.UNKNOWN


def test_service_time_and_unreachable_freshness():
    _, net = _net(service_time=2)
    resp, t = net.query("c", "R1", StatusRequest("ca0", 1, 10), 0)
    # each of R1, R2 and the CA adds two ticks before the answer is produced
    assert resp.produced_at == 6 and t == 6
    resp, t = net.query("c", "R1", StatusRequest("ca0", 2, 0), 100)
    assert resp.verdict is Verdict.VALID and t == resp.produced_at


def test_topology_validation():
    with pytest.raises(ValueError):
        ResponderNode("CA", ["R1"], co_located=True)
    with pytest.raises(ValueError):
        ResponderNetwork([ResponderNode("R1", ["R9"])], {})
    with pytest.raises(ValueError):
        StatusRequest("ca0", 1, -1)


def test_loop_terminates():
    nodes = [ResponderNode("A", ["B"]), ResponderNode("B", ["A"])]
    net = ResponderNetwork(nodes, {})
    resp, _ = net.query("c", "A", StatusRequest("ca0", 1, 5), 0)
    assert resp.verdict is Verdict.UNKNOWN


def test_invalidate_on_update():
    node = ResponderNode("R", cache_ttl=5)
    for s, t in ((1, 0), (2, 8)):
        node.cache[("ca0", s)] = StatusResponse("ca0", s, Verdict.VALID, t, "CA")
    assert invalidate_on_update(node, 10) == 1
    assert list(node.cache) == [("ca0", 2)]
    assert invalidate_on_update(ResponderNode("R"), 10) == 0


def test_signature_covers_body():
    _, net = _net()
    resp, _ = net.query("c", "R1", StatusRequest("ca0", 1, 5), 0)
    assert resp.signature == sign("CA", resp.body())
    assert resp.signature.verifies("CA", resp.body())


@pytest.mark.parametrize("hops", [1, 2, 3])
def test_verdicts_and_freshness(hops):
    net, log = run_ocsp(4000, hops=hops, seed=hops)
    for req, resp, delivered in log:
        assert resp.verdict is net.authoritative(req.issuer, req.serial, resp.produced_at)
        assert delivered - resp.produced_at <= req.max_age


def test_upstream_nonincreasing_in_ttl():
    counts = [run_ocsp(4000, cache_ttl=ttl, seed=9)[0].upstream_requests for ttl in (0, 2, 6, 12, 24, 48)]
    assert all(a >= b for a, b in zip(counts, counts[1:])), counts
    assert counts[0] > counts[-1]


def test_ledger_records_every_hop():
    net, log = run_ocsp(200, seed=4)
    assert net.ledger.link_requests("client", "R1") == 200
    assert net.ledger.link_requests("R1", "R2") + net.ledger.link_requests("R2", "CA") == net.upstream_requests
