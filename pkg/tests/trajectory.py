"""Random revocation trajectories plus an event-log oracle for what a full list must contain."""

from __future__ import annotations

import random

from certrev.model import REASON_HOLD, RevocationState


def random_trajectory(seed: int, days: int = 60, n: int = 300, issuer: str = "ca0"):
    """State with staggered issuance/expiry, revocations and hold/release cycles.

    Returns ``(state, events)`` where events are ``(day, kind, serial)`` tuples
    with kind in {"revoke", "hold", "release"}.
    """
    rng = random.Random(seed)
    st = RevocationState(issuer)
    expiry = {}
    for s in range(n):
        issue = rng.randrange(0, days // 2)
        expiry[s] = issue + rng.randrange(5, days + 10)
        st.issue(s, issue, expiry[s])
    events = []
    revoked: set[int] = set()
    held: set[int] = set()
    for day in range(0, days + 1):
        live = [s for s in range(n) if st.certs[s].issue_day <= day < expiry[s] and s not in revoked]
        for s in rng.sample(live, min(len(live), rng.randrange(0, 4))):
            if s in held and st.hold_start(s, day) == day:
                continue
            st.revoke(s, day)
            revoked.add(s)
            held.discard(s)
            events.append((day, "revoke", s))
        pool = [s for s in live if s not in revoked and s not in held]
        if pool and rng.random() < 0.5:
            s = rng.choice(pool)
            st.hold(s, day)
            held.add(s)
            events.append((day, "hold", s))
        if held and rng.random() < 0.4:
            s = rng.choice(sorted(held))
            if st.hold_start(s, day) is not None and st.hold_start(s, day) < day:
                st.release(s, day)
                held.discard(s)
                events.append((day, "release", s))
    return st, events


def oracle_listed(state: RevocationState, events, day: int) -> set[tuple[int, int, int]]:
    """(serial, day, reason) triples a full list issued on ``day`` must carry, from the event log alone."""
    out = {}
    hold_open: dict[int, int] = {}
    for d, kind, s in sorted(events):
        if d > day:
            break
        if kind == "revoke":
            out[s] = (s, d, 1)
            hold_open.pop(s, None)
        elif kind == "hold":
            hold_open[s] = d
        elif kind == "release":
            hold_open.pop(s, None)
    for s, start in hold_open.items():
        out.setdefault(s, (s, start, REASON_HOLD))
    return {t for s, t in out.items() if state.certs[s].issue_day <= day < state.certs[s].expiry_day}
