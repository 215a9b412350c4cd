"""Per-link, per-tick request and byte counters."""

from __future__ import annotations

import csv
import io
from collections import defaultdict

KILOBYTE = 1024

CA_TO_DIRECTORY = "ca_to_directory"
DIRECTORY_TO_USER = "directory_to_user"
USER_TO_DIRECTORY = "user_to_directory"
RESPONDER = "responder"


class TrafficLedger:
    def __init__(self) -> None:
        # (src, dst) -> tick -> [requests, bytes]
        self._cells: dict[tuple[str, str], dict[int, list[int]]] = defaultdict(dict)
        self.link_class: dict[tuple[str, str], str] = {}

    def add(self, src: str, dst: str, tick: int, nbytes: int, request: bool = True,
            count: int = 1, link_class: str | None = None) -> None:
        if nbytes < 0 or count < 0:
            raise ValueError("ledger counters cannot go negative")
        cell = self._cells[(src, dst)].setdefault(tick, [0, 0])
        if request:
            cell[0] += count
        cell[1] += nbytes
        if link_class is not None:
            self.link_class[(src, dst)] = link_class
        else:
            self.link_class.setdefault((src, dst), RESPONDER)

    def merge(self, other: "TrafficLedger") -> None:
        for link, ticks in other._cells.items():
            for t, (r, b) in ticks.items():
                cell = self._cells[link].setdefault(t, [0, 0])
                cell[0] += r
                cell[1] += b
        for link, cls in other.link_class.items():
            self.link_class.setdefault(link, cls)

    @property
    def links(self) -> list[tuple[str, str]]:
        return sorted(self._cells)

    def rows(self):
        for link in self.links:
            for t in sorted(self._cells[link]):
                r, b = self._cells[link][t]
                yield link[0], link[1], t, r, b

    def link_bytes(self, src: str, dst: str) -> int:
        return sum(b for _, b in self._cells.get((src, dst), {}).values())

    def link_requests(self, src: str, dst: str) -> int:
        return sum(r for r, _ in self._cells.get((src, dst), {}).values())

    def bytes_by_class(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for link, ticks in self._cells.items():
            out[self.link_class[link]] += sum(b for _, b in ticks.values())
        return dict(out)

    def requests_by_class(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for link, ticks in self._cells.items():
            out[self.link_class[link]] += sum(r for r, _ in ticks.values())
        return dict(out)

    @property
    def total_bytes(self) -> int:
        return sum(b for ticks in self._cells.values() for _, b in ticks.values())

    def requests_per_tick(self, dst: str | None = None, link_class: str | None = None,
                          start: int = 0, end: int | None = None) -> list[int]:
        """Requests arriving per tick at ``dst`` (or on links of ``link_class``)."""
        agg: dict[int, int] = defaultdict(int)
        for link, ticks in self._cells.items():
            if dst is not None and link[1] != dst:
                continue
            if link_class is not None and self.link_class[link] != link_class:
                continue
            for t, (r, _) in ticks.items():
                agg[t] += r
        if end is None:
            end = max(agg, default=start - 1) + 1
        return [agg.get(t, 0) for t in range(start, end)]

    def peak_request_rate(self, dst: str | None = None, link_class: str | None = None) -> int:
        return max(self.requests_per_tick(dst, link_class), default=0)

    def cost(self, cost_per_kb: float, link_class: str | None = None) -> float:
        if link_class is None:
            nbytes = self.total_bytes
        else:
            nbytes = self.bytes_by_class().get(link_class, 0)
        return nbytes / KILOBYTE * cost_per_kb

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["src", "dst", "link_class", "tick", "requests", "bytes"])
        for src, dst, t, r, b in self.rows():
            w.writerow([src, dst, self.link_class[(src, dst)], t, r, b])
        return buf.getvalue()
