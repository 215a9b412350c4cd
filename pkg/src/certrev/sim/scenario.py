"""Scenario parameters and the ``key = value`` scenario file format.

One assignment per line; ``#`` starts a comment; keys are the field names
of :class:`Scenario`. Unknown keys and malformed values are reported with
their line number.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

SCHEMES = ("crl", "delta-crl", "crs", "hcrs", "crt", "nn", "ocsp")
FETCH_POLICIES = ("cache", "per-validation")


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    scheme: str = "crl"
    population: int = 30000
    users_per_ca: int = 30000
    # share of live certificates already revoked when the run starts
    revoked_fraction: float = 0.10
    # new revocations per CA per day; negative means population * fraction / validity_days
    daily_revocations: float = -1.0
    validity_days: int = 365
    crl_period: float = 14.0
    over_issue: int = 1
    segments: int = 1
    stagger: bool = False
    crl_fetch: str = "cache"
    validations_per_user_per_day: float = 5.0
    verifiers: int = 1000
    cost_per_kb: float = 0.02
    horizon: int = 30
    seed: int = 0
    chain_width: str = "paper"
    serial_bits: int = 20
    ticks_per_day: int = 24
    ocsp_hops: int = 2
    ocsp_max_age: int = 24
    ocsp_cache_ttl: int = 24
    audit: bool = True

    def __post_init__(self) -> None:
        for name in ("population", "users_per_ca", "validity_days", "over_issue", "segments",
                     "verifiers", "horizon", "ticks_per_day", "serial_bits"):
            if getattr(self, name) < 1:
                raise ScenarioError(f"{name} must be positive")
        if not 0.0 <= self.revoked_fraction <= 1.0:
            raise ScenarioError("revoked_fraction must lie in [0, 1]")
        if self.validations_per_user_per_day < 0 or self.cost_per_kb < 0:
            raise ScenarioError("rates and prices cannot be negative")
        if self.crl_period <= 0:
            raise ScenarioError("crl_period must be positive")
        if self.scheme not in SCHEMES:
            raise ScenarioError(f"unknown scheme {self.scheme!r}; expected one of {', '.join(SCHEMES)}")
        if self.crl_fetch not in FETCH_POLICIES:
            raise ScenarioError(f"crl_fetch must be one of {', '.join(FETCH_POLICIES)}")
        if self.chain_width not in ("paper", "modern"):
            raise ScenarioError("chain_width must be 'paper' or 'modern'")
        if self.ocsp_hops < 1 or self.ocsp_max_age < 0 or self.ocsp_cache_ttl < 0:
            raise ScenarioError("bad OCSP parameters")

    @property
    def ca_count(self) -> int:
        return -(-self.population // self.users_per_ca)

    @property
    def new_revocations_per_day(self) -> float:
        if self.daily_revocations >= 0:
            return self.daily_revocations
        return self.users_per_ca * self.revoked_fraction / self.validity_days

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _convert(kind, raw: str, line: int, key: str):
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ScenarioError(f"bad value {raw!r} for {key}", line) from None


_TYPES = {"str": str, "int": int, "float": float, "bool": bool}


def parse_scenario(text: str) -> Scenario:
    types = {f.name: _TYPES[f.type] if isinstance(f.type, str) else f.type for f in fields(Scenario)}
    values: dict[str, object] = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in types:
            raise ScenarioError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        values[key] = _convert(types[key], val, lineno, key)
        where[key] = lineno
    try:
        return Scenario(**values)
    except ScenarioError as e:
        # point at the assignment the complaint is about, when there is one
        msg = str(e)
        line = next((where[k] for k in sorted(where, key=len, reverse=True) if k in msg), None)
        raise ScenarioError(msg, line) from None


def federal_assumptions(sc: Scenario) -> bool:
    """True when the per-CA load, revocation share, period, query rate and price
    match the federal PKI assumption list (either reading of "bi-weekly")."""
    return (sc.users_per_ca == 30000 and sc.revoked_fraction == 0.10
            and sc.crl_period in (14.0, 3.5) and sc.validations_per_user_per_day == 5.0
            and sc.cost_per_kb == 0.02)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())
