"""Discrete-time simulation of revocation traffic and cost."""

from certrev.sim.ledger import TrafficLedger
from certrev.sim.scenario import Scenario, ScenarioError, load_scenario, parse_scenario

__all__ = ["Scenario", "ScenarioError", "TrafficLedger", "load_scenario", "parse_scenario"]
