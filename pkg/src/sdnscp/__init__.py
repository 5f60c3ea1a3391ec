"""Simulator for SDN-based service routing in a 5G core control plane.

The package models the service-based interface of a 5G core in which the
usual service communication proxy is replaced by SDN switches programmed
reactively by a controller application.  It provides:

* a flow-table engine (:mod:`sdnscp.flow_engine`),
* the controller application (:mod:`sdnscp.controller`),
* network-function and NRF models (:mod:`sdnscp.nf_model`),
* calibrated deployment scenarios and a closed-loop throughput/latency
  sweep (:mod:`sdnscp.scenarios`),
* a deterministic signaling simulation with an independent analytic
  oracle (:mod:`sdnscp.simulator`, :mod:`sdnscp.oracle`),
* a CLI (:mod:`sdnscp.cli`) and a small HTTP service
  (:mod:`sdnscp.service`).
"""

from sdnscp.flow_engine import (
    Drop,
    Endpoint,
    FlowRule,
    FlowTable,
    ForwardOut,
    MatchCriteria,
    Packet,
    RewriteDst,
    RewriteSrc,
    SendToController,
)
from sdnscp.nf_model import NFProfile, NFType, SBIMessage
from sdnscp.scenarios import ScenarioKind

__all__ = [
    "Drop",
    "Endpoint",
    "FlowRule",
    "FlowTable",
    "ForwardOut",
    "MatchCriteria",
    "NFProfile",
    "NFType",
    "Packet",
    "RewriteDst",
    "RewriteSrc",
    "SBIMessage",
    "ScenarioKind",
    "SendToController",
]

__version__ = "0.1.0"
