"""Closed-form packet accounting for reactive signaling runs.

Computes the exact packet counts and delivery latencies a reactive run
produces, without the event engine: no heap, no flow tables, no
controller objects.  Each rule of a translation pair is reduced to a
liveness window (install time plus last-match time checked against the
hard and idle timeouts) and every packet's fate follows from closed-form
hop arithmetic over those windows.

The walk processes one call flow at a time, in workload order, and is
only valid when no two flows are ever in flight at once; it raises
OracleError the moment a flow starts before the previous one finished.
Workloads whose flow starts are spaced further apart than the worst-case
flow duration (a few tens of hop times) satisfy this by construction.
"""

from __future__ import annotations

from typing import Optional

from sdnscp.controller import MAIN_ADDRESS_BLOCK, MAIN_PORT
from sdnscp.flow_engine import Endpoint
from sdnscp.nf_model import (
    ATTACH_STEPS,
    DETACH_STEPS,
    NFProfile,
    NFType,
    PRODUCER_CAPABLE_TYPES,
    Resolve,
)
from sdnscp.scenarios import ScenarioKind
from sdnscp.simulator import (
    Metrics,
    PacketCounts,
    SignalingConfig,
    WorkloadEvent,
    generate_workload,
    instance_endpoint,
)


class OracleError(RuntimeError):
    """The configuration or workload is outside what the oracle can account for."""


class _SelectionFailed(Exception):
    pass


class _Oracle:
    def __init__(self, config: SignalingConfig, workload: list[WorkloadEvent]) -> None:
        if config.scenario is not ScenarioKind.SDN_REACTIVE:
            raise OracleError("only reactive runs have closed-form accounting")
        if config.stats_interval_us is not None or config.stats_threshold_bytes is not None:
            raise OracleError("stats collection is not modeled")
        self.cfg = config
        self.workload = workload
        self.m = Metrics()
        self.h = config.hop_us
        self.D = config.duration_us
        self.hard = config.hard_timeout_us
        self.idle = config.idle_timeout_us

        self.mains: dict[NFType, Endpoint] = {
            t: Endpoint(address=f"{MAIN_ADDRESS_BLOCK}.{i + 1}", port=MAIN_PORT)
            for i, t in enumerate(PRODUCER_CAPABLE_TYPES)
        }

        # registry, in registration order per type
        self.registered: dict[NFType, list[NFProfile]] = {}
        self.amfs: list[NFProfile] = []
        iid = 1
        for nf_type, count, loads in (
            (NFType.AMF, config.amf_count, ()),
            (NFType.AUSF, config.ausf_count, config.ausf_loads),
            (NFType.SMF, config.smf_count, config.smf_loads),
        ):
            for i in range(count):
                load = loads[i] if i < len(loads) else 0
                profile = NFProfile(
                    instance_id=iid,
                    nf_type=nf_type,
                    endpoint=instance_endpoint(nf_type, i),
                    load=load,
                )
                self.registered.setdefault(nf_type, []).append(profile)
                if nf_type is NFType.AMF:
                    self.amfs.append(profile)
                iid += 1

        # the controller application's view of the registry
        self._known: dict[NFType, list[NFProfile]] = {}
        self._fetched: set[NFType] = set()
        if config.controller_preseeded or not config.model_nrf_traffic:
            for nf_type, bucket in self.registered.items():
                self._known[nf_type] = list(bucket)
                self._fetched.add(nf_type)

        self._rr_cursor: dict[NFType, int] = {}
        self._bindings: dict[tuple[Endpoint, NFType], int] = {}

        # rule liveness windows.  The consumer-side request rule is one
        # slot per (consumer, producer type): reinstalls replace it, so it
        # also remembers which instance it currently rewrites to.  The
        # other three rules of a pair share their install time and are one
        # slot per (consumer, instance): [installed, last_r2, last_r3, last_r4]
        self._r1: dict[tuple[Endpoint, NFType], list] = {}
        self._pair: dict[tuple[Endpoint, Endpoint], list] = {}

        self._caches: dict[Endpoint, dict[NFType, tuple[Endpoint, int]]] = {
            a.endpoint: {} for a in self.amfs
        }
        self._attached: set[int] = set()
        self._frontier = 0

        # bring-up registrations: counted, instantaneous
        if config.model_nrf_traffic:
            total = config.amf_count + config.ausf_count + config.smf_count
            for _ in range(total):
                self.m.count_emitted("registration")
                self.m.count_emitted("registration")
                self.m.delivered_packets += 2
                self.m.count_through_app("registration")
                self.m.count_through_app("registration")

    # -- rule windows --

    def _alive(self, installed: Optional[int], last: int, t: int) -> bool:
        if installed is None or installed > t:
            return False
        if self.hard is not None and t - installed >= self.hard:
            return False
        if self.idle is not None and t - last >= self.idle:
            return False
        return True

    def _install(self, amf: NFProfile, ptype: NFType, inst: NFProfile, t_i: int) -> None:
        if t_i >= self.D:
            return  # the rule change never reaches the switch inside the run
        self._r1[(amf.endpoint, ptype)] = [t_i, t_i, inst]
        self._pair[(amf.endpoint, inst.endpoint)] = [t_i, t_i, t_i, t_i]

    # -- registry and selection --

    def _known_profiles(self, ptype: NFType) -> list[NFProfile]:
        if ptype not in self._fetched:
            self._known[ptype] = list(self.registered.get(ptype, []))
            self._fetched.add(ptype)
            self.m.count_nrf_query(2)
        return self._known.get(ptype, [])

    def _select(self, ptype: NFType, amf: NFProfile, binding: bool) -> NFProfile:
        profiles = self._known_profiles(ptype)
        if not profiles:
            raise _SelectionFailed()
        if binding:
            bound = self._bindings.get((amf.endpoint, ptype))
            if bound is not None:
                for p in profiles:
                    if p.instance_id == bound:
                        return p
        eligible = [p for p in profiles if p.load < self.cfg.overload_threshold]
        if not eligible:
            raise _SelectionFailed()
        if self.cfg.policy == "least-load":
            chosen = min(eligible, key=lambda p: (p.load, 0, p.instance_id))
        else:
            cursor = self._rr_cursor.get(ptype, 0)
            chosen = eligible[cursor % len(eligible)]
            self._rr_cursor[ptype] = (cursor + 1) % len(eligible)
        if binding:
            self._bindings[(amf.endpoint, ptype)] = chosen.instance_id
        return chosen

    def _authorized(self, consumer: NFType, producer: NFType) -> bool:
        return (consumer, producer) in self.cfg.authorization

    # -- shared deliveries --

    def _delivered(self, t_d: int, created_at: int) -> None:
        self.m.delivered_packets += 1
        self.m.latencies_us.append(t_d - created_at)

    def _error_delivery(self, t_pi: int, category: str) -> tuple[str, int]:
        """The app answers a denied request; the reply takes two more hops."""
        self.m.count_emitted(category)
        self.m.count_through_app(category)
        t_d = t_pi + 2 * self.h
        if t_d >= self.D:
            return ("cut", t_pi)
        self._delivered(t_d, t_pi)
        return ("failed", t_d)

    # -- resolve step --

    def _resolve(self, amf: NFProfile, target: NFType, t: int):
        """Returns (status, endpoint, time): the main endpoint for ``target``."""
        cfg = self.cfg
        if not cfg.model_nrf_traffic:
            return ("ok", self.mains[target], t)
        cache = self._caches[amf.endpoint]
        entry = cache.get(target)
        if entry is not None:
            endpoint, fetched_at = entry
            if cfg.validity_us is None or t - fetched_at < cfg.validity_us:
                return ("ok", endpoint, t)
            del cache[target]

        self.m.count_emitted("discovery")
        h, D = self.h, self.D
        t_pi = t + 2 * h
        if t_pi >= D:
            return ("cut", None, t)
        self.m.count_through_app("discovery")
        self.m.count_consumed("discovery")
        if not self._authorized(amf.nf_type, target):
            status, t_end = self._error_delivery(t_pi, "discovery")
            return (status, None, t_end)
        queried = target not in self._fetched
        profiles = self._known_profiles(target)
        delay = 3 if queried else 1
        if not profiles:
            self.m.count_emitted("discovery")
            self.m.count_through_app("discovery")
            t_d = t_pi + (delay + 1) * h
            if t_d >= D:
                return ("cut", None, t_pi)
            self._delivered(t_d, t_pi)
            return ("failed", None, t_d)
        self.m.count_emitted("discovery")
        self.m.count_through_app("discovery")
        t_d = t_pi + (delay + 1) * h
        if t_d >= D:
            return ("cut", None, t_pi)
        self._delivered(t_d, t_pi)
        main = self.mains[target]
        cache[target] = (main, t_d)
        return ("ok", main, t_d)

    # -- request/response legs --

    def _request_leg(self, amf: NFProfile, ptype: NFType, t_send: int):
        """Consumer emits a request at ``t_send``; returns (status, instance, t_delivered)."""
        m, h, D = self.m, self.h, self.D
        m.count_emitted("data")
        t1 = t_send + h
        if t1 >= D:
            return ("cut", None, t_send)
        slot = self._r1.get((amf.endpoint, ptype))
        if slot is not None and self._alive(slot[0], slot[1], t1):
            slot[1] = t1
            return self._producer_arrival(amf, ptype, slot[2], t1 + h, t_send)

        # request rule missing: the first packet goes through the app
        t_pi = t1 + h
        if t_pi >= D:
            return ("cut", None, t1)
        m.count_through_app("data")
        if not self._authorized(amf.nf_type, ptype):
            m.count_dropped("data")
            status, t_end = self._error_delivery(t_pi, "data")
            return (status, None, t_end)
        try:
            inst = self._select(ptype, amf, self.cfg.binding_required)
        except _SelectionFailed:
            m.count_dropped("data")
            status, t_end = self._error_delivery(t_pi, "data")
            return (status, None, t_end)
        self._install(amf, ptype, inst, t_pi + h)
        # replayed through the fresh rule: rewritten and sent uplink
        return self._producer_arrival(amf, ptype, inst, t_pi + 2 * h, t_send)

    def _producer_arrival(self, amf: NFProfile, ptype: NFType, inst: NFProfile, t: int, t_send: int):
        """Rewritten request reaches the producer-side switch at ``t``."""
        m, h, D = self.m, self.h, self.D
        if t >= D:
            return ("cut", None, t_send)
        p = self._pair.get((amf.endpoint, inst.endpoint))
        if p is not None and self._alive(p[0], p[2], t):
            p[2] = t
            t_d = t + h
            if t_d >= D:
                return ("cut", None, t)
            self._delivered(t_d, t_send)
            return ("ok", inst, t_d)
        # producer-side rule expired mid-flow: repaired, same instance
        t_pi = t + h
        if t_pi >= D:
            return ("cut", None, t)
        m.count_through_app("data")
        self._install(amf, ptype, inst, t_pi + h)
        t_d = t_pi + 2 * h
        if t_d >= D:
            return ("cut", None, t_pi)
        self._delivered(t_d, t_send)
        return ("ok", inst, t_d)

    def _response_leg(self, amf: NFProfile, ptype: NFType, inst: NFProfile, a: int):
        """Producer answers at ``a``; returns (status, t_delivered)."""
        m, h, D = self.m, self.h, self.D
        m.count_emitted("data")
        t1 = a + h
        if t1 >= D:
            return ("cut", a)
        p = self._pair.get((amf.endpoint, inst.endpoint))
        if p is not None and self._alive(p[0], p[3], t1):
            p[3] = t1
            return self._consumer_return(amf, ptype, inst, a + 2 * h, a)
        # response rule expired at the producer switch
        t_pi = t1 + h
        if t_pi >= D:
            return ("cut", t1)
        m.count_through_app("data")
        self._install(amf, ptype, inst, t_pi + h)
        return self._consumer_return(amf, ptype, inst, t_pi + 2 * h, a)

    def _consumer_return(self, amf: NFProfile, ptype: NFType, inst: NFProfile, t: int, a: int):
        """Response reaches the consumer-side switch at ``t``."""
        m, h, D = self.m, self.h, self.D
        if t >= D:
            return ("cut", a)
        p = self._pair.get((amf.endpoint, inst.endpoint))
        if p is not None and self._alive(p[0], p[1], t):
            p[1] = t
            t_d = t + h
            if t_d >= D:
                return ("cut", t)
            self._delivered(t_d, a)
            return ("ok", t_d)
        # translation back to the main endpoint expired mid-flow
        t_pi = t + h
        if t_pi >= D:
            return ("cut", t)
        m.count_through_app("data")
        self._install(amf, ptype, inst, t_pi + h)
        t_d = t_pi + 2 * h
        if t_d >= D:
            return ("cut", t_pi)
        self._delivered(t_d, a)
        return ("ok", t_d)

    # -- flows --

    def _walk_flow(self, start: int, amf: NFProfile, steps, user_id: int, is_attach: bool) -> None:
        if start < self._frontier:
            raise OracleError(
                f"flow at t={start} overlaps the previous flow (busy until {self._frontier})"
            )
        t = start
        resolved: dict[NFType, Endpoint] = {}
        for step in steps:
            if isinstance(step, Resolve):
                if step.target in resolved:
                    continue
                status, endpoint, t = self._resolve(amf, step.target, t)
                if status == "failed":
                    self.m.failed_flows += 1
                if status != "ok":
                    self._frontier = max(self._frontier, t)
                    return
                resolved[step.target] = endpoint
            else:
                ptype = step.target
                status, inst, t = self._request_leg(amf, ptype, t)
                if status == "failed":
                    self.m.failed_flows += 1
                if status != "ok":
                    self._frontier = max(self._frontier, t)
                    return
                status, t = self._response_leg(amf, ptype, inst, t)
                if status != "ok":
                    self._frontier = max(self._frontier, t)
                    return
        self._frontier = max(self._frontier, t)
        if is_attach:
            self._attached.add(user_id)
            self.m.attaches_completed += 1
        else:
            self.m.detaches_completed += 1

    def run(self) -> Metrics:
        for ev in self.workload:
            amf = self.amfs[ev.user_id % len(self.amfs)]
            if ev.kind == "attach":
                self._walk_flow(ev.time_us, amf, ATTACH_STEPS, ev.user_id, True)
            else:
                if ev.user_id not in self._attached:
                    continue
                self._attached.discard(ev.user_id)
                self._walk_flow(ev.time_us, amf, DETACH_STEPS, ev.user_id, False)
        return self.m


def analytic_metrics(
    config: SignalingConfig, workload: Optional[list[WorkloadEvent]] = None
) -> Metrics:
    """Exact metrics of a reactive run, derived without the event engine."""
    if workload is None:
        workload = generate_workload(config.workload_spec(), config.seed)
    return _Oracle(config, workload).run()


def analytic_oracle_count(
    config: SignalingConfig, workload: Optional[list[WorkloadEvent]] = None
) -> PacketCounts:
    """Exact packet counts of a reactive run, derived without the event engine."""
    return analytic_metrics(config, workload).counts()
