"""Assemble nodes (radio, MAC, AODV) over a mobility trace and run flows."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .aodv import Aodv, AodvConfig, DataPacket
from .engine import Scheduler
from .mac import Mac, MacConfig
from .mobility import WaypointTrace
from .phy import Channel, RadioConfig
from .traffic import CbrFlow, MetricsLedger, MetricsSeries, generate


class SimulationError(RuntimeError):
    pass


@dataclass
class Node:
    id: int
    mac: Mac
    routing: Aodv


@dataclass
class RunResult:
    series: MetricsSeries
    summary: dict
    ledger: MetricsLedger = field(repr=False)
    sim: "Simulation" = field(repr=False)


class Simulation:
    def __init__(
        self,
        trace: WaypointTrace,
        flows: list,
        duration: float,
        seed: int = 0,
        radio: RadioConfig = None,
        mac: MacConfig = None,
        routing: AodvConfig = None,
    ):
        if not duration > 0:
            raise ValueError("duration must be > 0")
        self.trace = trace
        self.flows = list(flows)
        self.duration = duration
        self.radio = radio or RadioConfig()
        self.mac_cfg = mac or MacConfig()
        self.routing_cfg = routing or AodvConfig()
        self.sched = Scheduler(seed)
        self.ledger = MetricsLedger()
        self.channel = Channel(self.sched, self.radio, trace.position)
        mac_rng = self.sched.rng("mac")
        routing_rng = self.sched.rng("routing")
        self.nodes: dict[int, Node] = {}
        for n in trace.nodes:
            m = Mac(n, self.mac_cfg, self.sched, self.channel, mac_rng, self.ledger)
            r = Aodv(n, self.routing_cfg, self.sched, m, routing_rng, self.ledger)
            r.deliver = self._deliver
            self.nodes[n] = Node(n, m, r)
        for f in self.flows:
            if f.src not in self.nodes or f.dst not in self.nodes:
                raise ValueError(f"flow {f.flow_id} references a node missing from the trace")
            self.ledger.add_flow(f)

    def position(self, node: int, t: float) -> tuple:
        return self.trace.position(node, t)

    def _deliver(self, packet: DataPacket) -> None:
        self.ledger.record_delivery(packet, self.sched.clock)

    def _send(self, packet: DataPacket) -> None:
        self.ledger.record_send(packet)
        self.nodes[packet.src].routing.send(packet)

    def in_flight(self) -> set:
        """Keys of data packets still held in a routing buffer or MAC queue."""
        keys = set()
        for node in self.nodes.values():
            for p in node.routing.in_flight():
                keys.add(p.key)
            for p in node.mac.queued_packets():
                if isinstance(p, DataPacket):
                    keys.add(p.key)
        done = self.ledger.delivered.keys() | self.ledger.dropped.keys()
        return keys - done

    def run(self, window: float = 1.0) -> RunResult:
        for f in self.flows:
            generate(f, self.sched, self._send, ttl=self.routing_cfg.data_ttl)
        self.sched.run_until(self.duration)
        in_flight = self.in_flight()
        led = self.ledger
        if len(led.sent) != len(led.delivered) + len(led.dropped) + len(in_flight):
            raise SimulationError(
                f"packet conservation violated: sent={len(led.sent)} delivered={len(led.delivered)} "
                f"dropped={len(led.dropped)} in_flight={len(in_flight)}"
            )
        series, summary = led.finalize(self.duration, window)
        summary.update(self.network_stats())
        return RunResult(series, summary, led, self)

    def network_stats(self) -> dict:
        stats = [n.routing.stats for n in self.nodes.values()]
        latencies = [x for s in stats for x in s.discovery_latencies]
        return {
            "routing": {
                "rreq_originated": sum(s.rreq_originated for s in stats),
                "rreq_forwarded": sum(s.rreq_forwarded for s in stats),
                "rrep_sent": sum(s.rrep_sent for s in stats),
                "rrep_forwarded": sum(s.rrep_forwarded for s in stats),
                "rerr_sent": sum(s.rerr_sent for s in stats),
                "discoveries": sum(s.discoveries for s in stats),
                "discovery_failures": sum(s.discovery_failures for s in stats),
                "mean_discovery_latency_s": statistics.fmean(latencies) if latencies else None,
            },
            "mac": {
                "frames_sent": self.channel.frames_sent,
                "collisions": self.channel.collisions,
                "retransmissions": sum(n.mac.retries for n in self.nodes.values()),
                "queue_drops": sum(n.mac.drops_queue for n in self.nodes.values()),
                "retry_drops": sum(n.mac.drops_retry for n in self.nodes.values()),
            },
            "events_dispatched": self.sched.dispatched,
        }


def run_simulation(trace, flows, duration, seed=0, radio=None, mac=None, routing=None, window=1.0) -> RunResult:
    return Simulation(trace, flows, duration, seed, radio, mac, routing).run(window)
