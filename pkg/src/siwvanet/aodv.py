"""AODV: on-demand discovery, sequence-numbered routes, RERR on link break.

Link breaks are learned from MAC retry exhaustion by default; HELLO
beacons can be switched on instead of (or in addition to) it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .mac import BROADCAST

IP_HEADER = 20
UDP_HEADER = 8


class LoopInvariantError(AssertionError):
    """A data packet was forwarded against the sequence-number ordering."""


@dataclass(frozen=True)
class AodvConfig:
    active_route_timeout: float = 3.0
    net_diameter: int = 35
    node_traversal_time: float = 0.04
    rreq_retries: int = 2
    buffer_cap: int = 64
    buffer_timeout: float = 30.0
    intermediate_reply: bool = True
    hello_enabled: bool = False
    hello_interval: float = 1.0
    allowed_hello_loss: int = 2
    rreq_ttl: Optional[int] = None  # None: network-wide (net_diameter)
    broadcast_jitter: float = 0.01
    data_ttl: int = 32
    tick_interval: float = 1.0

    def __post_init__(self):
        if self.buffer_cap < 1:
            raise ValueError("buffer_cap must be >= 1")
        if not self.active_route_timeout > 0:
            raise ValueError("active_route_timeout must be > 0")

    @property
    def my_route_timeout(self) -> float:
        return 2 * self.active_route_timeout

    @property
    def net_traversal_time(self) -> float:
        return 2 * self.node_traversal_time * self.net_diameter

    @property
    def path_discovery_time(self) -> float:
        return 2 * self.net_traversal_time

    @property
    def initial_ttl(self) -> int:
        return self.net_diameter if self.rreq_ttl is None else self.rreq_ttl


@dataclass(eq=False)
class DataPacket:
    flow: int
    seq: int
    src: int
    dst: int
    payload: int
    send_time: float
    ttl: int = 32
    hops_taken: int = 0
    stamp: Optional[tuple] = None  # (dest_seq, -hop_count) of the last forwarder
    is_control = False

    @property
    def key(self) -> tuple:
        return self.flow, self.seq

    @property
    def size(self) -> int:
        return self.payload + UDP_HEADER + IP_HEADER


@dataclass(eq=False)
class RreqMessage:
    rreq_id: int
    origin: int
    origin_seq: int
    dest: int
    dest_seq: int
    dest_seq_known: bool
    hop_count: int
    ttl: int
    is_control = True
    hops_taken = 0

    @property
    def size(self) -> int:
        return 24 + IP_HEADER


@dataclass(eq=False)
class RrepMessage:
    dest: int
    dest_seq: int
    hop_count: int
    origin: int
    lifetime: float
    hello: bool = False
    is_control = True
    hops_taken = 0

    def __post_init__(self):
        assert self.hop_count >= 0

    @property
    def size(self) -> int:
        return 20 + IP_HEADER


@dataclass(eq=False)
class RerrMessage:
    unreachable: list  # [(dest, dest_seq), ...]
    is_control = True
    hops_taken = 0

    def __post_init__(self):
        assert self.unreachable, "RERR must name at least one destination"

    @property
    def size(self) -> int:
        return 4 + 8 * len(self.unreachable) + IP_HEADER


@dataclass
class RouteEntry:
    dest: int
    next_hop: int
    hop_count: int
    dest_seq: int
    lifetime_expiry: float
    valid: bool = True
    seq_known: bool = True
    precursors: set = field(default_factory=set)

    def __post_init__(self):
        assert self.hop_count >= 1

    @property
    def state(self) -> str:
        return "valid" if self.valid else "invalid"


@dataclass
class RoutingStats:
    rreq_originated: int = 0
    rreq_forwarded: int = 0
    rreq_received: int = 0
    rrep_sent: int = 0
    rrep_forwarded: int = 0
    rerr_sent: int = 0
    discoveries: int = 0
    discovery_failures: int = 0
    discovery_latencies: list = field(default_factory=list)


class Aodv:
    """Routing agent for one node. ``metrics`` records data-packet fates."""

    def __init__(self, node: int, cfg: AodvConfig, scheduler, mac, rng, metrics=None):
        self.node = node
        self.cfg = cfg
        self.sched = scheduler
        self.mac = mac
        mac.upper = self
        self.rng = rng
        self.metrics = metrics
        self.stats = RoutingStats()

        self.seq_no = 0
        self.rreq_id = 0
        self.routes: dict[int, RouteEntry] = {}
        self.seen: dict[tuple, float] = {}
        self.buffer: list = []  # (packet, buffered_at), oldest first
        self.discovery: dict[int, dict] = {}
        self.last_heard: dict[int, float] = {}
        self.deliver = None  # callable(packet) at destination
        self._tick = self.sched.after(self.cfg.tick_interval, self.route_maintenance_tick, target=node, kind="aodv_tick")
        if cfg.hello_enabled:
            self.sched.after(self.rng.uniform(0, cfg.hello_interval), self._hello, target=node, kind="hello")

    # -- table helpers -----------------------------------------------------

    def valid_route(self, dest: int) -> Optional[RouteEntry]:
        r = self.routes.get(dest)
        if r is None or not r.valid:
            return None
        if r.lifetime_expiry <= self.sched.clock:
            r.valid = False
            return None
        return r

    def _refresh(self, dest: int) -> None:
        r = self.routes.get(dest)
        if r is not None and r.valid:
            r.lifetime_expiry = max(r.lifetime_expiry, self.sched.clock + self.cfg.active_route_timeout)

    def _update_route(self, dest, next_hop, hops, seq, seq_known, lifetime) -> bool:
        """Install or improve a route; return True when the table changed."""
        now = self.sched.clock
        r = self.routes.get(dest)
        if r is None:
            self.routes[dest] = RouteEntry(dest, next_hop, hops, seq, now + lifetime, True, seq_known)
            return True
        usable = r.valid and r.lifetime_expiry > now
        if usable:
            if not seq_known:
                better = False
            elif not r.seq_known:
                better = True
            else:
                better = seq > r.dest_seq or (seq == r.dest_seq and hops < r.hop_count)
        else:
            # an invalid entry still rejects information older than it remembers
            better = not (seq_known and r.seq_known and seq < r.dest_seq)
            if not seq_known:
                seq, seq_known = r.dest_seq, r.seq_known
        if not better:
            if usable and r.next_hop == next_hop and r.hop_count == hops:
                r.lifetime_expiry = max(r.lifetime_expiry, now + lifetime)
            return False
        r.next_hop, r.hop_count, r.dest_seq, r.seq_known = next_hop, hops, seq, seq_known
        r.valid = True
        r.lifetime_expiry = max(r.lifetime_expiry if usable else now, now + lifetime)
        return True

    def _neighbor_route(self, nbr: int) -> None:
        self.last_heard[nbr] = self.sched.clock
        r = self.routes.get(nbr)
        if r is not None and r.valid and r.hop_count == 1 and r.next_hop == nbr:
            self._refresh(nbr)
            return
        seq = r.dest_seq if r is not None else 0
        known = r.seq_known if r is not None else False
        if r is None:
            self.routes[nbr] = RouteEntry(nbr, nbr, 1, seq, self.sched.clock + self.cfg.active_route_timeout, True, known)
        else:
            r.next_hop, r.hop_count, r.valid = nbr, 1, True
            r.lifetime_expiry = max(r.lifetime_expiry, self.sched.clock + self.cfg.active_route_timeout)

    # -- data path ---------------------------------------------------------

    def send(self, packet: DataPacket) -> str:
        """Route a locally generated packet: 'routed' or 'discovery-started'."""
        route = self.valid_route(packet.dst)
        if route is not None:
            self._forward(packet, route)
            return "routed"
        self._buffer(packet)
        if packet.dst not in self.discovery:
            self._originate_rreq(packet.dst)
        return "discovery-started"

    def _forward(self, packet: DataPacket, route: RouteEntry) -> None:
        mine = (route.dest_seq, -route.hop_count)
        if packet.stamp is not None and route.seq_known and mine < packet.stamp:
            raise LoopInvariantError(
                f"node {self.node}: route to {packet.dst} {mine} is older than upstream {packet.stamp}"
            )
        if route.seq_known:
            packet.stamp = mine
        self._refresh(packet.dst)
        self._refresh(route.next_hop)
        self._refresh(packet.src)
        if not self.mac.enqueue(packet, route.next_hop):
            self._drop(packet, "mac_queue")

    def _buffer(self, packet: DataPacket) -> None:
        if len(self.buffer) >= self.cfg.buffer_cap:
            old, _ = self.buffer.pop(0)
            self._drop(old, "no_route_buffer")
        self.buffer.append((packet, self.sched.clock))

    def _flush(self, dest: int) -> None:
        route = self.valid_route(dest)
        if route is None:
            return
        keep = []
        for packet, t in self.buffer:
            if packet.dst == dest:
                self._forward(packet, route)
            else:
                keep.append((packet, t))
        self.buffer = keep

    def _drop_buffered(self, dest: int) -> None:
        keep = []
        for packet, t in self.buffer:
            if packet.dst == dest:
                self._drop(packet, "no_route_buffer")
            else:
                keep.append((packet, t))
        self.buffer = keep

    def _drop(self, packet, cause: str) -> None:
        if self.metrics is not None and not packet.is_control:
            self.metrics.record_drop(packet, cause, self.sched.clock)

    def _receive_data(self, packet: DataPacket, from_node: int) -> None:
        packet.hops_taken += 1
        if packet.dst == self.node:
            self._refresh(from_node)
            self._refresh(packet.src)
            if self.deliver is not None:
                self.deliver(packet)
            return
        packet.ttl -= 1
        if packet.ttl <= 0:
            self._drop(packet, "ttl")
            return
        route = self.valid_route(packet.dst)
        if route is None:
            self._drop(packet, "no_route_buffer")
            r = self.routes.get(packet.dst)
            seq = r.dest_seq if r is not None else 0
            self._send_rerr([(packet.dst, seq)])
            return
        self._forward(packet, route)

    # -- MAC callbacks -----------------------------------------------------

    def mac_receive(self, packet, from_node: int) -> None:
        self.last_heard[from_node] = self.sched.clock
        if isinstance(packet, DataPacket):
            self._receive_data(packet, from_node)
        elif isinstance(packet, RreqMessage):
            self.process_rreq(packet, from_node)
        elif isinstance(packet, RrepMessage):
            self.process_rrep(packet, from_node)
        elif isinstance(packet, RerrMessage):
            self.process_rerr(packet, from_node)

    def mac_tx_done(self, packet, next_hop: int) -> None:
        pass

    def mac_link_failure(self, packet, next_hop: int, ghost: bool = False) -> None:
        if isinstance(packet, DataPacket) and not ghost:
            self._drop(packet, "mac_retry")
        self.on_link_break(next_hop)

    # -- discovery ---------------------------------------------------------

    def _originate_rreq(self, dest: int, retries: int = 0) -> None:
        self.seq_no += 1
        self.rreq_id += 1
        known = self.routes.get(dest)
        msg = RreqMessage(
            rreq_id=self.rreq_id,
            origin=self.node,
            origin_seq=self.seq_no,
            dest=dest,
            dest_seq=known.dest_seq if known is not None else 0,
            dest_seq_known=known is not None and known.seq_known,
            hop_count=0,
            ttl=self.cfg.initial_ttl,
        )
        self.seen[(self.node, self.rreq_id)] = self.sched.clock + self.cfg.path_discovery_time
        state = self.discovery.get(dest)
        if state is None:
            state = self.discovery[dest] = {"started": self.sched.clock}
            self.stats.discoveries += 1
        state["retries"] = retries
        wait = self.cfg.net_traversal_time * (2**retries)
        state["timer"] = self.sched.after(wait, self._discovery_timeout, dest, target=self.node, kind="rreq_timeout")
        self.stats.rreq_originated += 1
        self.mac.enqueue(msg, BROADCAST)

    def _discovery_timeout(self, dest: int) -> None:
        state = self.discovery.get(dest)
        if state is None:
            return
        if self.valid_route(dest) is not None:
            self._finish_discovery(dest)
            return
        if state["retries"] < self.cfg.rreq_retries:
            self._originate_rreq(dest, state["retries"] + 1)
            return
        del self.discovery[dest]
        self.stats.discovery_failures += 1
        self._drop_buffered(dest)

    def _finish_discovery(self, dest: int) -> None:
        state = self.discovery.pop(dest, None)
        if state is not None:
            self.sched.cancel(state["timer"])
            self.stats.discovery_latencies.append(self.sched.clock - state["started"])
        self._flush(dest)

    def _rebroadcast(self, msg) -> None:
        delay = self.rng.uniform(0, self.cfg.broadcast_jitter)
        self.sched.after(delay, self._enqueue_broadcast, msg, target=self.node, kind="jitter")

    def _enqueue_broadcast(self, msg) -> None:
        self.mac.enqueue(msg, BROADCAST)

    def process_rreq(self, msg: RreqMessage, from_node: int) -> str:
        """Handle a received RREQ: 'duplicate', 'reply', 'forward' or 'dropped'."""
        self.stats.rreq_received += 1
        self._neighbor_route(from_node)
        key = (msg.origin, msg.rreq_id)
        now = self.sched.clock
        if msg.origin == self.node or self.seen.get(key, -1.0) > now:
            return "duplicate"
        self.seen[key] = now + self.cfg.path_discovery_time
        hops = msg.hop_count + 1
        reverse_lifetime = 2 * self.cfg.net_traversal_time - 2 * hops * self.cfg.node_traversal_time
        self._update_route(msg.origin, from_node, hops, msg.origin_seq, True, max(reverse_lifetime, self.cfg.active_route_timeout))

        if msg.dest == self.node:
            if msg.dest_seq_known and msg.dest_seq > self.seq_no:
                self.seq_no = msg.dest_seq
            rrep = RrepMessage(self.node, self.seq_no, 0, msg.origin, self.cfg.my_route_timeout)
            self._send_rrep(rrep, msg.origin)
            return "reply"

        if self.cfg.intermediate_reply:
            route = self.valid_route(msg.dest)
            if (
                route is not None
                and route.seq_known
                and (not msg.dest_seq_known or route.dest_seq >= msg.dest_seq)
                and route.next_hop != from_node
            ):
                reverse = self.routes[msg.origin]
                route.precursors.add(from_node)
                reverse.precursors.add(route.next_hop)
                rrep = RrepMessage(
                    msg.dest, route.dest_seq, route.hop_count, msg.origin, route.lifetime_expiry - now
                )
                self._send_rrep(rrep, msg.origin)
                return "reply"

        if msg.ttl <= 1:
            return "dropped"
        fwd = RreqMessage(
            msg.rreq_id, msg.origin, msg.origin_seq, msg.dest,
            max(msg.dest_seq, self.routes[msg.dest].dest_seq) if msg.dest in self.routes else msg.dest_seq,
            msg.dest_seq_known or (msg.dest in self.routes and self.routes[msg.dest].seq_known),
            hops, msg.ttl - 1,
        )
        self.stats.rreq_forwarded += 1
        self._rebroadcast(fwd)
        return "forward"

    def _send_rrep(self, rrep: RrepMessage, origin: int) -> None:
        reverse = self.valid_route(origin)
        if reverse is None:
            return
        self._refresh(origin)
        self.stats.rrep_sent += 1
        self.mac.enqueue(rrep, reverse.next_hop)

    def process_rrep(self, msg: RrepMessage, from_node: int) -> None:
        self._neighbor_route(from_node)
        if msg.hello:
            self._update_route(msg.dest, from_node, 1, msg.dest_seq, True, self.cfg.allowed_hello_loss * self.cfg.hello_interval)
            return
        hops = msg.hop_count + 1
        self._update_route(msg.dest, from_node, hops, msg.dest_seq, True, max(msg.lifetime, 1e-3))
        if msg.origin == self.node:
            self._finish_discovery(msg.dest)
            return
        reverse = self.valid_route(msg.origin)
        forward = self.valid_route(msg.dest)
        if reverse is None or forward is None:
            return
        forward.precursors.add(reverse.next_hop)
        reverse.precursors.add(forward.next_hop)
        self._refresh(msg.origin)
        self.stats.rrep_forwarded += 1
        self.mac.enqueue(RrepMessage(msg.dest, msg.dest_seq, hops, msg.origin, msg.lifetime), reverse.next_hop)

    # -- maintenance -------------------------------------------------------

    def on_link_break(self, next_hop: int) -> list:
        """Invalidate routes through ``next_hop``; returns the RERR list sent."""
        unreachable = []
        for dest, r in self.routes.items():
            if r.valid and r.next_hop == next_hop:
                r.valid = False
                r.dest_seq += 1
                if r.precursors:
                    unreachable.append((dest, r.dest_seq))
        for packet in self.mac.purge(next_hop):
            if isinstance(packet, DataPacket):
                self._reroute(packet)
        if unreachable:
            self._send_rerr(unreachable)
        return unreachable

    def _reroute(self, packet: DataPacket) -> None:
        if packet.src == self.node:
            self.send(packet)
            return
        route = self.valid_route(packet.dst)
        if route is None:
            self._drop(packet, "no_route_buffer")
        else:
            self._forward(packet, route)

    def _send_rerr(self, unreachable: list) -> None:
        self.stats.rerr_sent += 1
        self.mac.enqueue(RerrMessage(list(unreachable)), BROADCAST)

    def process_rerr(self, msg: RerrMessage, from_node: int) -> list:
        propagate = []
        for dest, seq in msg.unreachable:
            r = self.routes.get(dest)
            if r is not None and r.valid and r.next_hop == from_node:
                r.valid = False
                r.dest_seq = max(r.dest_seq, seq)
                if r.precursors:
                    propagate.append((dest, r.dest_seq))
        if propagate:
            self._send_rerr(propagate)
        return propagate

    def route_maintenance_tick(self) -> list:
        """Expire stale routes, buffered packets and duplicate-RREQ records."""
        now = self.sched.clock
        expired = []
        for dest, r in self.routes.items():
            if r.valid and r.lifetime_expiry <= now:
                r.valid = False
                expired.append(dest)
        self.seen = {k: t for k, t in self.seen.items() if t > now}
        keep = []
        for packet, t in self.buffer:
            if now - t >= self.cfg.buffer_timeout:
                self._drop(packet, "no_route_buffer")
            else:
                keep.append((packet, t))
        self.buffer = keep
        if self.cfg.hello_enabled:
            limit = self.cfg.allowed_hello_loss * self.cfg.hello_interval
            for nbr in sorted({r.next_hop for r in self.routes.values() if r.valid}):
                if now - self.last_heard.get(nbr, now) > limit:
                    self.on_link_break(nbr)
        self._tick = self.sched.after(self.cfg.tick_interval, self.route_maintenance_tick, target=self.node, kind="aodv_tick")
        return expired

    def _hello(self) -> None:
        self.mac.enqueue(RrepMessage(self.node, self.seq_no, 0, BROADCAST, self.cfg.allowed_hello_loss * self.cfg.hello_interval, hello=True), BROADCAST)
        self.sched.after(self.cfg.hello_interval, self._hello, target=self.node, kind="hello")

    def in_flight(self) -> list:
        return [p for p, _ in self.buffer]
