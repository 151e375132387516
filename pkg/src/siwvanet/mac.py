"""Simplified IEEE 802.11b DCF: carrier sense, binary exponential backoff,
unicast ACK with retries, single-shot broadcast. No RTS/CTS, no NAV."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Optional

BROADCAST = -1
MTU_BYTES = 2304


@dataclass(frozen=True)
class MacConfig:
    data_rate: float = 11e6  # b/s
    slot: float = 20e-6
    sifs: float = 10e-6
    difs: float = 50e-6
    cw_min: int = 31
    cw_max: int = 1023
    retry_limit: int = 7  # transmission attempts per unicast frame
    plcp_overhead: float = 192e-6
    mac_header: int = 34  # bytes
    ack_frame: int = 14  # bytes
    queue_cap: int = 50
    rts_cts: bool = False

    def __post_init__(self):
        if not self.cw_min < self.cw_max:
            raise ValueError("cw_min must be < cw_max")
        if self.retry_limit < 1:
            raise ValueError("retry_limit must be >= 1")
        if self.queue_cap < 1:
            raise ValueError("queue_cap must be >= 1")
        if self.rts_cts:
            raise ValueError("rts_cts is not supported by this MAC model")

    def tx_duration(self, payload_bytes: int) -> float:
        if payload_bytes < 0:
            raise ValueError("payload_bytes must be >= 0")
        return self.plcp_overhead + (payload_bytes + self.mac_header) * 8 / self.data_rate

    @property
    def ack_duration(self) -> float:
        return self.plcp_overhead + self.ack_frame * 8 / self.data_rate

    @property
    def ack_timeout(self) -> float:
        return self.sifs + self.ack_duration + self.slot


def tx_duration(payload_bytes: int, cfg: MacConfig = MacConfig()) -> float:
    return cfg.tx_duration(payload_bytes)


@dataclass
class Frame:
    kind: str  # "data" or "ack"
    src: int
    dst: int
    seq: int
    packet: Any = None
    size: int = 0  # bytes above the MAC header
    hop: int = 0  # packet.hops_taken when handed to the MAC

    @property
    def is_broadcast(self) -> bool:
        return self.dst == BROADCAST


class Mac:
    """Per-node DCF state machine.

    ``upper`` must provide ``mac_receive(packet, from_node)``,
    ``mac_tx_done(packet, next_hop)`` and
    ``mac_link_failure(packet, next_hop, ghost)``. ``ghost`` is set when the
    receiver already took the packet and only the ACKs were lost.
    ``stats.mac_frame(t, bits, control)`` sees every frame accepted by its
    addressee; ``control`` marks routing signalling, not MAC ACKs.
    """

    def __init__(self, node: int, cfg: MacConfig, scheduler, channel, rng, stats=None):
        self.node = node
        self.cfg = cfg
        self.sched = scheduler
        self.channel = channel
        self.radio = channel.attach(node)
        self.radio.listener = self
        self.rng = rng
        self.stats = stats
        self.upper = None

        self.queue: deque[Frame] = deque()
        self.cw = cfg.cw_min
        self.attempts = 0
        self.backoff_slots: Optional[int] = None
        self.state = "idle"  # idle | contend | tx | wait_ack
        self._defer: Optional[Any] = None
        self._backoff: Optional[Any] = None
        self._backoff_start = 0.0
        self._ack_timer = None
        self._sending_ack = False
        self._seq = 0
        self._last_seq: dict[int, int] = {}

        self.drops_queue = 0
        self.drops_retry = 0
        self.retries = 0
        self.tx_count = 0

    # -- upper interface ---------------------------------------------------

    def enqueue(self, packet, dest: int) -> bool:
        size = packet.size
        if size > MTU_BYTES:
            raise ValueError(f"frame of {size} bytes exceeds MTU {MTU_BYTES}")
        if len(self.queue) >= self.cfg.queue_cap:
            self.drops_queue += 1
            return False
        self._seq += 1
        self.queue.append(Frame("data", self.node, dest, self._seq, packet, size, getattr(packet, "hops_taken", 0)))
        if self.state == "idle":
            self._start_contention()
        return True

    def purge(self, next_hop: int) -> list:
        """Remove queued (not in-service) frames toward ``next_hop``."""
        keep, out = deque(), []
        for i, fr in enumerate(self.queue):
            if i == 0 and self.state != "idle":
                keep.append(fr)
            elif fr.dst == next_hop:
                out.append(fr.packet)
            else:
                keep.append(fr)
        self.queue = keep
        return out

    def queued_packets(self) -> list:
        return [fr.packet for fr in self.queue]

    # -- contention --------------------------------------------------------

    def _start_contention(self) -> None:
        self.state = "contend"
        if self.backoff_slots is None:
            self.backoff_slots = self.rng.randint(0, self.cw)
        if not self.radio.busy:
            self._arm_defer()

    def _arm_defer(self) -> None:
        self.sched.cancel(self._defer)
        self._defer = self.sched.after(self.cfg.difs, self._defer_done, target=self.node, kind="difs")

    def _defer_done(self) -> None:
        self._defer = None
        if self.backoff_slots == 0:
            self._transmit()
        else:
            self._backoff_start = self.sched.clock
            self._backoff = self.sched.after(
                self.backoff_slots * self.cfg.slot, self._backoff_done, target=self.node, kind="backoff"
            )

    def _backoff_done(self) -> None:
        self._backoff = None
        self.backoff_slots = 0
        self._transmit()

    def on_medium_busy(self) -> None:
        if self.state != "contend":
            return
        if self._defer is not None:
            self.sched.cancel(self._defer)
            self._defer = None
        if self._backoff is not None:
            # slots are whole: count only completed ones, in integer microseconds
            elapsed_us = round((self.sched.clock - self._backoff_start) * 1e6)
            slot_us = round(self.cfg.slot * 1e6)
            self.backoff_slots = max(0, self.backoff_slots - elapsed_us // slot_us)
            self.sched.cancel(self._backoff)
            self._backoff = None

    def on_medium_idle(self) -> None:
        if self.state == "contend" and self._backoff is None:
            self._arm_defer()

    # -- transmission ------------------------------------------------------

    def _transmit(self) -> None:
        frame = self.queue[0]
        self.state = "tx"
        self.backoff_slots = None
        self.attempts += 1
        self.tx_count += 1
        if self.attempts > 1:
            self.retries += 1
        self.channel.transmit(self.node, frame, self.cfg.tx_duration(frame.size))

    def on_tx_end(self, now: float) -> None:
        if self._sending_ack:
            self._sending_ack = False
            return
        frame = self.queue[0]
        if frame.is_broadcast:
            self._complete(True)
        else:
            self.state = "wait_ack"
            self._ack_timer = self.sched.after(self.cfg.ack_timeout, self._ack_timeout, target=self.node, kind="ack_timeout")

    def _ack_timeout(self) -> None:
        self._ack_timer = None
        if self.attempts >= self.cfg.retry_limit:
            self._complete(False)
            return
        self.cw = min(2 * (self.cw + 1) - 1, self.cfg.cw_max)
        self._start_contention()

    def _complete(self, success: bool) -> None:
        frame = self.queue.popleft()
        self.cw = self.cfg.cw_min
        self.attempts = 0
        self.state = "idle"
        if self.upper is not None:
            if success:
                self.upper.mac_tx_done(frame.packet, frame.dst)
            else:
                self.drops_retry += 1
                ghost = getattr(frame.packet, "hops_taken", 0) > frame.hop
                self.upper.mac_link_failure(frame.packet, frame.dst, ghost)
        if self.queue and self.state == "idle":
            self._start_contention()  # post-transmission backoff

    # -- reception ---------------------------------------------------------

    def on_frame(self, frame: Frame, sender: int, power: float) -> None:
        if frame.kind == "ack":
            if frame.dst != self.node:
                return
            if self.state == "wait_ack" and self.queue and self.queue[0].seq == frame.seq:
                self.sched.cancel(self._ack_timer)
                self._ack_timer = None
                if self.stats is not None:
                    self.stats.mac_frame(self.sched.clock, self.cfg.ack_frame * 8, False)
                self._complete(True)
            return
        if frame.is_broadcast:
            self._account(frame)
            if self.upper is not None:
                self.upper.mac_receive(frame.packet, frame.src)
            return
        if frame.dst != self.node:
            return
        self.sched.after(self.cfg.sifs, self._send_ack, Frame("ack", self.node, frame.src, frame.seq), target=self.node, kind="ack")
        if self._last_seq.get(frame.src) == frame.seq:
            return  # retransmission after a lost ACK
        self._last_seq[frame.src] = frame.seq
        self._account(frame)
        if self.upper is not None:
            self.upper.mac_receive(frame.packet, frame.src)

    def _account(self, frame: Frame) -> None:
        if self.stats is not None:
            control = getattr(frame.packet, "is_control", False)
            self.stats.mac_frame(self.sched.clock, (frame.size + self.cfg.mac_header) * 8, control)

    def _send_ack(self, ack: Frame) -> None:
        if self.radio.transmitting:
            return
        self._sending_ack = True
        self.channel.transmit(self.node, ack, self.cfg.ack_duration)
