"""CBR sources, the per-packet ledger, windowed metrics and CSV output."""

from __future__ import annotations

import csv
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .aodv import DataPacket

DROP_CAUSES = ("no_route_buffer", "mac_retry", "mac_queue", "collision", "ttl")
METRICS_HEADER = ["t", "goodput_bps", "mac_throughput_bps", "sent", "delivered", "lost", "loss_pct", "mean_delay_s"]
GAPS_HEADER = ["start_s", "end_s", "duration_s"]
DEFAULT_GAP_THRESHOLD = 10  # missed intervals


@dataclass(frozen=True)
class CbrFlow:
    src: int
    dst: int
    start: float
    stop: float
    payload: int = 512  # bytes
    rate: float = 500e3  # b/s
    flow_id: int = 0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("flow rate must be > 0")
        if self.payload <= 0:
            raise ValueError("payload must be > 0")
        if not self.start < self.stop:
            raise ValueError("flow start must precede stop")
        if self.src == self.dst:
            raise ValueError("flow source and destination must differ")

    @property
    def interval(self) -> float:
        return self.payload * 8 / self.rate

    @property
    def packet_count(self) -> int:
        return math.floor((self.stop - self.start) / self.interval + 1e-9)

    def send_times(self):
        for k in range(self.packet_count):
            yield self.start + k * self.interval


def generate(flow: CbrFlow, scheduler, send, ttl: int = 32) -> int:
    """Schedule the flow's packets; ``send(packet)`` is called at each send time.

    Sends are chained one event at a time. Returns the number of packets the
    flow will emit.
    """
    n = flow.packet_count

    def emit(k):
        t = flow.start + k * flow.interval
        send(DataPacket(flow.flow_id, k, flow.src, flow.dst, flow.payload, t, ttl))
        if k + 1 < n:
            scheduler.at(flow.start + (k + 1) * flow.interval, emit, k + 1, target=flow.src, kind="cbr")

    if n > 0:
        scheduler.at(flow.start, emit, 0, target=flow.src, kind="cbr")
    return n


@dataclass
class WindowRecord:
    t: float
    goodput_bps: float
    mac_throughput_bps: float
    sent: int
    delivered: int
    lost: int
    loss_pct: float
    mean_delay_s: Optional[float]
    control_bps: float = 0.0


@dataclass(frozen=True)
class Gap:
    start: float
    end: float
    flow: int = 0

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class MetricsSeries:
    window: float
    records: list = field(default_factory=list)
    gaps: list = field(default_factory=list)


class MetricsLedger:
    """Terminal fate of every data packet, plus MAC-level byte counts."""

    def __init__(self):
        self.sent: dict = {}  # key -> packet
        self.delivered: dict = {}  # key -> delivery time
        self.dropped: dict = {}  # key -> (cause, time)
        self.mac_bits: list = []  # (t, bits, control)
        self.flows: dict = {}

    def add_flow(self, flow: CbrFlow) -> None:
        self.flows[flow.flow_id] = flow

    def record_send(self, packet: DataPacket) -> None:
        assert packet.key not in self.sent, f"packet {packet.key} sent twice"
        self.sent[packet.key] = packet

    def _terminal(self, key) -> bool:
        return key in self.delivered or key in self.dropped

    def record_delivery(self, packet: DataPacket, t: float) -> None:
        key = packet.key
        assert key in self.sent, f"delivery of unknown packet {key}"
        assert not self._terminal(key), f"packet {key} recorded twice"
        assert t > packet.send_time, f"packet {key} delivered before it was sent"
        self.delivered[key] = t

    def record_drop(self, packet: DataPacket, cause: str, t: float) -> None:
        key = packet.key
        assert cause in DROP_CAUSES, f"unknown drop cause {cause}"
        assert key in self.sent, f"drop of unknown packet {key}"
        assert not self._terminal(key), f"packet {key} recorded twice"
        self.dropped[key] = (cause, t)

    def mac_frame(self, t: float, bits: int, control: bool) -> None:
        self.mac_bits.append((t, bits, control))

    @property
    def drops_by_cause(self) -> dict:
        counts = Counter(cause for cause, _ in self.dropped.values())
        return {c: counts.get(c, 0) for c in DROP_CAUSES}

    def in_flight_count(self) -> int:
        return len(self.sent) - len(self.delivered) - len(self.dropped)

    # -- aggregation -------------------------------------------------------

    def finalize(
        self, duration: float, window: float = 1.0, gap_threshold: int = DEFAULT_GAP_THRESHOLD
    ) -> tuple:
        """Windowed series and run summary."""
        if not window > 0:
            raise ValueError("window must be > 0")
        n = math.ceil(duration / window - 1e-9) if duration > 0 else 0
        rows = [[0, 0, 0, 0, 0, 0, 0.0, 0] for _ in range(n)]

        def idx(t):
            return min(max(int(t / window), 0), n - 1)

        for pkt in self.sent.values():
            if n:
                rows[idx(pkt.send_time)][0] += 1
        for key, t in self.delivered.items():
            if n:
                r = rows[idx(t)]
                r[1] += 1
                r[2] += self.sent[key].payload * 8
                r[6] += t - self.sent[key].send_time
        for cause, t in self.dropped.values():
            if n:
                rows[idx(t)][3] += 1
        for t, bits, control in self.mac_bits:
            if n:
                r = rows[idx(t)]
                r[4] += bits
                if control:
                    r[5] += bits
        records = []
        for k, (sent, delivered, good_bits, lost, mac, ctrl, delay_sum, _) in enumerate(rows):
            terminal = delivered + lost
            records.append(
                WindowRecord(
                    t=k * window,
                    goodput_bps=good_bits / window,
                    mac_throughput_bps=mac / window,
                    sent=sent,
                    delivered=delivered,
                    lost=lost,
                    loss_pct=100.0 * lost / terminal if terminal else 0.0,
                    mean_delay_s=delay_sum / delivered if delivered else None,
                    control_bps=ctrl / window,
                )
            )
        gaps = self.detect_gaps(duration, gap_threshold)
        series = MetricsSeries(window, records, gaps)
        return series, self.summary(gaps)

    def detect_gaps(self, duration: float, threshold: int = DEFAULT_GAP_THRESHOLD) -> list:
        """Periods where at least ``threshold`` consecutive expected packets of
        a flow went undelivered, measured between deliveries.

        The flow start counts as a delivery; a trailing outage ends at the
        flow stop (or run end).
        """
        by_flow: dict = {}
        for key, t in self.delivered.items():
            by_flow.setdefault(key[0], []).append(t)
        gaps = []
        for fid, flow in sorted(self.flows.items()):
            prev = flow.start
            for t in sorted(by_flow.get(fid, [])):
                if round((t - prev) / flow.interval) - 1 >= threshold:
                    gaps.append(Gap(prev, t, fid))
                prev = t
            end = min(flow.stop, duration)
            if end > prev and round((end - prev) / flow.interval) - 1 >= threshold:
                gaps.append(Gap(prev, end, fid))
        gaps.sort(key=lambda g: (g.start, g.flow))
        return gaps

    def summary(self, gaps: Optional[list] = None) -> dict:
        delays = [t - self.sent[k].send_time for k, t in self.delivered.items()]
        sent = len(self.sent)
        gaps = self.detect_gaps(math.inf) if gaps is None else gaps
        first = {}
        for key, t in self.delivered.items():
            fid = key[0]
            if fid not in first or t < first[fid]:
                first[fid] = t
        return {
            "sent": sent,
            "delivered": len(self.delivered),
            "dropped": len(self.dropped),
            "in_flight": self.in_flight_count(),
            "pdr": len(self.delivered) / sent if sent else 0.0,
            "mean_delay_s": statistics.fmean(delays) if delays else None,
            "drops_by_cause": self.drops_by_cause,
            "reconnection_gaps_s": [g.duration for g in gaps],
            "first_delivery_latency_s": {
                fid: first[fid] - flow.start for fid, flow in sorted(self.flows.items()) if fid in first
            },
        }


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return f"{v:.6f}"


def write_csv(series: MetricsSeries, path, gaps_path=None) -> tuple:
    """Write the windowed series and the gap list (``gaps.csv`` next to it)."""
    path = Path(path)
    gaps_path = Path(gaps_path) if gaps_path is not None else path.with_name("gaps.csv")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in series.records:
            w.writerow(
                [
                    _fmt(r.t), _fmt(r.goodput_bps), _fmt(r.mac_throughput_bps), r.sent,
                    r.delivered, r.lost, _fmt(r.loss_pct), _fmt(r.mean_delay_s),
                ]
            )
    with gaps_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAPS_HEADER)
        for g in series.gaps:
            w.writerow([_fmt(g.start), _fmt(g.end), _fmt(g.duration)])
    return path, gaps_path


def read_metrics_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
