"""Node positions over time: waypoint traces and a street-grid generator.

Trace text format::

    bounds 820 620
    # t node_id x y
    0.0 0 0 0
    10.0 0 100 0
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass
from typing import Optional

DEFAULT_SPEED_RANGE = (8.0, 14.0)  # m/s, urban 30-50 km/h
_EPS = 1e-9


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class NodeTrack:
    times: tuple
    xs: tuple
    ys: tuple

    def position(self, t: float) -> tuple:
        times = self.times
        if t <= times[0]:
            return self.xs[0], self.ys[0]
        if t >= times[-1]:
            return self.xs[-1], self.ys[-1]
        i = bisect.bisect_right(times, t)
        t0, t1 = times[i - 1], times[i]
        if t == t0:
            return self.xs[i - 1], self.ys[i - 1]
        f = (t - t0) / (t1 - t0)
        return (
            self.xs[i - 1] + f * (self.xs[i] - self.xs[i - 1]),
            self.ys[i - 1] + f * (self.ys[i] - self.ys[i - 1]),
        )

    def speeds(self) -> list:
        return [
            math.hypot(self.xs[i + 1] - self.xs[i], self.ys[i + 1] - self.ys[i])
            / (self.times[i + 1] - self.times[i])
            for i in range(len(self.times) - 1)
        ]


@dataclass(frozen=True)
class WaypointTrace:
    width: float
    height: float
    tracks: dict  # node id -> NodeTrack

    @property
    def nodes(self) -> list:
        return sorted(self.tracks)

    def position(self, node: int, t: float) -> tuple:
        try:
            track = self.tracks[node]
        except KeyError:
            raise KeyError(f"unknown node {node}") from None
        return track.position(t)


def validate_trace(trace: WaypointTrace, max_speed: Optional[float] = None) -> None:
    for node, track in trace.tracks.items():
        if not (len(track.times) == len(track.xs) == len(track.ys)) or not track.times:
            raise TraceError(f"node {node}: empty or ragged track")
        for i in range(1, len(track.times)):
            if not track.times[i] > track.times[i - 1]:
                raise TraceError(f"node {node}: times must strictly increase at t={track.times[i]}")
        for x, y in zip(track.xs, track.ys):
            if not (-_EPS <= x <= trace.width + _EPS and -_EPS <= y <= trace.height + _EPS):
                raise TraceError(f"node {node}: point ({x}, {y}) outside bounds {trace.width}x{trace.height}")
        if max_speed is not None:
            for v in track.speeds():
                if v > max_speed * (1 + 1e-9):
                    raise TraceError(f"node {node}: speed {v:.3f} m/s exceeds {max_speed}")


def position(trace: WaypointTrace, node: int, t: float) -> tuple:
    return trace.position(node, t)


def load_trace(text: str, max_speed: Optional[float] = None) -> WaypointTrace:
    width = height = math.inf
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "bounds":
                if len(parts) != 3:
                    raise ValueError("expected 'bounds W H'")
                width, height = float(parts[1]), float(parts[2])
                if not (width > 0 and height > 0):
                    raise ValueError("bounds must be positive")
                continue
            if len(parts) != 4:
                raise ValueError(f"expected 't node_id x y', got {len(parts)} fields")
            t, node, x, y = float(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
        pts = raw.setdefault(node, [])
        if pts and not t > pts[-1][0]:
            raise TraceError(f"line {lineno}: time {t} does not increase for node {node}")
        pts.append((t, x, y))
    tracks = {
        node: NodeTrack(tuple(p[0] for p in pts), tuple(p[1] for p in pts), tuple(p[2] for p in pts))
        for node, pts in sorted(raw.items())
    }
    trace = WaypointTrace(width, height, tracks)
    validate_trace(trace, max_speed)
    return trace


def dump_trace(trace: WaypointTrace) -> str:
    lines = [f"bounds {trace.width!r} {trace.height!r}", "# t node_id x y"]
    for node in trace.nodes:
        tr = trace.tracks[node]
        for t, x, y in zip(tr.times, tr.xs, tr.ys):
            lines.append(f"{t!r} {node} {x!r} {y!r}")
    return "\n".join(lines) + "\n"


def static_trace(points: dict, width: float, height: float) -> WaypointTrace:
    """Trace of nodes that never move; ``points`` maps node id -> (x, y)."""
    tracks = {n: NodeTrack((0.0,), (float(x),), (float(y),)) for n, (x, y) in sorted(points.items())}
    trace = WaypointTrace(float(width), float(height), tracks)
    validate_trace(trace)
    return trace


@dataclass(frozen=True)
class GridMap:
    width: float = 820.0
    height: float = 620.0
    spacing: float = 100.0  # nominal; streets are spread evenly to tile the bounds
    speed_limit: float = 14.0  # m/s

    def __post_init__(self):
        if not (self.spacing > 0 and self.width > 0 and self.height > 0):
            raise ValueError("grid dimensions and spacing must be > 0")

    @property
    def xs(self) -> list:
        n = max(1, round(self.width / self.spacing))
        return [self.width * i / n for i in range(n + 1)]

    @property
    def ys(self) -> list:
        n = max(1, round(self.height / self.spacing))
        return [self.height * j / n for j in range(n + 1)]

    @property
    def intersections(self) -> list:
        return [(x, y) for x in self.xs for y in self.ys]

    def on_street(self, x: float, y: float, tol: float = 1e-6) -> bool:
        on_v = any(abs(x - sx) <= tol for sx in self.xs) and -tol <= y <= self.height + tol
        on_h = any(abs(y - sy) <= tol for sy in self.ys) and -tol <= x <= self.width + tol
        return on_v or on_h


_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def generate_manhattan(
    grid: GridMap,
    n_nodes: int,
    duration: float,
    seed: int,
    speed_range: tuple = DEFAULT_SPEED_RANGE,
    pause_fraction: float = 0.3,
    max_pause: float = 30.0,
    rng: Optional[random.Random] = None,
) -> WaypointTrace:
    """Vehicles driving the street grid with random turns and signal stops.

    At each intersection a vehicle stops for U(0, max_pause] s with
    probability ``pause_fraction``, then takes a random street leaving the
    intersection (no U-turns unless at a dead end).
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if not duration > 0:
        raise ValueError("duration must be > 0")
    lo, hi = speed_range
    if not 0 < lo <= hi:
        raise ValueError(f"invalid speed range {speed_range}")
    rng = rng or random.Random(f"{seed}/mobility")
    xs, ys = grid.xs, grid.ys
    tracks = {}
    for node in range(n_nodes):
        i, j = rng.randrange(len(xs)), rng.randrange(len(ys))
        t = 0.0
        pts = [(t, xs[i], ys[j])]
        heading = None
        while t < duration:
            options = [
                (di, dj)
                for di, dj in _DIRECTIONS
                if 0 <= i + di < len(xs) and 0 <= j + dj < len(ys)
            ]
            if heading is not None and len(options) > 1:
                options = [o for o in options if o != (-heading[0], -heading[1])]
            di, dj = options[rng.randrange(len(options))]
            speed = min(rng.uniform(lo, hi), grid.speed_limit) if lo != hi else min(lo, grid.speed_limit)
            ni, nj = i + di, j + dj
            dist = math.hypot(xs[ni] - xs[i], ys[nj] - ys[j])
            t_arrive = t + dist / speed
            if t_arrive >= duration:
                f = (duration - t) / (t_arrive - t)
                pts.append((duration, xs[i] + f * (xs[ni] - xs[i]), ys[j] + f * (ys[nj] - ys[j])))
                break
            i, j, t, heading = ni, nj, t_arrive, (di, dj)
            pts.append((t, xs[i], ys[j]))
            if rng.random() < pause_fraction:
                pause = max_pause * (1.0 - rng.random())  # (0, max_pause]
                t = min(t + pause, duration)
                pts.append((t, xs[i], ys[j]))
        tracks[node] = NodeTrack(tuple(p[0] for p in pts), tuple(p[1] for p in pts), tuple(p[2] for p in pts))
    trace = WaypointTrace(grid.width, grid.height, tracks)
    validate_trace(trace, max_speed=grid.speed_limit)
    return trace
