"""Propagation, reception thresholds and the shared radio channel."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .siw_design import SPEED_OF_LIGHT, AntennaSpec, Pattern

# classic 250 m two-ray range at 0.2818 W with 1.5 m antennas
DEFAULT_TX_POWER_W = 0.28183815
DEFAULT_RX_SENSITIVITY_W = 3.652e-10
DEFAULT_ANTENNA_HEIGHT_M = 1.5


class PropagationModel(str, enum.Enum):
    FREE_SPACE = "free_space"
    TWO_RAY = "two_ray_with_crossover"


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class RadioConfig:
    tx_power: float = DEFAULT_TX_POWER_W
    antenna: AntennaSpec = field(default_factory=lambda: AntennaSpec(pattern=Pattern.ISOTROPIC_GAIN))
    rx_sensitivity: float = DEFAULT_RX_SENSITIVITY_W
    antenna_height: float = DEFAULT_ANTENNA_HEIGHT_M
    model: PropagationModel = PropagationModel.TWO_RAY
    frequency: Optional[float] = None  # Hz; defaults to antenna.f0_hz
    capture: bool = False
    capture_threshold_db: float = 10.0

    def __post_init__(self):
        if self.frequency is None:
            object.__setattr__(self, "frequency", self.antenna.f0_hz)
        object.__setattr__(self, "model", PropagationModel(self.model))
        if not self.tx_power > 0:
            raise ValueError("tx_power must be > 0")
        if not self.rx_sensitivity > 0:
            raise ValueError("rx_sensitivity must be > 0")
        if not self.frequency > 0:
            raise ValueError("frequency must be > 0")
        if not self.antenna_height > 0:
            raise ValueError("antenna_height must be > 0")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def crossover_distance(self) -> float:
        h = self.antenna_height
        return 4 * math.pi * h * h / self.wavelength

    @property
    def gains(self) -> tuple:
        g = self.antenna.gain_toward(0.0)
        return g, g


def free_space_path_loss_db(distance: float, frequency: float) -> float:
    return 20 * math.log10(4 * math.pi * distance * frequency / SPEED_OF_LIGHT)


def rx_power(tx: RadioConfig, distance: float, gains: Optional[tuple] = None) -> float:
    """Received power (W) at ``distance`` m for antenna gains (dBi, dBi)."""
    if not distance > 0:
        raise ValueError(f"distance must be > 0, got {distance}")
    gt, gr = tx.gains if gains is None else gains
    g = db_to_linear(gt + gr)
    lam = tx.wavelength
    if tx.model is PropagationModel.TWO_RAY and distance > tx.crossover_distance:
        h = tx.antenna_height
        return tx.tx_power * g * h * h * h * h / distance**4
    return tx.tx_power * g * (lam / (4 * math.pi * distance)) ** 2


def comm_range(cfg: RadioConfig, gains: Optional[tuple] = None) -> float:
    """Largest distance (m) at which rx_power reaches the sensitivity."""
    gt, gr = cfg.gains if gains is None else gains
    pg = cfg.tx_power * db_to_linear(gt + gr) / cfg.rx_sensitivity
    if cfg.model is PropagationModel.TWO_RAY:
        h = cfg.antenna_height
        d = (pg * h**4) ** 0.25
        if d > cfg.crossover_distance:
            return d
    return cfg.wavelength / (4 * math.pi) * math.sqrt(pg)


def deliverable_at(cfg: RadioConfig, distance: float, gains: Optional[tuple] = None) -> tuple:
    """(deliverable, rx power W) for a link of the given length."""
    # co-located antennas: near field is ignored
    pr = rx_power(cfg, max(distance, 1e-6), gains)
    return pr >= cfg.rx_sensitivity, pr


def deliverable(tx_node: int, rx_node: int, t: float, state) -> tuple:
    """(deliverable, rx power W) between two nodes at time ``t``.

    ``state`` supplies ``position(node, t)`` and ``radio`` (a RadioConfig).
    """
    x0, y0 = state.position(tx_node, t)
    x1, y1 = state.position(rx_node, t)
    return deliverable_at(state.radio, math.hypot(x1 - x0, y1 - y0))


@dataclass
class Reception:
    frame: object
    sender: int
    power: float
    end: float
    corrupted: bool = False


class Radio:
    """Per-node transceiver state on the shared channel."""

    __slots__ = ("node", "transmitting", "receptions", "listener")

    def __init__(self, node: int):
        self.node = node
        self.transmitting = False
        self.receptions: list[Reception] = []
        self.listener = None  # MAC: on_medium_busy / on_medium_idle / on_frame / on_tx_end

    @property
    def busy(self) -> bool:
        return self.transmitting or bool(self.receptions)


class Channel:
    """Broadcast medium: half duplex, no capture by default, no fading.

    A frame reaches every radio whose received power is at or above the
    sensitivity; overlapping receptions at one radio destroy each other.
    Radios sense the medium with the same threshold.
    """

    def __init__(self, scheduler, radio: RadioConfig, position):
        self.sched = scheduler
        self.radio = radio
        self.position = position  # (node, t) -> (x, y)
        self.radios: dict[int, Radio] = {}
        self._gain = db_to_linear(sum(radio.gains))
        self.collisions = 0
        self.frames_sent = 0

    def attach(self, node: int) -> Radio:
        r = Radio(node)
        self.radios[node] = r
        return r

    def neighbors(self, node: int, t: Optional[float] = None) -> list:
        t = self.sched.clock if t is None else t
        x0, y0 = self.position(node, t)
        out = []
        for other in self.radios:
            if other == node:
                continue
            x1, y1 = self.position(other, t)
            if deliverable_at(self.radio, math.hypot(x1 - x0, y1 - y0))[0]:
                out.append(other)
        return out

    def transmit(self, sender: int, frame, duration: float) -> None:
        now = self.sched.clock
        tx_radio = self.radios[sender]
        assert not tx_radio.transmitting, f"node {sender} already transmitting"
        self.frames_sent += 1
        was_busy = tx_radio.busy
        tx_radio.transmitting = True
        for rec in tx_radio.receptions:
            rec.corrupted = True  # half duplex
        if not was_busy:
            tx_radio.listener.on_medium_busy()

        cfg = self.radio
        x0, y0 = self.position(sender, now)
        end = now + duration
        touched = []
        for node, r in self.radios.items():
            if node == sender:
                continue
            x1, y1 = self.position(node, now)
            pr = rx_power(cfg, max(math.hypot(x1 - x0, y1 - y0), 1e-6), (0.0, 0.0)) * self._gain
            if pr < cfg.rx_sensitivity:
                continue
            rec = Reception(frame, sender, pr, end, corrupted=r.transmitting)
            if r.receptions:
                self._overlap(r, rec)
            was_idle = not r.busy
            r.receptions.append(rec)
            touched.append((r, rec))
            if was_idle:
                r.listener.on_medium_busy()
        self.sched.at(end, self._end, (sender, touched), kind="tx_end")

    def _overlap(self, r: Radio, new: Reception) -> None:
        cfg = self.radio
        if cfg.capture:
            strongest = max(rec.power for rec in r.receptions)
            margin = linear_to_db(new.power) - linear_to_db(strongest)
            if margin <= -cfg.capture_threshold_db:
                new.corrupted = True
                self.collisions += 1
                return
            if margin >= cfg.capture_threshold_db:
                for rec in r.receptions:
                    rec.corrupted = True
                self.collisions += 1
                return
        for rec in r.receptions:
            rec.corrupted = True
        new.corrupted = True
        self.collisions += 1

    def _end(self, args) -> None:
        sender, touched = args
        tx_radio = self.radios[sender]
        tx_radio.transmitting = False
        tx_radio.listener.on_tx_end(self.sched.clock)
        if not tx_radio.busy:
            tx_radio.listener.on_medium_idle()
        for r, rec in touched:
            r.receptions.remove(rec)
            if not rec.corrupted:
                r.listener.on_frame(rec.frame, rec.sender, rec.power)
            if not r.busy:
                r.listener.on_medium_idle()
