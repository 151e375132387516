"""Scenario configuration: YAML text validated by pydantic models.

Relative file references (trace, antenna spec) resolve against the
directory of the config file.
"""

from __future__ import annotations

import copy
import random
from pathlib import Path
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import siw_design
from .aodv import AodvConfig
from .mac import MacConfig
from .mobility import GridMap, generate_manhattan, load_trace
from .network import Simulation
from .phy import PropagationModel, RadioConfig
from .traffic import CbrFlow


class ConfigError(ValueError):
    """Invalid scenario; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Bounds(_Section):
    width_m: float = Field(820.0, gt=0)
    height_m: float = Field(620.0, gt=0)


class ManhattanParams(_Section):
    n_nodes: int = Field(15, ge=1)
    street_spacing_m: float = Field(100.0, gt=0)
    speed_min_mps: float = Field(8.0, gt=0)
    speed_max_mps: float = Field(14.0, gt=0)
    speed_limit_mps: float = Field(14.0, gt=0)
    pause_fraction: float = Field(0.3, ge=0, le=1)
    max_pause_s: float = Field(30.0, gt=0)

    @model_validator(mode="after")
    def _speeds(self):
        if self.speed_min_mps > self.speed_max_mps:
            raise ValueError("speed_min_mps must not exceed speed_max_mps")
        return self


class MobilitySection(_Section):
    trace: Optional[str] = None
    max_speed_mps: Optional[float] = Field(None, gt=0)
    manhattan: Optional[ManhattanParams] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.trace is None) == (self.manhattan is None):
            raise ValueError("give exactly one of 'trace' or 'manhattan'")
        return self


class AntennaSection(_Section):
    f0_hz: float = Field(2.398e9, gt=0)
    bandwidth_hz: float = Field(20e6, gt=0)
    gain_dbi: float = 4.0
    pattern: siw_design.Pattern = siw_design.Pattern.ISOTROPIC_GAIN
    back_attenuation_db: float = Field(0.0, ge=0)


class RadioSection(_Section):
    antenna_spec: Optional[str] = None
    antenna: Optional[AntennaSection] = None
    tx_power_w: float = Field(0.28183815, gt=0)
    sensitivity_w: float = Field(3.652e-10, gt=0)
    model: PropagationModel = PropagationModel.TWO_RAY
    antenna_height_m: float = Field(1.5, gt=0)
    frequency_hz: Optional[float] = Field(None, gt=0)
    capture: bool = False

    @model_validator(mode="after")
    def _antenna_source(self):
        if self.antenna_spec is not None and self.antenna is not None:
            raise ValueError("give at most one of 'antenna_spec' or 'antenna'")
        return self


class MacSection(_Section):
    queue_cap: int = Field(50, ge=1)
    retry_limit: int = Field(7, ge=1)
    rts_cts: bool = False

    @field_validator("rts_cts")
    @classmethod
    def _no_rts(cls, v):
        if v:
            raise ValueError("RTS/CTS is not modelled")
        return v


class RoutingSection(_Section):
    buffer_cap: int = Field(64, ge=1)
    active_route_timeout_s: float = Field(3.0, gt=0)
    hello_enabled: bool = False
    intermediate_reply: bool = True
    rreq_ttl: Optional[int] = Field(None, ge=1)


class FlowSection(_Section):
    src: Union[int, Literal["random"]] = "random"
    dst: Union[int, Literal["random"]] = "random"
    start_s: float = Field(0.0, ge=0)
    stop_s: float
    payload_bytes: int = Field(512, gt=0)
    rate_bps: float = Field(500e3, gt=0)

    @model_validator(mode="after")
    def _order(self):
        if not self.start_s < self.stop_s:
            raise ValueError("start_s must be < stop_s")
        if self.src == self.dst and self.src != "random":
            raise ValueError("src and dst must differ")
        return self


class ScenarioConfig(_Section):
    duration_s: float = Field(gt=0)
    seed: int = 0
    window_s: float = Field(1.0, gt=0)
    bounds: Bounds = Bounds()
    mobility: MobilitySection
    radio: RadioSection = RadioSection()
    mac: MacSection = MacSection()
    routing: RoutingSection = RoutingSection()
    flows: List[FlowSection] = []


def _field_path(loc) -> str:
    return ".".join(str(p) for p in loc)


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a mapping")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigError(_field_path(err["loc"]), err["msg"]) from None


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json", exclude_none=True), sort_keys=False)


PAPER_SCENARIO = {
    "duration_s": 150.0,
    "seed": 1,
    "window_s": 1.0,
    "bounds": {"width_m": 820.0, "height_m": 620.0},
    "mobility": {"manhattan": {"n_nodes": 15}},
    "radio": {
        "antenna": {"f0_hz": 2.398e9, "bandwidth_hz": 20e6, "gain_dbi": 4.0, "pattern": "isotropic_gain"},
        "tx_power_w": 0.28183815,
        "sensitivity_w": 3.652e-10,
        "model": "two_ray_with_crossover",
    },
    "mac": {"queue_cap": 50, "retry_limit": 7},
    "routing": {"buffer_cap": 64, "active_route_timeout_s": 3.0},
    "flows": [{"src": "random", "dst": "random", "start_s": 30.0, "stop_s": 150.0, "payload_bytes": 512, "rate_bps": 500000}],
}

PRESETS = {"paper_scenario": PAPER_SCENARIO}


def preset(name: str) -> ScenarioConfig:
    try:
        data = PRESETS[name]
    except KeyError:
        raise ConfigError("config", f"unknown preset {name!r}") from None
    return ScenarioConfig.model_validate(copy.deepcopy(data))


def load_config(ref: str) -> tuple:
    """(config, base directory) from a preset name or a YAML file path."""
    if ref in PRESETS:
        return preset(ref), Path.cwd()
    path = Path(ref)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {ref}")
    return parse_config(path.read_text("utf-8")), path.parent


def _resolve(base: Path, ref: str, field: str) -> Path:
    p = Path(ref)
    if not p.is_absolute():
        p = base / p
    if not p.is_file():
        raise ConfigError(field, f"file not found: {ref}")
    return p


def check_files(cfg: ScenarioConfig, base: Path) -> None:
    if cfg.mobility.trace is not None:
        _resolve(base, cfg.mobility.trace, "mobility.trace")
    if cfg.radio.antenna_spec is not None:
        _resolve(base, cfg.radio.antenna_spec, "radio.antenna_spec")


def build_antenna(cfg: ScenarioConfig, base: Path) -> siw_design.AntennaSpec:
    r = cfg.radio
    if r.antenna_spec is not None:
        path = _resolve(base, r.antenna_spec, "radio.antenna_spec")
        try:
            data = yaml.safe_load(path.read_text("utf-8"))
            return siw_design.antenna_spec_from_dict(data)
        except (KeyError, TypeError, ValueError, yaml.YAMLError) as exc:
            raise ConfigError("radio.antenna_spec", f"unreadable antenna spec: {exc}") from None
    a = r.antenna or AntennaSection()
    return siw_design.AntennaSpec(a.f0_hz, a.bandwidth_hz, a.gain_dbi, a.pattern, a.back_attenuation_db)


def build_simulation(cfg: ScenarioConfig, base: Path = Path("."), seed: Optional[int] = None) -> Simulation:
    """Validate every section and assemble a ready-to-run Simulation."""
    seed = cfg.seed if seed is None else seed
    check_files(cfg, base)
    w, h = cfg.bounds.width_m, cfg.bounds.height_m
    m = cfg.mobility
    if m.trace is not None:
        path = _resolve(base, m.trace, "mobility.trace")
        try:
            trace = load_trace(path.read_text("utf-8"), max_speed=m.max_speed_mps)
        except ValueError as exc:
            raise ConfigError("mobility.trace", str(exc)) from None
    else:
        p = m.manhattan
        grid = GridMap(w, h, p.street_spacing_m, p.speed_limit_mps)
        trace = generate_manhattan(
            grid, p.n_nodes, cfg.duration_s, seed,
            (p.speed_min_mps, p.speed_max_mps), p.pause_fraction, p.max_pause_s,
        )

    antenna = build_antenna(cfg, base)
    r = cfg.radio
    radio = RadioConfig(
        tx_power=r.tx_power_w, antenna=antenna, rx_sensitivity=r.sensitivity_w,
        antenna_height=r.antenna_height_m, model=r.model, frequency=r.frequency_hz, capture=r.capture,
    )
    mac = MacConfig(queue_cap=cfg.mac.queue_cap, retry_limit=cfg.mac.retry_limit)
    rt = cfg.routing
    routing = AodvConfig(
        active_route_timeout=rt.active_route_timeout_s, buffer_cap=rt.buffer_cap,
        hello_enabled=rt.hello_enabled, intermediate_reply=rt.intermediate_reply, rreq_ttl=rt.rreq_ttl,
    )

    nodes = trace.nodes
    rng = random.Random(f"{seed}/traffic")
    flows = []
    for i, f in enumerate(cfg.flows):
        field = f"flows.{i}"
        src = rng.choice(nodes) if f.src == "random" else f.src
        if f.dst == "random":
            others = [n for n in nodes if n != src]
            if not others:
                raise ConfigError(field, "need at least two nodes for a random destination")
            dst = rng.choice(others)
        else:
            dst = f.dst
        for name, node in (("src", src), ("dst", dst)):
            if node not in trace.tracks:
                raise ConfigError(f"{field}.{name}", f"node {node} is not in the mobility trace")
        if src == dst:
            raise ConfigError(field, "src and dst must differ")
        if f.stop_s > cfg.duration_s:
            raise ConfigError(f"{field}.stop_s", "flow outlives the simulation")
        flows.append(CbrFlow(src, dst, f.start_s, f.stop_s, f.payload_bytes, f.rate_bps, flow_id=i))
    return Simulation(trace, flows, cfg.duration_s, seed, radio, mac, routing)
