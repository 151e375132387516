"""Closed-form design of the SIW cavity, its via walls and the meander slot.

Inputs and outputs of the public functions use GHz and mm; the dataclasses
store frequencies in Hz and lengths in mm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, NamedTuple, Optional, Sequence

SPEED_OF_LIGHT = 299_792_458.0  # m/s

GHZ = 1e9
MM = 1e-3

# d/dp and d/lambda0 bounds for via walls to behave like a solid wall
MIN_DIAMETER_PITCH_RATIO = 0.5
MAX_DIAMETER_WAVELENGTH_RATIO = 0.1

DEFAULT_VIA_DIAMETER_MM = 1.0
DEFAULT_VIA_PITCH_MM = 1.9


class ConstraintViolation(ValueError):
    """A via wall breaks one of the SIW geometry rules.

    ``constraint`` names the rule: ``"pitch"`` for d/dp and ``"diameter"``
    for d/lambda0.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(message)
        self.constraint = constraint


@dataclass(frozen=True)
class SubstrateSpec:
    eps_r: float
    tan_delta: float = 0.0
    h: float = 1.575  # mm

    def __post_init__(self):
        if not self.eps_r >= 1:
            raise ValueError(f"eps_r must be >= 1, got {self.eps_r}")
        if not self.tan_delta >= 0:
            raise ValueError(f"tan_delta must be >= 0, got {self.tan_delta}")
        if not self.h > 0:
            raise ValueError(f"substrate thickness must be > 0, got {self.h}")


DUROID_5880 = SubstrateSpec(eps_r=2.2, tan_delta=0.0009, h=1.575)


@dataclass(frozen=True)
class CavityDesign:
    a: float  # width, mm
    d_len: float  # length, mm
    substrate: SubstrateSpec
    f0_hz: float  # TE101 resonance
    fc_hz: float  # TE10 cutoff of the equivalent guide
    beta: float = math.nan  # rad/m at f0
    guided_wavelength: float = math.nan  # mm

    @property
    def f0_ghz(self) -> float:
        return self.f0_hz / GHZ

    @property
    def fc_ghz(self) -> float:
        return self.fc_hz / GHZ


class ViaLayout(NamedTuple):
    via_diameter: float
    pitch: float
    positions: tuple
    diameter_pitch_ratio: float
    diameter_wavelength_ratio: float


class SlotAxis(str, enum.Enum):
    LONGITUDINAL = "longitudinal"
    TRANSVERSE = "transverse"


@dataclass(frozen=True)
class MeanderSlot:
    total_length: float
    long_section: float
    short_section: float
    slot_width: float
    segments: tuple = ()


class Pattern(str, enum.Enum):
    ISOTROPIC_GAIN = "isotropic_gain"
    HEMISPHERIC = "hemispheric"


@dataclass(frozen=True)
class AntennaSpec:
    f0_hz: float = 2.398e9
    bandwidth_hz: float = 20e6
    gain_dbi: float = 4.0
    pattern: Pattern = Pattern.HEMISPHERIC
    # applied above the antenna plane by the hemispheric pattern
    back_attenuation_db: float = 0.0

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be > 0")
        if not math.isfinite(self.gain_dbi):
            raise ValueError("gain must be finite")
        if not self.f0_hz > 0:
            raise ValueError("frequency must be > 0")
        object.__setattr__(self, "pattern", Pattern(self.pattern))

    def gain_toward(self, elevation_rad: float = 0.0) -> float:
        """Gain in dBi toward a direction at the given elevation.

        Negative elevation is below the antenna plane, where the cavity-backed
        slot radiates. The plane itself counts as below.
        """
        if self.pattern is Pattern.HEMISPHERIC and elevation_rad > 0:
            return self.gain_dbi - self.back_attenuation_db
        return self.gain_dbi


def free_space_wavelength_mm(f_ghz: float) -> float:
    return SPEED_OF_LIGHT / (f_ghz * GHZ) / MM


def cutoff_te10(a: float, eps_r: float) -> float:
    """TE10 cutoff (GHz) of a dielectric-filled guide of width ``a`` mm."""
    if not a > 0:
        raise ValueError(f"width must be > 0, got {a}")
    if not eps_r >= 1:
        raise ValueError(f"eps_r must be >= 1, got {eps_r}")
    return SPEED_OF_LIGHT / (2 * a * MM * math.sqrt(eps_r)) / GHZ


def resonant_freq(a: float, d_len: float, eps_r: float, mode=(1, 0, 1)) -> float:
    """Resonance (GHz) of mode TE_m0l in a thin rectangular cavity."""
    m, n, l = mode
    if n != 0:
        raise ValueError("only TE_m0l modes exist in a thin cavity")
    if m < 0 or l < 0 or (m == 0 and l == 0):
        raise ValueError(f"invalid mode indices {mode}")
    if not (a > 0 and d_len > 0):
        raise ValueError("cavity dimensions must be > 0")
    if not eps_r >= 1:
        raise ValueError(f"eps_r must be >= 1, got {eps_r}")
    k = math.hypot(m / (a * MM), l / (d_len * MM))
    return SPEED_OF_LIGHT / (2 * math.sqrt(eps_r)) * k / GHZ


def siw_effective_width(width: float, via_diameter: float, pitch: float) -> float:
    """Equivalent solid-wall width of a via-walled guide (all mm)."""
    return width - via_diameter**2 / (0.95 * pitch)


def design_cavity(
    f0: float,
    delta: float,
    substrate: SubstrateSpec = DUROID_5880,
    width_correction: Optional[Callable[[float], float]] = None,
) -> CavityDesign:
    """Size a cavity resonating at ``f0`` in TE101 with cutoff ``f0 - delta``.

    The width follows from the TE10 cutoff, the length is half the guided
    wavelength at ``f0``. ``width_correction`` maps the ideal width to the
    physical one (e.g. to compensate via-wall narrowing); off by default.
    """
    if not f0 > 0:
        raise ValueError(f"f0 must be > 0, got {f0}")
    if not 0 < delta < f0:
        raise ValueError(f"delta must satisfy 0 < delta < f0, got {delta}")
    fc = f0 - delta
    sqrt_er = math.sqrt(substrate.eps_r)
    a_m = SPEED_OF_LIGHT / (2 * fc * GHZ * sqrt_er)
    k = 2 * math.pi * f0 * GHZ * sqrt_er / SPEED_OF_LIGHT
    beta_sq = k**2 - (math.pi / a_m) ** 2
    assert beta_sq > 0, "f0 above cutoff implies a propagating TE10 mode"
    beta = math.sqrt(beta_sq)
    guided = 2 * math.pi / beta
    a = a_m / MM
    if width_correction is not None:
        a = width_correction(a)
    return CavityDesign(
        a=a,
        d_len=guided / 2 / MM,
        substrate=substrate,
        f0_hz=f0 * GHZ,
        fc_hz=fc * GHZ,
        beta=beta,
        guided_wavelength=guided / MM,
    )


def square_cavity_delta(f0: float) -> float:
    """The f0 - fc separation at which design_cavity returns a square cavity."""
    return f0 * (1 - 1 / math.sqrt(2))


class ModeProximity(NamedTuple):
    delta: float  # GHz
    mode: str  # nearest mode above TE101
    spacing: float  # GHz
    frequency: float  # GHz, resonance of ``mode``
    tied: tuple = ()  # every mode within 1e-9 relative of ``frequency``


def mode_id(m: int, l: int) -> str:
    return f"TE{m}0{l}"


def cavity_modes(cavity: CavityDesign, max_index: int = 4) -> list:
    """(mode id, GHz) for TE_m0l with m, l in 1..max_index, ascending."""
    modes = []
    for m in range(1, max_index + 1):
        for l in range(1, max_index + 1):
            f = resonant_freq(cavity.a, cavity.d_len, cavity.substrate.eps_r, (m, 0, l))
            modes.append((mode_id(m, l), f))
    modes.sort(key=lambda mf: (mf[1], mf[0]))
    return modes


def mode_chart(
    f0: float, delta_range: Sequence[float], substrate: SubstrateSpec = DUROID_5880
) -> list:
    """Nearest higher mode and its spacing from f0, for each f0 - fc value.

    f0 stays fixed; only the cutoff (hence the cavity aspect) moves.
    """
    rows = []
    for delta in delta_range:
        cavity = design_cavity(f0, delta, substrate)
        above = [(mid, f) for mid, f in cavity_modes(cavity) if f > f0 * (1 + 1e-9)]
        mid, f_next = above[0]
        tied = tuple(m for m, f in above if abs(f - f_next) <= 1e-9 * f_next)
        rows.append(ModeProximity(delta, mid, f_next - f0, f_next, tied))
    return rows


def check_via_constraints(via_diameter: float, pitch: float, f0: float) -> tuple:
    """Return (d/dp, d/lambda0) or raise ConstraintViolation."""
    if not (via_diameter > 0 and pitch > 0):
        raise ValueError("via diameter and pitch must be > 0")
    ratio_pitch = via_diameter / pitch
    ratio_lambda = via_diameter / free_space_wavelength_mm(f0)
    if ratio_pitch < MIN_DIAMETER_PITCH_RATIO:
        raise ConstraintViolation(
            "pitch",
            f"via diameter/pitch = {ratio_pitch:.3f} < {MIN_DIAMETER_PITCH_RATIO}",
        )
    if ratio_lambda > MAX_DIAMETER_WAVELENGTH_RATIO:
        raise ConstraintViolation(
            "diameter",
            f"via diameter/lambda0 = {ratio_lambda:.4f} > {MAX_DIAMETER_WAVELENGTH_RATIO}",
        )
    return ratio_pitch, ratio_lambda


def _wall(start, end, pitch):
    # via centres from ``start`` toward ``end``; ``end`` belongs to the next wall
    (x0, y0), (x1, y1) = start, end
    length = math.hypot(x1 - x0, y1 - y0)
    ux, uy = (x1 - x0) / length, (y1 - y0) / length
    n = int(length / pitch + 1e-9)
    if n * pitch >= length - 1e-9:
        n -= 1  # the corner itself is placed by the next wall
    return [(x0 + ux * k * pitch, y0 + uy * k * pitch) for k in range(n + 1)]


def synth_via_wall(
    cavity: CavityDesign,
    via_diameter: float = DEFAULT_VIA_DIAMETER_MM,
    pitch: float = DEFAULT_VIA_PITCH_MM,
) -> ViaLayout:
    ratio_pitch, ratio_lambda = check_via_constraints(via_diameter, pitch, cavity.f0_ghz)
    a, d = cavity.a, cavity.d_len
    corners = [(0.0, 0.0), (a, 0.0), (a, d), (0.0, d)]
    positions = []
    for i in range(4):
        positions.extend(_wall(corners[i], corners[(i + 1) % 4], pitch))
    return ViaLayout(via_diameter, pitch, tuple(positions), ratio_pitch, ratio_lambda)


def design_meander(f0: float, eps_eff: float = DUROID_5880.eps_r) -> MeanderSlot:
    """Half-wave meander slot with lambda/16 and lambda/32 sections."""
    if not f0 > 0:
        raise ValueError(f"f0 must be > 0, got {f0}")
    if not eps_eff >= 1:
        raise ValueError(f"eps_eff must be >= 1, got {eps_eff}")
    wavelength = free_space_wavelength_mm(f0) / math.sqrt(eps_eff)
    total = wavelength / 2
    long_section = wavelength / 16
    short_section = wavelength / 32

    segments = []
    remaining = total
    use_long = True
    while remaining > total * 1e-12:
        nominal = long_section if use_long else short_section
        length = min(nominal, remaining)
        axis = SlotAxis.TRANSVERSE if use_long else SlotAxis.LONGITUDINAL
        segments.append((length, axis))
        remaining -= length
        use_long = not use_long
    return MeanderSlot(
        total_length=total,
        long_section=long_section,
        short_section=short_section,
        slot_width=long_section / 10,
        segments=tuple(segments),
    )


def export_antenna_spec(**overrides) -> AntennaSpec:
    """Radio-facing summary of the simulated antenna, fields overridable."""
    return replace(AntennaSpec(), **overrides)


# -- reference dimensions -----------------------------------------------------

TABLE1_RESOURCE = "table1_dimensions.txt"


def parse_dimensions(text: str) -> dict:
    dims = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'label value', got {line!r}")
        label, value = parts
        if label in dims:
            raise ValueError(f"line {lineno}: duplicate label {label}")
        dims[label] = float(value)
    return dims


def format_dimensions(dims: dict) -> str:
    return "".join(f"{label} {value:.15g}\n" for label, value in dims.items())


def table1_text() -> str:
    return resources.files("siwvanet.data").joinpath(TABLE1_RESOURCE).read_text("utf-8")


def load_reference_dimensions() -> dict:
    """Fabricated antenna dimensions (label -> mm) shipped with the package."""
    return parse_dimensions(table1_text())


# -- full design ---------------------------------------------------------------


@dataclass
class AntennaDesign:
    cavity: CavityDesign
    vias: ViaLayout
    meander: MeanderSlot
    antenna: AntennaSpec = field(default_factory=export_antenna_spec)

    def to_dict(self) -> dict:
        c = self.cavity
        return {
            "f0_hz": self.antenna.f0_hz,
            "bandwidth_hz": self.antenna.bandwidth_hz,
            "gain_dbi": self.antenna.gain_dbi,
            "pattern": self.antenna.pattern.value,
            "back_attenuation_db": self.antenna.back_attenuation_db,
            "cavity": {
                "a_mm": c.a,
                "d_mm": c.d_len,
                "f0_hz": c.f0_hz,
                "fc_hz": c.fc_hz,
                "eps_r": c.substrate.eps_r,
                "tan_delta": c.substrate.tan_delta,
                "h_mm": c.substrate.h,
            },
            "vias": {
                "diameter_mm": self.vias.via_diameter,
                "pitch_mm": self.vias.pitch,
                "d_over_pitch": self.vias.diameter_pitch_ratio,
                "d_over_lambda0": self.vias.diameter_wavelength_ratio,
                "positions_mm": [[round(x, 6), round(y, 6)] for x, y in self.vias.positions],
            },
            "meander": {
                "total_length_mm": self.meander.total_length,
                "long_section_mm": self.meander.long_section,
                "short_section_mm": self.meander.short_section,
                "slot_width_mm": self.meander.slot_width,
                "segments": [
                    {"length_mm": length, "axis": axis.value}
                    for length, axis in self.meander.segments
                ],
            },
        }


def design_antenna(
    f0: float = 2.4,
    delta: float = 0.7,
    substrate: SubstrateSpec = DUROID_5880,
    via_diameter: float = DEFAULT_VIA_DIAMETER_MM,
    pitch: float = DEFAULT_VIA_PITCH_MM,
    eps_eff: Optional[float] = None,
) -> AntennaDesign:
    cavity = design_cavity(f0, delta, substrate)
    vias = synth_via_wall(cavity, via_diameter, pitch)
    meander = design_meander(f0, substrate.eps_r if eps_eff is None else eps_eff)
    return AntennaDesign(cavity, vias, meander)


def antenna_spec_from_dict(data: dict) -> AntennaSpec:
    """Read the radio-facing fields of an antenna-spec file mapping."""
    return AntennaSpec(
        f0_hz=float(data["f0_hz"]),
        bandwidth_hz=float(data["bandwidth_hz"]),
        gain_dbi=float(data["gain_dbi"]),
        pattern=Pattern(data.get("pattern", Pattern.HEMISPHERIC.value)),
        back_attenuation_db=float(data.get("back_attenuation_db", 0.0)),
    )
