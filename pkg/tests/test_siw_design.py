import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siwvanet import siw_design as sd
from siwvanet.siw_design import (
    DUROID_5880,
    AntennaSpec,
    ConstraintViolation,
    Pattern,
    SlotAxis,
    SubstrateSpec,
)

C = 299_792_458.0
TABLE1_SIDE_MM = 59.550818


def cutoff_oracle(a_mm, eps_r):
    """TE10 cutoff written out in SI units, GHz."""
    return C / (2.0 * (a_mm / 1000.0) * math.sqrt(eps_r)) / 1e9


def cavity_oracle(f0_ghz, delta_ghz, eps_r):
    """Width and length from the guide dispersion relation, solved independently.

    beta = sqrt(k^2 - kc^2) with kc = 2*pi*fc*sqrt(eps_r)/c, so
    beta = 2*pi*sqrt(eps_r)/c * sqrt(f0^2 - fc^2) and d = lambda_g / 2 = pi / beta.
    """
    fc = (f0_ghz - delta_ghz) * 1e9
    f0 = f0_ghz * 1e9
    a = C / (2 * fc * math.sqrt(eps_r))
    beta = 2 * math.pi * math.sqrt(eps_r) / C * math.sqrt(f0**2 - fc**2)
    return a * 1000.0, math.pi / beta * 1000.0


class TestSubstrate:
    @pytest.mark.parametrize("kwargs", [{"eps_r": 0.5}, {"eps_r": 2.2, "tan_delta": -1e-3}, {"eps_r": 2.2, "h": 0.0}])
    def test_rejects_unphysical(self, kwargs):
        with pytest.raises(ValueError):
            SubstrateSpec(**kwargs)

    def test_duroid_values(self):
        assert DUROID_5880.eps_r == 2.2
        assert DUROID_5880.h == 1.575


class TestCutoff:
    def test_half_wavelength_guide(self):
        # a = lambda0 / 2 at 2.4 GHz, air filled
        a = C / 2.4e9 / 2 * 1000
        assert sd.cutoff_te10(a, 1.0) == pytest.approx(2.4, rel=1e-12)
        assert sd.cutoff_te10(62.5, 1.0) == pytest.approx(2.3983, abs=1e-4)

    def test_reference_width(self):
        fc = sd.cutoff_te10(TABLE1_SIDE_MM, 2.2)
        assert fc == pytest.approx(cutoff_oracle(TABLE1_SIDE_MM, 2.2), rel=1e-12)
        assert fc == pytest.approx(1.698, abs=1.5e-3)

    def test_inverse_scaling(self):
        assert sd.cutoff_te10(TABLE1_SIDE_MM / 2, 2.2) == pytest.approx(2 * sd.cutoff_te10(TABLE1_SIDE_MM, 2.2), rel=1e-12)

    @pytest.mark.parametrize("a,eps_r", [(0.0, 2.2), (-1.0, 2.2), (10.0, 0.9)])
    def test_invalid(self, a, eps_r):
        with pytest.raises(ValueError):
            sd.cutoff_te10(a, eps_r)

    @given(st.floats(1.0, 500.0), st.floats(1.0, 12.0), st.floats(1.001, 2.0))
    def test_strictly_decreasing(self, a, eps_r, k):
        assert sd.cutoff_te10(a * k, eps_r) < sd.cutoff_te10(a, eps_r)
        assert sd.cutoff_te10(a, eps_r * k) < sd.cutoff_te10(a, eps_r)


class TestResonantFreq:
    def test_square_reference_cavity(self):
        f = sd.resonant_freq(TABLE1_SIDE_MM, TABLE1_SIDE_MM, 2.2)
        oracle = C / (2 * math.sqrt(2.2)) * math.sqrt(2) / (TABLE1_SIDE_MM / 1000) / 1e9
        assert f == pytest.approx(oracle, rel=1e-12)
        assert f == pytest.approx(2.402, rel=5e-3)

    def test_square_symmetry(self):
        assert sd.resonant_freq(50, 50, 2.2, (1, 0, 2)) == sd.resonant_freq(50, 50, 2.2, (2, 0, 1))

    @pytest.mark.parametrize("mode", [(1, 0, 1), (1, 0, 2), (3, 0, 1), (0, 0, 2)])
    def test_scaling(self, mode):
        f = sd.resonant_freq(40, 70, 3.0, mode)
        assert sd.resonant_freq(80, 140, 3.0, mode) == pytest.approx(f / 2, rel=1e-12)

    @pytest.mark.parametrize("mode", [(0, 0, 0), (1, 1, 1), (-1, 0, 1)])
    def test_invalid_mode(self, mode):
        with pytest.raises(ValueError):
            sd.resonant_freq(50, 50, 2.2, mode)


class TestDesignCavity:
    def test_reference_design(self):
        cav = sd.design_cavity(2.4, 0.7, DUROID_5880)
        a, d = cavity_oracle(2.4, 0.7, 2.2)
        assert cav.a == pytest.approx(a, rel=1e-12)
        assert cav.d_len == pytest.approx(d, rel=1e-12)
        assert cav.a == pytest.approx(TABLE1_SIDE_MM, rel=0.01)
        assert cav.d_len == pytest.approx(TABLE1_SIDE_MM, rel=0.01)
        assert cav.fc_ghz == pytest.approx(1.7)
        assert cav.guided_wavelength == pytest.approx(2 * cav.d_len)

    def test_square_corner(self):
        f0 = 2.4
        cav = sd.design_cavity(f0, sd.square_cavity_delta(f0))
        assert cav.fc_hz == pytest.approx(f0 / math.sqrt(2) * 1e9, rel=1e-12)
        assert cav.a == pytest.approx(cav.d_len, rel=1e-12)

    @pytest.mark.parametrize("delta", [0.0, -0.1, 2.4, 3.0])
    def test_invalid_delta(self, delta):
        with pytest.raises(ValueError, match="delta"):
            sd.design_cavity(2.4, delta)

    @settings(max_examples=200)
    @given(st.floats(0.5, 40.0), st.floats(0.01, 0.99), st.floats(1.0, 12.0))
    def test_round_trip(self, f0, frac, eps_r):
        cav = sd.design_cavity(f0, f0 * frac, SubstrateSpec(eps_r))
        assert sd.resonant_freq(cav.a, cav.d_len, eps_r) == pytest.approx(f0, rel=1e-9)
        assert cav.fc_hz < cav.f0_hz

    @given(st.floats(0.5, 40.0), st.floats(0.01, 0.99), st.floats(1.0, 12.0))
    def test_te101_is_lowest(self, f0, frac, eps_r):
        cav = sd.design_cavity(f0, f0 * frac, SubstrateSpec(eps_r))
        modes = sd.cavity_modes(cav)
        assert modes[0][0] == "TE101"
        assert modes[1][1] > modes[0][1]

    def test_width_correction_hook(self):
        plain = sd.design_cavity(2.4, 0.7)
        narrowed = sd.design_cavity(2.4, 0.7, width_correction=lambda a: sd.siw_effective_width(a, 1.0, 1.9))
        assert narrowed.a == pytest.approx(plain.a - 1.0 / (0.95 * 1.9))
        assert narrowed.d_len == plain.d_len


class TestModeChart:
    def test_nearest_is_te102_or_te201(self):
        deltas = [0.1 + 0.01 * i for i in range(111)]
        rows = sd.mode_chart(2.4, deltas)
        assert {r.mode for r in rows} <= {"TE102", "TE201"}
        assert all(r.spacing > 0 for r in rows)

    def test_square_tie(self):
        f0 = 2.4
        (row,) = sd.mode_chart(f0, [sd.square_cavity_delta(f0)])
        assert set(row.tied) == {"TE102", "TE201"}
        assert row.frequency == pytest.approx(math.sqrt(2.5) * f0, rel=1e-6)

    def test_aspect_decides_the_neighbour(self):
        # small delta: high cutoff, narrow and long cavity, so TE102 is closer
        long_, wide = sd.mode_chart(2.4, [0.2, 1.1])
        assert long_.mode == "TE102"
        assert wide.mode == "TE201"


class TestViaWall:
    def test_reference_pitch_passes(self):
        cav = sd.design_cavity(2.4, 0.7)
        layout = sd.synth_via_wall(cav, 1.0, 1.9)
        assert layout.diameter_pitch_ratio == pytest.approx(1 / 1.9)
        assert layout.diameter_wavelength_ratio == pytest.approx(1.0 / (C / 2.4e9 * 1000))

    def test_pitch_violation(self):
        with pytest.raises(ConstraintViolation) as info:
            sd.check_via_constraints(1.0, 2.5, 2.4)
        assert info.value.constraint == "pitch"
        assert "0.400" in str(info.value)

    def test_diameter_violation(self):
        with pytest.raises(ConstraintViolation) as info:
            sd.check_via_constraints(13.0, 13.0, 2.4)
        assert info.value.constraint == "diameter"

    @pytest.mark.parametrize("pitch", [1.0, 1.3, 1.9, 2.0])
    def test_walls_trace_the_perimeter(self, pitch):
        cav = sd.design_cavity(2.4, 0.7)
        pts = sd.synth_via_wall(cav, 1.0, pitch).positions
        corners = {(0.0, 0.0), (cav.a, 0.0), (cav.a, cav.d_len), (0.0, cav.d_len)}
        rounded = {(round(x, 9), round(y, 9)) for x, y in pts}
        assert {(round(x, 9), round(y, 9)) for x, y in corners} <= rounded
        assert len(rounded) == len(pts)
        for x, y in pts:
            on_edge = min(abs(x), abs(x - cav.a)) < 1e-9 or min(abs(y), abs(y - cav.d_len)) < 1e-9
            assert on_edge
        # consecutive spacing equals the pitch except one closing remainder per wall
        gaps = [math.dist(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]
        short = [g for g in gaps if not math.isclose(g, pitch, rel_tol=1e-9)]
        assert len(short) <= 4
        assert all(g < pitch for g in short)

    @given(st.floats(0.2, 3.0), st.floats(0.5, 1.0))
    def test_generated_layout_passes_its_own_check(self, d, ratio):
        cav = sd.design_cavity(2.4, 0.7)
        layout = sd.synth_via_wall(cav, d, d / ratio)
        assert sd.check_via_constraints(d, d / ratio, 2.4) == (
            layout.diameter_pitch_ratio,
            layout.diameter_wavelength_ratio,
        )


class TestMeander:
    @pytest.mark.parametrize(
        "eps,total,long_,short,width",
        [(1.0, 62.457, 7.807, 3.903, 0.7807), (2.2, 42.108, 5.264, 2.632, 0.5264)],
    )
    def test_dimensions(self, eps, total, long_, short, width):
        lam = C / 2.4e9 * 1000 / math.sqrt(eps)
        m = sd.design_meander(2.4, eps)
        assert m.total_length == pytest.approx(lam / 2, rel=1e-12)
        assert m.total_length == pytest.approx(total, abs=1e-3)
        assert m.long_section == pytest.approx(long_, abs=1e-3)
        assert m.short_section == pytest.approx(short, abs=1e-3)
        assert m.slot_width == pytest.approx(width, abs=1e-4)

    def test_published_rounding(self):
        # printed values are rounded: 62.47 and 42.13 mm
        assert sd.design_meander(2.4, 1.0).total_length == pytest.approx(62.47, rel=1e-3)
        assert sd.design_meander(2.4, 2.2).total_length == pytest.approx(42.13, rel=1e-3)

    @given(st.floats(0.1, 60.0), st.floats(1.0, 12.0))
    def test_geometry_invariants(self, f0, eps):
        m = sd.design_meander(f0, eps)
        assert math.fsum(s for s, _ in m.segments) == pytest.approx(m.total_length, rel=1e-6)
        assert m.slot_width * 10 == pytest.approx(m.long_section)
        assert m.long_section == pytest.approx(2 * m.short_section)
        axes = [a for _, a in m.segments]
        assert all(a != b for a, b in zip(axes, axes[1:]))
        assert axes[0] is SlotAxis.TRANSVERSE

    @pytest.mark.parametrize("f0,eps", [(0.0, 2.2), (2.4, 0.5)])
    def test_invalid(self, f0, eps):
        with pytest.raises(ValueError):
            sd.design_meander(f0, eps)


class TestAntennaSpec:
    def test_defaults(self):
        spec = sd.export_antenna_spec()
        assert (spec.f0_hz, spec.bandwidth_hz, spec.gain_dbi, spec.pattern) == (
            2.398e9,
            20e6,
            4.0,
            Pattern.HEMISPHERIC,
        )

    def test_overrides(self):
        assert sd.export_antenna_spec(gain_dbi=0.0).gain_dbi == 0.0
        iso = sd.export_antenna_spec(pattern="isotropic_gain", back_attenuation_db=20)
        assert iso.gain_toward(0.5) == iso.gain_toward(-0.5) == 4.0

    def test_hemispheric_back_attenuation(self):
        spec = AntennaSpec(back_attenuation_db=15.0)
        assert spec.gain_toward(-0.3) == 4.0
        assert spec.gain_toward(0.0) == 4.0
        assert spec.gain_toward(0.3) == pytest.approx(-11.0)

    @pytest.mark.parametrize("kwargs", [{"bandwidth_hz": 0.0}, {"gain_dbi": math.inf}, {"f0_hz": -1.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            AntennaSpec(**kwargs)

    def test_dict_round_trip(self):
        design = sd.design_antenna()
        assert sd.antenna_spec_from_dict(design.to_dict()) == design.antenna


class TestReferenceDimensions:
    EXPECTED = {
        "W": 59.550818, "LW": 4.9, "L1": 44.609, "CW": 0.4, "Sav17": 12.0, "C1": 29.61,
        "Sav12": 6.2, "Sav13": 7.46, "D": 1.0, "S": 1.972, "Saw": 1.25, "Sav11": 4.95,
        "Cs": 28.025, "Sav18": 10.76, "Se1": 15.0, "Sav14": 7.4, "Sav15": 6.21,
        "Sav16": 11.161, "Sav19": 9.92,
    }

    def test_bundled_values(self):
        assert sd.load_reference_dimensions() == self.EXPECTED

    def test_byte_identical_round_trip(self):
        text = sd.table1_text()
        assert sd.format_dimensions(sd.parse_dimensions(text)) == text

    def test_width_matches_design(self):
        dims = sd.load_reference_dimensions()
        assert sd.design_cavity(2.4, 0.7).a == pytest.approx(dims["W"], rel=0.01)

    @pytest.mark.parametrize("text", ["W\n", "W 1 2\n", "W 1\nW 2\n", "W x\n"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            sd.parse_dimensions(text)
