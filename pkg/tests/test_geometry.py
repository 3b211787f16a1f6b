import numpy as np
import pytest

from propforge import geometry
from propforge.geometry import (
    RADII,
    BladeGeometry,
    DesignVector,
    SECTION_CSV_HEADER,
    build_blade,
    eval_distributions,
    export_sections,
    sections_from_csv,
    sections_to_csv,
    section_table,
)

from conftest import random_design


def make_design(**overrides):
    base = dict(n_blades=4, P=1.0, w_rp=0.7, w_c=0.8, w_rc=0.6, camber=0.02)
    base.update(overrides)
    return DesignVector(**base)


class TestDesignVector:
    def test_valid_construction(self):
        design = make_design()
        assert design.n_blades == 4
        assert design.to_array().shape == (6,)

    @pytest.mark.parametrize("field,value", [
        ("n_blades", 6), ("n_blades", 1),
        ("P", 0.49), ("P", 1.51),
        ("w_rp", 0.45), ("w_c", 1.2), ("w_rc", 0.9), ("camber", -0.01),
    ])
    def test_out_of_range_names_field(self, field, value):
        with pytest.raises(ValueError, match=field):
            make_design(**{field: value})

    def test_array_round_trip(self):
        design = make_design()
        assert DesignVector.from_array(design.to_array()) == design


class TestEvalDistributions:
    def test_pitch_peaks_at_weight_position(self):
        # peak of the pitch shape has value exactly P
        section = eval_distributions(make_design(P=1.0, w_rp=0.7), 0.7)
        assert section.pitch_ratio == pytest.approx(1.0, abs=1e-15)

    def test_camber_constant_then_tapers_to_zero(self):
        design = make_design(camber=0.03)
        assert eval_distributions(design, 0.9).camber_ratio == pytest.approx(0.03)
        assert eval_distributions(design, 1.0).camber_ratio == 0.0
        assert eval_distributions(design, 0.95).camber_ratio == pytest.approx(0.015)

    def test_chord_root_value(self):
        # independent scalar evaluation of the root branch:
        # s(0.2) = 1 - (1 - 0.6) * ((0.2 - w_rc)/(0.2 - w_rc))^2 = 0.6,
        # so c/D = 0.35 * w_c * 0.6
        section = eval_distributions(make_design(w_c=0.8, w_rc=0.6), 0.2)
        assert section.chord_ratio == pytest.approx(0.35 * 0.8 * 0.6, abs=1e-12)

    def test_chord_peak_value(self):
        section = eval_distributions(make_design(w_c=0.8, w_rc=0.6), 0.6)
        assert section.chord_ratio == pytest.approx(0.35 * 0.8, abs=1e-12)

    def test_r_norm_out_of_range(self):
        with pytest.raises(ValueError, match="r_norm"):
            eval_distributions(make_design(), 0.1)
        with pytest.raises(ValueError, match="r_norm"):
            eval_distributions(make_design(), 1.01)


class TestBuildBlade:
    def test_ten_sections_at_standard_radii(self):
        blade = build_blade(make_design())
        assert len(blade.sections) == 10
        assert np.allclose([s.r_norm for s in blade.sections], RADII)

    def test_deterministic(self):
        assert build_blade(make_design()) == build_blade(make_design())

    def test_lower_bound_design_has_positive_sections(self):
        lowest = DesignVector(n_blades=2, P=0.5, w_rp=0.5, w_c=0.5, w_rc=0.5, camber=0.0)
        blade = build_blade(lowest)
        assert all(s.chord_ratio > 0 for s in blade.sections)
        assert all(s.pitch_ratio > 0 for s in blade.sections)


class TestExport:
    def test_table_shape(self):
        rows = export_sections(build_blade(make_design()))
        assert len(rows) == 10
        assert all(len(r) == 5 for r in rows)

    def test_csv_header_exact(self):
        text = sections_to_csv(build_blade(make_design()))
        assert text.splitlines()[0] == "r_norm,pitch_ratio,chord_ratio,camber_ratio,thickness_ratio"
        assert SECTION_CSV_HEADER == "r_norm,pitch_ratio,chord_ratio,camber_ratio,thickness_ratio"

    def test_csv_round_trip(self):
        blade = build_blade(make_design())
        parsed = sections_from_csv(sections_to_csv(blade))
        assert np.max(np.abs(parsed - section_table(blade))) < 1e-12

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError, match="header"):
            sections_from_csv("a,b,c\n1,2,3\n")


class TestShapeProperties:
    def test_pitch_ratio_within_bounds_everywhere(self, rng):
        r_dense = np.linspace(0.2, 1.0, 161)
        for _ in range(100):
            design = random_design(rng)
            pitch = design.P * geometry.pitch_shape(r_dense, design.w_rp)
            assert np.all(pitch > 0) and np.all(pitch <= 1.5 + 1e-12)

    def test_pitch_slope_changes_sign_once_at_peak(self, rng):
        r_dense = np.linspace(0.2, 1.0, 801)
        for _ in range(25):
            design = random_design(rng)
            values = geometry.pitch_shape(r_dense, design.w_rp)
            signs = np.sign(np.diff(values))
            flips = np.nonzero(np.diff(signs) != 0)[0]
            assert len(flips) == 1
            assert abs(r_dense[flips[0] + 1] - design.w_rp) < 2e-3

    def test_chord_shape_smooth_peak(self, rng):
        # Zero slope at the peak from either side: a step of 1e-4 must change
        # the value by O(h^2) < 1e-6.  (A central difference straddling the
        # peak would measure the branch-curvature jump instead.)
        h = 1e-4
        for _ in range(50):
            design = random_design(rng)
            w = design.w_rc
            assert geometry.chord_shape(w, w) == pytest.approx(1.0)
            assert abs(geometry.chord_shape(w + h, w) - 1.0) < 1e-6
            assert abs(geometry.chord_shape(w - h, w) - 1.0) < 1e-6

    def test_pitch_monotone_in_nominal_pitch(self, rng):
        for _ in range(25):
            design = random_design(rng)
            if design.P > 1.4:
                continue
            higher = DesignVector(design.n_blades, design.P + 0.05, design.w_rp,
                                  design.w_c, design.w_rc, design.camber)
            a = section_table(build_blade(design))[:, 1]
            b = section_table(build_blade(higher))[:, 1]
            assert np.all(b > a)

    def test_thickness_endpoints(self):
        blade = build_blade(make_design())
        assert blade.sections[0].thickness_ratio == pytest.approx(0.035)
        assert blade.sections[-1].thickness_ratio == pytest.approx(0.003)
