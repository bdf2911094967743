import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraysynth.errors import DomainError, RangeError
from arraysynth.msline import (MicrostripLine, Substrate, achievable_z0_range,
                               eps_eff, guided_wavelength, line_loss,
                               load_substrate_catalog, width_synthesize,
                               z0_analyze)

AIR = Substrate(1.0, 0.0, 1e-3)
RO4003C = Substrate(3.38, 0.0027, 1.524e-3)
RO4003C_FEED = Substrate(3.38, 0.0027, 0.813e-3)

substrates = st.builds(
    Substrate,
    eps_r=st.floats(1.0, 12.0),
    tan_delta=st.floats(0.0, 0.05),
    height=st.floats(0.1e-3, 3e-3),
)
widths_rel = st.floats(0.02, 50.0)  # in units of substrate height


class TestEpsEff:
    def test_air_substrate(self):
        assert eps_eff(AIR, 3e-3) == 1.0

    def test_reference_line(self):
        assert eps_eff(RO4003C, 5.04e-3) == pytest.approx(2.743, abs=0.005)

    def test_wide_line_asymptote(self):
        assert eps_eff(RO4003C, 1.0) == pytest.approx(3.38, rel=0.01)

    def test_continuous_at_branch_switch(self):
        h = RO4003C.height
        below = eps_eff(RO4003C, h * (1 - 1e-9))
        above = eps_eff(RO4003C, h * (1 + 1e-9))
        assert below == pytest.approx(above, abs=1e-7)

    def test_rejects_nonpositive_width(self):
        with pytest.raises(DomainError):
            eps_eff(RO4003C, 0.0)

    def test_rejects_nonpositive_height(self):
        with pytest.raises(DomainError):
            Substrate(3.38, 0.0027, 0.0)

    @given(substrates, widths_rel)
    def test_bounded_by_substrate_permittivity(self, sub, u):
        ee = eps_eff(sub, u * sub.height)
        assert 1.0 <= ee <= sub.eps_r + 1e-12


class TestZ0:
    def test_narrow_branch_air(self):
        # 60*ln(8.25) at w/h = 1
        assert z0_analyze(AIR, 1e-3) == pytest.approx(126.6, abs=0.1)

    def test_wide_branch_air(self):
        assert z0_analyze(AIR, 8e-3) == pytest.approx(34.6, abs=0.2)

    def test_synthesis_round_trip_50ohm(self):
        w = width_synthesize(RO4003C_FEED, 50.0)
        assert z0_analyze(RO4003C_FEED, w) == pytest.approx(50.0, abs=0.01)

    @given(substrates, widths_rel, st.floats(1.01, 1.5))
    def test_strictly_decreasing_in_width(self, sub, u, factor):
        w = u * sub.height
        assert z0_analyze(sub, w) > z0_analyze(sub, w * factor)


class TestWidthSynthesize:
    def test_quarter_wave_impedance(self):
        w = width_synthesize(RO4003C_FEED, 70.71)
        assert z0_analyze(RO4003C_FEED, w) == pytest.approx(70.71, abs=0.01)

    def test_inverse_of_narrow_branch_example(self):
        assert width_synthesize(AIR, 126.6) == pytest.approx(1e-3, abs=1e-6)

    def test_unachievable_target(self):
        with pytest.raises(RangeError) as err:
            width_synthesize(RO4003C, 1e6)
        lo, hi = err.value.achievable
        assert 0.0 < lo < hi < 1e6

    def test_achievable_interval_matches_bounds(self):
        lo, hi = achievable_z0_range(RO4003C)
        assert z0_analyze(RO4003C, 100 * RO4003C.height) == pytest.approx(lo)
        assert z0_analyze(RO4003C, RO4003C.height / 100) == pytest.approx(hi)

    @given(substrates, widths_rel)
    @settings(max_examples=60)
    def test_round_trip_over_achievable_range(self, sub, u):
        z = z0_analyze(sub, u * sub.height)
        w = width_synthesize(sub, z)
        assert abs(z0_analyze(sub, w) - z) <= 0.01


class TestGuidedWavelength:
    def test_free_space(self):
        assert guided_wavelength(AIR, 3e-3, 299.792458e6) == pytest.approx(1.0, abs=1e-12)

    def test_reference_line_at_11p7ghz(self):
        lam = guided_wavelength(RO4003C, 5.04e-3, 11.7e9)
        assert lam == pytest.approx(15.47e-3, abs=0.05e-3)
        assert lam / 4 == pytest.approx(3.87e-3, abs=0.02e-3)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(DomainError):
            guided_wavelength(RO4003C, 1e-3, 0.0)

    @given(substrates, widths_rel, st.floats(1e8, 4e10), st.floats(1.1, 10.0))
    def test_scales_as_inverse_frequency(self, sub, u, f, factor):
        w = u * sub.height
        lam1 = guided_wavelength(sub, w, f)
        lam2 = guided_wavelength(sub, w, f * factor)
        assert lam1 / lam2 == pytest.approx(factor, rel=1e-12)


class TestLineLoss:
    def test_lossless_limit(self):
        sub = Substrate(3.38, 0.0, 1.524e-3, conductivity=math.inf)
        line = MicrostripLine(3e-3, 25e-3, sub)
        assert line_loss(line, 11.7e9) == 0.0

    def test_linear_in_length(self):
        one = MicrostripLine(3e-3, 10e-3, RO4003C)
        two = MicrostripLine(3e-3, 20e-3, RO4003C)
        assert line_loss(two, 11.7e9) == pytest.approx(2 * line_loss(one, 11.7e9), rel=1e-12)

    def test_golden_reference(self):
        # frozen from the first evaluation of this loss model
        w50 = width_synthesize(RO4003C, 50.0)
        line = MicrostripLine(w50, 10e-3, RO4003C)
        assert line_loss(line, 11.7e9) == pytest.approx(0.05552911409772283, rel=1e-9)

    @given(substrates, widths_rel, st.floats(1e8, 4e10),
           st.floats(1e-3, 50e-3), st.floats(1e-3, 50e-3))
    def test_non_negative_and_additive(self, sub, u, f, l1, l2):
        w = u * sub.height
        total = line_loss(MicrostripLine(w, l1 + l2, sub), f)
        parts = (line_loss(MicrostripLine(w, l1, sub), f)
                 + line_loss(MicrostripLine(w, l2, sub), f))
        assert total >= 0.0
        assert total == pytest.approx(parts, rel=1e-9, abs=1e-15)


def test_catalog_has_reference_materials():
    catalog = load_substrate_catalog()
    assert catalog["RO4003C"].eps_r == 3.38
    assert catalog["RO4003C"].tan_delta == 0.0027
    assert catalog["FR-4"].eps_r == 4.4
    assert catalog["FR-4"].tan_delta == 0.02


def test_catalog_from_file(tmp_path):
    path = tmp_path / "subs.json"
    path.write_text('[{"name": "X", "eps_r": 2.2, "tan_delta": 0.001, '
                    '"height_m": 0.0005}]')
    catalog = load_substrate_catalog(str(path))
    assert catalog["X"].height == 0.0005
