import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraysynth.farfield import ArrayLayout
from arraysynth.geometry import export_geometry, geometry_json, validate_geometry_doc
from arraysynth.unitcell import reference_cell, synth_unitcell


@pytest.fixture(scope="module")
def ref_cell():
    return reference_cell()


class TestExport:
    def test_sixteen_metasurface_rects_per_cell(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(1, 1, ref_cell.w1, ref_cell.l1))
        assert len(doc["layers"]["L1_metasurface"]["rects"]) == 16

    def test_full_array_extent_with_reference_note(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(32, 32, ref_cell.w1, ref_cell.l1))
        assert doc["array"]["extent_m"][0] == pytest.approx(0.41184)
        assert doc["array"]["reference_overall_size_m"] == [0.41026, 0.41026]
        assert any("410.26" in note and "411.84" in note for note in doc["notes"])
        assert len(doc["layers"]["L1_metasurface"]["rects"]) == 16 * 1024

    def test_cross_slot_rectangles_rotated_pair(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(1, 1, ref_cell.w1, ref_cell.l1))
        cuts = doc["layers"]["L3_slotted_ground"]["cutouts"]
        dims = {(round(c["w"], 9), round(c["h"], 9)) for c in cuts}
        assert dims == {(ref_cell.ws, ref_cell.ls), (ref_cell.ls, ref_cell.ws)}

    def test_deterministic_json(self, ref_cell):
        layout = ArrayLayout(3, 2, ref_cell.w1, ref_cell.l1)
        first = geometry_json(export_geometry(ref_cell, layout))
        second = geometry_json(export_geometry(ref_cell, layout))
        assert first == second

    def test_schema_header(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(1, 1, ref_cell.w1, ref_cell.l1))
        assert doc["schema_version"] == 1
        assert doc["units"] == "m"

    def test_no_reference_note_for_other_cells(self):
        cell = synth_unitcell((10.7e9, 12.7e9))
        doc = export_geometry(cell, ArrayLayout(4, 4, cell.w1, cell.l1))
        assert doc["array"]["reference_overall_size_m"] is None
        assert doc["notes"] == []


class TestValidation:
    def test_valid_documents_have_no_violations(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(2, 2, ref_cell.w1, ref_cell.l1))
        assert validate_geometry_doc(doc) == []

    def test_out_of_bounds_rect_detected(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(1, 1, ref_cell.w1, ref_cell.l1))
        doc["layers"]["L2_patch"]["rects"][0]["x"] = -1.0
        assert any("outside" in v for v in validate_geometry_doc(doc))

    def test_metasurface_count_checked(self, ref_cell):
        doc = export_geometry(ref_cell, ArrayLayout(1, 1, ref_cell.w1, ref_cell.l1))
        doc["layers"]["L1_metasurface"]["rects"].pop()
        assert any("16" in v for v in validate_geometry_doc(doc))

    @given(st.floats(8e9, 16e9), st.floats(1.05, 1.6), st.integers(1, 4),
           st.integers(1, 4))
    @settings(max_examples=25, deadline=None)
    def test_every_rect_within_bounds_for_synthesized_cells(self, f_low, ratio,
                                                            m, n):
        cell = synth_unitcell((f_low, f_low * ratio))
        doc = export_geometry(cell, ArrayLayout(m, n, cell.w1, cell.l1))
        assert validate_geometry_doc(doc) == []
