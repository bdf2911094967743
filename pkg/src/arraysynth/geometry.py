"""Layered geometry export: axis-aligned rectangles per conductor layer.

Layer roles: L1 the 4x4 metasurface grid, L2 the radiating patch, L3 the
cross-slotted ground (a rectangle with cutouts), L4 the feed trace. The
document is plain JSON-ready data, deterministic for identical inputs, with
every length in meters.
"""

from __future__ import annotations

import json

from .errors import ValidationError
from .farfield import ArrayLayout
from .msline import width_synthesize
from .unitcell import UnitCellGeometry, reference_cell, reference_notes

SCHEMA_VERSION = 1


def _rect(x: float, y: float, w: float, h: float) -> dict:
    return {"x": x, "y": y, "w": w, "h": h}


def _cell_metasurface(cell: UnitCellGeometry, ox: float, oy: float) -> list[dict]:
    cluster_w = 4.0 * cell.wu + 3.0 * cell.dx
    cluster_h = 4.0 * cell.lu + 3.0 * cell.dy
    mx = ox + (cell.w1 - cluster_w) / 2.0
    my = oy + (cell.l1 - cluster_h) / 2.0
    rects = []
    for i in range(4):
        for j in range(4):
            rects.append(_rect(mx + i * (cell.wu + cell.dx),
                               my + j * (cell.lu + cell.dy),
                               cell.wu, cell.lu))
    return rects


def export_geometry(cell: UnitCellGeometry, array: ArrayLayout) -> dict:
    """Build the four-layer rectangle document for an m x n tiling of a cell.

    The lattice pitch is the cell period; ``array`` provides the element
    counts. When the cell matches the bundled reference design, the
    document also reports the reference overall size next to the computed
    extent (they differ; the discrepancy is surfaced, not resolved).
    """
    m, n = array.m, array.n
    extent = (m * cell.w1, n * cell.l1)
    feed_w = width_synthesize(cell.stack.feed_core, 50.0)

    l1_rects: list[dict] = []
    l2_rects: list[dict] = []
    l3_outer: list[dict] = []
    l3_cutouts: list[dict] = []
    l4_rects: list[dict] = []
    for ci in range(m):
        for cj in range(n):
            ox, oy = ci * cell.w1, cj * cell.l1
            cx, cy = ox + cell.w1 / 2.0, oy + cell.l1 / 2.0
            l1_rects.extend(_cell_metasurface(cell, ox, oy))
            l2_rects.append(_rect(cx - cell.wp / 2.0, cy - cell.lp / 2.0,
                                  cell.wp, cell.lp))
            l3_outer.append(_rect(ox, oy, cell.w1, cell.l1))
            l3_cutouts.append(_rect(cx - cell.ws / 2.0, cy - cell.ls / 2.0,
                                    cell.ws, cell.ls))
            l3_cutouts.append(_rect(cx - cell.ls / 2.0, cy - cell.ws / 2.0,
                                    cell.ls, cell.ws))
            l4_rects.append(_rect(cx - feed_w / 2.0, oy, feed_w, cell.l1))

    notes = []
    ref = reference_cell()
    reference_extent = None
    if abs(cell.w1 - ref.w1) < 1e-9 and abs(cell.l1 - ref.l1) < 1e-9:
        info = reference_notes()
        reference_extent = list(info["reported_overall_size_m"])
        notes.append(
            f"computed extent {extent[0] * 1e3:.2f} x {extent[1] * 1e3:.2f} mm "
            f"(from {m} x {n} cells of {cell.w1 * 1e3:.2f} mm) differs from the "
            f"reference design's reported overall size "
            f"{reference_extent[0] * 1e3:.2f} x {reference_extent[1] * 1e3:.2f} mm")

    doc = {
        "schema_version": SCHEMA_VERSION,
        "units": "m",
        "cell": cell.to_dict(),
        "array": {
            "columns": m,
            "rows": n,
            "extent_m": [extent[0], extent[1]],
            "reference_overall_size_m": reference_extent,
        },
        "notes": notes,
        "layers": {
            "L1_metasurface": {"role": "4x4 via-less Sievenpiper grid",
                               "rects": l1_rects},
            "L2_patch": {"role": "radiating patch", "rects": l2_rects},
            "L3_slotted_ground": {"role": "cross-slotted ground plane",
                                  "outer_rects": l3_outer,
                                  "cutouts": l3_cutouts},
            "L4_feed": {"role": "feed trace", "rects": l4_rects},
        },
    }
    violations = validate_geometry_doc(doc)
    if violations:
        raise ValidationError(violations)
    return doc


def _rect_inside(r: dict, x0: float, y0: float, x1: float, y1: float,
                 tol: float) -> bool:
    return (r["x"] >= x0 - tol and r["y"] >= y0 - tol
            and r["x"] + r["w"] <= x1 + tol and r["y"] + r["h"] <= y1 + tol)


def validate_geometry_doc(doc: dict) -> list[str]:
    """Check layer rectangles against the array bounds; return violations."""
    out: list[str] = []
    ex, ey = doc["array"]["extent_m"]
    tol = 1e-12 * max(ex, ey)
    cells = doc["array"]["columns"] * doc["array"]["rows"]
    layers = doc["layers"]
    if len(layers["L1_metasurface"]["rects"]) != 16 * cells:
        out.append("metasurface layer must hold 16 rectangles per cell")
    for name, rects in (
            ("L1_metasurface", layers["L1_metasurface"]["rects"]),
            ("L2_patch", layers["L2_patch"]["rects"]),
            ("L3_slotted_ground", layers["L3_slotted_ground"]["outer_rects"]),
            ("L3_slotted_ground cutout", layers["L3_slotted_ground"]["cutouts"]),
            ("L4_feed", layers["L4_feed"]["rects"])):
        for r in rects:
            if r["w"] <= 0.0 or r["h"] <= 0.0:
                out.append(f"{name}: non-positive rectangle size")
                break
            if not _rect_inside(r, 0.0, 0.0, ex, ey, tol):
                out.append(f"{name}: rectangle outside the array bounds")
                break
    outer = layers["L3_slotted_ground"]["outer_rects"]
    for cut in layers["L3_slotted_ground"]["cutouts"]:
        if not any(_rect_inside(cut, o["x"], o["y"], o["x"] + o["w"],
                                o["y"] + o["h"], tol) for o in outer):
            out.append("L3 cutout lies outside every ground rectangle")
            break
    return out


def geometry_json(doc: dict) -> str:
    """Canonical, byte-stable JSON for a geometry document."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
