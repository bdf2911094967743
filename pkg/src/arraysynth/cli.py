"""Command-line interface.

Every subcommand reads a single JSON config (sections: substrates, band,
unit_cell, feed, array, optimize) and writes its reports into ``--out``.
Exit codes: 0 success, 2 validation/config error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import farfield, geometry, report
from .errors import ArgumentError, ToolkitError
from .feednet import ConnectorSpec, build_corporate_tree, leaf_excitations, network_loss_budget
from .msline import Substrate, load_substrate_catalog
from .optimize import (DesignModels, DesignVector, ObjectiveSpec, PARAM_NAMES,
                       objective, seeded_feasible_design, trust_region_minimize)
from .touchstone import parse_touchstone_document, write_touchstone
from .unitcell import LayerStack, UnitCellGeometry, default_stack, synth_unitcell, synthesis_report


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ArgumentError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"config is not valid JSON: {exc}") from None


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg:
        raise ArgumentError(f"config is missing the '{name}' section")
    return cfg[name]


def _catalog(cfg: dict) -> dict[str, Substrate]:
    catalog = load_substrate_catalog()
    for entry in cfg.get("substrates", []):
        sub = Substrate.from_dict(entry)
        catalog[sub.name] = sub
    return catalog


def _substrate(spec, catalog: dict[str, Substrate]) -> Substrate:
    if isinstance(spec, str):
        if spec not in catalog:
            raise ArgumentError(
                f"unknown substrate '{spec}' (catalog: {sorted(catalog)})")
        return catalog[spec]
    return Substrate.from_dict(spec)


def _stack(cfg: dict, catalog: dict[str, Substrate]) -> LayerStack:
    section = cfg.get("unit_cell", {}).get("stack")
    if section is None:
        return default_stack()
    return LayerStack(
        spacer=_substrate(section["spacer"], catalog),
        patch_core=_substrate(section["patch_core"], catalog),
        feed_core=_substrate(section["feed_core"], catalog),
    )


def _band(cfg: dict) -> tuple[float, float]:
    band = _section(cfg, "band")
    return float(band["f_low_hz"]), float(band["f_high_hz"])


def _connector(feed_cfg: dict) -> ConnectorSpec | None:
    conn = feed_cfg.get("connector")
    if conn is None:
        return None
    return ConnectorSpec(
        return_loss_db=float(conn.get("return_loss_db", 20.0)),
        insertion_loss_db=float(conn.get("insertion_loss_db", 0.0)))


def _build_tree(cfg: dict, catalog: dict[str, Substrate]):
    feed = _section(cfg, "feed")
    return build_corporate_tree(
        n_outputs=int(feed.get("n_outputs", 1024)),
        f0=float(feed.get("f0_hz", 11.7e9)),
        substrate=_substrate(feed.get("substrate", "RO4003C-feed"), catalog),
        z_ref=float(feed.get("z_ref", 50.0)),
        stage_loss_db=float(feed.get("stage_loss_db", 0.0)),
        connector=_connector(feed))


def _array_layout(cfg: dict) -> farfield.ArrayLayout:
    arr = _section(cfg, "array")
    pitch = float(arr.get("pitch_m", 12.87e-3))
    return farfield.ArrayLayout(m=int(arr.get("m", 32)), n=int(arr.get("n", 32)),
                                dx=pitch, dy=float(arr.get("pitch_y_m", pitch)))


def _element_model(arr_cfg: dict) -> farfield.ElementModel:
    # realized patterns default to a cosine element with a -20 dB back level
    el = arr_cfg.get("element", {"model": "cosine_power", "q": 1.0})
    kind = el.get("model", "isotropic")
    back_db = float(el.get("back_level_db", -20.0))
    return farfield.ElementModel(kind, q=float(el.get("q", 1.0)),
                                 back_level=10.0 ** (back_db / 20.0))


def cmd_synth_unitcell(args, out_dir: Path) -> int:
    cfg = _load_config(args.config)
    catalog = _catalog(cfg)
    band = _band(cfg)
    uc = cfg.get("unit_cell", {})
    period = uc.get("period_m")
    cell = synth_unitcell(band, _stack(cfg, catalog),
                          period=None if period is None else float(period),
                          gap=float(uc.get("gap_m", 0.40e-3)))
    cell_path = out_dir / "unitcell.json"
    cell_path.write_text(cell.to_json() + "\n", encoding="utf-8")
    rep = synthesis_report(cell, band)
    rep_path = report.write_metrics_json(out_dir / "synth_report.json", rep)
    print(f"wrote {cell_path} and {rep_path}")
    for flag in rep["discrepancy_flags"]:
        print(f"note: {flag}")
    return 0


def cmd_synth_feed(args, out_dir: Path) -> int:
    cfg = _load_config(args.config)
    tree = _build_tree(cfg, _catalog(cfg))
    path = out_dir / "feedtree.json"
    path.write_text(tree.to_json() + "\n", encoding="utf-8")
    print(f"wrote {path} (depth {tree.depth}, {tree.n_outputs} outputs)")
    return 0


def cmd_pattern(args, out_dir: Path) -> int:
    cfg = _load_config(args.config)
    arr_cfg = _section(cfg, "array")
    layout = _array_layout(cfg)
    f = float(arr_cfg.get("frequency_hz", 11.7e9))
    theta, phi = farfield.default_grid(float(arr_cfg.get("grid_step_deg", 0.25)))

    if arr_cfg.get("excitations", "uniform") == "feed":
        tree = _build_tree(cfg, _catalog(cfg))
        if tree.n_outputs != layout.count:
            raise ArgumentError(
                f"feed tree outputs ({tree.n_outputs}) != array elements "
                f"({layout.count})")
        excitations = leaf_excitations(tree, f)
    else:
        excitations = farfield.uniform_excitations(layout)

    pattern = farfield.array_factor(layout, excitations, f, theta, phi)
    model = _element_model(arr_cfg)
    if model.kind != "isotropic":
        pattern = farfield.apply_element_pattern(pattern, model)
    metrics = farfield.pattern_metrics(pattern)

    paths = [
        report.write_metrics_json(out_dir / "metrics.json", metrics.to_dict()),
        report.write_pattern_csv(out_dir / "pattern.csv", pattern,
                                 cuts_only=not arr_cfg.get("full_sphere_csv", False)),
        report.render_cut_svg(out_dir / "pattern_cut_phi0.svg", pattern, 0.0,
                              "principal cut, phi = 0"),
        report.render_cut_svg(out_dir / "pattern_cut_phi90.svg", pattern,
                              math.pi / 2.0, "principal cut, phi = 90 deg"),
    ]
    print(f"directivity {metrics.directivity_dbi:.2f} dBi, "
          f"SLL {metrics.sll_db:.2f} dB, "
          f"HPBW {metrics.hpbw_deg['phi=0']:.2f} deg")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_budget(args, out_dir: Path) -> int:
    cfg = _load_config(args.config)
    catalog = _catalog(cfg)
    tree = _build_tree(cfg, catalog)
    band = _band(cfg)
    arr_cfg = _section(cfg, "array")
    layout = _array_layout(cfg)
    efficiency = float(arr_cfg.get("element_efficiency", 0.95))
    worst_s11_db = float(arr_cfg.get("worst_band_s11_db", -15.0))
    n_freqs = int(arr_cfg.get("n_freqs", 21))

    freqs = np.linspace(band[0], band[1], n_freqs)
    budget_rows, gain_rows = [], []
    s11 = 10.0 ** (worst_s11_db / 20.0)
    area = layout.extent[0] * layout.extent[1]
    for f in freqs:
        budget = network_loss_budget(tree, f)
        budget_rows.append({"frequency_Hz": f, **budget.to_dict()})
        d_ap = 10.0 * math.log10(4.0 * math.pi * area * (f / farfield.C0) ** 2)
        gain = farfield.realized_gain(d_ap, efficiency, budget, s11)
        gain_rows.append({
            "frequency_Hz": f,
            "directivity_dBi": round(d_ap, 6),
            "efficiency_dB": round(10.0 * math.log10(efficiency), 6),
            "dissipative_dB": round(-budget.dissipative_db, 6),
            "connector_mismatch_dB": round(-budget.mismatch_db, 6),
            "reflection_dB": round(10.0 * math.log10(1.0 - s11**2), 6),
            "realized_gain_dBi": round(gain, 6),
        })
    paths = [
        report.write_budget_csv(out_dir / "budget.csv", budget_rows),
        report.render_budget_svg(out_dir / "budget.svg", budget_rows),
        report.write_gain_csv(out_dir / "realized_gain.csv", gain_rows),
        report.render_gain_svg(out_dir / "realized_gain.svg", gain_rows,
                               floor_dbi=27.0),
    ]
    worst = min(r["realized_gain_dBi"] for r in gain_rows)
    print(f"worst in-band realized gain {worst:.2f} dBi "
          f"(aperture-model directivity, |S11| = {worst_s11_db:g} dB)")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_optimize(args, out_dir: Path) -> int:
    cfg = _load_config(args.config)
    opt_cfg = cfg.get("optimize", {})
    targets = opt_cfg.get("targets", {})
    band = _band(cfg) if "band" in cfg else (10.7e9, 12.7e9)
    spec = ObjectiveSpec(
        band=band,
        s11_target_db=float(targets.get("s11_db", -20.0)),
        efficiency_target=float(targets.get("efficiency", 0.95)),
        fb_target_db=float(targets.get("fb_db", 15.0)),
        gain_slope_target=float(targets.get("gain_slope", 0.0)),
        weights=opt_cfg.get("weights", {g: 1.0 for g in ("s11", "efficiency", "front_to_back", "gain_slope")}))
    models = DesignModels()
    seed = seeded_feasible_design(spec, models)

    try:
        if opt_cfg.get("bounds"):
            lower = np.array([opt_cfg["bounds"][n][0] for n in PARAM_NAMES])
            upper = np.array([opt_cfg["bounds"][n][1] for n in PARAM_NAMES])
        else:
            lower, upper = seed.lower, seed.upper
        if opt_cfg.get("x0"):
            values = np.array([float(opt_cfg["x0"][n]) for n in PARAM_NAMES])
        else:
            values = seed.values * float(opt_cfg.get("perturb_factor", 1.05))
    except KeyError as exc:
        raise ArgumentError(
            f"optimize config must name every parameter; missing {exc} "
            f"(order: {', '.join(PARAM_NAMES)})") from None
    x0 = DesignVector(np.clip(values, lower, upper), lower, upper)

    tol = opt_cfg.get("tolerances", {})

    def fn(vals):
        return objective(x0.replace_values(np.clip(vals, lower, upper)),
                         spec, models)

    result = trust_region_minimize(
        fn, x0.values, list(zip(lower, upper)),
        tol_x=float(tol.get("tol_x", 1e-9)), tol_f=float(tol.get("tol_f", 1e-12)),
        max_iterations=int(opt_cfg.get("max_iterations", 200)),
        max_evals=int(opt_cfg.get("max_evals", 1000)))

    rows = []
    for rec in result.history:
        value = objective(x0.replace_values(rec.x_best), spec, models)
        row = {"iteration": rec.iteration,
               "objective_best": rec.f_best,
               "objective_candidate": rec.f_candidate,
               "accepted": int(rec.accepted),
               "n_evals": rec.n_evals}
        row.update({f"component_{g}": v for g, v in value.components.items()})
        row.update({name: x for name, x in zip(PARAM_NAMES, rec.x_best)})
        rows.append(row)
    best = objective(x0.replace_values(result.x_best), spec, models)
    best_doc = {
        "objective": result.f_best,
        "status": result.status,
        "n_evals": result.n_evals,
        "components": best.components,
        "details": best.details,
        "parameters": {n: float(v) for n, v in zip(PARAM_NAMES, result.x_best)},
    }
    paths = [report.write_metrics_json(out_dir / "best.json", best_doc)]
    if rows:
        paths.append(report.write_history_csv(out_dir / "history.csv", rows))
        paths.append(report.render_history_svg(out_dir / "history.svg", rows))
    print(f"objective {result.f_best:.6g} after {result.n_evals} evaluations "
          f"({result.status})")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_export(args, out_dir: Path) -> int:
    cfg = _load_config(args.config)
    catalog = _catalog(cfg)
    uc = cfg.get("unit_cell", {})
    if "cell_json" in uc:
        cell = UnitCellGeometry.from_json(Path(uc["cell_json"]).read_text())
    else:
        period = uc.get("period_m")
        cell = synth_unitcell(_band(cfg), _stack(cfg, catalog),
                              period=None if period is None else float(period),
                              gap=float(uc.get("gap_m", 0.40e-3)))
    layout = _array_layout(cfg)
    doc = geometry.export_geometry(cell, layout)
    path = out_dir / "geometry.json"
    path.write_text(geometry.geometry_json(doc), encoding="utf-8")
    paths = [path] + report.render_layers_svg(out_dir, doc)
    for note in doc["notes"]:
        print(f"note: {note}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_touchstone_convert(args, out_dir: Path) -> int:
    src = Path(args.input)
    if not src.exists():
        raise ArgumentError(f"input file not found: {src}")
    n_ports = None
    suffix = src.suffix.lower()
    if len(suffix) == 4 and suffix.startswith(".s") and suffix.endswith("p"):
        try:
            n_ports = int(suffix[2])
        except ValueError:
            n_ports = None
    doc = parse_touchstone_document(src.read_text(encoding="utf-8"), n_ports)
    text = write_touchstone(doc.block, args.format, comments=doc.comments)
    dest = out_dir / f"{src.stem}_{args.format.lower()}{src.suffix}"
    dest.write_text(text, encoding="utf-8")
    print(f"wrote {dest} ({doc.block.n_ports}-port, "
          f"{doc.block.freqs.size} frequencies, {doc.data_format} -> "
          f"{args.format.upper()})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arraysynth",
        description="Metasurface patch-array design and analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.set_defaults(func=func)
        return p

    add("synth-unitcell", cmd_synth_unitcell,
        "synthesize a unit cell and write the geometry + report")
    add("synth-feed", cmd_synth_feed, "build the corporate feed tree")
    add("pattern", cmd_pattern, "compute the far-field pattern and metrics")
    add("budget", cmd_budget, "itemized feed and realized-gain budgets")
    add("optimize", cmd_optimize, "run the trust-region design optimization")
    add("export", cmd_export, "export layered geometry JSON + SVG previews")

    ts = sub.add_parser("touchstone", help="Touchstone file utilities")
    ts_sub = ts.add_subparsers(dest="ts_command", required=True)
    conv = ts_sub.add_parser("convert", help="re-emit a file in another format")
    conv.add_argument("input", help="source .s1p-.s4p file")
    conv.add_argument("--format", default="RI", choices=["RI", "MA", "DB"],
                      help="output number format")
    conv.add_argument("--out", default="out", help="output directory")
    conv.set_defaults(func=cmd_touchstone_convert)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return args.func(args, out_dir)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
