"""Report writers: delimited outputs plus matplotlib figures next to them.

Every report function writes files under a caller-supplied directory and
returns the paths it created. Figures are rendered headless to SVG.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .farfield import FarFieldPattern, principal_cut

_DB_FLOOR = -120.0


def _figure(width: float = 6.4, height: float = 4.0):
    fig, ax = plt.subplots(figsize=(width, height))
    ax.grid(True, alpha=0.4)
    return fig, ax


def _to_db(power: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, 10.0 ** (_DB_FLOOR / 10.0)))


def write_metrics_json(path: Path, metrics: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def write_budget_csv(path: Path, rows: list[dict]) -> Path:
    """Budget rows: frequency_Hz, split_dB, dissipative_dB, mismatch_dB, total_dB."""
    path = Path(path)
    fields = ["frequency_Hz", "split_dB", "dissipative_dB", "mismatch_dB", "total_dB"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    return path


def render_budget_svg(path: Path, rows: list[dict]) -> Path:
    path = Path(path)
    f_ghz = [r["frequency_Hz"] / 1e9 for r in rows]
    fig, ax = _figure()
    for key in ("split_dB", "dissipative_dB", "mismatch_dB", "total_dB"):
        ax.plot(f_ghz, [r[key] for r in rows], label=key.replace("_dB", ""))
    ax.set_xlabel("frequency (GHz)")
    ax.set_ylabel("budget term (dB)")
    ax.legend()
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def write_gain_csv(path: Path, rows: list[dict]) -> Path:
    """Itemized realized-gain rows, one per frequency."""
    path = Path(path)
    fields = ["frequency_Hz", "directivity_dBi", "efficiency_dB",
              "dissipative_dB", "connector_mismatch_dB", "reflection_dB",
              "realized_gain_dBi"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    return path


def render_gain_svg(path: Path, rows: list[dict], floor_dbi: float | None = None) -> Path:
    path = Path(path)
    f_ghz = [r["frequency_Hz"] / 1e9 for r in rows]
    fig, ax = _figure()
    ax.plot(f_ghz, [r["directivity_dBi"] for r in rows], label="directivity")
    ax.plot(f_ghz, [r["realized_gain_dBi"] for r in rows], label="realized gain")
    if floor_dbi is not None:
        ax.axhline(floor_dbi, color="k", linestyle="--", linewidth=1,
                   label=f"{floor_dbi:g} dBi floor")
    ax.set_xlabel("frequency (GHz)")
    ax.set_ylabel("dBi")
    ax.legend()
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def write_pattern_csv(path: Path, pattern: FarFieldPattern,
                      cuts_only: bool = True) -> Path:
    """Pattern samples as theta_deg, phi_deg, power_dB rows.

    By default only the phi = 0 and phi = 90 degree principal cuts are
    written; set ``cuts_only=False`` for the full sphere.
    """
    path = Path(path)
    u = pattern.power()
    peak = float(np.max(u))
    udb = _to_db(u / peak if peak > 0 else u)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "phi_deg", "power_dB"])
        if cuts_only:
            for phi_c in (0.0, math.pi / 2.0):
                col = int(np.argmin(np.abs(pattern.phi - phi_c)))
                for i, t in enumerate(pattern.theta):
                    writer.writerow([f"{math.degrees(t):.4f}",
                                     f"{math.degrees(pattern.phi[col]):.4f}",
                                     f"{udb[i, col]:.4f}"])
        else:
            for i, t in enumerate(pattern.theta):
                for j, p in enumerate(pattern.phi):
                    writer.writerow([f"{math.degrees(t):.4f}",
                                     f"{math.degrees(p):.4f}",
                                     f"{udb[i, j]:.4f}"])
    return path


def render_cut_svg(path: Path, pattern: FarFieldPattern, phi_value: float,
                   label: str) -> Path:
    path = Path(path)
    ang, val = principal_cut(pattern, phi_value)
    peak = float(np.max(val))
    fig, ax = _figure()
    ax.plot(np.degrees(ang), _to_db(val / peak if peak > 0 else val))
    ax.set_xlabel("angle from broadside (deg)")
    ax.set_ylabel("normalized power (dB)")
    ax.set_ylim(-80, 2)
    ax.set_title(label)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def render_layers_svg(out_dir: Path, doc: dict) -> list[Path]:
    """One SVG preview per conductor layer of a geometry document."""
    out_dir = Path(out_dir)
    ex, ey = doc["array"]["extent_m"]
    paths = []
    for name, layer in doc["layers"].items():
        fig, ax = plt.subplots(figsize=(6.0, 6.0))
        if "outer_rects" in layer:
            for r in layer["outer_rects"]:
                ax.add_patch(plt.Rectangle((r["x"] * 1e3, r["y"] * 1e3),
                                           r["w"] * 1e3, r["h"] * 1e3,
                                           facecolor="0.8", edgecolor="none"))
            for r in layer["cutouts"]:
                ax.add_patch(plt.Rectangle((r["x"] * 1e3, r["y"] * 1e3),
                                           r["w"] * 1e3, r["h"] * 1e3,
                                           facecolor="white", edgecolor="none"))
        else:
            for r in layer["rects"]:
                ax.add_patch(plt.Rectangle((r["x"] * 1e3, r["y"] * 1e3),
                                           r["w"] * 1e3, r["h"] * 1e3,
                                           facecolor="0.3", edgecolor="none"))
        ax.set_xlim(0, ex * 1e3)
        ax.set_ylim(0, ey * 1e3)
        ax.set_aspect("equal")
        ax.set_xlabel("x (mm)")
        ax.set_ylabel("y (mm)")
        ax.set_title(f"{name}: {layer['role']}")
        path = out_dir / f"layer_{name}.svg"
        fig.savefig(path, format="svg", bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def write_history_csv(path: Path, rows: list[dict]) -> Path:
    """Optimizer history: iteration, objective, goal components, parameters."""
    path = Path(path)
    if not rows:
        raise ValueError("history is empty")
    fields = list(rows[0].keys())
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    return path


def render_history_svg(path: Path, rows: list[dict]) -> Path:
    path = Path(path)
    fig, ax = _figure()
    ax.semilogy([r["iteration"] for r in rows],
                [max(r["objective_best"], 1e-16) for r in rows])
    ax.set_xlabel("iteration")
    ax.set_ylabel("best objective")
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path
