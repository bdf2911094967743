"""Unit-cell synthesis and the analytic reflection surrogate.

The cell stacks four conductor layers: L1 a 4x4 grid of via-less
Sievenpiper patches, L2 the radiating patch, L3 the cross-slotted ground,
L4 the feed line. Closed-form rules size the patch and slot; a two
coupled-resonator circuit stands in for the cell's input reflection so the
rest of the toolkit can sweep and optimize without a field solver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .constants import C0, C_DESIGN, EPS0, MU0
from .errors import DomainError, ValidationError
from .msline import Substrate, eps_eff

DEFAULT_MS_GAP = 0.40e-3  # metasurface inter-patch gap (m)


@dataclass(frozen=True)
class PatchDims:
    """Resonant length L and width W of the radiating patch (meters)."""

    L: float
    W: float

    def __post_init__(self):
        if self.L <= 0.0 or self.W <= 0.0:
            raise DomainError("patch dimensions must be > 0")


@dataclass(frozen=True)
class ApertureDims:
    """Coupling-slot length and width (meters)."""

    a_L: float
    a_W: float

    def __post_init__(self):
        if self.a_L < 0.0 or self.a_W < 0.0:
            raise DomainError("aperture dimensions must be >= 0")


@dataclass(frozen=True)
class LayerStack:
    """Dielectrics between the four conductor layers, top to bottom.

    spacer : between the metasurface (L1) and the patch (L2)
    patch_core : between the patch (L2) and the slotted ground (L3)
    feed_core : between the slotted ground (L3) and the feed (L4)
    """

    spacer: Substrate
    patch_core: Substrate
    feed_core: Substrate

    @property
    def layers(self) -> tuple[Substrate, Substrate, Substrate]:
        return (self.spacer, self.patch_core, self.feed_core)

    def to_dict(self) -> dict:
        return {
            "spacer": self.spacer.to_dict(),
            "patch_core": self.patch_core.to_dict(),
            "feed_core": self.feed_core.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayerStack":
        return cls(
            spacer=Substrate.from_dict(d["spacer"]),
            patch_core=Substrate.from_dict(d["patch_core"]),
            feed_core=Substrate.from_dict(d["feed_core"]),
        )


def default_stack() -> LayerStack:
    """FR-4 spacer over the 1.524 mm patch core and 0.813 mm feed core."""
    return LayerStack(
        spacer=Substrate(4.4, 0.02, 0.2e-3, name="FR-4"),
        patch_core=Substrate(3.38, 0.0027, 1.524e-3, name="RO4003C"),
        feed_core=Substrate(3.38, 0.0027, 0.813e-3, name="RO4003C"),
    )


@dataclass(frozen=True)
class UnitCellGeometry:
    """All planar dimensions of one unit cell, in meters.

    w1, l1 : cell period; dx, dy : metasurface inter-patch gaps;
    wu, lu : Sievenpiper patch size; ws, ls : cross-slot arm length/width;
    wp, lp : radiating patch size; stack : dielectric layer stack.
    """

    w1: float
    l1: float
    dx: float
    dy: float
    wu: float
    lu: float
    ws: float
    ls: float
    wp: float
    lp: float
    stack: LayerStack = field(default_factory=default_stack)

    def __post_init__(self):
        violations = self.violations()
        if violations:
            raise ValidationError(violations)

    def violations(self) -> list[str]:
        out = []
        for name in ("w1", "l1", "dx", "dy", "wu", "lu", "ws", "ls", "wp", "lp"):
            if getattr(self, name) <= 0.0:
                out.append(f"{name} must be > 0")
        if not out:
            if 4.0 * self.wu + 3.0 * self.dx > self.w1 * (1.0 + 1e-12):
                out.append("4*wu + 3*dx exceeds the cell period w1")
            if 4.0 * self.lu + 3.0 * self.dy > self.l1 * (1.0 + 1e-12):
                out.append("4*lu + 3*dy exceeds the cell period l1")
            if self.wp > self.w1 or self.lp > self.l1:
                out.append("patch does not fit inside the cell period")
            if max(self.ws, self.ls) > min(self.wp, self.lp):
                out.append("cross slot does not fit under the patch footprint")
        return out

    def to_dict(self) -> dict:
        return {
            "units": "m",
            "w1_m": self.w1, "l1_m": self.l1,
            "dx_m": self.dx, "dy_m": self.dy,
            "wu_m": self.wu, "lu_m": self.lu,
            "ws_m": self.ws, "ls_m": self.ls,
            "wp_m": self.wp, "lp_m": self.lp,
            "stack": self.stack.to_dict(),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "UnitCellGeometry":
        stack = LayerStack.from_dict(d["stack"]) if "stack" in d else default_stack()
        return cls(
            w1=float(d["w1_m"]), l1=float(d["l1_m"]),
            dx=float(d["dx_m"]), dy=float(d["dy_m"]),
            wu=float(d["wu_m"]), lu=float(d["lu_m"]),
            ws=float(d["ws_m"]), ls=float(d["ls_m"]),
            wp=float(d["wp_m"]), lp=float(d["lp_m"]),
            stack=stack,
        )

    @classmethod
    def from_json(cls, text: str) -> "UnitCellGeometry":
        return cls.from_dict(json.loads(text))


def patch_resonant_length(f0: float, eps_eff_value: float) -> float:
    """Resonant patch length: c / (2 f0 sqrt(eps_eff)).

    Uses the rounded design-rule speed of light (3e8 m/s) so tabulated
    values reproduce exactly. The fringing-length correction is deliberately
    omitted; see :func:`synthesis_report` for the resulting caveats.
    """
    if f0 <= 0.0:
        raise DomainError(f"f0 must be > 0, got {f0}")
    if eps_eff_value < 1.0:
        raise DomainError(f"eps_eff must be >= 1, got {eps_eff_value}")
    return C_DESIGN / (2.0 * f0 * math.sqrt(eps_eff_value))


def patch_resonant_freq(length: float, eps_eff_value: float) -> float:
    """Inverse of :func:`patch_resonant_length`; exact round trip."""
    if length <= 0.0:
        raise DomainError(f"length must be > 0, got {length}")
    if eps_eff_value < 1.0:
        raise DomainError(f"eps_eff must be >= 1, got {eps_eff_value}")
    return C_DESIGN / (2.0 * length * math.sqrt(eps_eff_value))


def aperture_dims(patch: PatchDims) -> ApertureDims:
    """Coupling-slot size: one tenth of the patch dimensions."""
    return ApertureDims(a_L=patch.L / 10.0, a_W=patch.W / 10.0)


def sievenpiper_resonance(patch_size: float, gap: float, h: float,
                          eps_r: float) -> float:
    """First-order resonance (Hz) of a via-less Sievenpiper grid.

    Sheet inductance L = mu0*h; fringing gap capacitance
    C = w*eps0*(1+eps_r)/pi * acosh((w+g)/g); f = 1/(2*pi*sqrt(L*C)).
    Scales exactly as 1/sqrt(h).
    """
    if patch_size <= 0.0 or gap <= 0.0 or h <= 0.0 or eps_r <= 0.0:
        raise DomainError("all Sievenpiper estimator inputs must be > 0")
    l_sheet = MU0 * h
    c_gap = (patch_size * EPS0 * (1.0 + eps_r) / math.pi
             * math.acosh((patch_size + gap) / gap))
    return 1.0 / (2.0 * math.pi * math.sqrt(l_sheet * c_gap))


@dataclass(frozen=True)
class SurrogateParams:
    """Two-coupled-resonator surrogate for the cell's input reflection.

    A source (reference ``z_ref``) couples through an ideal inverter of
    normalized strength ``k_slot`` into the patch resonator
    (``f_patch``, ``Q_patch``), which couples reactively with strength
    ``k_ms`` into the metasurface resonator (``f_ms``, ``Q_ms``).
    ``k_slot = 1`` is critical input coupling: a decoupled (``k_ms = 0``)
    resonator is then perfectly matched at ``f_patch``.
    """

    f_patch: float
    q_patch: float
    f_ms: float
    q_ms: float
    k_slot: float
    k_ms: float
    z_ref: float = 50.0

    def __post_init__(self):
        if self.f_patch <= 0.0 or self.f_ms <= 0.0:
            raise DomainError("resonance frequencies must be > 0")
        if self.q_patch <= 0.0 or self.q_ms <= 0.0:
            raise DomainError("quality factors must be > 0")
        if not (0.0 < self.k_slot <= 1.0):
            raise DomainError(f"k_slot must be in (0, 1], got {self.k_slot}")
        if not (0.0 <= self.k_ms <= 1.0):
            # k_ms = 0 is the degenerate single-resonator case
            raise DomainError(f"k_ms must be in [0, 1], got {self.k_ms}")
        if self.z_ref <= 0.0:
            raise DomainError("z_ref must be > 0")


def surrogate_s11(params: SurrogateParams, freqs) -> np.ndarray:
    """Complex input reflection of the coupled-resonator surrogate.

    Normalized input admittance (the port reference cancels):

        y_in = k_slot^2 / (y1 + k_ms^2 Q_patch Q_ms / y2),
        y_i = 1 + j Q_i (f/f_i - f_i/f)

    and S11 = (1 - y_in) / (1 + y_in). Passive (|S11| <= 1) for all valid
    parameters; |S11| -> 1 far out of band.
    """
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise DomainError("freqs must be a non-empty 1-D grid")
    if np.any(f <= 0.0):
        raise DomainError("frequencies must be > 0")
    if f.size > 1 and np.any(np.diff(f) <= 0.0):
        raise DomainError("frequencies must be strictly increasing")
    y1 = 1.0 + 1j * params.q_patch * (f / params.f_patch - params.f_patch / f)
    y2 = 1.0 + 1j * params.q_ms * (f / params.f_ms - params.f_ms / f)
    y_in = params.k_slot**2 / (y1 + params.k_ms**2 * params.q_patch * params.q_ms / y2)
    return (1.0 - y_in) / (1.0 + y_in)


def _patch_length_fixed_point(f0: float, substrate: Substrate) -> tuple[float, float]:
    """Solve L = c/(2 f0 sqrt(eps_eff(substrate, L))) for a square patch."""
    ee = (substrate.eps_r + 1.0) / 2.0
    length = patch_resonant_length(f0, ee)
    for _ in range(200):
        ee = eps_eff(substrate, length)
        new_length = patch_resonant_length(f0, ee)
        if abs(new_length - length) <= 1e-15:
            length = new_length
            break
        length = new_length
    return length, eps_eff(substrate, length)


def synth_unitcell(band: tuple[float, float], stack: LayerStack | None = None,
                   *, period: float | None = None,
                   gap: float = DEFAULT_MS_GAP) -> UnitCellGeometry:
    """Synthesize a unit cell for an operating band.

    The patch is sized by the resonant-length rule at the band center
    (self-consistently with the patch-core effective permittivity), the slot
    by the one-tenth rule, and the cell period defaults to half a free-space
    wavelength at the band top (grating-lobe free). Pass ``period`` to pin
    the cell size instead, e.g. to match the bundled reference cell. The
    4x4 metasurface fills the period at the requested gap so that adjacent
    cells continue the grid periodically.
    """
    f_low, f_high = band
    if not (0.0 < f_low < f_high):
        raise DomainError(f"band must satisfy 0 < f_low < f_high, got {band}")
    if gap <= 0.0:
        raise DomainError("metasurface gap must be > 0")
    if stack is None:
        stack = default_stack()

    f0 = 0.5 * (f_low + f_high)
    length, _ = _patch_length_fixed_point(f0, stack.patch_core)
    patch = PatchDims(L=length, W=length)
    slot = aperture_dims(patch)

    if period is None:
        cell = max(C0 / (2.0 * f_high), 1.05 * patch.L)
    else:
        cell = period
    gap_eff = min(gap, cell / 8.0)
    ms_patch = cell / 4.0 - gap_eff

    return UnitCellGeometry(
        w1=cell, l1=cell,
        dx=gap_eff, dy=gap_eff,
        wu=ms_patch, lu=ms_patch,
        ws=slot.a_L, ls=slot.a_W,
        wp=patch.W, lp=patch.L,
        stack=stack,
    )


def reference_cell() -> UnitCellGeometry:
    """The bundled Ku-band reference cell (the full dimension set)."""
    text = resources.files("arraysynth.data").joinpath("reference_cell.json").read_text()
    d = json.loads(text)
    return UnitCellGeometry.from_dict(d["cell"])


def reference_notes() -> dict:
    """Reference figures shipped with the bundled cell (sizes, crossing)."""
    text = resources.files("arraysynth.data").joinpath("reference_cell.json").read_text()
    d = json.loads(text)
    return d["reference"]


def synthesis_report(geom: UnitCellGeometry, band: tuple[float, float]) -> dict:
    """Describe a synthesized cell and flag deviations from the reference.

    The reference design's patch (5.04 mm) is shorter than the closed-form
    resonant length and its slot does not follow the one-tenth rule; both
    discrepancies are reported here, never silently reconciled.
    """
    f0 = 0.5 * (band[0] + band[1])
    ee = eps_eff(geom.stack.patch_core, geom.wp)
    rule_length = patch_resonant_length(f0, ee)
    rule_slot = aperture_dims(PatchDims(L=geom.lp, W=geom.wp))
    ref = reference_cell()
    flags = []
    if abs(geom.lp - ref.lp) > 0.02 * rule_length:
        flags.append(
            f"patch length {geom.lp * 1e3:.3f} mm differs from the reference "
            f"design's {ref.lp * 1e3:.2f} mm; the closed-form length rule does "
            "not capture the metasurface loading that shrinks the patch")
    if abs(ref.ws - rule_slot.a_L) > 1e-6 or abs(ref.ls - rule_slot.a_W) > 1e-6:
        flags.append(
            f"one-tenth slot rule gives {rule_slot.a_L * 1e3:.3f} x "
            f"{rule_slot.a_W * 1e3:.3f} mm; the reference design uses "
            f"{ref.ws * 1e3:.2f} x {ref.ls * 1e3:.2f} mm (kept as-is)")
    return {
        "f0_hz": f0,
        "eps_eff": ee,
        "rule_patch_length_m": rule_length,
        "rule_slot_m": [rule_slot.a_L, rule_slot.a_W],
        "cell": geom.to_dict(),
        "reference_cell": ref.to_dict(),
        "discrepancy_flags": flags,
    }
