"""Closed-form quasi-static microstrip analysis and synthesis.

Hammerstad-style formulas (both the narrow w/h < 1 and wide w/h >= 1
branches) for effective permittivity and characteristic impedance, plus
width synthesis by bisection, guided wavelength and a first-order
dielectric/conductor loss model. Everything here is a pure function of its
inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

from .constants import C0, ETA0, MU0
from .errors import DomainError, RangeError

# Bisection bounds for width synthesis, in units of substrate height.
WIDTH_LO_FACTOR = 0.01
WIDTH_HI_FACTOR = 100.0
Z_SYNTH_TOL = 0.01  # ohm

_NP_TO_DB = 20.0 / math.log(10.0)


@dataclass(frozen=True)
class Substrate:
    """A single dielectric layer with its conductor properties.

    eps_r : relative permittivity (>= 1; 1 models air)
    tan_delta : loss tangent (>= 0)
    height : dielectric thickness in meters (> 0)
    conductor_thickness : metal thickness in meters (>= 0)
    conductivity : metal conductivity in S/m (> 0; may be ``inf``)
    """

    eps_r: float
    tan_delta: float
    height: float
    conductor_thickness: float = 35e-6
    conductivity: float = 5.8e7
    name: str = ""

    def __post_init__(self):
        if self.eps_r < 1.0:
            raise DomainError(f"eps_r must be >= 1, got {self.eps_r}")
        if self.height <= 0.0:
            raise DomainError(f"height must be > 0, got {self.height}")
        if self.tan_delta < 0.0:
            raise DomainError(f"tan_delta must be >= 0, got {self.tan_delta}")
        if self.conductor_thickness < 0.0:
            raise DomainError("conductor_thickness must be >= 0")
        if not self.conductivity > 0.0:
            raise DomainError("conductivity must be > 0")

    def with_height(self, height: float) -> "Substrate":
        return Substrate(self.eps_r, self.tan_delta, height,
                         self.conductor_thickness, self.conductivity, self.name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "eps_r": self.eps_r,
            "tan_delta": self.tan_delta,
            "height_m": self.height,
            "conductor_thickness_m": self.conductor_thickness,
            "conductivity_S_per_m": self.conductivity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Substrate":
        return cls(
            eps_r=float(d["eps_r"]),
            tan_delta=float(d["tan_delta"]),
            height=float(d["height_m"]),
            conductor_thickness=float(d.get("conductor_thickness_m", 35e-6)),
            conductivity=float(d.get("conductivity_S_per_m", 5.8e7)),
            name=str(d.get("name", "")),
        )


@dataclass(frozen=True)
class MicrostripLine:
    """A microstrip segment: width and length on a given substrate."""

    width: float
    length: float
    substrate: Substrate

    def __post_init__(self):
        if self.width <= 0.0:
            raise DomainError(f"width must be > 0, got {self.width}")
        if self.length < 0.0:
            raise DomainError(f"length must be >= 0, got {self.length}")


def eps_eff(substrate: Substrate, width: float) -> float:
    """Quasi-static effective permittivity of a microstrip line.

    Uses the Hammerstad closed form; the w/h < 1 branch adds the narrow-line
    correction term and the two branches are continuous at w/h = 1.
    """
    if width <= 0.0:
        raise DomainError(f"width must be > 0, got {width}")
    er = substrate.eps_r
    u = width / substrate.height
    base = (er + 1.0) / 2.0
    slope = (er - 1.0) / 2.0
    f = (1.0 + 12.0 / u) ** -0.5
    if u < 1.0:
        f += 0.04 * (1.0 - u) ** 2
    return base + slope * f


def z0_analyze(substrate: Substrate, width: float) -> float:
    """Characteristic impedance (ohm) of a microstrip line.

    Narrow branch (w/h <= 1): 60/sqrt(ee) * ln(8h/w + w/4h).
    Wide branch (w/h > 1): eta0 / (sqrt(ee) * (u + 1.393 + 0.667*ln(u + 1.444))).
    Strictly decreasing in width for a fixed substrate.
    """
    ee = eps_eff(substrate, width)
    u = width / substrate.height
    if u <= 1.0:
        return 60.0 / math.sqrt(ee) * math.log(8.0 / u + u / 4.0)
    return ETA0 / (math.sqrt(ee) * (u + 1.393 + 0.667 * math.log(u + 1.444)))


def achievable_z0_range(substrate: Substrate) -> tuple[float, float]:
    """(min, max) impedance reachable within the synthesis width bounds."""
    h = substrate.height
    return (z0_analyze(substrate, WIDTH_HI_FACTOR * h),
            z0_analyze(substrate, WIDTH_LO_FACTOR * h))


def width_synthesize(substrate: Substrate, z_target: float) -> float:
    """Width (m) whose characteristic impedance matches ``z_target``.

    Deterministic bisection on the monotone analysis curve over widths in
    [h/100, 100h]. Raises :class:`RangeError` reporting the achievable
    interval when the target lies outside it.
    """
    if z_target <= 0.0:
        raise DomainError(f"z_target must be > 0, got {z_target}")
    z_min, z_max = achievable_z0_range(substrate)
    if not (z_min <= z_target <= z_max):
        raise RangeError(
            f"target {z_target:.4g} ohm outside achievable "
            f"[{z_min:.4g}, {z_max:.4g}] ohm for this substrate",
            achievable=(z_min, z_max),
        )
    h = substrate.height
    lo, hi = WIDTH_LO_FACTOR * h, WIDTH_HI_FACTOR * h  # z(lo) = z_max, z(hi) = z_min
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        z_mid = z0_analyze(substrate, mid)
        if abs(z_mid - z_target) <= 1e-6:
            return mid
        if z_mid > z_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-18 * h:
            break
    return 0.5 * (lo + hi)


def guided_wavelength(substrate: Substrate, width: float, f: float) -> float:
    """Guided wavelength c / (f * sqrt(eps_eff)) in meters."""
    if f <= 0.0:
        raise DomainError(f"frequency must be > 0, got {f}")
    return C0 / (f * math.sqrt(eps_eff(substrate, width)))


def line_loss(line: MicrostripLine, f: float) -> float:
    """Total attenuation (dB) of a line segment at frequency ``f``.

    Sum of quasi-static dielectric loss (from tan_delta via the filling
    factor) and skin-effect conductor loss Rs/(Z0*w), both linear in length.
    """
    if f <= 0.0:
        raise DomainError(f"frequency must be > 0, got {f}")
    sub = line.substrate
    ee = eps_eff(sub, line.width)
    k0 = 2.0 * math.pi * f / C0
    if sub.eps_r > 1.0:
        alpha_d = (k0 * sub.eps_r * (ee - 1.0) * sub.tan_delta
                   / (2.0 * math.sqrt(ee) * (sub.eps_r - 1.0)))
    else:
        # homogeneous limit: air "substrate" with a nonzero tan_delta
        alpha_d = k0 * math.sqrt(ee) * sub.tan_delta / 2.0
    if math.isinf(sub.conductivity):
        alpha_c = 0.0
    else:
        rs = math.sqrt(math.pi * f * MU0 / sub.conductivity)
        alpha_c = rs / (z0_analyze(sub, line.width) * line.width)
    return (alpha_d + alpha_c) * _NP_TO_DB * line.length


def load_substrate_catalog(path: str | None = None) -> dict[str, Substrate]:
    """Load a substrate catalog JSON (bundled defaults when ``path`` is None).

    The file is an array of objects with keys
    name, eps_r, tan_delta, height_m, conductor_thickness_m,
    conductivity_S_per_m.
    """
    if path is None:
        text = resources.files("arraysynth.data").joinpath("substrates.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    entries = json.loads(text)
    catalog = {}
    for entry in entries:
        sub = Substrate.from_dict(entry)
        catalog[sub.name] = sub
    return catalog
