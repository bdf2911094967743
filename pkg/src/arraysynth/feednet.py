"""Wilkinson dividers, the corporate feed tree, and network algebra.

The divider model is exact even/odd-mode circuit analysis of two
quarter-wave branches (impedance sqrt(2)*Z0) bridged by a 2*Z0 resistor,
evaluated from ABCD parameters so band-edge behavior is meaningful, not a
narrowband approximation. Dissipation is modeled as matched attenuation on
the output paths so leaf and budget arithmetic stay exact path products.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np

from .constants import C0
from .errors import ArgumentError, DomainError, ValidationError
from .msline import (MicrostripLine, Substrate, eps_eff, guided_wavelength,
                     line_loss, width_synthesize, z0_analyze)

_NP_PER_DB = math.log(10.0) / 20.0


@dataclass
class SParameterBlock:
    """n-port scattering data over a frequency grid.

    data has shape (n_freqs, n_ports, n_ports); ``s(i, j)`` uses 1-based
    port numbering. Blocks flagged ``lossless`` must be unitary to 1e-9.
    """

    n_ports: int
    freqs: np.ndarray
    data: np.ndarray
    z_ref: float = 50.0
    lossless: bool = False

    def __post_init__(self):
        self.freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float))
        self.data = np.asarray(self.data, dtype=complex)
        if self.freqs.ndim != 1 or self.freqs.size == 0:
            raise ValidationError("frequency grid must be non-empty and 1-D")
        if self.freqs.size > 1 and np.any(np.diff(self.freqs) <= 0.0):
            raise ValidationError("frequency grid must be strictly increasing")
        if np.any(self.freqs <= 0.0):
            raise ValidationError("frequencies must be > 0")
        expected = (self.freqs.size, self.n_ports, self.n_ports)
        if self.data.shape != expected:
            raise ValidationError(
                f"data shape {self.data.shape} inconsistent with {expected}")
        if self.z_ref <= 0.0:
            raise ValidationError("z_ref must be > 0")
        if self.lossless:
            gram = np.einsum("fki,fkj->fij", self.data.conj(), self.data)
            eye = np.eye(self.n_ports)
            if np.max(np.abs(gram - eye)) > 1e-9:
                raise ValidationError("lossless-flagged block is not unitary within 1e-9")

    def s(self, i: int, j: int) -> np.ndarray:
        """S_ij over the grid, 1-based ports."""
        return self.data[:, i - 1, j - 1]

    def is_reciprocal(self, tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.data - np.transpose(self.data, (0, 2, 1)))) <= tol)


@dataclass(frozen=True)
class ConnectorSpec:
    """Lumped stand-in for the input connector: reflection + insertion loss."""

    return_loss_db: float = 20.0
    insertion_loss_db: float = 0.0

    def __post_init__(self):
        if self.return_loss_db <= 0.0:
            raise DomainError("connector return loss must be > 0 dB")
        if self.insertion_loss_db < 0.0:
            raise DomainError("connector insertion loss must be >= 0 dB")

    @property
    def gamma(self) -> float:
        return 10.0 ** (-self.return_loss_db / 20.0)

    @property
    def mismatch_db(self) -> float:
        return -10.0 * math.log10(1.0 - self.gamma**2)


@dataclass(frozen=True)
class WilkinsonStage:
    """One divider rank of the corporate tree."""

    quarter_wave_z: float
    resistor: float
    branch_line: MicrostripLine
    interconnects: tuple[MicrostripLine, ...] = ()


@dataclass(frozen=True)
class FeedTree:
    """Binary corporate feed of equal-path Wilkinson stages."""

    depth: int
    stages: tuple[WilkinsonStage, ...]
    f0: float
    z_ref: float = 50.0
    stage_loss_db: float = 0.0
    connector: ConnectorSpec | None = None

    def __post_init__(self):
        if self.depth < 1 or len(self.stages) != self.depth:
            raise ValidationError("stage count must equal tree depth >= 1")
        if self.f0 <= 0.0 or self.z_ref <= 0.0:
            raise ValidationError("f0 and z_ref must be > 0")
        if self.stage_loss_db < 0.0:
            raise ValidationError("stage_loss_db must be >= 0")
        z_q = math.sqrt(2.0) * self.z_ref
        for k, stage in enumerate(self.stages):
            if abs(stage.quarter_wave_z - z_q) > 1e-3 * z_q:
                raise ValidationError(
                    f"stage {k} impedance {stage.quarter_wave_z:.4g} not within "
                    f"0.1% of sqrt(2)*z_ref = {z_q:.4g}")
            if stage.resistor != 2.0 * self.z_ref:
                raise ValidationError(
                    f"stage {k} resistor {stage.resistor:.4g} != 2*z_ref")

    @property
    def n_outputs(self) -> int:
        return 2 ** self.depth

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "f0_hz": self.f0,
            "z_ref_ohm": self.z_ref,
            "stage_loss_db": self.stage_loss_db,
            "connector": None if self.connector is None else {
                "return_loss_db": self.connector.return_loss_db,
                "insertion_loss_db": self.connector.insertion_loss_db,
            },
            "stages": [
                {
                    "quarter_wave_z_ohm": st.quarter_wave_z,
                    "resistor_ohm": st.resistor,
                    "branch_line": {
                        "width_m": st.branch_line.width,
                        "length_m": st.branch_line.length,
                        "substrate": st.branch_line.substrate.to_dict(),
                    },
                    "interconnects": [
                        {"width_m": seg.width, "length_m": seg.length,
                         "substrate": seg.substrate.to_dict()}
                        for seg in st.interconnects
                    ],
                }
                for st in self.stages
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FeedTree":
        conn = d.get("connector")
        stages = []
        for st in d["stages"]:
            bl = st["branch_line"]
            stages.append(WilkinsonStage(
                quarter_wave_z=float(st["quarter_wave_z_ohm"]),
                resistor=float(st["resistor_ohm"]),
                branch_line=MicrostripLine(
                    float(bl["width_m"]), float(bl["length_m"]),
                    Substrate.from_dict(bl["substrate"])),
                interconnects=tuple(
                    MicrostripLine(float(s["width_m"]), float(s["length_m"]),
                                   Substrate.from_dict(s["substrate"]))
                    for s in st.get("interconnects", ())),
            ))
        return cls(
            depth=int(d["depth"]), stages=tuple(stages), f0=float(d["f0_hz"]),
            z_ref=float(d.get("z_ref_ohm", 50.0)),
            stage_loss_db=float(d.get("stage_loss_db", 0.0)),
            connector=None if conn is None else ConnectorSpec(
                float(conn["return_loss_db"]), float(conn["insertion_loss_db"])),
        )


@dataclass(frozen=True)
class LeafExcitation:
    """Field amplitude/phase delivered to one array element.

    ``index`` is the linear leaf id; the array-factor engine maps it
    row-major onto the lattice as (col, row) = divmod-style
    index = col * n_rows + row.
    """

    index: int
    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise DomainError("amplitude must be >= 0")
        if not math.isfinite(self.phase):
            raise DomainError("phase must be finite")

    @property
    def field(self) -> complex:
        return self.amplitude * cmath.exp(1j * self.phase)


def wilkinson_sparams(f, f0: float, z_ref: float = 50.0,
                      loss_per_section: float = 0.0) -> SParameterBlock:
    """Exact 3-port S-parameters of one Wilkinson divider at frequencies ``f``.

    Quarter-wave branches of impedance sqrt(2)*z_ref (electrical length
    pi/2 * f/f0) and a 2*z_ref isolation resistor, solved by even/odd-mode
    ABCD analysis. ``loss_per_section`` (dB) is applied as matched
    attenuation on each output path, leaving match and isolation exact.
    """
    f_arr = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any(f_arr <= 0.0) or f0 <= 0.0:
        raise DomainError("frequencies must be > 0")
    if f_arr.size > 1 and np.any(np.diff(f_arr) <= 0.0):
        raise DomainError("frequency grid must be strictly increasing")
    if loss_per_section < 0.0:
        raise DomainError("loss_per_section must be >= 0 dB")

    z = z_ref
    z1 = math.sqrt(2.0) * z_ref
    theta = 0.5 * math.pi * f_arr / f0
    a = np.cos(theta)
    b = 1j * z1 * np.sin(theta)
    c = 1j * np.sin(theta) / z1
    d = a

    # port 1 drives the two branches in parallel, resistor carries no current
    s11 = ((a * z + b - 2.0 * z * (c * z + d))
           / (a * z + b + 2.0 * z * (c * z + d)))
    # even-mode half circuit: branch into 2*z at the common node
    gamma_e = ((2.0 * z * a + b - z * (2.0 * z * c + d))
               / (2.0 * z * a + b + z * (2.0 * z * c + d)))
    # odd-mode half circuit: resistor half in parallel with the shorted branch
    gamma_o = -z * d / (2.0 * b + z * d)
    s21 = 2.0 * z / (2.0 * z * a + b + 2.0 * z**2 * c + z * d)
    s22 = 0.5 * (gamma_e + gamma_o)
    s23 = 0.5 * (gamma_e - gamma_o)

    t = 10.0 ** (-loss_per_section / 20.0)
    n = f_arr.size
    s = np.zeros((n, 3, 3), dtype=complex)
    s[:, 0, 0] = s11
    s[:, 0, 1] = s[:, 1, 0] = t * s21
    s[:, 0, 2] = s[:, 2, 0] = t * s21
    s[:, 1, 1] = s[:, 2, 2] = t**2 * s22
    s[:, 1, 2] = s[:, 2, 1] = t**2 * s23
    return SParameterBlock(n_ports=3, freqs=f_arr, data=s, z_ref=z_ref)


def _nearest_powers_of_two(n: int) -> tuple[int, int]:
    lower = 1 << max(1, (n.bit_length() - 1))
    return lower, lower * 2


def build_corporate_tree(n_outputs: int, f0: float, substrate: Substrate,
                         z_ref: float = 50.0, *, stage_loss_db: float = 0.0,
                         connector: ConnectorSpec | None = None) -> FeedTree:
    """Build the equal-path binary corporate tree for ``n_outputs`` leaves.

    Each rank is a Wilkinson stage whose quarter-wave line is synthesized on
    ``substrate`` at sqrt(2)*z_ref and cut to a quarter guided wavelength at
    ``f0``.
    """
    if n_outputs < 2 or (n_outputs & (n_outputs - 1)) != 0:
        lo, hi = _nearest_powers_of_two(max(2, n_outputs))
        raise ArgumentError(
            f"n_outputs must be a power of two >= 2, got {n_outputs} "
            f"(nearest valid counts: {lo}, {hi})")
    if f0 <= 0.0:
        raise DomainError("f0 must be > 0")
    z_q = math.sqrt(2.0) * z_ref
    width = width_synthesize(substrate, z_q)
    length = guided_wavelength(substrate, width, f0) / 4.0
    branch = MicrostripLine(width=width, length=length, substrate=substrate)
    depth = n_outputs.bit_length() - 1
    stages = tuple(
        WilkinsonStage(quarter_wave_z=z_q, resistor=2.0 * z_ref, branch_line=branch)
        for _ in range(depth))
    return FeedTree(depth=depth, stages=stages, f0=f0, z_ref=z_ref,
                    stage_loss_db=stage_loss_db, connector=connector)


# --- two-port elements and ABCD cascading ---------------------------------

class TwoPort:
    """Anything with an ``abcd(f) -> (..., 2, 2)`` matrix."""

    def abcd(self, f) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class RawTwoPort(TwoPort):
    """Frequency-independent ABCD matrix (identity element and friends)."""

    matrix: tuple

    def abcd(self, f):
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        m = np.asarray(self.matrix, dtype=complex).reshape(2, 2)
        return np.broadcast_to(m, (f_arr.size, 2, 2)).copy()


def identity_two_port() -> RawTwoPort:
    return RawTwoPort(((1.0, 0.0), (0.0, 1.0)))


@dataclass(frozen=True)
class SeriesImpedance(TwoPort):
    z: complex

    def abcd(self, f):
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        m = np.zeros((f_arr.size, 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = 1.0
        m[:, 0, 1] = self.z
        return m


@dataclass(frozen=True)
class ShuntAdmittance(TwoPort):
    y: complex

    def abcd(self, f):
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        m = np.zeros((f_arr.size, 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = 1.0
        m[:, 1, 0] = self.y
        return m


@dataclass(frozen=True)
class IdealLine(TwoPort):
    """Dispersionless line: electrical length theta0 (rad) at f0, scaled by f/f0."""

    z0: float
    theta0: float
    f0: float
    loss_db: float = 0.0

    def abcd(self, f):
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        gamma_l = self.loss_db * _NP_PER_DB + 1j * self.theta0 * f_arr / self.f0
        ch, sh = np.cosh(gamma_l), np.sinh(gamma_l)
        m = np.empty((f_arr.size, 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = ch
        m[:, 0, 1] = self.z0 * sh
        m[:, 1, 0] = sh / self.z0
        return m


@dataclass(frozen=True)
class MicrostripSection(TwoPort):
    """Physical microstrip segment; impedance, phase and loss from msline."""

    line: MicrostripLine

    def abcd(self, f):
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        sub = self.line.substrate
        z0 = z0_analyze(sub, self.line.width)
        ee = eps_eff(sub, self.line.width)
        beta_l = 2.0 * math.pi * f_arr * math.sqrt(ee) / C0 * self.line.length
        alpha_l = np.array([line_loss(self.line, fk) for fk in f_arr]) * _NP_PER_DB
        gamma_l = alpha_l + 1j * beta_l
        ch, sh = np.cosh(gamma_l), np.sinh(gamma_l)
        m = np.empty((f_arr.size, 2, 2), dtype=complex)
        m[:, 0, 0] = m[:, 1, 1] = ch
        m[:, 0, 1] = z0 * sh
        m[:, 1, 0] = sh / z0
        return m


@dataclass(frozen=True)
class TwoPortFromS(TwoPort):
    """Adapter so a 2-port SParameterBlock can join an ABCD chain."""

    block: SParameterBlock

    def abcd(self, f):
        f_arr = np.atleast_1d(np.asarray(f, dtype=float))
        if self.block.n_ports != 2:
            raise ArgumentError("only 2-port blocks can join a cascade")
        idx = np.searchsorted(self.block.freqs, f_arr)
        if (np.any(idx >= self.block.freqs.size)
                or np.any(np.abs(self.block.freqs[np.minimum(idx, self.block.freqs.size - 1)] - f_arr) > 1e-6 * np.abs(f_arr))):
            raise ArgumentError("requested frequency not present in the block")
        return s_to_abcd(self.block.data[idx], self.block.z_ref)


def abcd_to_s(m: np.ndarray, z_ref: float) -> np.ndarray:
    """Convert (..., 2, 2) ABCD matrices to S with equal real references."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    den = a + b / z_ref + c * z_ref + d
    s = np.empty_like(m)
    s[..., 0, 0] = (a + b / z_ref - c * z_ref - d) / den
    s[..., 0, 1] = 2.0 * (a * d - b * c) / den
    s[..., 1, 0] = 2.0 / den
    s[..., 1, 1] = (-a + b / z_ref - c * z_ref + d) / den
    return s


def s_to_abcd(s: np.ndarray, z_ref: float) -> np.ndarray:
    """Convert (..., 2, 2) S matrices to ABCD with equal real references."""
    s11, s12 = s[..., 0, 0], s[..., 0, 1]
    s21, s22 = s[..., 1, 0], s[..., 1, 1]
    m = np.empty_like(s)
    m[..., 0, 0] = ((1.0 + s11) * (1.0 - s22) + s12 * s21) / (2.0 * s21)
    m[..., 0, 1] = z_ref * ((1.0 + s11) * (1.0 + s22) - s12 * s21) / (2.0 * s21)
    m[..., 1, 0] = ((1.0 - s11) * (1.0 - s22) - s12 * s21) / (2.0 * s21) / z_ref
    m[..., 1, 1] = ((1.0 - s11) * (1.0 + s22) + s12 * s21) / (2.0 * s21)
    return m


def cascade_abcd(chain, f, z_ref: float = 50.0) -> SParameterBlock:
    """Cascade 2-port elements by ABCD multiplication; return a 2-port block.

    Associative by construction; an identity element leaves any network
    unchanged.
    """
    elements = list(chain)
    if not elements:
        raise ArgumentError("cascade chain must be non-empty")
    f_arr = np.atleast_1d(np.asarray(f, dtype=float))
    total = None
    for el in elements:
        m = el.abcd(f_arr)
        total = m if total is None else total @ m
    return SParameterBlock(n_ports=2, freqs=f_arr,
                           data=abcd_to_s(total, z_ref), z_ref=z_ref)


def input_impedance(chain, f, z_load: complex, z_ref: float = 50.0) -> np.ndarray:
    """Impedance looking into a cascade terminated in ``z_load``."""
    elements = list(chain)
    if not elements:
        raise ArgumentError("cascade chain must be non-empty")
    f_arr = np.atleast_1d(np.asarray(f, dtype=float))
    total = None
    for el in elements:
        m = el.abcd(f_arr)
        total = m if total is None else total @ m
    a, b = total[:, 0, 0], total[:, 0, 1]
    c, d = total[:, 1, 0], total[:, 1, 1]
    return (a * z_load + b) / (c * z_load + d)


def _interconnect_factor(stage: WilkinsonStage, f: float) -> complex:
    """Single-pass field factor of a stage's routing segments."""
    factor = 1.0 + 0.0j
    for seg in stage.interconnects:
        ee = eps_eff(seg.substrate, seg.width)
        beta_l = 2.0 * math.pi * f * math.sqrt(ee) / C0 * seg.length
        alpha_l = line_loss(seg, f) * _NP_PER_DB
        factor *= cmath.exp(-(alpha_l + 1j * beta_l))
    return factor


def leaf_excitations(tree: FeedTree, f: float) -> list[LeafExcitation]:
    """Excitations delivered to every leaf of an equal-path tree.

    Forward single-pass model: the leaf field is the product of each
    stage's through transmission (divider S21 including its matched
    attenuation) and its routing segments; inter-stage reflections are
    neglected. All leaves of a symmetric tree are identical.
    """
    if f <= 0.0:
        raise DomainError("frequency must be > 0")
    block = wilkinson_sparams(f, tree.f0, tree.z_ref, tree.stage_loss_db)
    stage_s21 = complex(block.s(2, 1)[0])
    field_factor = 1.0 + 0.0j
    for stage in tree.stages:
        field_factor *= stage_s21 * _interconnect_factor(stage, f)
    amplitude = abs(field_factor)
    phase = cmath.phase(field_factor)
    return [LeafExcitation(index=k, amplitude=amplitude, phase=phase)
            for k in range(tree.n_outputs)]


@dataclass(frozen=True)
class LossBudget:
    """Itemized feed budget in dB; total is the exact sum of the parts."""

    split_db: float
    dissipative_db: float
    mismatch_db: float

    @property
    def total_db(self) -> float:
        return self.split_db + self.dissipative_db + self.mismatch_db

    def to_dict(self) -> dict:
        return {
            "split_dB": self.split_db,
            "dissipative_dB": self.dissipative_db,
            "mismatch_dB": self.mismatch_db,
            "total_dB": self.total_db,
        }


def network_loss_budget(tree: FeedTree, f: float) -> LossBudget:
    """Split, dissipative and mismatch terms of the corporate feed at ``f``.

    split is power division (not loss, and not subtracted from gain):
    10*log10(n_outputs). Dissipative collects per-stage attenuation, routing
    segment loss and connector insertion loss; mismatch is the connector
    reflection term -10*log10(1 - |gamma|^2).
    """
    if f <= 0.0:
        raise DomainError("frequency must be > 0")
    split = 10.0 * math.log10(tree.n_outputs)
    dissipative = tree.depth * tree.stage_loss_db
    for stage in tree.stages:
        for seg in stage.interconnects:
            dissipative += line_loss(seg, f)
    mismatch = 0.0
    if tree.connector is not None:
        dissipative += tree.connector.insertion_loss_db
        mismatch = tree.connector.mismatch_db
    return LossBudget(split_db=split, dissipative_db=dissipative, mismatch_db=mismatch)
