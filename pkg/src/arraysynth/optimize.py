"""Goal-driven design optimization with a bounded dogleg trust region.

The objective is a sum of hinge penalties over four goals: worst-in-band
reflection below a target, element efficiency, front-to-back ratio, and a
non-negative realized-gain slope across the band. It evaluates only this
toolkit's analytic surrogates, so a full run takes seconds; the minimizer
accepts any injected callable, leaving a seam for external evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C0
from .errors import DomainError, ObjectiveEvaluationError
from .farfield import realized_gain
from .feednet import ConnectorSpec, LossBudget
from .msline import (MicrostripLine, Substrate, eps_eff, guided_wavelength,
                     line_loss, width_synthesize)
from .unitcell import SurrogateParams, patch_resonant_freq, patch_resonant_length, sievenpiper_resonance, surrogate_s11

PARAM_NAMES = (
    "ms_patch_size",
    "ms_gap",
    "patch_length",
    "aperture_length",
    "aperture_width",
    "patch_substrate_height",
    "feed_substrate_height",
    "feed_line_width",
    "feed_line_length",
)

GOAL_NAMES = ("s11", "efficiency", "front_to_back", "gain_slope")


@dataclass(frozen=True)
class DesignVector:
    """Ordered, bounded design parameters (all lengths in meters).

    Parameter order is fixed as in :data:`PARAM_NAMES`: metasurface patch
    size and gap, patch length, aperture length and width, patch/feed
    substrate thicknesses, feed line width and length.
    """

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("values", "lower", "upper"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))
        n = len(PARAM_NAMES)
        if self.values.shape != (n,) or self.lower.shape != (n,) or self.upper.shape != (n,):
            raise DomainError(f"design vector must have {n} entries")
        if np.any(self.lower >= self.upper):
            raise DomainError("each lower bound must be below its upper bound")
        if np.any(self.values < self.lower) or np.any(self.values > self.upper):
            raise DomainError("design values must lie within their bounds")

    def __getattr__(self, name):
        try:
            idx = PARAM_NAMES.index(name)
        except ValueError:
            raise AttributeError(name) from None
        return float(self.values[idx])

    def replace_values(self, values) -> "DesignVector":
        return DesignVector(np.asarray(values, dtype=float), self.lower, self.upper)

    def to_dict(self) -> dict:
        return {name: float(v) for name, v in zip(PARAM_NAMES, self.values)}


@dataclass(frozen=True)
class ObjectiveSpec:
    """Targets and weights for the scalarized design goals."""

    band: tuple[float, float] = (10.7e9, 12.7e9)
    s11_target_db: float = -20.0
    efficiency_target: float = 0.95
    fb_target_db: float = 15.0
    gain_slope_target: float = 0.0
    weights: dict = field(default_factory=lambda: {g: 1.0 for g in GOAL_NAMES})

    def __post_init__(self):
        if not (0.0 < self.band[0] < self.band[1]):
            raise DomainError(f"invalid band {self.band}")
        if any(w < 0.0 for w in self.weights.values()):
            raise DomainError("weights must be >= 0")

    def weight(self, goal: str) -> float:
        return float(self.weights.get(goal, 1.0))


@dataclass(frozen=True)
class DesignModels:
    """Fixed model context the objective evaluates against."""

    patch_core: Substrate = field(default_factory=lambda: Substrate(
        3.38, 0.0027, 1.524e-3, name="RO4003C"))
    feed_core: Substrate = field(default_factory=lambda: Substrate(
        3.38, 0.0027, 0.813e-3, name="RO4003C"))
    q_patch: float = 1.0
    q_ms: float = 2.0
    k_ms: float = 0.05
    z_ref: float = 50.0
    element_efficiency: float = 0.95
    element_back_level_db: float = 20.0
    stage_count: int = 10
    stage_loss_db: float = 0.25
    connector: ConnectorSpec = field(default_factory=ConnectorSpec)
    array_m: int = 32
    array_n: int = 32
    array_pitch: float = 12.87e-3
    n_band_samples: int = 41


def design_surrogate_params(x: DesignVector, models: DesignModels) -> SurrogateParams:
    """Map geometry to the coupled-resonator surrogate.

    The aperture length drives the input coupling linearly, reaching
    critical coupling at one fifth of the patch length.
    """
    sub = models.patch_core.with_height(x.patch_substrate_height)
    ee = eps_eff(sub, x.patch_length)
    f_patch = patch_resonant_freq(x.patch_length, ee)
    f_ms = sievenpiper_resonance(x.ms_patch_size, x.ms_gap,
                                 x.patch_substrate_height, sub.eps_r)
    k_slot = min(1.0, x.aperture_length / (x.patch_length / 5.0))
    return SurrogateParams(f_patch=f_patch, q_patch=models.q_patch,
                           f_ms=f_ms, q_ms=models.q_ms,
                           k_slot=k_slot, k_ms=models.k_ms, z_ref=models.z_ref)


@dataclass(frozen=True)
class ObjectiveValue:
    """Scalar penalty plus per-goal components and diagnostic details."""

    scalar: float
    components: dict
    details: dict

    def __float__(self):
        return self.scalar


def objective(x: DesignVector, spec: ObjectiveSpec,
              models: DesignModels) -> ObjectiveValue:
    """Hinge-penalty scalarization of the design goals.

    Zero exactly when every goal is met; each violation is reported
    separately and the scalar is their weighted sum. Continuous in x.
    """
    if np.any(x.values < x.lower) or np.any(x.values > x.upper):
        raise DomainError("design vector outside its bounds")

    freqs = np.linspace(spec.band[0], spec.band[1], models.n_band_samples)
    params = design_surrogate_params(x, models)
    s11 = surrogate_s11(params, freqs)
    s11_db = 20.0 * np.log10(np.maximum(np.abs(s11), 1e-300))
    worst_s11_db = float(np.max(s11_db))

    aperture_area = (models.array_m * models.array_pitch
                     * models.array_n * models.array_pitch)
    directivity_db = 10.0 * np.log10(4.0 * math.pi * aperture_area
                                     * (freqs / C0) ** 2)
    feed_sub = models.feed_core.with_height(x.feed_substrate_height)
    feed_line = MicrostripLine(x.feed_line_width, x.feed_line_length, feed_sub)
    gains = np.empty_like(freqs)
    for i, f in enumerate(freqs):
        budget = LossBudget(
            split_db=10.0 * math.log10(models.array_m * models.array_n),
            dissipative_db=(models.stage_count * models.stage_loss_db
                            + line_loss(feed_line, f)
                            + models.connector.insertion_loss_db),
            mismatch_db=models.connector.mismatch_db)
        gains[i] = realized_gain(float(directivity_db[i]),
                                 models.element_efficiency, budget, s11[i])
    slope_per_ghz = float(np.polyfit(freqs / 1e9, gains, 1)[0])

    fb_db = models.element_back_level_db
    components = {
        "s11": max(0.0, worst_s11_db - spec.s11_target_db),
        "efficiency": max(0.0, spec.efficiency_target - models.element_efficiency),
        "front_to_back": max(0.0, spec.fb_target_db - fb_db),
        "gain_slope": max(0.0, spec.gain_slope_target - slope_per_ghz),
    }
    scalar = sum(spec.weight(g) * v for g, v in components.items())
    details = {
        "worst_s11_db": worst_s11_db,
        "gain_slope_db_per_ghz": slope_per_ghz,
        "front_to_back_db": fb_db,
        "element_efficiency": models.element_efficiency,
        "min_realized_gain_dbi": float(np.min(gains)),
        "f_patch_hz": params.f_patch,
        "f_ms_hz": params.f_ms,
        "k_slot": params.k_slot,
    }
    return ObjectiveValue(scalar=scalar, components=components, details=details)


def seeded_feasible_design(spec: ObjectiveSpec | None = None,
                           models: DesignModels | None = None) -> DesignVector:
    """A design meeting every goal, constructed by critical coupling.

    The patch is tuned to the geometric band center and the aperture sized
    to one fifth of the patch length so the input coupling is critical;
    with the default low-Q surrogate the whole band then sits below the
    reflection target. Bounds span +/-30% of each seed value.
    """
    if spec is None:
        spec = ObjectiveSpec()
    if models is None:
        models = DesignModels()
    f_c = math.sqrt(spec.band[0] * spec.band[1])

    sub = models.patch_core
    ee = (sub.eps_r + 1.0) / 2.0
    length = patch_resonant_length(f_c, ee)
    for _ in range(200):
        ee = eps_eff(sub, length)
        new_length = patch_resonant_length(f_c, ee)
        if abs(new_length - length) <= 1e-15:
            break
        length = new_length

    feed_sub = models.feed_core
    line_w = width_synthesize(feed_sub, models.z_ref)
    line_l = guided_wavelength(feed_sub, line_w, f_c) / 4.0

    values = np.array([
        2.37e-3,            # ms_patch_size
        0.40e-3,            # ms_gap
        length,             # patch_length
        length / 5.0,       # aperture_length -> critical coupling
        length / 10.0,      # aperture_width
        sub.height,         # patch_substrate_height
        feed_sub.height,    # feed_substrate_height
        line_w,             # feed_line_width
        line_l,             # feed_line_length
    ])
    return DesignVector(values=values, lower=0.7 * values, upper=1.3 * values)


# --- trust-region minimizer -------------------------------------------------

@dataclass
class IterationRecord:
    iteration: int
    f_best: float
    x_best: np.ndarray
    f_candidate: float
    step_norm: float
    delta: float
    accepted: bool
    n_evals: int


@dataclass
class TrustRegionResult:
    x_best: np.ndarray
    f_best: float
    history: list
    n_evals: int
    n_iterations: int
    status: str


def _dogleg_step(g: np.ndarray, b: np.ndarray, delta: float) -> np.ndarray:
    """Dogleg solution of min g.p + p.B.p/2 subject to |p| <= delta."""
    gbg = float(g @ b @ g)
    if gbg <= 0.0:
        gn = np.linalg.norm(g)
        return -delta * g / gn if gn > 0.0 else np.zeros_like(g)
    p_cauchy = -(float(g @ g) / gbg) * g
    try:
        p_newton = -np.linalg.solve(b, g)
    except np.linalg.LinAlgError:
        p_newton = None
    if p_newton is not None and np.linalg.norm(p_newton) <= delta:
        return p_newton
    norm_c = np.linalg.norm(p_cauchy)
    if p_newton is None or norm_c >= delta:
        return (delta / norm_c) * p_cauchy if norm_c > 0.0 else np.zeros_like(g)
    # walk the dogleg segment from the Cauchy point toward the Newton point
    diff = p_newton - p_cauchy
    a = float(diff @ diff)
    bb = 2.0 * float(p_cauchy @ diff)
    c = float(p_cauchy @ p_cauchy) - delta**2
    tau = (-bb + math.sqrt(max(0.0, bb**2 - 4.0 * a * c))) / (2.0 * a)
    return p_cauchy + tau * diff


def trust_region_minimize(objective_fn, x0: np.ndarray, bounds,
                          *, tol_x: float = 1e-9, tol_f: float = 1e-12,
                          max_iterations: int = 500, max_evals: int = 10_000,
                          delta0: float = 0.25, delta_max: float = 1.0,
                          f_floor: float | None = 0.0) -> TrustRegionResult:
    """Minimize a scalar function over a box with dogleg trust-region steps.

    The model is quadratic: central-difference gradients (step 1e-6 of each
    parameter's range) with a BFGS-updated curvature matrix. Candidates are
    projected onto the bounds, so every iterate respects them exactly. The
    radius shrinks after each rejected step and never exceeds its cap;
    best-objective history is non-increasing. Fully deterministic.

    objective_fn may return a float or any object accepting float() (e.g.
    :class:`ObjectiveValue`). ``f_floor`` is a known lower bound at which
    the search stops early; the default 0 suits hinge-penalty objectives,
    pass None for objectives without one.
    """
    lo = np.asarray([b[0] for b in bounds], dtype=float)
    hi = np.asarray([b[1] for b in bounds], dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != lo.shape or np.any(lo >= hi):
        raise DomainError("x0 and bounds are inconsistent")
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise DomainError("x0 outside bounds")
    if tol_x <= 0.0 or tol_f <= 0.0:
        raise DomainError("tolerances must be > 0")
    span = hi - lo
    n = x0.size
    evals = 0

    def unscale(s: np.ndarray) -> np.ndarray:
        return lo + s * span

    def evaluate(s: np.ndarray) -> float:
        nonlocal evals
        x = unscale(s)
        try:
            value = float(objective_fn(x))
        except Exception as exc:  # propagate with the offending point
            raise ObjectiveEvaluationError(
                f"objective evaluation failed: {exc}", x=x) from exc
        evals += 1
        return value

    fd_step = 1e-6  # of each parameter's range (scaled units)

    def gradient(s: np.ndarray, f_s: float) -> np.ndarray:
        """Central differences; one-sided at a bound (both points inside)."""
        g = np.zeros(n)
        for i in range(n):
            sp, sm = s.copy(), s.copy()
            if s[i] + fd_step > 1.0:
                sp[i], sm[i] = s[i], s[i] - fd_step
                g[i] = (f_s - evaluate(sm)) / fd_step
            elif s[i] - fd_step < 0.0:
                sp[i] = s[i] + fd_step
                g[i] = (evaluate(sp) - f_s) / fd_step
            else:
                sp[i] += fd_step
                sm[i] -= fd_step
                g[i] = (evaluate(sp) - evaluate(sm)) / (2.0 * fd_step)
        return g

    s = (x0 - lo) / span
    f_s = evaluate(s)
    b = np.eye(n)
    delta = min(delta0, delta_max)
    best_s, best_f = s.copy(), f_s
    history: list[IterationRecord] = []
    status = "max_iterations"
    g = None

    for iteration in range(1, max_iterations + 1):
        if evals + 2 * n >= max_evals:
            status = "max_evals"
            break
        if g is None:
            g = gradient(s, f_s)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-14 and f_s <= best_f:
            history.append(IterationRecord(iteration, best_f, unscale(best_s),
                                           f_s, 0.0, delta, False, evals))
            status = "stationary"
            break

        p = _dogleg_step(g, b, delta)
        candidate = np.clip(s + p, 0.0, 1.0)
        p_eff = candidate - s
        step_norm = float(np.linalg.norm(p_eff))
        predicted = -(float(g @ p_eff) + 0.5 * float(p_eff @ b @ p_eff))
        if step_norm < tol_x:
            history.append(IterationRecord(iteration, best_f, unscale(best_s),
                                           f_s, step_norm, delta, False, evals))
            status = "step_below_tol_x"
            break
        if predicted <= 0.0:
            delta *= 0.25
            history.append(IterationRecord(iteration, best_f, unscale(best_s),
                                           f_s, step_norm, delta, False, evals))
            if delta < tol_x:
                status = "radius_collapsed"
                break
            continue

        if evals >= max_evals:
            status = "max_evals"
            break
        f_new = evaluate(candidate)
        rho = (f_s - f_new) / predicted
        accepted = rho > 0.05 and f_new < f_s
        if accepted:
            improvement = f_s - f_new
            s_step = p_eff
            s = candidate
            f_s = f_new
            g_new = gradient(s, f_s) if evals + 2 * n < max_evals else g
            y = g_new - g
            ys = float(y @ s_step)
            if ys > 1e-12 * float(np.linalg.norm(y)) * step_norm:
                bs = b @ s_step
                b = (b - np.outer(bs, bs) / float(s_step @ bs)
                     + np.outer(y, y) / ys)
            g = g_new
            if f_s < best_f:
                best_s, best_f = s.copy(), f_s
        else:
            improvement = 0.0

        if rho < 0.25:
            delta *= 0.25
        elif rho > 0.75 and step_norm >= 0.8 * delta:
            delta = min(2.0 * delta, delta_max)

        history.append(IterationRecord(iteration, best_f, unscale(best_s),
                                       f_new, step_norm, delta, accepted, evals))
        if f_floor is not None and best_f <= f_floor:
            status = "objective_floor"
            break
        if accepted and improvement < tol_f:
            status = "improvement_below_tol_f"
            break
        if not accepted and delta < tol_x:
            status = "radius_collapsed"
            break

    return TrustRegionResult(x_best=unscale(best_s), f_best=best_f,
                             history=history, n_evals=evals,
                             n_iterations=len(history), status=status)
