"""Acceptance suite: one pass/fail line per criterion (run with -s to see all).

Grid-integrated directivity cases use the ground-plane-backed element
(front hemisphere gain 1, zero back level) so the sphere integral counts
the beam once, matching the aperture estimate 4*pi*A/lambda^2.
"""

import math
import time

import numpy as np
import pytest

from arraysynth.constants import C0
from arraysynth.farfield import (ArrayLayout, ElementModel,
                                 apply_element_pattern, array_factor,
                                 directivity, pattern_metrics, realized_gain,
                                 uniform_excitations)
from arraysynth.feednet import (ConnectorSpec, IdealLine, SParameterBlock,
                                SeriesImpedance, ShuntAdmittance, TwoPortFromS,
                                build_corporate_tree, cascade_abcd,
                                network_loss_budget, wilkinson_sparams)
from arraysynth.msline import Substrate, width_synthesize, z0_analyze
from arraysynth.optimize import (DesignModels, ObjectiveSpec, objective,
                                 seeded_feasible_design, trust_region_minimize)
from arraysynth.touchstone import parse_touchstone, write_touchstone
from arraysynth.unitcell import (aperture_dims, PatchDims,
                                 patch_resonant_length, sievenpiper_resonance,
                                 synth_unitcell, synthesis_report)

BAND = (10.7e9, 12.7e9)
F0 = 11.7e9
PITCH = 12.87e-3
FEED_SUB = Substrate(3.38, 0.0027, 0.813e-3)


def report(criterion: int, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def integrated_directivity(f: float) -> tuple[float, float]:
    """(directivity dBi, wall seconds) for the ideal 32x32 array at f."""
    layout = ArrayLayout(32, 32, PITCH, PITCH)
    start = time.time()
    pattern = array_factor(layout, uniform_excitations(layout), f)
    pattern = apply_element_pattern(
        pattern, ElementModel("cosine_power", q=0.0, back_level=0.0))
    return directivity(pattern), time.time() - start


@pytest.fixture(scope="module")
def broadside_case():
    layout = ArrayLayout(32, 32, PITCH, PITCH)
    start = time.time()
    pattern = array_factor(layout, uniform_excitations(layout), F0)
    hemi = apply_element_pattern(
        pattern, ElementModel("cosine_power", q=0.0, back_level=0.0))
    d = directivity(hemi)
    elapsed = time.time() - start
    return {"pattern": pattern, "hemi": hemi, "directivity": d,
            "seconds": elapsed}


def test_criterion_1_directivity(broadside_case):
    d = broadside_case["directivity"]
    elapsed = broadside_case["seconds"]
    lam = C0 / F0
    aperture_estimate = 10 * math.log10(4 * math.pi * (32 * PITCH) ** 2 / lam**2)
    ok = (abs(d - 35.1) <= 0.3 and d >= 30.0
          and abs(d - aperture_estimate) <= 0.3 and elapsed < 30.0)
    report(1, ok, f"32x32 directivity {d:.2f} dBi (aperture estimate "
                  f"{aperture_estimate:.2f} dBi) in {elapsed:.1f} s")


def test_criterion_2_realized_gain_budget(broadside_case):
    tree = build_corporate_tree(1024, F0, FEED_SUB, stage_loss_db=0.25,
                                connector=ConnectorSpec(return_loss_db=20.0))
    s11 = 10 ** (-15.0 / 20.0)
    efficiency = 0.95
    rows = []
    for f in (BAND[0], F0, BAND[1]):
        if f == F0:
            d = broadside_case["directivity"]
        else:
            d, _ = integrated_directivity(f)
        budget = network_loss_budget(tree, f)
        gain = realized_gain(d, efficiency, budget, s11)
        rows.append({
            "frequency_Hz": f,
            "directivity_dBi": d,
            "efficiency_dB": 10 * math.log10(efficiency),
            "split_dB": budget.split_db,
            "dissipative_dB": -budget.dissipative_db,
            "connector_mismatch_dB": -budget.mismatch_db,
            "reflection_dB": 10 * math.log10(1 - s11**2),
            "realized_gain_dBi": gain,
        })
    itemized = all(
        abs(r["realized_gain_dBi"] - (r["directivity_dBi"] + r["efficiency_dB"]
                                      + r["dissipative_dB"]
                                      + r["connector_mismatch_dB"]
                                      + r["reflection_dB"])) < 1e-9
        and r["split_dB"] == pytest.approx(30.103, abs=1e-3)
        for r in rows)
    worst = min(r["realized_gain_dBi"] for r in rows)
    ok = worst >= 27.0 and itemized
    report(2, ok, "realized gain "
           + ", ".join(f"{r['frequency_Hz'] / 1e9:.1f} GHz: "
                       f"{r['realized_gain_dBi']:.2f} dBi" for r in rows)
           + f" (worst {worst:.2f} >= 27, every term itemized)")


def test_criterion_3_wilkinson():
    s = wilkinson_sparams(F0, F0).data[0]
    v = -1j / math.sqrt(2)
    matrix_ok = bool(np.max(np.abs(
        s - np.array([[0, v, v], [v, 0, 0], [v, 0, 0]]))) <= 1e-9)

    s11_2f0 = abs(wilkinson_sparams(2 * F0, F0).data[0][0, 0])
    # ABCD oracle: the branches become half-wave lines, Zin = 50/2 = 25 ohm
    oracle = abs((25.0 - 50.0) / (25.0 + 50.0))
    harmonic_ok = abs(s11_2f0 - 1.0 / 3.0) <= 1e-6 and abs(s11_2f0 - oracle) <= 1e-9

    tree = build_corporate_tree(4, F0, FEED_SUB, z_ref=50.0)
    values_ok = all(st.resistor == 100.0
                    and st.quarter_wave_z == pytest.approx(math.sqrt(2) * 50.0,
                                                           rel=1e-12)
                    for st in tree.stages)
    ok = matrix_ok and harmonic_ok and values_ok
    report(3, ok, f"f0 matrix exact to 1e-9, |S11(2f0)| = {s11_2f0:.7f}, "
                  "resistor 2*Z0 and section impedance sqrt(2)*Z0")


def test_criterion_4_design_formulas():
    length = patch_resonant_length(11.7e9, 2.743)
    eq1_ok = abs(length - 7.741e-3) <= 0.005e-3
    ap = aperture_dims(PatchDims(L=7.4e-3, W=6.1e-3))
    eq2_ok = ap.a_L == 7.4e-3 / 10 and ap.a_W == 6.1e-3 / 10

    cell = synth_unitcell(BAND, period=PITCH)
    rep = synthesis_report(cell, BAND)
    flags = " ".join(rep["discrepancy_flags"])
    flags_ok = ("5.04" in flags and "2.04" in flags
                and cell.lp != 5.04e-3 and cell.ws != 2.04e-3)
    ok = eq1_ok and eq2_ok and flags_ok
    report(4, ok, f"resonant length {length * 1e3:.4f} mm, one-tenth rule exact, "
                  f"{len(rep['discrepancy_flags'])} reference discrepancies flagged")


def test_criterion_5_metasurface_estimator():
    f = sievenpiper_resonance(2.37e-3, 0.40e-3, 1.524e-3, 3.38)
    in_band = 8e9 <= f <= 14e9
    frozen_ok = abs(f - 13128356490.132008) <= 1e-3
    ok = in_band and frozen_ok
    report(5, ok, f"resonance estimate {f / 1e9:.3f} GHz within [8, 14] GHz "
                  "(loose band documents the model error vs the reported "
                  "~10 GHz crossing); frozen regression value matched")


def test_criterion_6_optimizer():
    start = time.time()
    quad = trust_region_minimize(lambda x: float(np.sum((x - 1.0) ** 2)),
                                 np.zeros(4), [(-5.0, 5.0)] * 4)
    quad_ok = bool(np.max(np.abs(quad.x_best - 1.0)) <= 1e-6)

    rosen = trust_region_minimize(
        lambda x: float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2),
        np.array([-1.2, 1.0]), [(-5.0, 5.0)] * 2,
        max_iterations=2000, max_evals=20000)
    rosen_ok = bool(np.max(np.abs(rosen.x_best - 1.0)) <= 1e-4)

    spec, models = ObjectiveSpec(), DesignModels()
    seed = seeded_feasible_design(spec, models)
    x0 = np.clip(seed.values * 1.05, seed.lower, seed.upper)

    def fn(vals):
        return objective(seed.replace_values(np.clip(vals, seed.lower,
                                                     seed.upper)), spec, models)

    recovery = trust_region_minimize(fn, x0, list(zip(seed.lower, seed.upper)),
                                     max_evals=200)
    best = [rec.f_best for rec in recovery.history]
    monotone = all(b <= a + 1e-15 for a, b in zip(best, best[1:]))
    elapsed = time.time() - start
    ok = (quad_ok and rosen_ok and recovery.f_best == 0.0
          and recovery.n_evals <= 200 and monotone and elapsed < 60.0)
    report(6, ok, f"seed recovered to objective {recovery.f_best:g} in "
                  f"{recovery.n_evals} evaluations, history non-increasing, "
                  f"quadratic/Rosenbrock minima hit, total {elapsed:.1f} s")


def test_criterion_7_oracle_equivalences():
    start = time.time()
    rng = np.random.default_rng(2024)

    # array factor vs brute-force double sum, random cases up to 8x8
    af_err = 0.0
    for _ in range(8):
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        layout = ArrayLayout(m, n, float(rng.uniform(5e-3, 2e-2)),
                             float(rng.uniform(5e-3, 2e-2)))
        amps = (rng.uniform(0, 1, (m, n))
                * np.exp(1j * rng.uniform(-np.pi, np.pi, (m, n))))
        theta = np.linspace(0, math.pi, 5)
        phi = np.linspace(0, 2 * math.pi, 7)
        pat = array_factor(layout, amps, F0, theta, phi)
        k = 2 * math.pi * F0 / C0
        brute = np.zeros((5, 7), complex)
        for it, t in enumerate(theta):
            for ip, p in enumerate(phi):
                for col in range(m):
                    for row in range(n):
                        brute[it, ip] += amps[col, row] * np.exp(
                            1j * k * (col * layout.dx * math.sin(t) * math.cos(p)
                                      + row * layout.dy * math.sin(t) * math.sin(p)))
        af_err = max(af_err, float(np.max(np.abs(pat.values - brute))
                                   / np.sum(np.abs(amps))))

    # cascade associativity
    cas_err = 0.0
    freqs = np.array([0.8e9, 1.0e9, 1.7e9])
    for _ in range(12):
        a = IdealLine(float(rng.uniform(20, 120)), float(rng.uniform(0.1, 3)),
                      1e9, float(rng.uniform(0, 1)))
        b = SeriesImpedance(complex(rng.uniform(0, 50), rng.uniform(-50, 50)))
        c = ShuntAdmittance(complex(rng.uniform(0, 0.05), rng.uniform(-0.05, 0.05)))
        flat = cascade_abcd([a, b, c], freqs)
        left = cascade_abcd([TwoPortFromS(cascade_abcd([a, b], freqs)), c], freqs)
        cas_err = max(cas_err, float(np.max(np.abs(flat.data - left.data))))

    # touchstone round trip
    ts_err = 0.0
    for fmt in ("RI", "MA", "DB"):
        for _ in range(4):
            n_ports = int(rng.integers(1, 5))
            f_grid = np.sort(rng.uniform(1e8, 3e10, 4))
            data = (rng.uniform(-1, 1, (4, n_ports, n_ports))
                    + 1j * rng.uniform(-1, 1, (4, n_ports, n_ports)))
            block = SParameterBlock(n_ports, f_grid, data)
            back = parse_touchstone(write_touchstone(block, fmt))
            ts_err = max(ts_err, float(np.max(np.abs(back.data - block.data))))

    # microstrip synthesis/analysis round trip
    ms_err = 0.0
    for _ in range(40):
        sub = Substrate(float(rng.uniform(1.0, 11.0)), 0.002,
                        float(rng.uniform(0.2e-3, 2e-3)))
        z = z0_analyze(sub, float(rng.uniform(0.05, 30.0)) * sub.height)
        ms_err = max(ms_err, abs(z0_analyze(sub, width_synthesize(sub, z)) - z))

    elapsed = time.time() - start
    ok = (af_err <= 1e-10 and cas_err <= 1e-12 and ts_err <= 1e-12
          and ms_err <= 0.01 and elapsed < 120.0)
    report(7, ok, f"oracle errors: array factor {af_err:.1e} (<=1e-10), "
                  f"cascade {cas_err:.1e} (<=1e-12), touchstone {ts_err:.1e} "
                  f"(<=1e-12), microstrip {ms_err:.4f} ohm (<=0.01), "
                  f"in {elapsed:.1f} s")


def test_criterion_8_sidelobe_beamwidth(broadside_case):
    metrics = pattern_metrics(broadside_case["hemi"])
    sll_ok = abs(metrics.sll_db - (-13.26)) <= 0.05
    hpbw_ok = all(abs(metrics.hpbw_deg[cut] - 3.16) <= 0.05
                  for cut in ("phi=0", "phi=90"))
    ok = sll_ok and hpbw_ok
    report(8, ok, f"first sidelobe {metrics.sll_db:.3f} dB, HPBW "
                  f"{metrics.hpbw_deg['phi=0']:.3f} deg / "
                  f"{metrics.hpbw_deg['phi=90']:.3f} deg")
