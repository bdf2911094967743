import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraysynth.errors import DomainError, ObjectiveEvaluationError
from arraysynth.optimize import (DesignModels, DesignVector, GOAL_NAMES,
                                 ObjectiveSpec, PARAM_NAMES,
                                 design_surrogate_params, objective,
                                 seeded_feasible_design,
                                 trust_region_minimize)

SPEC = ObjectiveSpec()
MODELS = DesignModels()


@pytest.fixture(scope="module")
def seed():
    return seeded_feasible_design(SPEC, MODELS)


class TestObjective:
    def test_seed_meets_every_goal(self, seed):
        value = objective(seed, SPEC, MODELS)
        assert value.scalar == 0.0
        assert all(v == 0.0 for v in value.components.values())

    def test_seed_reflection_margin(self, seed):
        value = objective(seed, SPEC, MODELS)
        assert value.details["worst_s11_db"] < -20.0
        assert value.details["gain_slope_db_per_ghz"] > 0.0

    def test_worse_reflection_strictly_increases_scalar(self, seed):
        # detune the patch so the band-edge reflection crosses the target
        v1 = seed.values.copy()
        v1[PARAM_NAMES.index("patch_length")] *= 1.04
        v2 = seed.values.copy()
        v2[PARAM_NAMES.index("patch_length")] *= 1.08
        o1 = objective(seed.replace_values(v1), SPEC, MODELS)
        o2 = objective(seed.replace_values(v2), SPEC, MODELS)
        assert o1.details["worst_s11_db"] > -20.0
        assert o2.details["worst_s11_db"] > o1.details["worst_s11_db"] + 1.0
        assert o2.scalar > o1.scalar > 0.0

    def test_out_of_bounds_rejected(self, seed):
        bad = seed.values.copy()
        bad[0] = seed.upper[0] * 1.5
        with pytest.raises(DomainError):
            objective(DesignVector(np.clip(bad, seed.lower, seed.upper),
                                   seed.lower, seed.upper).replace_values(bad),
                      SPEC, MODELS)

    def test_zero_weights_always_zero(self, seed):
        spec0 = ObjectiveSpec(weights={g: 0.0 for g in GOAL_NAMES})
        shifted = seed.replace_values(np.clip(seed.values * 1.2, seed.lower,
                                              seed.upper))
        assert objective(shifted, spec0, MODELS).scalar == 0.0

    def test_k_slot_mapping_linear_then_capped(self, seed):
        params = design_surrogate_params(seed, MODELS)
        assert params.k_slot == pytest.approx(1.0)
        wide = DesignVector(seed.values, 0.2 * seed.values, 2.0 * seed.values)
        half = wide.values.copy()
        half[PARAM_NAMES.index("aperture_length")] *= 0.5
        assert design_surrogate_params(wide.replace_values(half),
                                       MODELS).k_slot == pytest.approx(0.5)
        over = wide.values.copy()
        over[PARAM_NAMES.index("aperture_length")] *= 1.2
        assert design_surrogate_params(wide.replace_values(over),
                                       MODELS).k_slot == 1.0

    def test_design_vector_validation(self, seed):
        with pytest.raises(DomainError):
            DesignVector(seed.values, seed.upper, seed.lower)
        with pytest.raises(DomainError):
            DesignVector(seed.lower * 0.5, seed.lower, seed.upper)

    def test_named_access_follows_documented_order(self, seed):
        assert seed.patch_length == seed.values[PARAM_NAMES.index("patch_length")]
        assert tuple(seed.to_dict()) == PARAM_NAMES


class TestTrustRegion:
    def test_convex_quadratic(self):
        result = trust_region_minimize(lambda x: float(np.sum((x - 1.0) ** 2)),
                                       np.zeros(4), [(-5.0, 5.0)] * 4)
        np.testing.assert_allclose(result.x_best, np.ones(4), atol=1e-6)

    def test_rosenbrock(self):
        def rosen(x):
            return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)

        result = trust_region_minimize(rosen, np.array([-1.2, 1.0]),
                                       [(-5.0, 5.0)] * 2,
                                       max_iterations=2000, max_evals=20000)
        np.testing.assert_allclose(result.x_best, np.ones(2), atol=1e-4)

    def test_best_history_non_increasing(self):
        def bumpy(x):
            return float(np.sum(x**2) + 0.3 * np.sum(np.sin(7 * x) ** 2))

        result = trust_region_minimize(bumpy, np.array([2.0, -1.7, 0.9]),
                                       [(-3.0, 3.0)] * 3)
        best = [rec.f_best for rec in result.history]
        assert all(b <= a + 1e-15 for a, b in zip(best, best[1:]))

    def test_radius_shrinks_after_rejection_and_stays_capped(self):
        rng_state = {"calls": 0}

        def nasty(x):  # discontinuous: plenty of rejected steps
            rng_state["calls"] += 1
            return float(np.sum(np.abs(x)) + (np.sum(x) > 0.3) * 5.0)

        result = trust_region_minimize(nasty, np.array([0.9, 0.8]),
                                       [(-1.0, 1.0)] * 2, delta_max=0.7,
                                       max_iterations=60)
        assert all(rec.delta <= 0.7 + 1e-15 for rec in result.history)
        prev = None
        rejected_seen = False
        for rec in result.history[:-1]:  # final record may be a plain stop
            if prev is not None and not rec.accepted:
                rejected_seen = True
                assert rec.delta < prev
            prev = rec.delta
        assert rejected_seen

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_iterates_respect_bounds_exactly(self, seed_int):
        rng = np.random.default_rng(seed_int)
        lo = rng.uniform(-3, 0, 3)
        hi = lo + rng.uniform(0.5, 3, 3)
        target = hi + 1.0  # unconstrained minimum sits outside the box
        seen = []

        def fn(x):
            seen.append(x.copy())
            return float(np.sum((x - target) ** 2))

        x0 = lo + (hi - lo) * rng.uniform(0.2, 0.8, 3)
        result = trust_region_minimize(fn, x0, list(zip(lo, hi)),
                                       max_iterations=60)
        for x in seen:
            assert np.all(x >= lo - 1e-15) and np.all(x <= hi + 1e-15)
        np.testing.assert_allclose(result.x_best, hi, atol=1e-6)

    def test_zero_weight_objective_one_outer_iteration(self):
        seed = seeded_feasible_design(SPEC, MODELS)
        spec0 = ObjectiveSpec(weights={g: 0.0 for g in GOAL_NAMES})

        def fn(vals):
            return objective(seed.replace_values(
                np.clip(vals, seed.lower, seed.upper)), spec0, MODELS)

        result = trust_region_minimize(fn, seed.values,
                                       list(zip(seed.lower, seed.upper)))
        assert result.f_best == 0.0
        assert result.n_iterations <= 1

    def test_evaluation_failure_carries_offending_point(self):
        def broken(x):
            raise ValueError("model blew up")

        with pytest.raises(ObjectiveEvaluationError) as err:
            trust_region_minimize(broken, np.array([0.5]), [(0.0, 1.0)])
        assert err.value.x is not None
        assert err.value.x[0] == pytest.approx(0.5)

    def test_inconsistent_bounds_rejected(self):
        with pytest.raises(DomainError):
            trust_region_minimize(lambda x: 0.0, np.array([0.5]), [(1.0, 0.0)])
        with pytest.raises(DomainError):
            trust_region_minimize(lambda x: 0.0, np.array([2.0]), [(0.0, 1.0)])


class TestRecovery:
    def test_perturbed_seed_recovered_within_budget(self, seed):
        x0 = np.clip(seed.values * 1.05, seed.lower, seed.upper)

        def fn(vals):
            return objective(seed.replace_values(
                np.clip(vals, seed.lower, seed.upper)), SPEC, MODELS)

        assert float(fn(x0)) > 0.0  # the perturbation breaks feasibility
        start = time.time()
        result = trust_region_minimize(fn, x0, list(zip(seed.lower, seed.upper)),
                                       max_evals=200)
        elapsed = time.time() - start
        assert result.f_best == 0.0
        assert result.n_evals <= 200
        assert elapsed < 60.0
        best = [rec.f_best for rec in result.history]
        assert all(b <= a + 1e-15 for a, b in zip(best, best[1:]))
