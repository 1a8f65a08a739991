import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from regularity.exceptions import EstimatorError, ModulusDomainError
from regularity.fields import Grid2, sample_to_grid, scalar_catalog
from regularity.modcont import (
    CONVERGED,
    RESOLUTION_LIMITED,
    DirectionSweep,
    GridSampler,
    ModulusFamily,
    coefficient_profile,
    estimate_coefficient,
    geometric_radii,
    modulus_value,
    sandwich_bounds,
    sup_coefficient,
    validate_radii,
)

RADII = geometric_radii(0.1, 1e-6, 0.1)
SWEEP = DirectionSweep(directions=360, shells_per_step=2)


class ModulusFamilyTests(SimpleTestCase):
    def test_holder_exponent_range(self):
        with self.assertRaisesMessage(ModulusDomainError, "holder requires 0 < β ≤ 1"):
            ModulusFamily("holder", 1.5)
        with self.assertRaises(ModulusDomainError):
            ModulusFamily("holder", 0.0)
        ModulusFamily("holder", 1.0)

    def test_log_holder_exponent_range(self):
        with self.assertRaisesMessage(ModulusDomainError, "log_holder requires γ > 0"):
            ModulusFamily("log_holder", 0.0)

    def test_values(self):
        self.assertAlmostEqual(modulus_value(ModulusFamily("holder", 0.5), 0.25), 0.5)
        self.assertAlmostEqual(modulus_value(ModulusFamily("log_holder", 2.0), math.exp(-2)), 0.25)
        with self.assertRaises(ModulusDomainError):
            modulus_value(ModulusFamily("holder", 0.5), 0.5)
        with self.assertRaises(ModulusDomainError):
            modulus_value(ModulusFamily("holder", 0.5), 0.0)

    def test_label(self):
        self.assertEqual(ModulusFamily("log_holder", 1.0).label, "log_holder(1)")


class RadiiTests(SimpleTestCase):
    def test_geometric_ladder(self):
        assert_allclose(geometric_radii(0.1, 1e-3, 0.1), [0.1, 0.01, 0.001])
        assert_allclose(geometric_radii(0.3, 0.0, 0.5, floor=0.05), [0.3, 0.15, 0.075])

    def test_ladder_must_start_inside_the_modulus_range(self):
        with self.assertRaises(EstimatorError):
            geometric_radii(0.5, 1e-3)

    def test_validate_radii(self):
        with self.assertRaisesMessage(EstimatorError, "modcont bound"):
            validate_radii([0.5, 0.1, 0.01])
        with self.assertRaises(EstimatorError):
            validate_radii([0.1, 0.1, 0.01])
        with self.assertRaises(EstimatorError):
            validate_radii([0.1, 0.01], h_min=0.05)


class CoefficientTests(SimpleTestCase):
    def test_power_field_has_coefficient_one(self):
        f = scalar_catalog("power", {"exponent": 0.5})
        m = ModulusFamily("holder", 0.5)
        estimate = estimate_coefficient(coefficient_profile(f, (0.0, 0.0), m, RADII, SWEEP), 0.01)
        self.assertEqual(estimate.flag, CONVERGED)
        self.assertAlmostEqual(estimate.value, 1.0, places=10)

    def test_smooth_field_lipschitz_coefficient_is_its_gradient_norm(self):
        f = scalar_catalog("sin_cos")
        estimate = estimate_coefficient(
            coefficient_profile(f, (0.0, 0.0), ModulusFamily("holder", 1.0), RADII, SWEEP), 0.01
        )
        self.assertTrue(estimate.converged)
        self.assertAlmostEqual(estimate.value, 1.0, places=6)

    def test_log_power_has_log_holder_coefficient_one(self):
        f = scalar_catalog("log_power", {"exponent": 1.0})
        estimate = estimate_coefficient(
            coefficient_profile(f, (0.0, 0.0), ModulusFamily("log_holder", 1.0), RADII, SWEEP), 0.01
        )
        self.assertTrue(estimate.converged)
        self.assertAlmostEqual(estimate.value, 1.0, places=10)

    def test_misset_family_is_resolution_limited(self):
        f = scalar_catalog("log_power", {"exponent": 1.0})
        with self.assertLogs("regularity.modcont", "WARNING"):
            estimate = estimate_coefficient(
                coefficient_profile(f, (0.0, 0.0), ModulusFamily("holder", 0.5), RADII, SWEEP), 0.01
            )
        self.assertEqual(estimate.flag, RESOLUTION_LIMITED)

    def test_profile_is_nonincreasing_along_the_ladder(self):
        f = scalar_catalog("bahouri_chemin", {"exponent": 0.5})
        profile = coefficient_profile(f, (0.1, -0.05), ModulusFamily("holder", 0.5), RADII, SWEEP)
        self.assertTrue(np.all(np.diff(profile.sup_ratios) <= 0.0))
        self.assertEqual([row["r"] for row in profile.rows()], list(RADII))

    def test_too_few_radii(self):
        f = scalar_catalog("power")
        profile = coefficient_profile(f, (0.0, 0.0), ModulusFamily("holder", 0.5), [0.1, 0.05, 0.025], SWEEP)
        with self.assertRaises(EstimatorError):
            estimate_coefficient(profile, 0.01)

    def test_grid_sampler_needs_a_gridded_field(self):
        with self.assertRaises(EstimatorError):
            coefficient_profile(scalar_catalog("power"), (0.0, 0.0), ModulusFamily("holder", 0.5), RADII, GridSampler())

    def test_grid_sampler_on_the_odd_odd_data(self):
        grid = Grid2(256, math.pi)
        f = sample_to_grid(scalar_catalog("bahouri_chemin", {"exponent": 0.5}), grid)
        radii = geometric_radii(0.3, 0.0, 0.8, floor=4 * grid.spacing)
        profile = coefficient_profile(f, (0.0, 0.0), ModulusFamily("holder", 0.5), radii, GridSampler(), f_center=0.0)
        estimate = estimate_coefficient(profile, 0.01)
        self.assertAlmostEqual(estimate.value, 0.5, delta=0.5 * 0.03)

    def test_radii_below_the_grid_resolution_are_rejected(self):
        grid = Grid2(64, math.pi)
        f = sample_to_grid(scalar_catalog("sin_cos"), grid)
        with self.assertRaises(EstimatorError):
            coefficient_profile(f, (0.0, 0.0), ModulusFamily("holder", 1.0), RADII, SWEEP)

    def test_chunked_profile_is_identical(self):
        f = scalar_catalog("bahouri_chemin", {"exponent": 0.5})
        m = ModulusFamily("holder", 0.5)
        serial = coefficient_profile(f, (0.0, 0.0), m, RADII, SWEEP, jobs=1)
        threaded = coefficient_profile(f, (0.0, 0.0), m, RADII, SWEEP, jobs=3)
        np.testing.assert_array_equal(serial.sup_ratios, threaded.sup_ratios)


class SandwichTests(SimpleTestCase):
    def test_bounds(self):
        lower, upper = sandwich_bounds(2.0, 0.5, 1.0)
        self.assertAlmostEqual(lower, 2.0 * math.exp(-0.5))
        self.assertAlmostEqual(upper, 2.0 * math.exp(0.5))

    def test_zero_budget_collapses(self):
        self.assertEqual(sandwich_bounds(1.5, 0.5, 0.0), (1.5, 1.5))

    def test_invalid_arguments(self):
        with self.assertRaises(ModulusDomainError):
            sandwich_bounds(1.0, 1.5, 1.0)
        with self.assertRaises(ModulusDomainError):
            sandwich_bounds(1.0, 0.5, -1.0)


class SupCoefficientTests(SimpleTestCase):
    def test_singular_centre_wins(self):
        f = scalar_catalog("power", {"exponent": 0.5})
        result = sup_coefficient(f, [(0.5, 0.5), (0.0, 0.0)], ModulusFamily("holder", 0.5), RADII, SWEEP)
        self.assertEqual(result.center, (0.0, 0.0))
        self.assertAlmostEqual(result.estimate.value, 1.0, places=8)
        self.assertEqual(len(result.estimates), 2)
