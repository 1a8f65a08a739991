import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from regularity.exceptions import FieldError
from regularity.fields import (
    Grid2,
    GriddedScalar,
    GriddedVelocity,
    eval_scalar,
    eval_velocity,
    grad_sup,
    list_scenarios,
    map_point_chunks,
    sample_to_grid,
    scalar_catalog,
    spectral_ops,
    velocity_catalog,
)


class Grid2Tests(SimpleTestCase):
    def test_rejects_sizes_that_are_not_powers_of_two(self):
        with self.assertRaises(FieldError):
            Grid2(48, math.pi)
        with self.assertRaises(FieldError):
            Grid2(8, math.pi)

    def test_rejects_nonpositive_half_period(self):
        with self.assertRaises(FieldError):
            Grid2(32, 0.0)

    def test_coordinates_are_mirror_symmetric(self):
        grid = Grid2(32, math.pi)
        coords = grid.coords
        self.assertEqual(coords[0], -math.pi)
        np.testing.assert_array_equal(coords[1:], -coords[1:][::-1])

    def test_wrap_maps_into_the_box(self):
        grid = Grid2(32, math.pi)
        wrapped = grid.wrap([[math.pi, -math.pi - 0.5], [0.25, 0.5]])
        assert_allclose(wrapped, [[-math.pi, math.pi - 0.5], [0.25, 0.5]])

    def test_separation_uses_the_minimal_image(self):
        grid = Grid2(32, math.pi)
        d = grid.separation([math.pi - 0.1, 0.0], [-math.pi + 0.1, 0.0])
        assert_allclose(d, [-0.2, 0.0], atol=1e-14)


class SpectralOpsTests(SimpleTestCase):
    def test_gradient_of_a_trigonometric_field_is_exact(self):
        grid = Grid2(32, math.pi)
        x1, x2 = grid.mesh()
        g = spectral_ops(grid).gradient(np.sin(x1) * np.cos(x2))
        assert_allclose(g[0], np.cos(x1) * np.cos(x2), atol=1e-12)
        assert_allclose(g[1], -np.sin(x1) * np.sin(x2), atol=1e-12)

    def test_dealias_mask_drops_the_top_third(self):
        ops = spectral_ops(Grid2(64, math.pi))
        self.assertTrue(ops.dealias[1, 1])
        self.assertFalse(ops.dealias[30, 0])
        self.assertFalse(ops.dealias[0, 30])

    def test_dealias_mask_is_a_float_weight(self):
        grid = Grid2(64, math.pi)
        ops = spectral_ops(grid)
        self.assertEqual(ops.dealias.dtype, np.float64)
        coeffs = ops.forward(np.random.default_rng(1).normal(size=(64, 64)))
        damped = -ops.dealias * coeffs
        self.assertEqual(damped[30, 0], 0.0)
        self.assertEqual(damped[1, 1], -coeffs[1, 1])


class ScalarFieldTests(SimpleTestCase):
    def test_catalog_rejects_unknown_names_and_bad_exponents(self):
        with self.assertRaises(FieldError):
            scalar_catalog("no_such_field")
        with self.assertRaises(FieldError):
            scalar_catalog("power", {"exponent": 1.5})

    def test_known_coefficients(self):
        self.assertEqual(scalar_catalog("power", {"exponent": 0.3}).known.value, 1.0)
        known = scalar_catalog("bahouri_chemin", {"exponent": 0.5}).known
        self.assertEqual((known.family, known.exponent, known.value), ("holder", 0.5, 0.5))
        self.assertIsNone(scalar_catalog("sin_cos").known)

    def test_log_power_is_capped_and_vanishes_at_the_origin(self):
        f = scalar_catalog("log_power", {"exponent": 1.0})
        self.assertEqual(eval_scalar(f, [0.0, 0.0]), 0.0)
        self.assertAlmostEqual(eval_scalar(f, [0.01, 0.0]), 1.0 / math.log(100.0))
        self.assertLessEqual(eval_scalar(f, [0.5, 0.0]), 1.0)

    def test_bahouri_chemin_data_is_odd_in_both_coordinates(self):
        f = scalar_catalog("bahouri_chemin", {"exponent": 0.5})
        x = np.array([[0.3, 0.2], [0.1, 0.7]])
        assert_allclose(f.evaluate(x * [-1, 1]), -f.evaluate(x))
        assert_allclose(f.evaluate(x * [1, -1]), -f.evaluate(x))
        # the seed (r, 2r) sits on the maximising ray of 2 x1 x2 / (4 x1^2 + x2^2)
        r = 0.02
        self.assertAlmostEqual(eval_scalar(f, [r, 2 * r]), 0.5 * (math.sqrt(5) * r) ** 0.5)

    def test_gridded_interpolation(self):
        grid = Grid2(64, math.pi)
        f = sample_to_grid(scalar_catalog("sin_cos"), grid)
        points = np.array([[0.123, -0.456], [1.0, 2.0], [-3.0, 0.7]])
        exact = np.sin(points[:, 0]) * np.cos(points[:, 1])
        assert_allclose(f.evaluate(points), exact, atol=1e-4)
        assert_allclose(f.with_order("spectral").evaluate(points), exact, atol=1e-10)

    def test_gridded_scalar_rejects_non_finite_values(self):
        grid = Grid2(16, math.pi)
        values = np.zeros((16, 16))
        values[3, 3] = np.nan
        with self.assertRaises(FieldError):
            GriddedScalar(grid, values)
        with self.assertRaises(FieldError):
            GriddedScalar(grid, np.zeros((16, 8)))

    def test_chunked_evaluation_matches_serial(self):
        f = scalar_catalog("sin_cos")
        points = np.random.default_rng(3).uniform(-1, 1, size=(101, 2))
        np.testing.assert_array_equal(
            map_point_chunks(f.evaluate, points, jobs=4), map_point_chunks(f.evaluate, points, jobs=1)
        )


class VelocityFieldTests(SimpleTestCase):
    def test_catalog_rejects_unknown_kinds_and_parameters(self):
        with self.assertRaises(FieldError):
            velocity_catalog("vortex")
        with self.assertRaises(FieldError):
            velocity_catalog("linear_strain", {"omega": 1.0})

    def test_catalog_fields_are_divergence_free(self):
        points = np.random.default_rng(0).uniform(-2, 2, size=(50, 2))
        for kind in ("zero", "rigid_rotation", "linear_strain", "shear", "cellular"):
            with self.subTest(kind=kind):
                u = velocity_catalog(kind)
                assert_allclose(u.divergence(points), 0.0, atol=1e-14)

    def test_linear_strain(self):
        u = velocity_catalog("linear_strain", {"lambda": 2.0})
        assert_allclose(eval_velocity(u, [1.0, 3.0]), [2.0, -6.0])
        self.assertEqual(grad_sup(u).value, 2.0)

    def test_gridded_velocity_matches_its_analytic_source(self):
        grid = Grid2(64, math.pi)
        x1, x2 = grid.mesh()
        slice0 = np.stack([-np.sin(x1) * np.cos(x2), np.cos(x1) * np.sin(x2)])
        u = GriddedVelocity(grid, [0.0, 1.0], np.stack([slice0, 2.0 * slice0]))
        cellular = velocity_catalog("cellular")
        points = np.array([[0.3, -0.2], [1.1, 2.5]])
        assert_allclose(u.velocity(points, 0.5), 1.5 * cellular.velocity(points), atol=1e-4)
        assert_allclose(u.gradient(points, 0.0), cellular.gradient(points), atol=1e-3)
        self.assertAlmostEqual(u.grad_sup(1.0).value, 2.0, places=6)

    def test_gridded_velocity_time_range(self):
        grid = Grid2(16, math.pi)
        u = GriddedVelocity(grid, [0.0, 0.5], np.zeros((2, 2, 16, 16)))
        with self.assertRaises(FieldError):
            u.velocity(np.zeros((1, 2)), 0.75)
        with self.assertRaises(FieldError):
            GriddedVelocity(grid, [0.5, 0.0], np.zeros((2, 2, 16, 16)))

    def test_list_scenarios(self):
        catalog = list_scenarios()
        self.assertEqual(catalog["velocity"]["linear_strain"], {"lambda": 1.0})
        self.assertIn("bahouri_chemin", catalog["scalar"])
