import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from regularity.exceptions import EstimatorError, FieldError, FlowError
from regularity.fields import Grid2, sample_to_grid, scalar_catalog, velocity_catalog
from regularity.flow import TimeGrid
from regularity.modcont import DirectionSweep, ModulusFamily, geometric_radii
from regularity.transport import (
    PulledBackScalar,
    TransportProblem,
    advect_spectral,
    initial_coefficient,
    preservation_curve,
    relative_gap,
    solve_theta,
    sup_preservation,
    transported_coefficient,
)

STRAIN = velocity_catalog("linear_strain", {"lambda": 1.0})
TG = TimeGrid(1.0, 0.01)
SWEEP = DirectionSweep(directions=360, shells_per_step=2)
DEEP_RADII = geometric_radii(0.1, 1e-24, 0.1)
RADII = geometric_radii(0.1, 1e-6, 0.1)


def problem(u=STRAIN, name="power", family=("holder", 0.5), radii=RADII, **kwargs):
    kind, exponent = family
    return TransportProblem(
        u,
        scalar_catalog(name, {"exponent": exponent}),
        (0.0, 0.0),
        ModulusFamily(kind, exponent),
        TG,
        radii,
        SWEEP,
        **kwargs,
    )


class TransportProblemTests(SimpleTestCase):
    def test_point_outside_the_box(self):
        with self.assertRaises(FieldError):
            TransportProblem(
                STRAIN, scalar_catalog("power"), (4.0, 0.0), ModulusFamily("holder", 0.5), TG, RADII
            )

    def test_output_times_must_be_grid_nodes(self):
        with self.assertRaises(FlowError):
            problem(output_times=(0.333,))

    def test_output_times_default_to_the_horizon(self):
        self.assertEqual(problem().output_times, (1.0,))


class SolveThetaTests(SimpleTestCase):
    def test_pullback_of_the_linear_strain(self):
        p = TransportProblem(
            STRAIN, scalar_catalog("sin_cos"), (0.0, 0.0), ModulusFamily("holder", 1.0), TG, RADII
        )
        x = np.array([0.4, -0.3])
        expected = math.sin(0.4 * math.exp(-0.5)) * math.cos(-0.3 * math.exp(0.5))
        self.assertAlmostEqual(solve_theta(p, x, 0.5), expected, places=9)

    def test_pulled_back_field_at_time_zero_is_the_data(self):
        p = problem()
        points = np.array([[0.1, 0.2], [0.3, -0.1]])
        np.testing.assert_array_equal(PulledBackScalar(p, 0.0).evaluate(points), p.theta0.evaluate(points))


class PreservationTests(SimpleTestCase):
    def test_relative_gap(self):
        self.assertAlmostEqual(relative_gap(1.05, 1.0), 0.05)

    def test_log_holder_coefficient_is_preserved(self):
        for gamma in (0.5, 1.0, 2.0):
            with self.subTest(gamma=gamma):
                p = problem(name="log_power", family=("log_holder", gamma), radii=DEEP_RADII, output_times=(0.25, 0.5, 1.0))
                curve = preservation_curve(p)
                self.assertAlmostEqual(curve.initial.value, 1.0, delta=0.02)
                self.assertEqual(len(curve.records), 3)
                self.assertTrue(curve.converged)
                self.assertLessEqual(curve.max_gap, 0.05)

    def test_holder_coefficient_follows_the_upper_sandwich_bound(self):
        p = problem(output_times=(0.5, 1.0))
        curve = preservation_curve(p)
        for record in curve.records:
            assert_allclose(record.estimate.value, math.exp(0.5 * record.t), rtol=1e-3)
            self.assertLessEqual(record.lower * 0.99, record.estimate.value)
            self.assertLessEqual(record.estimate.value, record.upper * 1.01)
        self.assertEqual(curve.records[-1].as_row()["t"], 1.0)
        self.assertEqual(curve.records[-1].profile[0]["r"], RADII[0])

    def test_zero_velocity_changes_nothing(self):
        p = problem(u=velocity_catalog("zero"), output_times=(0.5, 1.0))
        curve = preservation_curve(p)
        for record in curve.records:
            self.assertEqual(record.gap, 0.0)
            self.assertEqual((record.lower, record.upper), (curve.initial.value, curve.initial.value))

    def test_single_time_record_reuses_the_initial_estimate(self):
        p = problem()
        initial = initial_coefficient(p)
        record = transported_coefficient(p, 0.5, initial)
        self.assertEqual(record.initial, initial.value)
        self.assertEqual(record.position, (0.0, 0.0))
        self.assertAlmostEqual(record.mu_t, math.exp(0.5))

    def test_stretched_radii_must_stay_in_the_modulus_range(self):
        p = problem(radii=geometric_radii(0.3, 1e-6, 0.1))
        with self.assertRaisesMessage(EstimatorError, "exceeds s_max"):
            transported_coefficient(p, 1.0)
        record = preservation_curve(p).records[0]
        self.assertEqual(record.estimate.flag, "failed")
        self.assertAlmostEqual(record.mu_t, math.e)


class SupPreservationTests(SimpleTestCase):
    def test_singular_point_is_tracked(self):
        result = sup_preservation(problem(), [(0.0, 0.0), (0.5, 0.5)], 0.5)
        self.assertEqual(result.initial_center, (0.0, 0.0))
        self.assertEqual(result.transported_center, (0.0, 0.0))
        self.assertAlmostEqual(result.transported.value, math.exp(0.25), places=3)


class SpectralOracleTests(SimpleTestCase):
    def test_eulerian_solver_agrees_with_the_pullback(self):
        grid = Grid2(64, math.pi)
        u = velocity_catalog("cellular")
        tg = TimeGrid(0.25, 0.005)
        theta0 = scalar_catalog("sin_cos")
        advected = advect_spectral(sample_to_grid(theta0, grid), u, tg)
        p = TransportProblem(u, theta0, (0.0, 0.0), ModulusFamily("holder", 1.0), tg, RADII)
        nodes = grid.nodes()[::8, ::8]
        assert_allclose(advected.values[::8, ::8], PulledBackScalar(p, 0.25).evaluate(nodes), atol=1e-5)
