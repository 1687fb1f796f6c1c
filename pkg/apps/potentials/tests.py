import numpy as np
from django.test import SimpleTestCase
from numpy.polynomial import Polynomial

from apps.core.exceptions import ConfigError
from apps.fem.quadrature import lumped_mass
from apps.fields.decompose import orthonormal_traceless_basis, uniaxial_compose
from apps.meshes.generators import generate_crisscross_2d
from apps.potentials.audit import convexity_audit
from apps.potentials.tensor import LdgBulkPotential
from apps.potentials.wells import ericksen_well, get_well, saturn_well, uniaxial_well


class DoubleWellTests(SimpleTestCase):
    def test_uniaxial_well_vanishes_at_its_minimum(self):
        well = uniaxial_well()
        self.assertAlmostEqual(float(well.eval_psi(0.700005531)), 0.0, delta=1e-3)
        self.assertAlmostEqual(well.s_star, 0.700005531, delta=1e-5)
        self.assertEqual(well.eta_b, 1.0 / 16.0)

    def test_ericksen_well(self):
        well = ericksen_well()
        self.assertEqual(float(well.eval_dpsi(0.0)), 0.0)
        self.assertAlmostEqual(float(well.eval_psi(0.750025)), -0.5625, places=5)
        self.assertAlmostEqual(well.s_star, 0.75, delta=1e-6)
        self.assertEqual(well.bounds, (-0.5, 1.0))

    def test_saturn_well_minimum(self):
        self.assertAlmostEqual(saturn_well().s_star, 0.7, delta=1e-4)

    def test_split_is_consistent(self):
        well = uniaxial_well()
        s = np.linspace(-0.8, 1.3, 211)
        np.testing.assert_array_equal(well.eval_dpsi_split(s, s), well.eval_dpsi(s))

    def test_barrier_matches_at_the_ends(self):
        well = ericksen_well()
        for edge, out in ((1.0, 1.0 + 1e-7), (-0.5, -0.5 - 1e-7)):
            self.assertAlmostEqual(float(well.eval_psi(out)), float(well.eval_psi(edge)), delta=1e-5)
            self.assertAlmostEqual(float(well.eval_dpsi(out)), float(well.eval_dpsi(edge)), delta=1e-4)
        self.assertGreater(float(well.eval_psi(1.5)), float(well.eval_psi(1.0)) + 100.0)

    def test_convex_splitting_inequality(self):
        mass = lumped_mass(generate_crisscross_2d(4, 4))
        rng = np.random.default_rng(0)
        for well in (ericksen_well(), uniaxial_well()):
            lo, hi = well.bounds
            worst = np.inf
            for _ in range(1000):
                s0 = rng.uniform(lo, hi, len(mass))
                s1 = rng.uniform(lo, hi, len(mass))
                lhs = mass.integrate(well.eval_psi(s1)) - mass.integrate(well.eval_psi(s0))
                rhs = mass.integrate(well.eval_dpsi_split(s1, s0) * (s1 - s0))
                worst = min(worst, rhs - lhs)
            self.assertGreaterEqual(worst, -1e-10, well.name)

    def test_custom_coefficients_and_errors(self):
        well = get_well("ericksen", eta_b=0.5, convex=Polynomial([0.0, 0.0, 63.0, 0.0, 1.0]))
        self.assertFalse(well.convex_is_quadratic)
        self.assertEqual(well.eta_b, 0.5)
        self.assertTrue(ericksen_well().convex_is_quadratic)
        with self.assertRaisesMessage(ConfigError, "well.name"):
            get_well("quartic")
        with self.assertRaises(ConfigError):
            ericksen_well(eta_b=0.0)


class TensorPotentialTests(SimpleTestCase):
    def setUp(self):
        self.potential = LdgBulkPotential()

    def test_isotropic_state(self):
        Q = np.zeros((1, 3, 3))
        self.assertEqual(self.potential.psi(Q)[0], 1.0)
        np.testing.assert_array_equal(self.potential.variation(Q), Q)

    def test_uniaxial_restriction_matches_scalar_well(self):
        s = np.linspace(-0.5, 1.0, 31)
        Q = uniaxial_compose(s, np.tile([0.0, 0.0, 1.0], (31, 1))).matrices
        np.testing.assert_allclose(self.potential.psi(Q), self.potential.on_uniaxial(s), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(self.potential.on_uniaxial(s), uniaxial_well().eval_psi(s), atol=1e-4)
        self.assertAlmostEqual(float(self.potential.on_uniaxial(0.700005531)), 0.0, delta=1e-3)

    def test_split_parts_sum(self):
        rng = np.random.default_rng(1)
        basis = orthonormal_traceless_basis(3)
        Q = np.einsum("na,aij->nij", 0.3 * rng.standard_normal((20, 5)), basis)
        np.testing.assert_allclose(
            self.potential.psi_c(Q) - self.potential.psi_e(Q), self.potential.psi(Q), rtol=1e-12
        )
        np.testing.assert_allclose(
            self.potential.convex_part_variation(Q) - self.potential.expansive_part_variation(Q),
            self.potential.variation(Q),
            atol=1e-10,
        )

    def test_variation_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        basis = orthonormal_traceless_basis(3)
        Q = np.einsum("na,aij->nij", 0.3 * rng.standard_normal((10, 5)), basis)
        P = np.einsum("na,aij->nij", rng.standard_normal((10, 5)), basis)
        t = 1e-5
        fd = (self.potential.psi(Q + t * P) - self.potential.psi(Q - t * P)) / (2 * t)
        exact = np.einsum("nij,nij->n", self.potential.variation(Q), P)
        np.testing.assert_allclose(fd, exact, rtol=1e-6, atol=1e-6)


class ConvexityAuditTests(SimpleTestCase):
    def test_ericksen_split_is_convex(self):
        report = convexity_audit(ericksen_well())
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.min_convex_curvature, 126.0)
        self.assertGreater(report.min_expansive_curvature, 0.0)

    def test_uniaxial_split_on_three_dimensional_range(self):
        self.assertTrue(convexity_audit(uniaxial_well(dim=3)).passed)

    def test_tensor_split_on_uniaxial_samples(self):
        report = convexity_audit(LdgBulkPotential(), bounds=(-0.5, 1.0))
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.min_convex_curvature, -7.502104 + 552.230967, places=6)
        self.assertIn("convex split: yes", report.summary_lines())

    def test_small_d_is_reported(self):
        report = convexity_audit(LdgBulkPotential(D=1.0), bounds=(-0.5, 1.0))
        self.assertFalse(report.passed)
