import math

import numpy as np
from django.test import SimpleTestCase, tag

from apps.core.exceptions import CouplingError
from apps.couplings.anchoring import Anchoring, AnchoringParams, anchoring_projection_monotone
from apps.couplings.electric import ElectricCoupling, ElectricParams
from apps.couplings.phase_field import (
    AffineShape,
    NodalSignedDistance,
    SphereShape,
    build_phase_field,
    phi_reference,
    surface_functional,
)
from apps.fem.quadrature import LumpedMass, lumped_mass
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d

SPHERE_AREA = 4.0 * math.pi * 0.2 ** 2


def _random_unit(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def _random_psd(rng, n, dim):
    A = rng.standard_normal((n, dim, dim))
    return np.einsum("nij,nkj->nik", A, A)


class PhaseFieldTests(SimpleTestCase):
    def test_reference_profile(self):
        self.assertEqual(float(phi_reference(0.0, 0.1)), 0.5)
        self.assertGreater(float(phi_reference(-1.0, 0.01)), 0.99)
        self.assertLess(float(phi_reference(1.0, 0.01)), 0.01)
        # phi_ref'(0) = -1 / (pi eps)
        eps, h = 0.05, 1e-6
        slope = (phi_reference(h, eps) - phi_reference(-h, eps)) / (2 * h)
        self.assertAlmostEqual(float(slope), -1.0 / (math.pi * eps), places=4)

    def test_half_on_the_surface_and_bounds(self):
        mesh = generate_crisscross_2d(20, 20)
        colloid = build_phase_field(mesh, SphereShape(center=(0.5, 0.5), radius=0.25), eps=0.05)
        on_surface = np.abs(np.linalg.norm(mesh.vertices - 0.5, axis=1) - 0.25) < 1e-12
        self.assertTrue(on_surface.any())
        np.testing.assert_allclose(colloid.phi[on_surface], 0.5)
        self.assertTrue(np.all((colloid.phi > 0.0) & (colloid.phi < 1.0)))

    def test_gradient_peak_near_the_interface(self):
        mesh = generate_crisscross_2d(64, 64)
        eps = 0.1
        colloid = build_phase_field(mesh, SphereShape(center=(0.5, 0.5), radius=0.25), eps=eps)
        peak = float(np.sqrt(colloid.nodal_gradient_sq.max()))
        self.assertAlmostEqual(peak, 1.0 / (math.pi * eps), delta=0.1 / (math.pi * eps))

    def test_validation(self):
        mesh = generate_crisscross_2d(4, 4)
        with self.assertRaises(CouplingError):
            build_phase_field(mesh, SphereShape(center=(0.5, 0.5), radius=0.2), eps=0.0)
        with self.assertRaises(CouplingError):
            SphereShape(center=(0.5, 0.5), radius=-1.0)
        with self.assertRaises(CouplingError):
            build_phase_field(mesh, SphereShape(center=(0.5, 0.5, 0.5), radius=0.2), eps=0.1)
        with self.assertRaisesMessage(CouplingError, "signed-distance"):
            build_phase_field(mesh, NodalSignedDistance(), eps=0.1)

    def test_coarse_mesh_warns(self):
        mesh = generate_crisscross_2d(4, 4)
        with self.assertLogs("apps.couplings.phase_field", level="WARNING"):
            build_phase_field(mesh, SphereShape(center=(0.5, 0.5), radius=0.2), eps=0.01)

    def test_affine_shape_matches_moved_sphere(self):
        mesh = generate_crisscross_2d(8, 8)
        ref = SphereShape(center=(0.0, 0.0), radius=0.2)
        moved = AffineShape(reference=ref, matrix=np.eye(2), offset=np.array([0.5, 0.5]))
        direct = SphereShape(center=(0.5, 0.5), radius=0.2)
        np.testing.assert_allclose(moved.signed_distance(mesh), direct.signed_distance(mesh), atol=1e-14)

    def test_surface_functional_of_zero(self):
        mesh = generate_crisscross_2d(8, 8)
        colloid = build_phase_field(mesh, SphereShape(center=(0.5, 0.5), radius=0.2), eps=0.1)
        self.assertEqual(surface_functional(colloid, np.zeros(mesh.n_nodes)), 0.0)

    @tag("slow")
    def test_sphere_area_recovery(self):
        mesh = generate_kuhn_3d(32, 32, 32)
        center = (0.5, 0.5, 0.5)
        area = surface_functional(
            build_phase_field(mesh, SphereShape(center=center, radius=0.2), eps=0.06), np.ones(mesh.n_nodes)
        )
        self.assertLess(abs(area - SPHERE_AREA), 0.1 * SPHERE_AREA)

    @tag("slow")
    def test_sphere_area_error_shrinks_with_eps(self):
        mesh = generate_kuhn_3d(48, 48, 48)
        errors = []
        for eps in (0.06, 0.03):
            colloid = build_phase_field(mesh, SphereShape(center=(0.5, 0.5, 0.5), radius=0.2), eps=eps)
            errors.append(abs(surface_functional(colloid, np.ones(mesh.n_nodes)) - SPHERE_AREA))
        self.assertLess(errors[1], errors[0])


class AnchoringTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_crisscross_2d(24, 24)
        cls.mass = lumped_mass(cls.mesh)
        cls.colloid = build_phase_field(cls.mesh, SphereShape(center=(0.5, 0.5), radius=0.2), eps=0.08)

    def _anchoring(self, **weights):
        return Anchoring(colloid=self.colloid, params=AnchoringParams(s_star=0.7, **weights), mass=self.mass)

    def test_negative_weight_is_rejected(self):
        with self.assertRaises(CouplingError):
            AnchoringParams(s_star=0.7, k_planar_1=-1.0)

    def test_form_identity(self):
        rng = np.random.default_rng(41)
        anchoring = self._anchoring(k_normal=2.0, k_planar_1=0.7, k_planar_2=1.3)
        for _ in range(20):
            s = rng.uniform(-0.5, 1.0, self.mesh.n_nodes)
            n = _random_unit(rng, self.mesh.n_nodes, 2)
            lhs = anchoring.a_n(s, n, n)
            rhs = anchoring.a_s(s, s, n) + anchoring.omega(s, n) + anchoring.zeta(0.7 - s, n)
            self.assertAlmostEqual(lhs, rhs, delta=1e-10 * max(abs(lhs), 1.0))

    def test_normal_alignment_has_no_energy(self):
        anchoring = self._anchoring(k_normal=5.0)
        g = self.colloid.nodal_gradients
        norm = np.linalg.norm(g, axis=1)
        n = np.tile([1.0, 0.0], (self.mesh.n_nodes, 1))
        live = norm > 1e-12
        n[live] = g[live] / norm[live, None]
        s = np.full(self.mesh.n_nodes, 0.7)
        self.assertAlmostEqual(anchoring.energy(s, n), 0.0, places=12)
        tangent = np.stack([-n[:, 1], n[:, 0]], axis=1)
        self.assertGreater(anchoring.energy(s, tangent), 0.0)

    def test_planar_alignment_has_no_energy(self):
        anchoring = self._anchoring(k_planar_1=5.0, k_planar_2=3.0)
        g = self.colloid.nodal_gradients
        n = np.stack([-g[:, 1], g[:, 0]], axis=1)
        norm = np.linalg.norm(n, axis=1)
        live = norm > 1e-12
        n[live] /= norm[live, None]
        n[~live] = [1.0, 0.0]
        s = np.full(self.mesh.n_nodes, 0.7)
        self.assertAlmostEqual(anchoring.energy(s, n), 0.0, places=12)

    def test_sign_invariance(self):
        rng = np.random.default_rng(42)
        anchoring = self._anchoring(k_normal=1.0, k_planar_1=1.0, k_planar_2=1.0)
        s = rng.uniform(0.0, 1.0, self.mesh.n_nodes)
        n = _random_unit(rng, self.mesh.n_nodes, 2)
        flip = np.where(rng.random(self.mesh.n_nodes) < 0.5, -1.0, 1.0)[:, None]
        self.assertAlmostEqual(anchoring.energy(s, n), anchoring.energy(s, flip * n), places=12)

    def test_projection_is_monotone_for_the_anchoring_matrices(self):
        rng = np.random.default_rng(43)
        anchoring = self._anchoring(k_normal=2.0, k_planar_1=1.0, k_planar_2=0.5)
        for _ in range(100):
            s = rng.uniform(0.0, 1.0, self.mesh.n_nodes)
            n = _random_unit(rng, self.mesh.n_nodes, 2) * rng.uniform(1.0, 3.0, (self.mesh.n_nodes, 1))
            report = anchoring_projection_monotone(anchoring.node_matrices(s), n, self.mass)
            self.assertTrue(report.passed, msg=report.violations[:3])
            self.assertGreaterEqual(report.worst_slack, -1e-12)


class MonotoneProjectionTests(SimpleTestCase):
    def test_unit_vectors_give_equality(self):
        rng = np.random.default_rng(51)
        n = _random_unit(rng, 10, 3)
        H = _random_psd(rng, 10, 3)
        report = anchoring_projection_monotone(H, n, LumpedMass(weights=np.ones(10)))
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.worst_slack, 0.0, places=12)

    def test_identity_form_decreases_by_four(self):
        n = 2.0 * np.tile([0.0, 1.0, 0.0], (5, 1))
        H = np.tile(np.eye(3), (5, 1, 1))
        mass = LumpedMass(weights=np.full(5, 0.2))
        report = anchoring_projection_monotone(H, n, mass)
        self.assertAlmostEqual(report.worst_slack, 0.0)
        before = mass.weights * np.einsum("ni,nij,nj->n", n, H, n)
        np.testing.assert_allclose(before, 4 * 0.2)

    def test_random_psd_matrices(self):
        rng = np.random.default_rng(52)
        for _ in range(100):
            n = _random_unit(rng, 50, 3) * rng.uniform(1.0, 5.0, (50, 1))
            report = anchoring_projection_monotone(
                _random_psd(rng, 50, 3), n, LumpedMass(weights=rng.uniform(0.1, 1.0, 50))
            )
            self.assertTrue(report.passed)
            self.assertGreaterEqual(report.worst_slack, -1e-12)

    def test_indefinite_matrix_is_reported(self):
        H = np.array([np.diag([-1.0, 1.0])])
        n = np.array([[2.0, 0.0]])
        report = anchoring_projection_monotone(H, n, LumpedMass(weights=np.ones(1)))
        self.assertFalse(report.passed)
        node, eig = report.violations[0]
        self.assertEqual(node, 0)
        self.assertAlmostEqual(min(eig), -1.0)

    def test_short_vectors_are_refused(self):
        with self.assertRaisesMessage(CouplingError, "node 1"):
            anchoring_projection_monotone(
                np.tile(np.eye(2), (2, 1, 1)), np.array([[1.0, 0.0], [0.5, 0.0]]), LumpedMass(weights=np.ones(2))
            )


class ElectricTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_kuhn_3d(4, 4, 4)
        cls.mass = lumped_mass(cls.mesh)
        cls.params = ElectricParams(field=np.array([0.0, 1.0, 0.0]), k_ext=160.0, eps_parallel=7.0 / 3.0, eps_perp=1.0 / 3.0)
        cls.electric = ElectricCoupling(params=cls.params, mass=cls.mass)

    def test_derived_constants(self):
        self.assertAlmostEqual(self.params.eps_bar, 1.0)
        self.assertAlmostEqual(self.params.eps_a, 2.0)
        self.assertAlmostEqual(self.params.gamma_a, 2.0 / 3.0)

    def test_zero_field_has_zero_energy(self):
        rng = np.random.default_rng(61)
        params = ElectricParams(field=np.zeros(3), k_ext=1.0, eps_parallel=2.0, eps_perp=1.0)
        coupling = ElectricCoupling(params=params, mass=self.mass)
        s = rng.uniform(-0.5, 1.0, self.mesh.n_nodes)
        n = _random_unit(rng, self.mesh.n_nodes, 3)
        self.assertEqual(coupling.energy(s, n), 0.0)

    def test_degree_above_one_is_refused(self):
        s = np.zeros(self.mesh.n_nodes)
        s[7] = 1.2
        n = np.tile([0.0, 0.0, 1.0], (self.mesh.n_nodes, 1))
        with self.assertRaisesMessage(CouplingError, "node 7"):
            self.electric.energy(s, n)

    def test_matrices_are_positive_semidefinite(self):
        rng = np.random.default_rng(62)
        for _ in range(20):
            s = rng.uniform(-1.0, 1.0, self.mesh.n_nodes)
            H = self.electric.node_matrices(s)
            v = rng.standard_normal((self.mesh.n_nodes, 3))
            self.assertGreaterEqual(np.einsum("ni,nij,nj->n", v, H, v).min(), -1e-12)

    def test_projection_is_monotone(self):
        rng = np.random.default_rng(63)
        for _ in range(100):
            s = rng.uniform(-1.0, 1.0, self.mesh.n_nodes)
            n = _random_unit(rng, self.mesh.n_nodes, 3) * rng.uniform(1.0, 2.0, (self.mesh.n_nodes, 1))
            report = anchoring_projection_monotone(self.electric.node_matrices(s), n, self.mass)
            self.assertTrue(report.passed)
            unit = n / np.linalg.norm(n, axis=1)[:, None]
            self.assertGreaterEqual(self.electric.e_h(s, n, n) - self.electric.e_h(s, unit, unit), -1e-12)

    def test_energy_matches_continuous_value_for_unit_directors(self):
        rng = np.random.default_rng(64)
        s = rng.uniform(-0.5, 1.0, self.mesh.n_nodes)
        n = _random_unit(rng, self.mesh.n_nodes, 3)
        p = self.params
        E = np.array([0.0, 1.0, 0.0])
        Q = s[:, None, None] * (np.einsum("ni,nj->nij", n, n) - np.eye(3) / 3.0)
        density = p.eps_bar + p.eps_a * np.einsum("i,nij,j->n", E, Q, E)
        expected = -0.5 * p.k_ext * float(np.dot(self.mass.weights, density))
        self.assertAlmostEqual(self.electric.energy(s, n), expected, delta=1e-9 * abs(expected))
        self.assertAlmostEqual(self.electric.tensor_energy(Q), expected, delta=1e-9 * abs(expected))

    def test_constant_state_closed_form(self):
        s = np.full(self.mesh.n_nodes, 0.5)
        n = np.tile([0.0, 1.0, 0.0], (self.mesh.n_nodes, 1))
        # eps_bar + eps_a s (1 - 1/3) = 1 + 2 * 0.5 * 2/3
        expected = -0.5 * 160.0 * (1.0 + 2.0 / 3.0) * self.mass.total
        self.assertAlmostEqual(self.electric.energy(s, n), expected, places=9)

    def test_variations_match_finite_differences(self):
        rng = np.random.default_rng(65)
        s = rng.uniform(-0.5, 0.9, self.mesh.n_nodes)
        n = _random_unit(rng, self.mesh.n_nodes, 3)
        z = rng.standard_normal(self.mesh.n_nodes) * 0.05
        v = rng.standard_normal(n.shape)
        tau = 1e-3
        fd_s = (self.electric.energy(s + tau * z, n) - self.electric.energy(s - tau * z, n)) / (2 * tau)
        fd_n = (self.electric.energy(s, n + tau * v) - self.electric.energy(s, n - tau * v)) / (2 * tau)
        self.assertAlmostEqual(self.electric.delta_s(s, n, z), fd_s, delta=1e-7 * (abs(fd_s) + 1.0))
        self.assertAlmostEqual(self.electric.delta_n(s, n, v), fd_n, delta=1e-7 * (abs(fd_n) + 1.0))

    def test_nodal_field_shape_is_checked(self):
        params = ElectricParams(field=np.ones((3, 3)), k_ext=1.0, eps_parallel=2.0, eps_perp=1.0)
        with self.assertRaises(CouplingError):
            ElectricCoupling(params=params, mass=self.mass).nodal_field
