import math

import numpy as np
from django.test import SimpleTestCase

from apps.core.constants import MODEL_ERICKSEN, MODEL_UNIAXIAL
from apps.core.exceptions import ConfigError
from apps.couplings.anchoring import Anchoring, AnchoringParams
from apps.couplings.electric import ElectricCoupling, ElectricParams
from apps.couplings.phase_field import SphereShape, build_phase_field
from apps.energy.breakdown import CSV_COLUMNS, EnergyBreakdown
from apps.energy.ericksen import erk_main_energy, ring_energy
from apps.energy.model import NON_ACUTE_WARNING, EnergyModel
from apps.energy.uniaxial import projectors, uni_main_energy
from apps.fem.quadrature import lumped_mass
from apps.fields.fields import DegreeField, admissible_range, truncate_nodewise
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d
from apps.meshes.mesh import SimplicialMesh
from apps.meshes.stiffness import build_stiffness, dirichlet_integral
from apps.potentials.wells import ericksen_well, uniaxial_well

TAUS = (1e-3, 1e-4, 1e-5)


def _random_unit(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def _random_state(rng, mesh, model):
    lo, hi = admissible_range(model, mesh.dim)
    s = rng.uniform(lo, hi, mesh.n_nodes)
    return s, _random_unit(rng, mesh.n_nodes, mesh.dim)


def _model(mesh, model, kappa=1.0, **couplings):
    well = ericksen_well() if model == MODEL_ERICKSEN else uniaxial_well(dim=mesh.dim)
    return EnergyModel.build(mesh, model, well, kappa=kappa, **couplings)


def _fd_errors(energy, exact, taus=TAUS):
    return [abs((energy(tau) - energy(-tau)) / (2.0 * tau) - exact) for tau in taus]


class FiniteDifferenceMixin:
    def assertSecondOrder(self, errors, energy_scale):
        """Observed order >= 1.9 on every pair of steps not swamped by round-off."""
        measured = 0
        for (t0, e0), (t1, e1) in zip(zip(TAUS, errors), zip(TAUS[1:], errors[1:])):
            noise = 1e-13 * max(energy_scale, 1.0) / t1
            if e1 <= noise:
                self.assertLessEqual(e1, max(e0, noise))
                continue
            order = math.log(e0 / e1) / math.log(t0 / t1)
            self.assertGreaterEqual(order, 1.9, msg=f"errors {errors}")
            measured += 1
        return measured

    def assertFdExact(self, errors, scale):
        for err in errors:
            self.assertLessEqual(err, 1e-6 * max(scale, 1.0), msg=f"errors {errors}")


class EnergyBreakdownTests(SimpleTestCase):
    def test_total_is_the_sum_of_parts(self):
        b = EnergyBreakdown(main=1.0, bulk=-0.25, anchoring=0.5, electric=-2.0, surface=0.125, offset=3.0)
        self.assertEqual(b.total, 1.0 - 0.25 + 0.5 - 2.0 + 0.125)
        self.assertEqual(b.total_without_offset, b.total - 3.0)

    def test_csv_columns(self):
        self.assertEqual(
            CSV_COLUMNS,
            ("step", "E_main", "E_bulk", "E_anchor", "E_electric", "E_total", "ds_norm", "min_s", "tangent_norm"),
        )


class EricksenEnergyTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh2 = generate_crisscross_2d(16, 16)
        cls.mesh3 = generate_kuhn_3d(8, 8, 8)
        cls.graph2 = build_stiffness(cls.mesh2)
        cls.graph3 = build_stiffness(cls.mesh3)

    def test_constant_state_has_zero_main_energy(self):
        n = np.tile([0.0, 1.0], (self.mesh2.n_nodes, 1))
        s = np.full(self.mesh2.n_nodes, 0.4)
        self.assertEqual(erk_main_energy(self.graph2, s, n, 1.0), 0.0)

    def test_two_cell_hand_value(self):
        mesh = SimplicialMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
            cells=np.array([[0, 1, 2], [1, 3, 2]]),
            facets=np.zeros((0, 2)),
            facet_labels=(),
        )
        graph = build_stiffness(mesh)
        # Right isosceles triangles: k = 1/2 on the legs, 0 on the shared diagonal.
        s = np.array([0.0, 1.0, 0.5, 0.5])
        n = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        legs = [(0, 1), (0, 2), (1, 3), (2, 3)]
        stiff = sum(0.5 * (s[i] - s[j]) ** 2 for i, j in legs)
        ring = sum(0.5 * 0.5 * (s[i] ** 2 + s[j] ** 2) * np.sum((n[i] - n[j]) ** 2) for i, j in legs)
        self.assertAlmostEqual(erk_main_energy(graph, s, n, 2.0), stiff + 0.5 * ring, places=14)

    def test_constant_degree_matches_aux_dirichlet_energy(self):
        rng = np.random.default_rng(3)
        n = _random_unit(rng, self.mesh2.n_nodes, 2)
        s = np.ones(self.mesh2.n_nodes)
        self.assertAlmostEqual(
            erk_main_energy(self.graph2, s, n, 1.0), 0.5 * dirichlet_integral(self.graph2, s[:, None] * n), places=10
        )

    def test_energy_identity_and_inequalities(self):
        rng = np.random.default_rng(11)
        for mesh in (self.mesh2, self.mesh3):
            for kappa in (0.5, 1.0, 2.0):
                model = _model(mesh, MODEL_ERICKSEN, kappa=kappa)
                for _ in range(34):
                    s, n = _random_state(rng, mesh, MODEL_ERICKSEN)
                    main = model.main_energy(s, n)
                    aux = model.aux_energy(s, n)
                    res = model.residual(s, n)
                    self.assertGreaterEqual(res, -1e-12)
                    self.assertAlmostEqual(main - aux, res, delta=1e-10 * max(abs(main), 1.0))
                    slack = main - model.aux_energy(s, n, tilde=True) - model.residual(s, n, tilde=True)
                    self.assertGreaterEqual(slack, -1e-12 * max(main, 1.0))

    def test_coercivity(self):
        rng = np.random.default_rng(12)
        for mesh, graph in ((self.mesh2, self.graph2), (self.mesh3, self.graph3)):
            for kappa in (0.5, 1.0, 2.0):
                for _ in range(20):
                    s, n = _random_state(rng, mesh, MODEL_ERICKSEN)
                    main = erk_main_energy(graph, s, n, kappa)
                    bound = 0.5 * min(kappa, 1.0) * max(
                        dirichlet_integral(graph, s[:, None] * n), dirichlet_integral(graph, s)
                    )
                    self.assertGreaterEqual(main - bound, -1e-10)
                    bound_tilde = 0.5 * min(kappa, 1.0) * dirichlet_integral(graph, np.abs(s)[:, None] * n)
                    self.assertGreaterEqual(main - bound_tilde, -1e-10)

    def test_partial_sign_flip_raises_the_energy(self):
        mesh = self.mesh2
        s = np.ones(mesh.n_nodes)
        n = np.tile([1.0, 0.0], (mesh.n_nodes, 1))
        flipped = n.copy()
        flipped[mesh.vertices[:, 0] < 0.5] *= -1.0
        self.assertEqual(erk_main_energy(self.graph2, s, n, 1.0), 0.0)
        self.assertGreater(erk_main_energy(self.graph2, s, flipped, 1.0), 1.0)

    def test_truncation_does_not_raise_the_energy(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            s, n = _random_state(rng, self.mesh2, MODEL_ERICKSEN)
            field = DegreeField(values=s, model=MODEL_ERICKSEN, dim=2)
            cut = truncate_nodewise(field, 0.2)
            before = erk_main_energy(self.graph2, s, n, 1.0)
            after = erk_main_energy(self.graph2, cut.values, n, 1.0)
            self.assertLessEqual(after, before + 1e-12)


class UniaxialEnergyTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh2 = generate_crisscross_2d(16, 16)
        cls.mesh3 = generate_kuhn_3d(8, 8, 8)

    def test_kappa_is_fixed(self):
        model = _model(self.mesh3, MODEL_UNIAXIAL, kappa=5.0)
        self.assertAlmostEqual(model.kappa, 2.0 / 3.0)

    def test_energy_identity_and_inequalities(self):
        rng = np.random.default_rng(21)
        for mesh in (self.mesh2, self.mesh3):
            model = _model(mesh, MODEL_UNIAXIAL)
            graph = model.graph
            d = mesh.dim
            for _ in range(100):
                s, n = _random_state(rng, mesh, MODEL_UNIAXIAL)
                main = model.main_energy(s, n)
                res = model.residual(s, n)
                self.assertAlmostEqual(main - model.aux_energy(s, n), res, delta=1e-10 * max(abs(main), 1.0))
                slack = main - model.aux_energy(s, n, tilde=True) - model.residual(s, n, tilde=True)
                self.assertGreaterEqual(slack, -1e-12 * max(main, 1.0))
                U = s[:, None, None] * projectors(n)
                bound = (d - 1.0) / (2.0 * d) * max(dirichlet_integral(graph, U), dirichlet_integral(graph, s))
                self.assertGreaterEqual(main - bound, -1e-10)

    def test_line_field_gauge_invariance(self):
        rng = np.random.default_rng(22)
        model = _model(self.mesh3, MODEL_UNIAXIAL)
        s, n = _random_state(rng, self.mesh3, MODEL_UNIAXIAL)
        flipped = n.copy()
        subset = rng.random(self.mesh3.n_nodes) < 0.5
        flipped[subset] *= -1.0
        self.assertAlmostEqual(model.total_energy(s, n), model.total_energy(s, flipped), places=10)
        self.assertAlmostEqual(model.total_energy(s, n), model.total_energy(s, -n), places=10)

    def test_ring_energy_of_projectors_doubles_for_smooth_fields(self):
        mesh = generate_crisscross_2d(32, 32)
        graph = build_stiffness(mesh)
        x, y = mesh.vertices.T
        angle = 0.6 * x + 0.3 * np.sin(np.pi * y)
        n = np.stack([np.cos(angle), np.sin(angle)], axis=1)
        s = np.ones(mesh.n_nodes)
        ratio = ring_energy(graph, s, projectors(n)) / ring_energy(graph, s, n)
        self.assertAlmostEqual(ratio, 2.0, delta=0.04)

    def test_constant_fields_have_zero_main_energy(self):
        n = np.tile([0.0, 0.0, 1.0], (self.mesh3.n_nodes, 1))
        graph = build_stiffness(self.mesh3)
        self.assertEqual(uni_main_energy(graph, np.full(self.mesh3.n_nodes, 0.3), n), 0.0)


class EnergyModelTests(SimpleTestCase):
    def test_rejects_standard_model(self):
        mesh = generate_crisscross_2d(2, 2)
        with self.assertRaises(ConfigError):
            EnergyModel.build(mesh, "standard_ldg", ericksen_well())

    def test_non_acute_mesh_attaches_warning(self):
        h = 0.5 / math.tan(math.radians(50.0))
        mesh = SimplicialMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h], [0.5, -h]]),
            cells=np.array([[0, 1, 2], [1, 0, 3]]),
            facets=np.zeros((0, 2)),
            facet_labels=(),
        )
        with self.assertLogs("apps.energy.model", level="WARNING"):
            model = _model(mesh, MODEL_ERICKSEN)
        s = np.array([0.1, 0.2, 0.3, 0.4])
        n = np.tile([1.0, 0.0], (4, 1))
        breakdown = model.breakdown(s, n)
        self.assertIn(NON_ACUTE_WARNING, breakdown.warnings)
        self.assertTrue(np.isfinite(breakdown.total))

    def test_variation_at_constant_state_is_bulk_only(self):
        mesh = generate_crisscross_2d(8, 8)
        model = _model(mesh, MODEL_ERICKSEN)
        rng = np.random.default_rng(5)
        s = np.full(mesh.n_nodes, 0.3)
        n = np.tile([1.0, 0.0], (mesh.n_nodes, 1))
        z = rng.standard_normal(mesh.n_nodes)
        bulk = float(np.dot(model.mass.weights, model.well.eval_dpsi(s) * z))
        self.assertAlmostEqual(model.delta_s(s, n, z), bulk, places=10)


class FirstVariationTests(FiniteDifferenceMixin, SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_crisscross_2d(12, 12)
        mass = lumped_mass(cls.mesh)
        colloid = build_phase_field(cls.mesh, SphereShape(center=(0.5, 0.5), radius=0.2), eps=0.1)
        cls.anchoring = Anchoring(
            colloid=colloid,
            params=AnchoringParams(s_star=0.75, k_normal=3.0, k_planar_1=0.5, k_planar_2=0.25),
            mass=mass,
        )
        cls.electric = ElectricCoupling(
            params=ElectricParams(field=np.array([0.3, 1.0]), k_ext=4.0, eps_parallel=7.0 / 3.0, eps_perp=1.0 / 3.0),
            mass=mass,
        )

    def _models(self):
        yield _model(self.mesh, MODEL_ERICKSEN, kappa=1.5)
        yield _model(self.mesh, MODEL_ERICKSEN, anchoring=self.anchoring, electric=self.electric)
        yield _model(self.mesh, MODEL_UNIAXIAL)
        yield _model(self.mesh, MODEL_UNIAXIAL, anchoring=self.anchoring, electric=self.electric)

    def _state(self, rng):
        s = rng.uniform(-0.45, 0.95, self.mesh.n_nodes)
        return s, _random_unit(rng, self.mesh.n_nodes, 2)

    def test_degree_variation(self):
        rng = np.random.default_rng(31)
        measured = 0
        for model in self._models():
            _, n = self._state(rng)
            # On s > 0.4 the third derivative of both wells is positive, so the
            # central-difference error is dominated by truncation.
            s = rng.uniform(0.4, 0.9, self.mesh.n_nodes)
            z = rng.uniform(0.5, 1.0, self.mesh.n_nodes)
            exact = model.delta_s(s, n, z)
            errors = _fd_errors(lambda t: model.total_energy(s + t * z, n), exact)
            measured += self.assertSecondOrder(errors, abs(model.total_energy(s, n)))
        self.assertGreater(measured, 0)

    def test_director_variation(self):
        rng = np.random.default_rng(32)
        for model in self._models():
            s, n = self._state(rng)
            v = rng.standard_normal(n.shape)
            exact = model.delta_dir(s, n, v)
            errors = _fd_errors(lambda t: model.total_energy(s, n + t * v), exact)
            if model.is_uniaxial:
                self.assertGreater(self.assertSecondOrder(errors, abs(model.total_energy(s, n))), 0)
            else:
                # Quadratic in n: central differences are exact up to round-off.
                self.assertFdExact(errors, abs(exact))

    def test_tangential_variation_along_normalized_path(self):
        rng = np.random.default_rng(33)
        model = _model(self.mesh, MODEL_ERICKSEN)
        s, n = self._state(rng)
        v = rng.standard_normal(n.shape)
        v -= np.einsum("ni,ni->n", v, n)[:, None] * n

        def path(t):
            m = n + t * v
            return m / np.linalg.norm(m, axis=1)[:, None]

        exact = model.delta_dir(s, n, v)
        errors = _fd_errors(lambda t: model.main_energy(s, path(t)), exact)
        self.assertGreater(self.assertSecondOrder(errors, abs(model.main_energy(s, n))), 0)

    def test_coupling_terms_match_their_variations(self):
        rng = np.random.default_rng(34)
        model = _model(self.mesh, MODEL_ERICKSEN, anchoring=self.anchoring, electric=self.electric)
        s, n = self._state(rng)
        diag, rhs = model.coupling_s_terms(n)
        z = rng.standard_normal(self.mesh.n_nodes)
        coupled = self.anchoring.delta_s(s, n, z) + self.electric.delta_s(s, n, z)
        # The s-parts of both couplings are m_i (diag_i s_i - rhs_i) tested with z.
        self.assertAlmostEqual(
            float(np.dot(model.mass.weights, (diag * s - rhs) * z)), coupled, delta=1e-10 * (abs(coupled) + 1.0)
        )
        G = model.coupling_director_matrices(s)
        quadratic = 0.5 * float(np.dot(model.mass.weights, np.einsum("ni,nij,nj->n", n, G, n)))
        # Parts that do not depend on n.
        offset = self.anchoring.energy(s, 0.0 * n) + self.electric.energy(s, 0.0 * n)
        self.assertAlmostEqual(
            self.anchoring.energy(s, n) + self.electric.energy(s, n), quadratic + offset, delta=1e-10
        )
