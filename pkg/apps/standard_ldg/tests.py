import numpy as np
from django.test import SimpleTestCase
from scipy.optimize import minimize_scalar

from apps.core.constants import MODEL_UNIAXIAL
from apps.core.exceptions import CoercivityError, ConfigError, FieldError, MeshError
from apps.couplings.anchoring import Anchoring, AnchoringParams, TensorAnchoring
from apps.couplings.electric import ElectricCoupling, ElectricParams
from apps.couplings.phase_field import SphereShape, build_phase_field
from apps.energy.model import EnergyModel
from apps.fem.quadrature import lumped_mass
from apps.fields.decompose import matrices_to_components, uniaxial_compose
from apps.flow.config import FlowConfig
from apps.meshes.generators import generate_kuhn_3d
from apps.meshes.stiffness import assemble_cell_matrices, local_stiffness
from apps.potentials.tensor import LdgBulkPotential
from apps.potentials.wells import uniaxial_well

from .compare import cross_model_compare
from .elastic import assemble_elastic_form, component_dofs
from .params import LdgElasticParams
from .scheme import (
    LdgProblem,
    ldg_flow_step,
    ldg_operator,
    ldg_total_energy,
    run_ldg_flow,
    uniform_tensor,
)


def _unit(rng, n, dim=3):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def _random_traceless(rng, n, dim=3):
    A = rng.standard_normal((n, dim, dim))
    S = 0.5 * (A + np.swapaxes(A, 1, 2))
    return S - np.trace(S, axis1=1, axis2=2)[:, None, None] * np.eye(dim) / dim


def _ldg_s_star(potential):
    result = minimize_scalar(
        lambda s: float(potential.on_uniaxial(s)), bounds=(0.3, 1.0), method="bounded", options={"xatol": 1e-12}
    )
    return float(result.x)


class CoercivityAuditTests(SimpleTestCase):
    def test_admissible_constants_pass(self):
        self.assertTrue(LdgElasticParams(L1=1.0, L2=0.2, L3=0.5).coercivity_audit().passed)

    def test_each_condition_is_reported(self):
        cases = [
            (LdgElasticParams(L1=0.0), "L1"),
            (LdgElasticParams(L1=1.0, L3=2.5), "L3"),
            (LdgElasticParams(L1=1.0, L3=-1.0), "L3"),
            (LdgElasticParams(L1=1.0, L2=-0.7), "L2"),
        ]
        for params, name in cases:
            with self.subTest(params=params):
                report = params.coercivity_audit()
                self.assertFalse(report.passed)
                self.assertTrue(any(v.startswith(name) for v in report.violations))

    def test_refusal_and_override(self):
        params = LdgElasticParams(L1=1.0, L3=3.0)
        with self.assertRaises(CoercivityError):
            params.require_coercive()
        with self.assertLogs("apps.standard_ldg.params", level="WARNING"):
            report = params.require_coercive(allow_override=True)
        self.assertFalse(report.passed)

    def test_weights_are_validated(self):
        with self.assertRaises(ConfigError):
            LdgElasticParams(eta_b=0.0)
        with self.assertRaises(ConfigError):
            LdgElasticParams(eta_gamma=-1.0)


class ElasticFormTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_kuhn_3d(4, 4, 4)

    def _linear_field(self, rng):
        C = rng.standard_normal((3, 3, 3))
        C = 0.5 * (C + np.swapaxes(C, 0, 1))
        C = C - np.einsum("iik->k", C)[None, None, :] * np.eye(3)[:, :, None] / 3.0
        Q = np.einsum("ijk,nk->nij", C, self.mesh.vertices)
        return C, matrices_to_components(Q, 3).reshape(-1)

    def test_one_constant_form_is_componentwise_stiffness(self):
        rng = np.random.default_rng(20)
        Q = _random_traceless(rng, self.mesh.n_nodes)
        q = matrices_to_components(Q, 3).reshape(-1)
        a = assemble_elastic_form(LdgElasticParams(L1=1.7), self.mesh)
        K = assemble_cell_matrices(self.mesh, local_stiffness(self.mesh))
        expected = 1.7 * sum(float(Q[:, i, j] @ (K @ Q[:, i, j])) for i in range(3) for j in range(3))
        self.assertAlmostEqual(a.quadratic_form(q), expected, delta=1e-10 * abs(expected))

    def test_constant_tensor_has_zero_form(self):
        q = uniform_tensor(3, self.mesh.n_nodes, 0.6, (1.0, 2.0, 2.0)).reshape(-1)
        a = assemble_elastic_form(LdgElasticParams(L1=1.0, L2=0.2, L3=0.5), self.mesh)
        self.assertLess(abs(a.quadratic_form(q)), 1e-12)
        self.assertTrue(a.symmetric)

    def test_divergence_and_transpose_terms_on_linear_fields(self):
        rng = np.random.default_rng(21)
        C, q = self._linear_field(rng)
        div = np.einsum("ijj->i", C)
        cases = {
            (1.0, 0.0, 0.0): np.sum(C ** 2),
            (0.0, 1.0, 0.0): float(div @ div),
            (0.0, 0.0, 1.0): float(np.einsum("ikj,ijk->", C, C)),
        }
        for (L1, L2, L3), expected in cases.items():
            with self.subTest(L=(L1, L2, L3)):
                a = assemble_elastic_form(LdgElasticParams(L1=L1, L2=L2, L3=L3), self.mesh)
                self.assertAlmostEqual(a.quadratic_form(q), expected, delta=1e-10 * max(abs(expected), 1.0))

    def test_rayleigh_quotients_of_coercive_constants_are_positive(self):
        mesh = generate_kuhn_3d(5, 5, 5)
        a = assemble_elastic_form(LdgElasticParams(L1=1.0, L2=0.2, L3=0.5), mesh)
        h1 = assemble_elastic_form(LdgElasticParams(L1=1.0), mesh)
        rng = np.random.default_rng(22)
        quotients = []
        for _ in range(100):
            q = rng.standard_normal(a.dimension)
            quotients.append(a.quadratic_form(q) / h1.quadratic_form(q))
        self.assertGreater(min(quotients), 0.0)

    def test_implicit_operator_is_spd_with_dirichlet_data(self):
        mesh = generate_kuhn_3d(3, 3, 3)
        nodes = mesh.boundary_nodes(["zmin"])
        problem = LdgProblem(
            mesh=mesh,
            params=LdgElasticParams(L1=1.0, L2=0.2, L3=0.5),
            dirichlet_nodes=nodes,
            dirichlet_values=uniform_tensor(3, nodes.size, 0.5, (0.0, 0.0, 1.0)),
        )
        op = ldg_operator(problem, 1e-2)
        free = np.setdiff1d(np.arange(op.dimension), problem.fixed_dofs)
        reduced = op.restrict(free)
        rng = np.random.default_rng(23)
        for _ in range(100):
            x = rng.standard_normal(free.size)
            self.assertGreater(reduced.quadratic_form(x), 0.0)


class LdgEnergyTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_kuhn_3d(4, 4, 4)

    def test_constant_surface_tensor_leaves_only_bulk(self):
        q = uniform_tensor(3, self.mesh.n_nodes, 0.4, (0.0, 1.0, 0.0))
        problem = LdgProblem(
            mesh=self.mesh,
            params=LdgElasticParams(eta_gamma=5.0),
            surface_labels=("zmin", "zmax"),
            surface_tensor=q,
        )
        b = ldg_total_energy(problem, q)
        self.assertLess(abs(b.main), 1e-12)
        self.assertEqual(b.surface, 0.0)
        self.assertAlmostEqual(b.total, b.bulk)
        self.assertAlmostEqual(b.offset, 16.0)

    def test_surface_term_for_a_constant_mismatch(self):
        target = uniform_tensor(3, self.mesh.n_nodes, 0.4, (0.0, 1.0, 0.0))
        shift = uniform_tensor(3, self.mesh.n_nodes, 0.3, (1.0, 0.0, 0.0))
        problem = LdgProblem(
            mesh=self.mesh,
            params=LdgElasticParams(eta_gamma=2.0),
            surface_labels=("zmin",),
            surface_tensor=target,
        )
        delta = problem.matrices(shift)[0]
        expected = 0.5 * 2.0 * float(np.sum(delta * delta)) * 1.0
        self.assertAlmostEqual(ldg_total_energy(problem, target + shift).surface, expected, places=12)

    def test_problem_validation(self):
        with self.assertRaises(FieldError):
            LdgProblem(mesh=self.mesh, params=LdgElasticParams(), dirichlet_nodes=[0, 1], dirichlet_values=np.zeros((2, 2)))
        with self.assertRaises(ConfigError):
            LdgProblem(mesh=self.mesh, params=LdgElasticParams(eta_gamma=1.0))
        with self.assertRaises(CoercivityError):
            LdgProblem(mesh=self.mesh, params=LdgElasticParams(L1=1.0, L3=5.0))

    def test_colloid_anchoring_reduces_to_uniaxial_normal_anchoring(self):
        mass = lumped_mass(self.mesh)
        colloid = build_phase_field(self.mesh, SphereShape(center=(0.5, 0.5, 0.5), radius=0.25), eps=0.2)
        tensor = TensorAnchoring(colloid=colloid, s_star=0.7, k_normal=3.0, mass=mass)
        line = Anchoring(colloid=colloid, params=AnchoringParams(s_star=0.7, k_normal=3.0), mass=mass)
        rng = np.random.default_rng(24)
        for _ in range(10):
            s = rng.uniform(-0.4, 0.9, self.mesh.n_nodes)
            n = _unit(rng, self.mesh.n_nodes)
            Q = uniaxial_compose(s, n)
            self.assertAlmostEqual(tensor.energy(Q.matrices), line.energy(s, n), delta=1e-10 * max(1.0, line.energy(s, n)))

    def test_uniaxial_tensor_matches_uniaxial_energy_under_refinement(self):
        gaps = []
        for k in (6, 12):
            mesh = generate_kuhn_3d(k, k, k)
            x = mesh.vertices
            s = 0.5 + 0.2 * x[:, 0]
            angle = 0.8 * x[:, 1] + 0.4 * x[:, 2]
            n = np.column_stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)])
            uni = EnergyModel.build(mesh, MODEL_UNIAXIAL, uniaxial_well())
            problem = LdgProblem(mesh=mesh, params=LdgElasticParams(L1=1.0))
            ldg_main = ldg_total_energy(problem, uniaxial_compose(s, n).components).main
            uni_main = uni.main_energy(s, n)
            gaps.append(abs(ldg_main - uni_main) / uni_main)
        self.assertLess(gaps[1], gaps[0])
        self.assertLess(gaps[1], 0.02)


class LdgFlowTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_kuhn_3d(4, 4, 4)

    def test_uniform_minimizer_is_a_fixed_point(self):
        potential = LdgBulkPotential()
        s_star = _ldg_s_star(potential)
        q = uniform_tensor(3, self.mesh.n_nodes, s_star, (0.0, 0.6, 0.8))
        problem = LdgProblem(mesh=self.mesh, params=LdgElasticParams(), potential=potential)
        new = ldg_flow_step(problem, q, 1e-2, FlowConfig(dt=1e-2, cg_tol=1e-13))
        np.testing.assert_allclose(new, q, atol=1e-9)

    def test_heat_type_decay_decreases_the_energy(self):
        nodes = self.mesh.boundary_nodes(self.mesh.labels)
        problem = LdgProblem(
            mesh=self.mesh,
            params=LdgElasticParams(L1=1.0, L2=0.2, L3=0.5, eta_b=1.0),
            potential=LdgBulkPotential(K=0.0, A=0.0, B=0.0, C=0.0, D=0.0),
            dirichlet_nodes=nodes,
            dirichlet_values=np.zeros((nodes.size, 5)),
        )
        q0 = matrices_to_components(_random_traceless(np.random.default_rng(25), self.mesh.n_nodes), 3)
        result = run_ldg_flow(problem, q0, FlowConfig(dt=1e-2, max_steps=10))
        totals = [b.total for b in result.trace]
        for before, after in zip(totals, totals[1:]):
            self.assertLess(after, before)
        np.testing.assert_array_equal(result.q[nodes], 0.0)

    def test_coupled_flow_is_monotone_and_keeps_dirichlet_data(self):
        mass = lumped_mass(self.mesh)
        colloid = build_phase_field(self.mesh, SphereShape(center=(0.5, 0.5, 0.5), radius=0.2), eps=0.25)
        s_star = 0.7
        nodes = self.mesh.boundary_nodes(["zmin", "zmax"])
        values = uniform_tensor(3, nodes.size, s_star, (0.0, 0.0, 1.0))
        problem = LdgProblem(
            mesh=self.mesh,
            params=LdgElasticParams(),
            dirichlet_nodes=nodes,
            dirichlet_values=values,
            anchoring=TensorAnchoring(colloid=colloid, s_star=s_star, k_normal=10.0, mass=mass),
            electric=ElectricCoupling(
                ElectricParams(field=np.array([0.0, 1.0, 0.0]), k_ext=1.0, eps_parallel=7.0 / 3.0, eps_perp=1.0 / 3.0),
                mass,
            ),
        )
        q0 = uniform_tensor(3, self.mesh.n_nodes, s_star, (0.0, 0.0, 1.0))
        seen = []
        result = run_ldg_flow(problem, q0, FlowConfig(dt=1e-2, max_steps=8), callback=seen.append)
        self.assertEqual(len(seen), result.step + 1)
        self.assertLess(result.energy.total, result.initial_energy.total)
        np.testing.assert_array_equal(result.q[nodes], values)
        self.assertTrue(np.all((result.biaxiality >= 0.0) & (result.biaxiality <= 1.0)))


class CrossModelCompareTests(SimpleTestCase):
    def setUp(self):
        self.mesh = generate_kuhn_3d(3, 3, 3)
        rng = np.random.default_rng(26)
        self.s = rng.uniform(0.2, 0.8, self.mesh.n_nodes)
        self.n = _unit(rng, self.mesh.n_nodes)
        self.uni = EnergyModel.build(self.mesh, MODEL_UNIAXIAL, uniaxial_well())
        self.problem = LdgProblem(mesh=self.mesh, params=LdgElasticParams())

    def test_identical_fields_have_no_difference(self):
        q = uniaxial_compose(self.s, self.n).components
        report = cross_model_compare(self.uni, self.s, self.n, self.problem, q)
        self.assertEqual(report.max_difference, 0.0)
        self.assertEqual(report.ldg_of_ldg, report.ldg_of_uni)
        self.assertEqual(report.model_gap, report.final_gap)
        self.assertLess(report.max_biaxiality, 1e-8)
        self.assertEqual(set(report.as_dict()), {
            "E_uni[Q_uni]", "E_LdG[Q_uni]", "E_LdG[Q_LdG]", "model_gap", "final_gap", "max_difference", "max_biaxiality",
        })

    def test_mesh_mismatch_is_refused(self):
        other = LdgProblem(mesh=generate_kuhn_3d(2, 2, 2), params=LdgElasticParams())
        with self.assertRaises(MeshError):
            cross_model_compare(self.uni, self.s, self.n, other, np.zeros((27, 5)))

    def test_component_dofs_are_node_major(self):
        np.testing.assert_array_equal(component_dofs([0, 2], 3), [0, 1, 2, 3, 4, 10, 11, 12, 13, 14])
