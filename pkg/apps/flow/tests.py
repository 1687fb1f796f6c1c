import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from numpy.polynomial import Polynomial

from apps.core.constants import MODEL_ERICKSEN, MODEL_UNIAXIAL
from apps.core.exceptions import CFLViolation, ConfigError, FieldError, MonotonicityError
from apps.energy.breakdown import EnergyBreakdown
from apps.energy.ericksen import ring_energy
from apps.energy.model import EnergyModel
from apps.fields.defects import LoopSpec, local_minima, winding_on_loop
from apps.fields.fields import BoundaryData, LineField, admissible_range
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d
from apps.potentials.wells import DoubleWell, ericksen_well, uniaxial_well

from .config import CFL_WARN, FlowConfig
from .degree import s_step
from .driver import run_flow
from .state import REASON_CONVERGED, REASON_MAX_STEPS
from .tangent import (
    TANGENCY_TOL,
    cfl_limit,
    check_cfl,
    erk_tangent_step,
    householder_bases,
    project_director,
    project_line,
    uni_tangent_step,
)


def _unit(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def _tangent_noise(rng, n, scale):
    t = scale * rng.standard_normal(n.shape)
    return t - np.einsum("ni,ni->n", t, n)[:, None] * n


def _angle_field(mesh, theta):
    return np.column_stack([np.cos(theta), np.sin(theta)] + [np.zeros_like(theta)] * (mesh.dim - 2))


def _point_defect_boundary(mesh, degree, center, s_value):
    nodes = mesh.boundary_nodes(mesh.labels)
    x = mesh.vertices[nodes]
    theta = degree * np.arctan2(x[:, 1] - center[1], x[:, 0] - center[0])
    return BoundaryData(
        degree_nodes=nodes,
        degree_values=np.full(nodes.size, s_value),
        director_nodes=nodes,
        director_values=_angle_field(mesh, theta)[:, : mesh.dim],
    )


def _zero_well():
    return DoubleWell(
        name="zero",
        model=MODEL_ERICKSEN,
        convex=Polynomial([0.0]),
        expansive=Polynomial([0.0]),
        bounds=admissible_range(MODEL_ERICKSEN, 2),
    )


class HouseholderBasisTests(SimpleTestCase):
    def test_bases_are_orthonormal_and_tangent(self):
        rng = np.random.default_rng(3)
        for dim in (2, 3):
            n = _unit(rng, 200, dim)
            n[0] = np.eye(dim)[0]
            n[1] = -np.eye(dim)[dim - 1]
            B = householder_bases(n)
            self.assertEqual(B.shape, (200, dim, dim - 1))
            gram = np.einsum("nai,naj->nij", B, B)
            np.testing.assert_allclose(gram, np.broadcast_to(np.eye(dim - 1), gram.shape), atol=1e-13)
            self.assertLess(np.abs(np.einsum("na,nai->ni", n, B)).max(), 1e-13)

    def test_bases_are_deterministic(self):
        n = _unit(np.random.default_rng(4), 50, 3)
        np.testing.assert_array_equal(householder_bases(n), householder_bases(n.copy()))


class ProjectionTests(SimpleTestCase):
    def test_no_update_is_identity(self):
        n = _unit(np.random.default_rng(5), 30, 3)
        np.testing.assert_allclose(project_director(n), n, atol=1e-15)
        np.testing.assert_allclose(project_director(n, np.zeros_like(n)), n, atol=1e-15)

    def test_tangential_update_has_pythagorean_length(self):
        rng = np.random.default_rng(6)
        n = _unit(rng, 40, 3)
        t = _tangent_noise(rng, n, 2.0)
        np.testing.assert_allclose(
            np.linalg.norm(n + t, axis=1), np.sqrt(1.0 + np.einsum("ni,ni->n", t, t)), rtol=1e-14
        )

    def test_fixed_rows_are_copied_exactly(self):
        mesh = generate_crisscross_2d(8, 8)
        nodes = mesh.boundary_nodes(mesh.labels)
        theta = np.arctan2(mesh.vertices[:, 1] - 0.55, mesh.vertices[:, 0] - 0.45)
        n = np.column_stack([np.cos(theta), np.sin(theta)])
        t = _tangent_noise(np.random.default_rng(8), n, 0.5)
        t[nodes] = 0.0
        for project in (project_director, project_line):
            out = n
            for _ in range(5):
                out = project(out, t, nodes)
            np.testing.assert_array_equal(out[nodes], n[nodes])
            np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-14)

    def test_zero_vector_is_refused_with_node(self):
        n = np.array([[1.0, 0.0], [0.0, 1.0]])
        with self.assertRaisesMessage(FieldError, "node 1"):
            project_director(n, np.array([[0.0, 0.0], [0.0, -1.0]]))

    def test_projection_does_not_increase_ring_energy(self):
        mesh = generate_crisscross_2d(8, 8)
        model = EnergyModel.build(mesh, MODEL_ERICKSEN, ericksen_well())
        rng = np.random.default_rng(7)
        for _ in range(100):
            s = rng.uniform(-0.5, 1.0, mesh.n_nodes)
            n = _unit(rng, mesh.n_nodes, 2)
            t = _tangent_noise(rng, n, rng.uniform(0.1, 3.0))
            before = ring_energy(model.graph, s, n + t)
            after = ring_energy(model.graph, s, project_director(n, t))
            self.assertLessEqual(after - before, 1e-12 * max(1.0, before))


class TangentStepTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh2 = generate_crisscross_2d(8, 8)
        cls.mesh3 = generate_kuhn_3d(4, 4, 4)
        cls.config = FlowConfig(dt=1e-2, cfl_mode=CFL_WARN)

    def test_constant_director_is_critical(self):
        for mesh, model_name in ((self.mesh2, MODEL_ERICKSEN), (self.mesh3, MODEL_UNIAXIAL)):
            well = ericksen_well() if model_name == MODEL_ERICKSEN else uniaxial_well(dim=mesh.dim)
            model = EnergyModel.build(mesh, model_name, well)
            s = np.random.default_rng(8).uniform(0.1, 0.9, mesh.n_nodes)
            n = np.tile(np.eye(mesh.dim)[0], (mesh.n_nodes, 1))
            step = erk_tangent_step if model_name == MODEL_ERICKSEN else uni_tangent_step
            update = step(model, s, n, [], self.config)
            self.assertEqual(update.norm, 0.0)
            np.testing.assert_array_equal(update.t, np.zeros_like(n))

    def test_updates_are_tangent_and_vanish_on_fixed_nodes(self):
        rng = np.random.default_rng(9)
        fixed = self.mesh3.boundary_nodes(["zmin"])
        for model_name, step in ((MODEL_ERICKSEN, erk_tangent_step), (MODEL_UNIAXIAL, uni_tangent_step)):
            well = ericksen_well() if model_name == MODEL_ERICKSEN else uniaxial_well()
            model = EnergyModel.build(self.mesh3, model_name, well)
            lo, hi = admissible_range(model_name, 3)
            s = rng.uniform(lo, hi, self.mesh3.n_nodes)
            n = _unit(rng, self.mesh3.n_nodes, 3)
            update = step(model, s, n, fixed, self.config)
            self.assertLessEqual(np.abs(np.einsum("ni,ni->n", update.t, n)).max(), TANGENCY_TOL)
            self.assertEqual(np.abs(update.t[fixed]).max(), 0.0)
            self.assertGreater(update.norm, 0.0)

    def test_singular_patch_is_regularized_and_logged(self):
        model = EnergyModel.build(self.mesh2, MODEL_ERICKSEN, ericksen_well())
        rng = np.random.default_rng(10)
        s = rng.uniform(0.2, 0.8, self.mesh2.n_nodes)
        s[np.linalg.norm(self.mesh2.vertices - 0.5, axis=1) < 0.3] = 0.0
        n = _unit(rng, self.mesh2.n_nodes, 2)
        with self.assertLogs("apps.flow.tangent", level="WARNING") as logs:
            update = erk_tangent_step(model, s, n, [], FlowConfig())
        self.assertIn("singular", logs.output[0])
        self.assertGreater(update.regularized_nodes, 0)

    def test_one_ericksen_step_decreases_the_energy(self):
        mesh = self.mesh2
        model = EnergyModel.build(mesh, MODEL_ERICKSEN, ericksen_well())
        boundary = _point_defect_boundary(mesh, 3, (0.3, 0.6), model.well.s_star)
        s0 = np.full(mesh.n_nodes, model.well.s_star)
        n0 = np.tile([1.0, 0.0], (mesh.n_nodes, 1))
        s0, n0 = boundary.apply(s0, n0)
        update = erk_tangent_step(model, s0, n0, boundary.director_nodes, FlowConfig())
        n1 = project_director(n0, update.t)
        self.assertLess(model.main_energy(s0, n1), model.main_energy(s0, n0))

    def test_one_uniaxial_step_decreases_the_energy(self):
        mesh = self.mesh3
        model = EnergyModel.build(mesh, MODEL_UNIAXIAL, uniaxial_well())
        nodes = mesh.boundary_nodes(["xmin", "xmax", "ymin", "ymax"])
        x = mesh.vertices
        theta = 0.5 * np.arctan2(x[:, 1] - 0.5, x[:, 0] - 0.5)
        n_bc = _angle_field(mesh, theta)
        s_star = model.well.s_star
        boundary = BoundaryData(nodes, np.full(nodes.size, s_star), nodes, n_bc[nodes])
        s0, n0 = boundary.apply(np.full(mesh.n_nodes, s_star), np.tile([1.0, 0.0, 0.0], (mesh.n_nodes, 1)))
        before = model.total_energy(s0, n0)
        state = run_flow(model, s0, n0, boundary, FlowConfig(dt=1e-2, max_steps=1))
        self.assertLess(state.energy.total, before)


class CflTests(SimpleTestCase):
    def setUp(self):
        self.mesh = generate_kuhn_3d(4, 4, 4)
        self.model = EnergyModel.build(self.mesh, MODEL_UNIAXIAL, uniaxial_well())

    def test_limit_scales_with_mesh_size(self):
        config = FlowConfig(cfl_constant=0.5)
        self.assertAlmostEqual(cfl_limit(self.model, config), 0.5 * self.mesh.max_diameter ** 1.5)

    def test_large_step_is_refused(self):
        with self.assertRaises(CFLViolation):
            check_cfl(self.model, FlowConfig(dt=1.0))

    def test_warn_mode_logs(self):
        with self.assertLogs("apps.flow.tangent", level="WARNING") as logs:
            check_cfl(self.model, FlowConfig(dt=1.0, cfl_mode=CFL_WARN))
        self.assertIn("warn-only", logs.output[0])


class FlowConfigTests(SimpleTestCase):
    def test_invalid_values_name_their_key(self):
        cases = {"dt": 0.0, "tau": 2.0, "max_steps": 0, "cfl_mode": "ignore", "stop_tol": -1.0}
        for name, value in cases.items():
            with self.subTest(name=name):
                with self.assertRaises(ConfigError) as ctx:
                    FlowConfig(**{name: value})
                self.assertEqual(ctx.exception.key, f"flow.{name}")

    @override_settings(NEMATIC={"CG_TOL": 1e-12, "CFL_CONSTANT": 0.25, "SIGMA_REG": 1e-9})
    def test_from_settings_merges_overrides(self):
        config = FlowConfig.from_settings(dt=1e-3, cfl_constant=None)
        self.assertEqual(config.cg_tol, 1e-12)
        self.assertEqual(config.cfl_constant, 0.25)
        self.assertEqual(config.sigma_reg, 1e-9)
        self.assertEqual(config.dt, 1e-3)

    def test_from_settings_rejects_unknown_options(self):
        with self.assertRaises(ConfigError) as ctx:
            FlowConfig.from_settings(time_step=0.1)
        self.assertEqual(ctx.exception.key, "flow.time_step")


class DegreeStepTests(SimpleTestCase):
    def setUp(self):
        self.mesh = generate_crisscross_2d(8, 8)
        self.n = np.tile([0.0, 1.0], (self.mesh.n_nodes, 1))

    def test_minimizer_is_unchanged(self):
        model = EnergyModel.build(self.mesh, MODEL_ERICKSEN, ericksen_well())
        s = np.full(self.mesh.n_nodes, model.well.s_star)
        update = s_step(model, s, self.n, BoundaryData(), FlowConfig())
        np.testing.assert_allclose(update.s, s, atol=1e-8)
        self.assertEqual(update.clamped_nodes, 0)
        self.assertFalse(update.newton_corrected)

    def test_heat_step_preserves_the_mean(self):
        model = EnergyModel.build(self.mesh, MODEL_ERICKSEN, _zero_well())
        s = np.random.default_rng(11).uniform(0.0, 0.9, self.mesh.n_nodes)
        config = FlowConfig(dt=0.05, cg_tol=1e-13)
        update = s_step(model, s, self.n, BoundaryData(), config)
        m = model.mass.weights
        self.assertAlmostEqual(float(m @ update.s), float(m @ s), places=12)
        dense = model.stiffness.toarray() + np.diag(m / config.dt)
        np.testing.assert_allclose(update.s, np.linalg.solve(dense, m * s / config.dt), atol=1e-10)

    def test_dirichlet_values_are_bit_identical(self):
        model = EnergyModel.build(self.mesh, MODEL_ERICKSEN, ericksen_well())
        nodes = self.mesh.boundary_nodes(["xmin"])
        values = np.linspace(0.1, 0.7, nodes.size) / 3.0
        boundary = BoundaryData(degree_nodes=nodes, degree_values=values)
        s = np.random.default_rng(12).uniform(0.0, 0.9, self.mesh.n_nodes)
        update = s_step(model, s, self.n, boundary, FlowConfig())
        np.testing.assert_array_equal(update.s[nodes], values)

    def test_non_quadratic_convex_part_gets_a_newton_correction(self):
        well = DoubleWell(
            name="quartic",
            model=MODEL_ERICKSEN,
            convex=Polynomial([0.0, 0.0, 1.0, 0.0, 2.0]),
            expansive=Polynomial([0.0, 0.0, 3.0]),
            bounds=admissible_range(MODEL_ERICKSEN, 2),
        )
        model = EnergyModel.build(self.mesh, MODEL_ERICKSEN, well)
        s = np.random.default_rng(13).uniform(0.0, 0.9, self.mesh.n_nodes)
        with self.assertLogs("apps.flow.degree", level="WARNING") as logs:
            update = s_step(model, s, self.n, BoundaryData(), FlowConfig())
        self.assertTrue(update.newton_corrected)
        self.assertIn("Newton", logs.output[0])


class RunFlowTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.mesh = generate_crisscross_2d(8, 8)
        cls.model = EnergyModel.build(cls.mesh, MODEL_ERICKSEN, ericksen_well())
        cls.boundary = _point_defect_boundary(cls.mesh, 1, (0.45, 0.55), cls.model.well.s_star)

    def _initial(self):
        s = np.full(self.mesh.n_nodes, self.model.well.s_star)
        return s, np.tile([1.0, 0.0], (self.mesh.n_nodes, 1))

    def test_minimizer_terminates_immediately(self):
        s = np.full(self.mesh.n_nodes, self.model.well.s_star)
        n = np.tile([0.6, 0.8], (self.mesh.n_nodes, 1))
        nodes = self.mesh.boundary_nodes(self.mesh.labels)
        boundary = BoundaryData(nodes, s[nodes], nodes, n[nodes])
        state = run_flow(self.model, s, n, boundary, FlowConfig(stop_tol=1e-6))
        self.assertLessEqual(state.step, 2)
        self.assertEqual(state.reason, REASON_CONVERGED)

    def test_energy_is_monotone_and_telescopes(self):
        s0, n0 = self._initial()
        states = []
        state = run_flow(self.model, s0, n0, self.boundary, FlowConfig(max_steps=15), callback=states.append)
        self.assertEqual(len(states), state.step + 1)
        totals = [b.total for b in state.trace]
        for before, after in zip(totals, totals[1:]):
            self.assertLessEqual(after, before + 1e-10 * abs(before))
        self.assertLess(totals[-1], totals[0])
        self.assertGreaterEqual(state.telescoping_slack, -1e-8)
        self.assertEqual(state.diagnostics["telescoping_slack"], state.telescoping_slack)

    def test_dirichlet_nodes_never_change(self):
        s0, n0 = self._initial()
        b = self.boundary

        def check(state):
            np.testing.assert_array_equal(state.s[b.degree_nodes], b.degree_values)
            np.testing.assert_array_equal(state.director[b.director_nodes], b.director_values)

        state = run_flow(self.model, s0, n0, b, FlowConfig(max_steps=5), callback=check)
        self.assertEqual(state.reason, REASON_MAX_STEPS)
        self.assertEqual(state.step, 5)
        np.testing.assert_allclose(np.linalg.norm(state.director, axis=1), 1.0, atol=1e-14)

    def test_uniaxial_run_telescopes_with_tangent_dissipation(self):
        mesh = generate_kuhn_3d(4, 4, 4)
        model = EnergyModel.build(mesh, MODEL_UNIAXIAL, uniaxial_well())
        nodes = mesh.boundary_nodes(["xmin", "xmax", "ymin", "ymax"])
        theta = 0.5 * np.arctan2(mesh.vertices[:, 1] - 0.5, mesh.vertices[:, 0] - 0.5) + 0.3 * mesh.vertices[:, 2]
        n_bc = _angle_field(mesh, theta)
        s_star = model.well.s_star
        boundary = BoundaryData(nodes, np.full(nodes.size, s_star), nodes, n_bc[nodes])
        s0 = np.full(mesh.n_nodes, s_star)
        n0 = np.tile([1.0, 0.0, 0.0], (mesh.n_nodes, 1))
        state = run_flow(model, s0, n0, boundary, FlowConfig(dt=1e-2, max_steps=10))
        self.assertGreaterEqual(state.telescoping_slack, -1e-8)
        self.assertGreater(state.dissipation, 0.0)
        LineField(vectors=state.director)

    def test_energy_increase_raises_with_diagnostics(self):
        s0, n0 = self._initial()
        energies = iter([EnergyBreakdown(main=1.0, bulk=0.0), EnergyBreakdown(main=2.0, bulk=0.0)])
        with mock.patch.object(EnergyModel, "breakdown", side_effect=lambda s, n: next(energies)):
            with self.assertLogs("apps.flow.driver", level="ERROR"):
                with self.assertRaises(MonotonicityError) as ctx:
                    run_flow(self.model, s0, n0, self.boundary, FlowConfig(max_steps=3))
        self.assertEqual(ctx.exception.step, 1)
        self.assertEqual(ctx.exception.after, 2.0)
        self.assertIn("ds_norm", ctx.exception.diagnostics)

    def test_non_unit_director_is_rejected(self):
        s0, n0 = self._initial()
        with self.assertRaises(FieldError):
            run_flow(self.model, s0, 2.0 * n0, BoundaryData(), FlowConfig(max_steps=1))


@tag("slow")
class PlusThreeDefectTests(SimpleTestCase):
    def test_three_point_defects_emerge(self):
        mesh = generate_crisscross_2d(64, 64)
        model = EnergyModel.build(mesh, MODEL_ERICKSEN, ericksen_well(), kappa=1.0)
        s_star = model.well.s_star
        boundary = _point_defect_boundary(mesh, 3, (0.3, 0.6), s_star)
        s0 = np.full(mesh.n_nodes, s_star)
        n0 = np.tile([1.0, 0.0], (mesh.n_nodes, 1))
        state = run_flow(model, s0, n0, boundary, FlowConfig(dt=0.1, stop_tol=1e-8, max_steps=2000))

        self.assertEqual(state.reason, REASON_CONVERGED)
        self.assertLessEqual(state.step, 2 * 328)
        self.assertGreaterEqual(state.step, 328 // 2)
        minima = local_minima(mesh, state.s, below=0.03)
        self.assertEqual(len(minima), 3)
        expected = np.array([[0.20, 0.78], [0.31, 0.35], [0.63, 0.58]])
        found = mesh.vertices[minima]
        for point in expected:
            self.assertLess(np.linalg.norm(found - point, axis=1).min(), 0.08)
        for node in minima:
            spec = LoopSpec(center=tuple(mesh.vertices[node]), half_width=0.06)
            self.assertEqual(winding_on_loop(mesh, state.director, state.s, spec), 1.0)
        self.assertGreaterEqual(state.telescoping_slack, -1e-8)
        self.assertTrue(math.isfinite(state.energy.total))
