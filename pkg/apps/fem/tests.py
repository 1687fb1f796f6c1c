import numpy as np
import scipy.sparse as sp
from django.test import SimpleTestCase

from apps.core.exceptions import FieldError, NonFiniteError, SolverError
from apps.fem.operators import SparseSymOperator, eliminate_dirichlet, expand_solution
from apps.fem.quadrature import (
    boundary_lumped_mass,
    lumped_integral,
    lumped_mass,
    p1_squared_cell_integrals,
    patch_average,
)
from apps.fem.solvers import cg_solve
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d
from apps.meshes.mesh import SimplicialMesh
from apps.meshes.stiffness import build_stiffness


class OperatorTests(SimpleTestCase):
    def test_triplets_sum_duplicates(self):
        op = SparseSymOperator.from_triplets(
            rows=np.array([0, 0, 1, 1, 0]),
            cols=np.array([0, 1, 0, 1, 0]),
            data=np.array([1.0, 2.0, 2.0, 3.0, 4.0]),
            n=2,
        )
        np.testing.assert_array_equal(op.matrix.toarray(), [[5.0, 2.0], [2.0, 3.0]])
        self.assertTrue(op.symmetric)

    def test_unsymmetric_is_rejected(self):
        with self.assertRaises(ValueError):
            SparseSymOperator.from_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))


class ConjugateGradientTests(SimpleTestCase):
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        result = cg_solve(sp.identity(3, format="csr"), b)
        np.testing.assert_allclose(result.x, b)
        self.assertLessEqual(result.iterations, 1)

    def test_three_node_laplacian(self):
        A = SparseSymOperator.from_matrix(np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]))
        result = cg_solve(A, np.array([1.0, 0.0, 1.0]))
        np.testing.assert_allclose(result.x, [1.0, 1.0, 1.0], atol=1e-12)

    def test_matches_dense_factorization(self):
        mesh = generate_crisscross_2d(5, 5)
        graph = build_stiffness(mesh)
        mass = lumped_mass(mesh)
        A = SparseSymOperator.from_matrix(graph.laplacian + sp.diags(mass.weights))
        b = np.random.default_rng(3).standard_normal(mesh.n_nodes)
        result = cg_solve(A, b, tol=1e-12, record_energy=True)
        dense = np.linalg.solve(A.matrix.toarray(), b)
        self.assertLess(np.linalg.norm(result.x - dense) / np.linalg.norm(dense), 1e-8)
        self.assertLessEqual(np.linalg.norm(A @ result.x - b), 1e-12 * np.linalg.norm(b) * 1.0001)
        energies = np.asarray(result.energy_history)
        self.assertTrue(np.all(np.diff(energies) <= 1e-14 * np.abs(energies).max()))

    def test_iteration_limit_reports_history(self):
        mesh = generate_crisscross_2d(8, 8)
        A = build_stiffness(mesh).laplacian + sp.diags(np.full(mesh.n_nodes, 1e-3))
        with self.assertRaises(SolverError) as ctx:
            cg_solve(A, np.ones(mesh.n_nodes), tol=1e-14, max_iter=2)
        self.assertEqual(len(ctx.exception.residual_history), 3)

    def test_non_finite_rhs(self):
        with self.assertRaises(NonFiniteError):
            cg_solve(sp.identity(2, format="csr"), np.array([1.0, np.nan]))

    def test_dirichlet_elimination_reproduces_linear_function(self):
        mesh = generate_crisscross_2d(6, 6)
        op = SparseSymOperator.from_matrix(build_stiffness(mesh).laplacian)
        fixed = mesh.boundary_nodes(mesh.labels)
        exact = 0.3 + 2.0 * mesh.vertices[:, 0] - mesh.vertices[:, 1]
        reduced, rhs, free = eliminate_dirichlet(op, np.zeros(mesh.n_nodes), fixed, exact[fixed])
        sol = cg_solve(reduced, rhs, tol=1e-13).x
        full = expand_solution(mesh.n_nodes, free, sol, fixed, exact[fixed])
        np.testing.assert_allclose(full, exact, atol=1e-10)
        np.testing.assert_array_equal(full[fixed], exact[fixed])


class LumpedQuadratureTests(SimpleTestCase):
    def test_constant_and_linear(self):
        mesh = generate_crisscross_2d(4, 4)
        self.assertAlmostEqual(lumped_integral(mesh, np.ones(mesh.n_nodes)), 1.0, places=14)
        self.assertAlmostEqual(lumped_integral(mesh, mesh.vertices[:, 0]), 0.5, places=14)

    def test_indicator_gives_weight(self):
        mesh = generate_crisscross_2d(4, 4)
        mass = lumped_mass(mesh)
        f = np.zeros(mesh.n_nodes)
        f[12] = 1.0
        self.assertEqual(lumped_integral(mass, f), mass.weights[12])

    def test_total_mass_is_domain_volume(self):
        mesh = generate_kuhn_3d(3, 2, 4, ((0.0, 1.5), (0.0, 1.0), (0.0, 2.0)))
        self.assertAlmostEqual(lumped_mass(mesh).total / 3.0, 1.0, delta=1e-12)

    def test_exact_for_p1_functions(self):
        mesh = generate_kuhn_3d(3, 3, 3)
        f = np.random.default_rng(11).standard_normal(mesh.n_nodes)
        exact = float(np.sum(mesh.cell_volumes * f[mesh.cells].mean(axis=1)))
        self.assertAlmostEqual(lumped_integral(mesh, f) / exact, 1.0, delta=1e-12)

    def test_size_mismatch(self):
        mesh = generate_crisscross_2d(2, 2)
        with self.assertRaises(FieldError):
            lumped_integral(mesh, np.ones(3))

    def test_boundary_mass_sums_to_perimeter(self):
        mesh = generate_crisscross_2d(5, 5)
        self.assertAlmostEqual(boundary_lumped_mass(mesh).sum(), 4.0, places=13)
        self.assertAlmostEqual(boundary_lumped_mass(mesh, ["xmin"]).sum(), 1.0, places=13)

    def test_p1_squared_integrals(self):
        tri = SimplicialMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            cells=np.array([[0, 1, 2]]),
            facets=np.zeros((0, 2)),
            facet_labels=(),
        )
        self.assertAlmostEqual(p1_squared_cell_integrals(tri, tri.vertices[:, 0])[0], 1.0 / 12.0, places=15)
        mesh = generate_kuhn_3d(2, 2, 2)
        np.testing.assert_allclose(
            p1_squared_cell_integrals(mesh, np.full(mesh.n_nodes, 0.5)), 0.25 * mesh.cell_volumes, rtol=1e-14
        )

    def test_patch_average_of_constant_gradient(self):
        mesh = generate_crisscross_2d(4, 4)
        g = np.tile([1.0, -2.0], (mesh.n_cells, 1))
        np.testing.assert_allclose(patch_average(mesh, g), np.tile([1.0, -2.0], (mesh.n_nodes, 1)))
