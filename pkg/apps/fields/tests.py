import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.core.constants import MODEL_ERICKSEN, MODEL_UNIAXIAL
from apps.core.exceptions import FieldError
from apps.fields.decompose import (
    biaxiality,
    component_metric,
    uniaxial_compose,
    uniaxial_decompose,
)
from apps.fields.defects import LoopSpec, local_minima, loop_nodes_square, winding_number, winding_on_loop
from apps.fields.fields import (
    AuxTensorField,
    BoundaryData,
    DegreeField,
    DirectorField,
    LineField,
    QTensorField,
    make_aux,
    truncate_nodewise,
)
from apps.fields.snapshots import read_snapshot, write_snapshot
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d


def _random_unit(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1)[:, None]


def _planar(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


class DegreeFieldTests(SimpleTestCase):
    def test_range_is_enforced_with_node(self):
        with self.assertRaisesMessage(FieldError, "node 2"):
            DegreeField(values=np.array([0.0, 0.5, -0.7]), model=MODEL_ERICKSEN, dim=3)
        DegreeField(values=np.array([-1.0, 1.0]), model=MODEL_UNIAXIAL, dim=2)
        with self.assertRaises(FieldError):
            DegreeField(values=np.array([-0.6]), model=MODEL_UNIAXIAL, dim=3)

    def test_clamped(self):
        s = DegreeField.clamped(np.array([-3.0, 0.2, 4.0]), MODEL_ERICKSEN, 2)
        np.testing.assert_array_equal(s.values, [-0.5, 0.2, 1.0])

    def test_truncation(self):
        s = DegreeField(values=np.array([-0.5, 0.1, 0.45, 1.0]), model=MODEL_ERICKSEN, dim=2)
        out = truncate_nodewise(s, 0.1)
        np.testing.assert_allclose(out.values, [-0.4, 0.1, 0.45, 0.9])
        inside = s.with_values(np.array([0.0, 0.3]))
        np.testing.assert_array_equal(truncate_nodewise(inside, 0.1).values, inside.values)
        with self.assertRaises(FieldError):
            truncate_nodewise(s, 0.3, c0=0.2)


class OrientationFieldTests(SimpleTestCase):
    def test_unit_constraint_names_node(self):
        with self.assertRaisesMessage(FieldError, "node 1"):
            DirectorField(vectors=np.array([[1.0, 0.0], [1.0, 1.0]]))

    def test_normalizing_unit_vectors_is_idempotent(self):
        v = _random_unit(np.random.default_rng(0), 50, 3)
        n = DirectorField(vectors=v)
        again = DirectorField.normalized(n.vectors)
        self.assertLessEqual(np.abs(again.vectors - n.vectors).max(), 1e-15)

    def test_line_field_is_head_to_tail_symmetric(self):
        v = _random_unit(np.random.default_rng(1), 20, 3)
        a, b = LineField(vectors=v), LineField(vectors=-v)
        np.testing.assert_array_equal(a.projectors, b.projectors)
        theta = a.projectors
        np.testing.assert_allclose(np.einsum("nij,njk->nik", theta, theta), theta, atol=1e-12)
        np.testing.assert_allclose(np.trace(theta, axis1=1, axis2=2), 1.0, atol=1e-12)

    def test_from_projectors(self):
        v = _random_unit(np.random.default_rng(2), 10, 3)
        back = LineField.from_projectors(LineField(vectors=v).projectors)
        np.testing.assert_allclose(back.projectors, LineField(vectors=v).projectors, atol=1e-12)


class AuxFieldTests(SimpleTestCase):
    def test_constant_state(self):
        s = DegreeField(values=np.full(4, 0.75), model=MODEL_ERICKSEN, dim=3)
        n = DirectorField(vectors=np.tile([0.0, 0.0, 1.0], (4, 1)))
        np.testing.assert_allclose(make_aux(s, n).values, np.tile([0.0, 0.0, 0.75], (4, 1)))

    def test_zero_degree_annihilates_direction(self):
        s = DegreeField(values=np.array([0.0, 0.4]), model=MODEL_ERICKSEN, dim=2)
        n = DirectorField(vectors=np.array([[0.6, 0.8], [1.0, 0.0]]))
        np.testing.assert_array_equal(make_aux(s, n).values[0], [0.0, 0.0])

    def test_structural_condition_on_random_pairs(self):
        rng = np.random.default_rng(3)
        s = DegreeField(values=rng.uniform(-0.5, 1.0, 40), model=MODEL_UNIAXIAL, dim=3)
        line = LineField(vectors=_random_unit(rng, 40, 3))
        U = make_aux(s, line)
        self.assertIsInstance(U, AuxTensorField)
        np.testing.assert_allclose(np.linalg.norm(U.values, axis=(1, 2)), np.abs(s.values), atol=1e-14)
        tilde = make_aux(s, line, tilde=True)
        self.assertTrue(tilde.tilde)
        np.testing.assert_allclose(np.einsum("nii->n", tilde.values), np.abs(s.values), atol=1e-14)

    def test_size_mismatch(self):
        s = DegreeField(values=np.zeros(3), model=MODEL_ERICKSEN, dim=2)
        with self.assertRaises(FieldError):
            make_aux(s, DirectorField(vectors=np.tile([1.0, 0.0], (2, 1))))


class BoundaryDataTests(SimpleTestCase):
    def test_c0_and_apply(self):
        bc = BoundaryData(
            degree_nodes=np.array([0, 2]),
            degree_values=np.array([0.75, 0.75]),
            director_nodes=np.array([2]),
            director_values=np.array([[0.0, 1.0]]),
        )
        self.assertAlmostEqual(bc.c0(MODEL_ERICKSEN, 2), 0.25)
        self.assertTrue(bc.satisfies_c0(MODEL_ERICKSEN, 2))
        s, n = bc.apply(np.zeros(3), np.tile([1.0, 0.0], (3, 1)))
        np.testing.assert_array_equal(s, [0.75, 0.0, 0.75])
        np.testing.assert_array_equal(n[2], [0.0, 1.0])
        comps = bc.tensor_values(2)
        np.testing.assert_allclose(comps[0], [-0.375, 0.0])

    def test_missing_degree_for_tensor_data(self):
        bc = BoundaryData(director_nodes=np.array([1]), director_values=np.array([[1.0, 0.0]]))
        with self.assertRaisesMessage(FieldError, "node 1"):
            bc.tensor_values(2)


class DecompositionTests(SimpleTestCase):
    def test_uniaxial_input(self):
        Q = uniaxial_compose(np.array([0.7]), np.array([[0.0, 0.0, 1.0]]))
        out = uniaxial_decompose(Q)
        self.assertAlmostEqual(out.degree[0], 0.7, places=12)
        np.testing.assert_allclose(out.line.vectors[0], [0.0, 0.0, 1.0], atol=1e-12)
        self.assertAlmostEqual(out.biaxiality[0], 0.0, places=12)

    def test_isotropic_tensor(self):
        out = uniaxial_decompose(QTensorField(components=np.zeros((1, 5)), dim=3))
        self.assertEqual(out.degree[0], 0.0)
        self.assertEqual(out.biaxiality[0], 0.0)
        self.assertEqual(out.degenerate_nodes.tolist(), [0])
        self.assertAlmostEqual(np.linalg.norm(out.line.vectors[0]), 1.0)

    def test_maximally_biaxial_tensor(self):
        e = np.eye(3)
        s1, s2 = 0.6, 0.3
        mat = s1 * (np.outer(e[0], e[0]) - e / 3) + s2 * (np.outer(e[1], e[1]) - e / 3)
        beta = biaxiality(mat[None])
        self.assertAlmostEqual(beta[0], 1.0, delta=1e-10)

    def test_compose_then_decompose_is_identity(self):
        rng = np.random.default_rng(4)
        s = rng.uniform(0.05, 1.0, 30)
        n = _random_unit(rng, 30, 3)
        out = uniaxial_decompose(uniaxial_compose(s, n))
        np.testing.assert_allclose(out.degree, s, atol=1e-12)
        np.testing.assert_allclose(out.line.projectors, LineField(vectors=n).projectors, atol=1e-10)
        self.assertLess(out.biaxiality.max(), 1e-8)

    def test_eigenvector_sign_convention(self):
        Q = uniaxial_compose(np.array([0.5]), np.array([[0.0, -0.6, -0.8]]))
        out = uniaxial_decompose(Q)
        np.testing.assert_allclose(out.line.vectors[0], [0.0, 0.6, 0.8], atol=1e-12)

    def test_degenerate_node_keeps_previous_direction(self):
        # Eigenvalues 0.3 (e_x), 0, -0.3 (e_z): both extremes have magnitude 0.3.
        Q = QTensorField.from_matrices(np.diag([0.3, 0.0, -0.3])[None])
        for previous, degree in (([1.0, 0.0, 0.0], 0.45), ([0.0, 0.0, 1.0], -0.45)):
            out = uniaxial_decompose(Q, previous=LineField(vectors=np.array([previous])))
            np.testing.assert_allclose(out.line.vectors[0], previous, atol=1e-12)
            self.assertAlmostEqual(out.degree[0], degree, places=12)
            self.assertEqual(out.degenerate_nodes.tolist(), [0])

    def test_two_dimensional_decomposition(self):
        rng = np.random.default_rng(5)
        s = rng.uniform(0.1, 1.0, 10)
        n = _random_unit(rng, 10, 2)
        out = uniaxial_decompose(uniaxial_compose(s, n))
        np.testing.assert_allclose(out.degree, s, atol=1e-12)
        np.testing.assert_array_equal(out.biaxiality, np.zeros(10))

    def test_component_metric_gives_frobenius_product(self):
        rng = np.random.default_rng(6)
        a = QTensorField(components=rng.standard_normal((1, 5)), dim=3)
        b = QTensorField(components=rng.standard_normal((1, 5)), dim=3)
        expected = np.sum(a.matrices[0] * b.matrices[0])
        self.assertAlmostEqual(a.components[0] @ component_metric(3) @ b.components[0], expected, places=12)

    def test_from_matrices_rejects_trace(self):
        with self.assertRaises(FieldError):
            QTensorField.from_matrices(np.eye(3)[None])


class WindingTests(SimpleTestCase):
    def setUp(self):
        self.mesh = generate_crisscross_2d(32, 32)
        self.x = self.mesh.vertices[:, 0]
        self.y = self.mesh.vertices[:, 1]

    def test_uniform_field(self):
        line = LineField(vectors=np.tile([1.0, 0.0], (self.mesh.n_nodes, 1)))
        spec = LoopSpec(center=(0.5, 0.5), half_width=0.3)
        self.assertEqual(winding_on_loop(self.mesh, line, None, spec), 0.0)

    def test_half_defect(self):
        theta = 0.5 * np.arctan2(self.y - 0.3, self.x - 0.3)
        line = LineField(vectors=_planar(theta))
        spec = LoopSpec(center=(0.3, 0.3), half_width=0.15)
        self.assertEqual(winding_on_loop(self.mesh, line, None, spec), 0.5)
        reversed_loop = loop_nodes_square(self.mesh, spec)[::-1]
        self.assertEqual(winding_number(line, reversed_loop), -0.5)

    def test_plus_three_defect(self):
        theta = 3.0 * np.arctan2(self.y - 0.6, self.x - 0.3)
        director = DirectorField(vectors=_planar(theta))
        spec = LoopSpec(center=(0.3, 0.6), half_width=0.2)
        self.assertEqual(winding_on_loop(self.mesh, director, None, spec), 3.0)

    def test_refuses_near_zero_degree(self):
        line = LineField(vectors=np.tile([1.0, 0.0], (self.mesh.n_nodes, 1)))
        spec = LoopSpec(center=(0.5, 0.5), half_width=0.25)
        loop = loop_nodes_square(self.mesh, spec)
        s = np.full(self.mesh.n_nodes, 0.5)
        s[loop[3]] = 1e-4
        with self.assertRaisesMessage(FieldError, f"node {loop[3]}"):
            winding_number(line, loop, degree=s)

    def test_loops_in_coordinate_planes(self):
        mesh = generate_kuhn_3d(8, 8, 8)
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        theta = 0.5 * np.arctan2(y - 0.5, x - 0.5)
        vectors = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(mesh.n_nodes)])
        line = LineField(vectors=vectors)
        for level in (0.25, 0.5, 0.75):
            spec = LoopSpec(center=(0.5, 0.5), half_width=0.25, axis="z", level=level)
            self.assertEqual(winding_on_loop(mesh, line, None, spec), 0.5)
        normal = LineField(vectors=np.tile([1.0, 0.0, 0.0], (mesh.n_nodes, 1)))
        with self.assertRaisesMessage(FieldError, "normal to the loop plane"):
            winding_on_loop(mesh, normal, None, LoopSpec(center=(0.5, 0.5), half_width=0.25, axis="x", level=0.5))


class LocalMinimaTests(SimpleTestCase):
    def test_wells_are_found_in_order(self):
        mesh = generate_crisscross_2d(16, 16)
        x = mesh.vertices
        s = np.ones(mesh.n_nodes)
        for depth, center in ((0.2, (0.25, 0.25)), (0.1, (0.75, 0.5))):
            s -= (1.0 - depth) * np.exp(-np.sum((x - center) ** 2, axis=1) / 0.005)
        minima = local_minima(mesh, s)
        self.assertEqual(len(minima), 2)
        np.testing.assert_allclose(x[minima[0]], (0.75, 0.5))
        np.testing.assert_allclose(x[minima[1]], (0.25, 0.25))
        self.assertEqual(local_minima(mesh, s, below=0.15), minima[:1])


class SnapshotTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_write_and_read_two_dimensional_fields(self):
        mesh = generate_crisscross_2d(3, 3)
        rng = np.random.default_rng(7)
        s = DegreeField(values=rng.uniform(0.0, 1.0, mesh.n_nodes), model=MODEL_ERICKSEN, dim=2)
        line = LineField(vectors=_random_unit(rng, mesh.n_nodes, 2))
        path = write_snapshot(self.dir / "step_0000.vtk", mesh, degree=s, orientation=line)
        self.assertTrue(path.read_text().startswith("# vtk DataFile"))
        snap = read_snapshot(path)
        self.assertEqual(snap.dim, 2)
        np.testing.assert_allclose(snap.degree(), s.values, rtol=1e-12)
        self.assertEqual(snap.arrays["director"].shape, (mesh.n_nodes, 3))
        self.assertEqual(snap.arrays["theta"].shape, (mesh.n_nodes, 9))
        np.testing.assert_allclose(snap.line_field().projectors, line.projectors, atol=1e-12)

    def test_tensor_snapshot_carries_biaxiality(self):
        mesh = generate_kuhn_3d(1, 1, 1)
        rng = np.random.default_rng(8)
        Q = uniaxial_compose(rng.uniform(0.1, 0.7, mesh.n_nodes), _random_unit(rng, mesh.n_nodes, 3))
        snap = read_snapshot(write_snapshot(self.dir / "q.vtk", mesh, q_tensor=Q))
        np.testing.assert_allclose(snap.q_tensor().components, Q.components, rtol=1e-12, atol=1e-14)
        self.assertEqual(snap.arrays["biaxiality"].shape, (mesh.n_nodes,))

    def test_invalid_field_is_not_written(self):
        mesh = generate_crisscross_2d(1, 1)
        with self.assertRaises(FieldError):
            write_snapshot(self.dir / "bad.vtk", mesh, biaxiality=np.array([0.0, 0.5, 1.5, 0.0, 0.0]))
        self.assertFalse((self.dir / "bad.vtk").exists())
