import io
import math
import tempfile
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase, tag

from apps.core.exceptions import MeshError, MeshFormatError
from apps.meshes.audit import check_weak_acuteness
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d
from apps.meshes.io import (
    INCLUSION_LABEL,
    OUTER_LABEL,
    load_mesh,
    mesh_with_spherical_hole,
    read_mesh,
    write_mesh,
)
from apps.meshes.mesh import SimplicialMesh, boundary_faces
from apps.meshes.stiffness import build_stiffness, dirichlet_integral, element_dirichlet_integral


def _single_triangle():
    return SimplicialMesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        cells=np.array([[0, 1, 2]]),
        facets=np.array([[0, 1], [1, 2], [2, 0]]),
        facet_labels=("a", "b", "c"),
    )


def _obtuse_pair():
    # Opposite angles of 100 degrees on both sides of the shared edge (0, 1).
    h = 0.5 / math.tan(math.radians(50.0))
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h], [0.5, -h]])
    cells = np.array([[0, 1, 2], [1, 0, 3]])
    return SimplicialMesh(vertices=vertices, cells=cells, facets=np.zeros((0, 2)), facet_labels=())


def _equilateral_pair():
    s = math.sqrt(3.0) / 2.0
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, s], [0.5, -s]])
    cells = np.array([[0, 1, 2], [1, 0, 3]])
    return SimplicialMesh(vertices=vertices, cells=cells, facets=np.zeros((0, 2)), facet_labels=())


def _annulus(r_in=0.2, r_out=0.5, rings=3, n=16):
    radii = np.linspace(r_in, r_out, rings)
    theta = 2.0 * np.pi * np.arange(n) / n
    vertices = np.array([[r * np.cos(t), r * np.sin(t)] for r in radii for t in theta])
    cells = []
    for k in range(rings - 1):
        for m in range(n):
            a, b = k * n + m, k * n + (m + 1) % n
            c, d = (k + 1) * n + (m + 1) % n, (k + 1) * n + m
            cells += [[a, b, c], [a, c, d]]
    cells = np.array(cells)
    facets = boundary_faces(cells, vertices.shape[0])
    return SimplicialMesh(vertices=vertices, cells=cells, facets=facets, facet_labels=("boundary",) * len(facets))


class StiffnessTests(SimpleTestCase):
    def test_unit_right_triangle_weights(self):
        graph = build_stiffness(_single_triangle())
        k = graph.matrix.toarray()
        self.assertAlmostEqual(k[1, 2], 0.0, places=15)
        self.assertAlmostEqual(k[0, 1], 0.5, places=15)
        self.assertAlmostEqual(k[0, 2], 0.5, places=15)

    def test_row_sums_vanish(self):
        for mesh in (_single_triangle(), generate_crisscross_2d(5, 3, ((0, 5), (0, 3))), generate_kuhn_3d(2, 3, 2)):
            graph = build_stiffness(mesh)
            row_sums = np.asarray(graph.matrix.sum(axis=1)).reshape(-1)
            self.assertTrue(graph.row_sums_zero)
            self.assertLessEqual(np.abs(row_sums).max(), 1e-12 * graph.max_abs)

    def test_crisscross_2x2_nonnegative_offdiagonal(self):
        graph = build_stiffness(generate_crisscross_2d(2, 2))
        self.assertTrue(graph.weakly_acute)
        self.assertGreaterEqual(graph.weights.min(), -1e-14 * graph.max_abs)

    def test_dirichlet_identity_matches_element_quadrature(self):
        rng = np.random.default_rng(7)
        for mesh in (generate_crisscross_2d(16, 16), generate_kuhn_3d(4, 4, 4)):
            graph = build_stiffness(mesh)
            z = rng.standard_normal(mesh.n_nodes)
            edge_form = dirichlet_integral(graph, z)
            double_sum = float(z @ (graph.matrix @ z)) * -1.0
            # sum_{i,j} k_ij z_i (z_i - z_j) = -z^T K z since rows of K sum to zero.
            quad = element_dirichlet_integral(mesh, z)
            self.assertAlmostEqual(edge_form / quad, 1.0, delta=1e-10)
            self.assertAlmostEqual(double_sum / quad, 1.0, delta=1e-10)

    def test_degenerate_cell_is_rejected(self):
        with self.assertRaises(MeshError) as ctx:
            SimplicialMesh(
                vertices=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]),
                cells=np.array([[0, 1, 3], [0, 1, 2]]),
                facets=np.zeros((0, 2)),
                facet_labels=(),
            )
        self.assertEqual(ctx.exception.cell, 1)
        self.assertIn("Cell 1", str(ctx.exception))

    def test_negative_orientation_is_fixed(self):
        mesh = SimplicialMesh(
            vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            cells=np.array([[0, 2, 1]]),
            facets=np.zeros((0, 2)),
            facet_labels=(),
        )
        self.assertGreater(mesh.cell_volumes[0], 0.0)
        self.assertAlmostEqual(mesh.cell_volumes[0], 0.5)


class AcutenessAuditTests(SimpleTestCase):
    def test_equilateral_pair_passes(self):
        self.assertTrue(check_weak_acuteness(_equilateral_pair()).passed)

    def test_obtuse_pair_reports_shared_edge(self):
        report = check_weak_acuteness(_obtuse_pair())
        self.assertFalse(report.passed)
        self.assertEqual(report.negative_edge_count, 1)
        violation = report.violations[0]
        self.assertEqual((violation.i, violation.j), (0, 1))
        self.assertLess(violation.weight, 0.0)
        self.assertAlmostEqual(violation.angle_sum_degrees, 200.0, places=8)

    def test_kuhn_unit_cube_passes(self):
        self.assertTrue(check_weak_acuteness(generate_kuhn_3d(1, 1, 1)).passed)

    def test_generated_meshes_are_weakly_acute(self):
        for n in (8, 16, 32, 64):
            self.assertTrue(build_stiffness(generate_crisscross_2d(n, n)).weakly_acute, n)
        for n in (8, 16):
            self.assertTrue(build_stiffness(generate_kuhn_3d(n, n, n)).weakly_acute, n)

    @tag("slow")
    def test_kuhn_32_is_weakly_acute(self):
        graph = build_stiffness(generate_kuhn_3d(32, 32, 32))
        self.assertTrue(graph.weakly_acute)
        self.assertTrue(graph.row_sums_zero)


class GeneratorTests(SimpleTestCase):
    def test_crisscross_single_cell(self):
        mesh = generate_crisscross_2d(1, 1, ((0.0, 1.0), (0.0, 1.0)))
        self.assertEqual(mesh.n_cells, 4)
        self.assertEqual(mesh.n_nodes, 5)

    def test_kuhn_single_cube(self):
        mesh = generate_kuhn_3d(1, 1, 1, ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)))
        self.assertEqual(mesh.n_cells, 6)
        self.assertEqual(mesh.n_nodes, 8)
        self.assertAlmostEqual(mesh.domain_volume, 1.0, places=14)

    def test_box_labels(self):
        mesh2 = generate_crisscross_2d(4, 4)
        self.assertEqual(set(mesh2.labels), {"xmin", "xmax", "ymin", "ymax"})
        mesh3 = generate_kuhn_3d(2, 2, 2)
        self.assertEqual(set(mesh3.labels), {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax"})
        top = mesh3.boundary_nodes(["zmax"])
        np.testing.assert_allclose(mesh3.vertices[top, 2], 1.0)
        self.assertEqual(len(top), 9)

    def test_node_labels_are_union_of_facet_labels(self):
        mesh = generate_crisscross_2d(2, 2)
        corner = int(np.flatnonzero(np.all(mesh.vertices == [0.0, 0.0], axis=1))[0])
        self.assertEqual(mesh.node_labels[corner], frozenset({"xmin", "ymin"}))

    def test_unknown_label_is_named(self):
        with self.assertRaisesMessage(MeshError, "gamma_s"):
            generate_crisscross_2d(2, 2).boundary_nodes(["gamma_s"])


class MeshFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_text_round_trip_is_exact(self):
        mesh = generate_kuhn_3d(2, 1, 2, ((0.0, 0.3), (0.0, 0.7), (0.1, 1.1)))
        path = self.dir / "box.mesh"
        write_mesh(path, mesh)
        again = read_mesh(path)
        self.assertTrue(np.array_equal(again.vertices, mesh.vertices))
        self.assertTrue(np.array_equal(again.cells, mesh.cells))
        self.assertTrue(np.array_equal(again.facets, mesh.facets))
        self.assertEqual(again.facet_labels, mesh.facet_labels)
        write_mesh(self.dir / "again.mesh", again)
        self.assertEqual((self.dir / "again.mesh").read_text(), path.read_text())

    def test_signed_distance_column(self):
        base = generate_crisscross_2d(2, 2)
        sd = np.linalg.norm(base.vertices - 0.5, axis=1) - 0.25
        mesh = SimplicialMesh(base.vertices, base.cells, base.facets, base.facet_labels, signed_distance=sd)
        write_mesh(self.dir / "sd.mesh", mesh)
        again = load_mesh(self.dir / "sd.mesh")
        self.assertTrue(np.array_equal(again.signed_distance, sd))

    def test_stray_facet_is_rejected(self):
        path = self.dir / "bad.mesh"
        path.write_text(
            "2 4 1 2\n0 0\n1 0\n0 1\n1 1\n0 1 2\n0 1 xmin\n1 3 oops\n",
            encoding="utf-8",
        )
        with self.assertRaises(MeshError) as ctx:
            read_mesh(path)
        self.assertEqual(ctx.exception.facet, 1)

    def test_invalid_mesh_file_is_a_format_error(self):
        path = self.dir / "bad.mesh"
        path.write_text(
            "2 4 1 2\n0 0\n1 0\n0 1\n1 1\n0 1 2\n0 1 xmin\n1 3 oops\n",
            encoding="utf-8",
        )
        with self.assertRaises(MeshFormatError) as ctx:
            load_mesh(path)
        self.assertEqual(ctx.exception.facet, 1)
        self.assertEqual(ctx.exception.path, str(path))
        self.assertIn(str(path), str(ctx.exception))

    def test_malformed_header(self):
        path = self.dir / "bad.mesh"
        path.write_text("2 three 1 0\n", encoding="utf-8")
        with self.assertRaises(MeshFormatError) as ctx:
            read_mesh(path)
        self.assertEqual(ctx.exception.line, 1)

    def test_spherical_hole_loader_labels_and_audits(self):
        path = self.dir / "annulus.mesh"
        write_mesh(path, _annulus())
        audited = mesh_with_spherical_hole(path, center=(0.0, 0.0), radius=0.2)
        labels = audited.mesh.facet_labels
        self.assertEqual(labels.count(INCLUSION_LABEL), 16)
        self.assertEqual(labels.count(OUTER_LABEL), 16)
        self.assertEqual(audited.report.n_edges, audited.mesh.edges.shape[0])

    def test_spherical_hole_loader_passes_through_box_fixture(self):
        path = self.dir / "square.mesh"
        write_mesh(path, generate_crisscross_2d(4, 4))
        with self.assertRaisesMessage(MeshError, "lies on the sphere"):
            mesh_with_spherical_hole(path, center=(0.5, 0.5), radius=0.2)
        loaded = load_mesh(path)
        self.assertTrue(check_weak_acuteness(loaded).passed)

    def test_obtuse_fixture_audit_counts_negative_edges(self):
        path = self.dir / "obtuse.mesh"
        write_mesh(path, _obtuse_pair())
        report = check_weak_acuteness(load_mesh(path))
        self.assertEqual(report.negative_edge_count, 1)

    def test_mesh_audit_command(self):
        path = self.dir / "square.mesh"
        write_mesh(path, generate_crisscross_2d(4, 4))
        out = io.StringIO()
        call_command("mesh_audit", str(path), stdout=out)
        self.assertIn("weakly acute: yes", out.getvalue())

        write_mesh(self.dir / "obtuse.mesh", _obtuse_pair())
        out = io.StringIO()
        call_command("mesh_audit", str(self.dir / "obtuse.mesh"), stdout=out)
        self.assertIn("negative k_ij edges: 1", out.getvalue())
