import io
import json
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag
from openpyxl import load_workbook

from apps.core.constants import EXIT_CONFIG_ERROR, EXIT_IO_ERROR, EXIT_NUMERICAL_ERROR, MODEL_STANDARD
from apps.core.exceptions import CFLViolation, ConfigError, MonotonicityError
from apps.energy.breakdown import CSV_COLUMNS
from apps.fields.snapshots import read_snapshot
from apps.meshes.generators import generate_crisscross_2d, generate_kuhn_3d
from apps.meshes.io import INCLUSION_LABEL

from .builders import build_experiment, build_mesh, check_labels
from .configfile import parse_config, serialize_config, split_key
from .forms import parse_loops, validate_config
from .models import EnergyRecord, ExperimentRun
from .profiles import evaluate_profile
from .registry import EXPERIMENTS, canned_config, list_experiments
from . import runner
from .runner import CSV_NAME, FINAL_SNAPSHOT, REPORT_NAME, SNAPSHOT_DIR, run_experiment

SMALL_2D = """\
model = uniaxial_ldg
mesh.generator = crisscross_2d
mesh.n = 6
well.name = uniaxial
flow.dt = 1e-3
flow.max_steps = 4
bc.degree.labels = xmin, xmax, ymin, ymax
bc.director.labels = xmin, xmax, ymin, ymax
bc.director.profile = point_defect
bc.director.degree = 0.5
bc.director.center = 0.5, 0.5
init.director.profile = random
init.seed = 7
output.snapshot_every = 2
report.loops = 0.5 0.5 0.3
"""

SMALL_3D = """\
model = {model}
mesh.generator = kuhn_3d
mesh.n = 3
well.name = uniaxial
flow.dt = 1e-3
flow.max_steps = 3
bc.degree.labels = xmin, xmax, ymin, ymax
bc.director.labels = xmin, xmax, ymin, ymax
bc.director.profile = uniform
bc.director.direction = 0, 0, 1
init.director.profile = uniform
init.director.direction = 1, 0, 0
"""


def _config(text, name="test", overrides=()):
    return validate_config(parse_config(text).with_overrides(overrides), name=name)


class ConfigFileTests(SimpleTestCase):
    def test_comments_and_blank_lines_are_skipped(self):
        cfg = parse_config("# header\n\nflow.dt = 0.5  # trailing\nmodel = ericksen\n")
        self.assertEqual(cfg.values, {"flow.dt": "0.5", "model": "ericksen"})
        self.assertEqual(cfg.line_of("model"), 4)

    def test_missing_equals_reports_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("model = ericksen\nflow.dt 0.1\n")
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn("line 2", str(ctx.exception))

    def test_duplicate_key(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config("flow.dt = 0.1\nmodel = ericksen\nflow.dt = 0.2\n")
        self.assertEqual(ctx.exception.key, "flow.dt")
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn("first set on line 1", str(ctx.exception))

    def test_malformed_key_and_empty_value(self):
        with self.assertRaises(ConfigError):
            parse_config("flow..dt = 1\n")
        with self.assertRaises(ConfigError) as ctx:
            parse_config("flow.dt =\n")
        self.assertEqual(ctx.exception.line, 1)

    def test_split_key(self):
        self.assertEqual(split_key("model"), ("model", "name"))
        self.assertEqual(split_key("bc.director.profile"), ("bc", "director_profile"))
        with self.assertRaises(ConfigError):
            split_key("dt")

    def test_overrides_replace_values_without_line(self):
        cfg = parse_config("flow.dt = 0.1\n").with_overrides(["flow.dt=0.5", "flow.max_steps = 3"])
        self.assertEqual(cfg.values["flow.dt"], "0.5")
        self.assertIsNone(cfg.line_of("flow.dt"))
        self.assertEqual(cfg.values["flow.max_steps"], "3")
        with self.assertRaises(ConfigError):
            cfg.with_overrides(["flow.dt"])

    def test_serialize_keeps_seventeen_digits(self):
        text = serialize_config({"flow.dt": 0.1, "bc.director.center": (1.0 / 3.0, 0.5), "flow.check_monotonicity": True})
        self.assertIn("flow.dt = 0.10000000000000001\n", text)
        self.assertIn("bc.director.center = 0.33333333333333331, 0.5\n", text)
        self.assertIn("flow.check_monotonicity = true\n", text)


class ValidationTests(SimpleTestCase):
    def test_kappa_rejected_for_uniaxial_model(self):
        with self.assertRaises(ConfigError) as ctx:
            _config("model = uniaxial_ldg\nmodel.kappa = 2\nmesh.generator = kuhn_3d\nmesh.n = 2\n")
        self.assertEqual(ctx.exception.key, "model.kappa")
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn("κ fixed to (d−1)/d", str(ctx.exception))

    def test_kappa_allowed_for_ericksen(self):
        cfg = _config("model = ericksen\nmodel.kappa = 2\nmesh.generator = crisscross_2d\nmesh.n = 2\n")
        self.assertEqual(cfg["model"]["kappa"], 2.0)

    def test_missing_model(self):
        with self.assertRaises(ConfigError) as ctx:
            _config("mesh.generator = kuhn_3d\nmesh.n = 2\n")
        self.assertEqual(ctx.exception.key, "model")

    def test_unknown_key_and_section(self):
        with self.assertRaises(ConfigError) as ctx:
            _config("model = ericksen\nmesh.generator = kuhn_3d\nmesh.n = 2\nflow.dtt = 1\n")
        self.assertEqual((ctx.exception.key, ctx.exception.line), ("flow.dtt", 4))
        with self.assertRaises(ConfigError) as ctx:
            _config("model = ericksen\nsolver.tol = 1\n")
        self.assertEqual(ctx.exception.key, "solver.tol")

    def test_bad_value_names_key_and_line(self):
        with self.assertRaises(ConfigError) as ctx:
            _config("model = ericksen\nmesh.generator = kuhn_3d\nmesh.n = 2\nflow.dt = fast\n")
        self.assertEqual((ctx.exception.key, ctx.exception.line), ("flow.dt", 4))

    def test_flow_config_errors_carry_line(self):
        with self.assertRaises(ConfigError) as ctx:
            _config("model = ericksen\nmesh.generator = kuhn_3d\nmesh.n = 2\nflow.tau = 2.5\n")
        self.assertEqual((ctx.exception.key, ctx.exception.line), ("flow.tau", 4))

    def test_ldg_keys_need_standard_model(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(SMALL_3D.format(model="uniaxial_ldg") + "ldg.l2 = 0.5\n")
        self.assertEqual(ctx.exception.key, "ldg.l2")

    def test_uniaxial_start_needs_standard_model(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(SMALL_3D.format(model="uniaxial_ldg") + "init.source = uniaxial\n")
        self.assertEqual(ctx.exception.key, "init.source")

    def test_anchoring_needs_colloid(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(SMALL_3D.format(model="uniaxial_ldg") + "anchoring.k_normal = 1\n")
        self.assertEqual(ctx.exception.key, "anchoring.k_normal")

    def test_mesh_section_rules(self):
        with self.assertRaises(ConfigError) as ctx:
            _config("model = ericksen\nmesh.generator = file\n")
        self.assertEqual(ctx.exception.key, "mesh.path")
        with self.assertRaises(ConfigError) as ctx:
            _config("model = ericksen\nmesh.generator = kuhn_3d\nmesh.n = 2\nmesh.bbox = 0, 1, 0, 1\n")
        self.assertEqual(ctx.exception.key, "mesh.bbox")

    def test_missing_boundary_label_is_named(self):
        cfg = _config(SMALL_3D.format(model="uniaxial_ldg"), overrides=["bc.degree.labels=xmin, top"])
        mesh = build_mesh(cfg)
        with self.assertRaises(ConfigError) as ctx:
            check_labels(cfg, mesh)
        self.assertEqual(ctx.exception.key, "bc.degree.labels")
        self.assertIn("missing label 'top'", str(ctx.exception))

    def test_loops_parse_in_both_forms(self):
        loops = parse_loops("z 0.2 0.5 0.5 0.35; 0.4 0.6 0.1")
        self.assertEqual(len(loops), 2)
        self.assertEqual((loops[0].axis, loops[0].level, loops[0].half_width), ("z", 0.2, 0.35))
        self.assertEqual(loops[1].center, (0.4, 0.6))
        with self.assertRaises(ConfigError):
            _config(SMALL_2D, overrides=["report.loops=q 0 0 0 1"])


class RegistryTests(SimpleTestCase):
    def test_registry_covers_the_experiments(self):
        names = list_experiments()
        self.assertGreaterEqual(len(names), 7)
        for name in ("erk_plus3_defect", "uni_line_defect", "ldg_vs_uniaxial", "uni_colloid_electric"):
            self.assertIn(name, names)

    def test_every_canned_config_validates(self):
        for name in list_experiments():
            with self.subTest(name=name):
                validate_config(canned_config(name), name=name)

    def test_canned_configs_round_trip(self):
        for name in list_experiments():
            with self.subTest(name=name):
                first = validate_config(canned_config(name), name=name)
                text = first.canonical_text()
                second = validate_config(parse_config(text), name=name)
                self.assertEqual(second.canonical(), first.canonical())
                self.assertEqual(second.canonical_text(), text)

    def test_unknown_experiment(self):
        with self.assertRaises(ConfigError):
            canned_config("no_such_run")

    def test_list_command(self):
        out = io.StringIO()
        call_command("list_experiments", stdout=out)
        for name in EXPERIMENTS:
            self.assertIn(name, out.getvalue())
        out = io.StringIO()
        call_command("list_experiments", "--show", "uni_line_defect", stdout=out)
        self.assertIn("model = uniaxial_ldg", out.getvalue())


class ProfileTests(SimpleTestCase):
    def setUp(self):
        self.square = generate_crisscross_2d(4, 4)
        self.cube = generate_kuhn_3d(2, 2, 2)

    def test_point_defect_angle(self):
        n = evaluate_profile("point_defect", self.square, {"degree": 3, "center": (0.3, 0.6)})
        x = self.square.vertices
        theta = 3 * np.arctan2(x[:, 1] - 0.6, x[:, 0] - 0.3)
        np.testing.assert_allclose(n, np.column_stack([np.cos(theta), np.sin(theta)]), atol=1e-14)

    def test_twisted_half_defect_ends(self):
        n = evaluate_profile("twisted_half_defect", self.cube, {"centers": (0.3, 0.3, 0.7, 0.7), "twist": np.pi})
        x = self.cube.vertices
        bottom = np.flatnonzero(x[:, 2] == 0.0)
        top = np.flatnonzero(x[:, 2] == 1.0)
        theta0 = 0.5 * np.arctan2(x[bottom, 1] - 0.3, x[bottom, 0] - 0.3)
        theta1 = 0.5 * np.arctan2(x[top, 1] - 0.7, x[top, 0] - 0.7)
        np.testing.assert_allclose(n[bottom, :2], np.column_stack([np.cos(theta0), np.sin(theta0)]), atol=1e-14)
        np.testing.assert_allclose(n[top, :2], -np.column_stack([np.cos(theta1), np.sin(theta1)]), atol=1e-14)
        np.testing.assert_allclose(n[:, 2], 0.0)

    def test_pole_interpolation(self):
        n = evaluate_profile("pole_interpolation", self.cube, {"center": (0.5, 0.5, 0.5), "width": 0.5})
        z = self.cube.vertices[:, 2]
        np.testing.assert_allclose(n[z == 0.5], np.tile([1.0, 0.0, 0.0], ((z == 0.5).sum(), 1)), atol=1e-15)
        np.testing.assert_allclose(n[z == 1.0], np.tile([0.0, 0.0, 1.0], ((z == 1.0).sum(), 1)), atol=1e-15)
        np.testing.assert_allclose(n[z == 0.0], np.tile([0.0, 0.0, -1.0], ((z == 0.0).sum(), 1)), atol=1e-15)

    def test_inclusion_normal_without_inclusion_warns(self):
        self.assertNotIn(INCLUSION_LABEL, self.cube.labels)
        with self.assertLogs("apps.experiments.profiles", level="WARNING"):
            n = evaluate_profile("inclusion_normal", self.cube, {"direction": (0.0, 1.0, 0.0)})
        np.testing.assert_allclose(n, np.tile([0.0, 1.0, 0.0], (self.cube.n_nodes, 1)))

    def test_split_poles_needs_3d(self):
        with self.assertRaises(ConfigError):
            evaluate_profile("split_poles", self.square, {})
        n = evaluate_profile("split_poles", self.cube, {"center": (0.5, 0.5, 0.5)})
        np.testing.assert_array_equal(np.sign(n[:, 2]), np.where(self.cube.vertices[:, 2] < 0.5, -1.0, 1.0))

    def test_random_profile_is_seeded_and_unit(self):
        a = evaluate_profile("random", self.cube, {}, np.random.default_rng(3))
        b = evaluate_profile("random", self.cube, {}, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0)

    def test_direction_size_checked(self):
        with self.assertRaises(ConfigError):
            evaluate_profile("uniform", self.cube, {"direction": (1.0, 0.0)})


class BuilderTests(SimpleTestCase):
    def test_constrained_build(self):
        built = build_experiment(_config(SMALL_2D))
        s_star = built.well.s_star
        nodes = built.mesh.boundary_nodes(built.mesh.labels)
        np.testing.assert_array_equal(np.sort(built.boundary.degree_nodes), np.sort(nodes))
        np.testing.assert_allclose(built.boundary.degree_values, s_star)
        np.testing.assert_allclose(built.s0[nodes], s_star)
        np.testing.assert_allclose(built.n0[built.boundary.director_nodes], built.boundary.director_values)
        self.assertIsNone(built.problem)
        self.assertAlmostEqual(built.model.kappa, 0.5)

    def test_seed_controls_random_start(self):
        a = build_experiment(_config(SMALL_2D))
        b = build_experiment(_config(SMALL_2D))
        c = build_experiment(_config(SMALL_2D, overrides=["init.seed=8"]))
        np.testing.assert_array_equal(a.n0, b.n0)
        self.assertFalse(np.allclose(a.n0, c.n0))

    def test_standard_build_uses_uniaxial_dirichlet_tensor(self):
        built = build_experiment(_config(SMALL_3D.format(model=MODEL_STANDARD)))
        problem = built.problem
        s_star = built.well.s_star
        self.assertIsNone(built.model)
        expected = s_star * (np.diag([0.0, 0.0, 1.0]) - np.eye(3) / 3.0)
        mats = problem.matrices(problem.dirichlet_values)
        np.testing.assert_allclose(mats, np.broadcast_to(expected, mats.shape), atol=1e-14)
        np.testing.assert_allclose(built.q0[problem.dirichlet_nodes], problem.dirichlet_values)

    def test_electric_field_size_checked(self):
        text = SMALL_3D.format(model="uniaxial_ldg") + (
            "electric.field = 0, 1\nelectric.k_ext = 1\nelectric.eps_parallel = 1\nelectric.eps_perp = 1\n"
        )
        with self.assertRaises(ConfigError) as ctx:
            build_experiment(_config(text))
        self.assertEqual(ctx.exception.key, "electric.field")


class RunTests(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_run_writes_artifacts_and_records(self):
        result = run_experiment(_config(SMALL_2D, name="small"), out_dir=self.tmp / "a")

        lines = result.csv_path.read_text().splitlines()
        self.assertEqual(lines[0], ",".join(CSV_COLUMNS))
        self.assertEqual(len(lines) - 1, result.report["steps"] + 1)
        self.assertTrue((self.tmp / "a" / SNAPSHOT_DIR / FINAL_SNAPSHOT).exists())
        self.assertTrue((self.tmp / "a" / SNAPSHOT_DIR / "step_000002.vtk").exists())
        self.assertEqual((self.tmp / "a" / "config.txt").read_text(), _config(SMALL_2D).canonical_text())

        report = json.loads((self.tmp / "a" / REPORT_NAME).read_text())
        self.assertLessEqual(report["steps"], 4)
        self.assertEqual(len(report["windings"]), 1)
        self.assertIn("minima", report)
        self.assertIn("telescoping_slack", report)
        self.assertLessEqual(report["energy"]["total"], report["initial_energy"]["total"])

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.STATUS_COMPLETED)
        self.assertEqual(run.steps, report["steps"])
        self.assertEqual(EnergyRecord.objects.filter(run=run).count(), len(lines) - 1)
        self.assertAlmostEqual(run.final_energy, report["energy"]["total"])

    def test_same_seed_gives_identical_csv(self):
        a = run_experiment(_config(SMALL_2D), out_dir=self.tmp / "a", persist=False)
        b = run_experiment(_config(SMALL_2D), out_dir=self.tmp / "b", persist=False)
        self.assertEqual(a.csv_path.read_bytes(), b.csv_path.read_bytes())
        self.assertFalse(ExperimentRun.objects.exists())

    def test_snapshot_round_trip(self):
        result = run_experiment(_config(SMALL_2D), out_dir=self.tmp, persist=False)
        snap = read_snapshot(self.tmp / SNAPSHOT_DIR / FINAL_SNAPSHOT)
        self.assertEqual(snap.dim, 2)
        self.assertAlmostEqual(float(snap.degree().min()), result.report["min_s"], places=6)

    def test_failed_run_is_recorded(self):
        cfg = _config(SMALL_2D, overrides=["flow.dt=1.0"])
        with self.assertRaises(CFLViolation):
            run_experiment(cfg, out_dir=self.tmp)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.STATUS_FAILED)
        self.assertIn("CFL", run.error)
        self.assertEqual(json.loads((self.tmp / REPORT_NAME).read_text())["status"], "failed")

    def test_energy_increase_keeps_partial_trace_and_diagnostics(self):
        real_run_flow = runner.run_flow

        def failing_run_flow(*args, callback, **kwargs):
            def relay(state):
                callback(state)
                if state.step == 2:
                    raise MonotonicityError(3, 1.0, 1.5, {"min_s": 0.1, "clamped_nodes": np.int64(3)})

            return real_run_flow(*args, callback=relay, **kwargs)

        with mock.patch.object(runner, "run_flow", side_effect=failing_run_flow):
            with self.assertRaises(MonotonicityError):
                run_experiment(_config(SMALL_2D, name="rising"), out_dir=self.tmp)

        steps = [int(line.split(",")[0]) for line in (self.tmp / CSV_NAME).read_text().splitlines()[1:]]
        self.assertEqual(steps, [0, 1, 2])
        report = json.loads((self.tmp / REPORT_NAME).read_text())
        self.assertEqual(report["status"], "failed")
        self.assertEqual(report["error_type"], "MonotonicityError")
        self.assertEqual(report["diagnostics"], {"min_s": 0.1, "clamped_nodes": 3})
        self.assertEqual((report["step"], report["before"], report["after"]), (3, 1.0, 1.5))
        self.assertEqual(report["csv"], CSV_NAME)

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.STATUS_FAILED)
        self.assertEqual(list(run.energy_records.order_by("step").values_list("step", flat=True)), [0, 1, 2])
        self.assertEqual(run.report["diagnostics"]["min_s"], 0.1)

    def test_unexpected_error_marks_run_failed(self):
        with mock.patch.object(runner, "build_experiment", side_effect=ValueError("broken quadrature")):
            with self.assertLogs("apps.experiments.runner", level="ERROR"):
                with self.assertRaises(ValueError):
                    run_experiment(_config(SMALL_2D), out_dir=self.tmp)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.STATUS_FAILED)
        self.assertEqual(run.error, "ValueError: broken quadrature")
        self.assertIsNotNone(run.finished_at)

    def test_standard_run_from_uniaxial_start_reports_comparison(self):
        text = SMALL_3D.format(model=MODEL_STANDARD) + "init.source = uniaxial\nldg.eta_b = 0.0625\n"
        result = run_experiment(_config(text), out_dir=self.tmp, persist=False)
        report = result.report
        self.assertIn("comparison", report)
        self.assertIn("uniaxial", report)
        for key in ("E_uni[Q_uni]", "E_LdG[Q_uni]", "E_LdG[Q_LdG]", "model_gap", "final_gap", "max_biaxiality"):
            self.assertIn(key, report["comparison"])
        steps = [int(line.split(",")[0]) for line in result.csv_path.read_text().splitlines()[1:]]
        self.assertEqual(steps, sorted(set(steps)))
        snap = read_snapshot(self.tmp / SNAPSHOT_DIR / FINAL_SNAPSHOT)
        self.assertIn("Q", snap.arrays)
        self.assertIn("biaxiality", snap.arrays)

    def test_snapshots_after_uniaxial_start_follow_the_global_step(self):
        text = SMALL_3D.format(model=MODEL_STANDARD) + "init.source = uniaxial\nldg.eta_b = 0.0625\n"
        cfg = _config(text, overrides=["output.snapshot_every=2", "output.csv_every=2"])
        result = run_experiment(cfg, out_dir=self.tmp, persist=False)
        uni_steps = result.report["uniaxial"]["steps"]
        csv_steps = {int(line.split(",")[0]) for line in result.csv_path.read_text().splitlines()[1:]}
        snap_steps = sorted(int(p.stem.split("_")[1]) for p in result.snapshots if p.name != FINAL_SNAPSHOT)
        self.assertTrue(snap_steps)
        self.assertTrue(all(step % 2 == 0 and step > uni_steps for step in snap_steps))
        self.assertLessEqual(set(snap_steps), csv_steps)


class CommandTests(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _write(self, name, text):
        path = self.tmp / name
        path.write_text(text)
        return str(path)

    def test_validate_ok(self):
        out = io.StringIO()
        call_command("validate", self._write("ok.cfg", SMALL_2D), stdout=out)
        self.assertIn("Configuration is valid.", out.getvalue())

    def test_validate_missing_label_exits_with_config_code(self):
        path = self._write("bad.cfg", SMALL_2D.replace("xmin, xmax, ymin, ymax\nbc.director", "xmin, left\nbc.director"))
        with self.assertRaises(CommandError) as ctx:
            call_command("validate", path, stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_CONFIG_ERROR)
        self.assertIn("missing label 'left'", str(ctx.exception))

    def test_validate_kappa_override(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("validate", "uni_line_defect", "--skip-mesh", "--set", "model.kappa=1", stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_CONFIG_ERROR)

    def test_missing_config_file_exits_with_io_code(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("validate", str(self.tmp / "nope.cfg"))
        self.assertEqual(ctx.exception.returncode, EXIT_IO_ERROR)

    def test_missing_mesh_file_exits_with_io_code(self):
        with self.assertRaises(CommandError) as ctx:
            call_command("validate", "uni_saturn_ring", "--set", f"mesh.path={self.tmp / 'none.msh'}", stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_IO_ERROR)

    def test_invalid_mesh_file_exits_with_io_code(self):
        bad = self._write("bad.mesh", "2 4 1 2\n0 0\n1 0\n0 1\n1 1\n0 1 2\n0 1 xmin\n1 3 oops\n")
        with self.assertRaises(CommandError) as ctx:
            call_command("validate", "uni_saturn_ring", "--set", f"mesh.path={bad}", stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_IO_ERROR)
        self.assertIn("I/O error", str(ctx.exception))

    def test_run_cfl_violation_exits_with_numerical_code(self):
        path = self._write("fast.cfg", SMALL_2D)
        with self.assertRaises(CommandError) as ctx:
            call_command("run", path, "--out", str(self.tmp / "out"), "--set", "flow.dt=1", "--no-persist", stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_NUMERICAL_ERROR)

    def test_run_and_compare(self):
        a = self.tmp / "uni"
        b = self.tmp / "ldg"
        call_command("run", self._write("uni.cfg", SMALL_3D.format(model="uniaxial_ldg")), "--out", str(a), stdout=io.StringIO())
        call_command("run", self._write("ldg.cfg", SMALL_3D.format(model=MODEL_STANDARD)), "--out", str(b), stdout=io.StringIO())
        self.assertEqual(ExperimentRun.objects.filter(status=ExperimentRun.STATUS_COMPLETED).count(), 2)

        out = io.StringIO()
        call_command("compare", str(a), str(b), stdout=out)
        self.assertIn("max |Q_a - Q_b|", out.getvalue())
        wb = load_workbook(a / "comparison.xlsx")
        self.assertEqual(wb.sheetnames, ["Comparison", "Run A", "Run B"])
        ws = wb["Comparison"]
        self.assertEqual(ws["A1"].value, "Quantity")
        self.assertTrue(ws["A1"].font.bold)

    def test_compare_needs_same_mesh(self):
        a = self.tmp / "a"
        b = self.tmp / "b"
        text = SMALL_3D.format(model="uniaxial_ldg")
        call_command("run", self._write("a.cfg", text), "--out", str(a), "--no-persist", stdout=io.StringIO())
        call_command("run", self._write("b.cfg", text), "--out", str(b), "--set", "mesh.n=2", "--no-persist", stdout=io.StringIO())
        with self.assertRaises(CommandError) as ctx:
            call_command("compare", str(a), str(b), stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_CONFIG_ERROR)


@tag("slow")
class CannedExperimentTests(TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _run(self, name, overrides=(), out=None):
        cfg = validate_config(canned_config(name).with_overrides(overrides), name=name)
        return run_experiment(cfg, out_dir=out or self.tmp / name, persist=False)

    def _assert_monotone(self, csv_path):
        totals = [float(line.split(",")[5]) for line in csv_path.read_text().splitlines()[1:]]
        for before, after in zip(totals, totals[1:]):
            self.assertLessEqual(after, before + 1e-10 * abs(before))

    def test_plus_three_defect_runs_to_termination(self):
        result = self._run("erk_plus3_defect")
        report = result.report
        self.assertEqual(report["reason"], "converged")
        self.assertGreaterEqual(len(result.snapshots), 1)
        self.assertEqual(len(report["minima"]), 3)
        self.assertGreaterEqual(report["telescoping_slack"], -1e-8)
        self._assert_monotone(result.csv_path)

    def test_uniaxial_line_defect(self):
        result = self._run("uni_line_defect")
        report = result.report
        self.assertLess(report["energy"]["total"], report["initial_energy"]["total"])
        self.assertEqual([w["winding"] for w in report["windings"]], [0.5, 0.5, 0.5])
        self.assertGreater(report["min_s"], 0.0)
        self.assertLess(report["min_s"], 0.1)
        self.assertGreaterEqual(report["telescoping_slack"], -1e-8)
        self._assert_monotone(result.csv_path)

    def test_standard_line_defect_is_biaxial_at_the_core(self):
        report = self._run("ldg_line_defect").report
        comparison = report["comparison"]
        self.assertGreater(comparison["max_biaxiality"], 0.9)
        self.assertGreater(comparison["final_gap"], 0.0)
        self.assertGreaterEqual(comparison["final_gap"], comparison["model_gap"])

    def test_standard_against_uniaxial(self):
        comparison = self._run("ldg_vs_uniaxial").report["comparison"]
        self.assertGreaterEqual(comparison["model_gap"], 0.0)
        self.assertLess(comparison["model_gap"], 0.05)
        self.assertGreater(comparison["final_gap"], 0.0)
        self.assertLessEqual(comparison["E_LdG[Q_LdG]"], comparison["E_LdG[Q_uni]"])

    def test_electric_field_aligns_the_line_field(self):
        common = ["mesh.n=16", "colloid.eps=0.12", "flow.max_steps=300"]
        alignments = []
        for name in ("uni_colloid_phase_field", "uni_colloid_electric"):
            result = self._run(name, common)
            snap = read_snapshot(result.out_dir / SNAPSHOT_DIR / FINAL_SNAPSHOT)
            director = snap.line_field().vectors
            interior = np.all((snap.points > 0.0) & (snap.points < 1.0), axis=1)
            alignments.append(float(np.mean(director[interior, 1] ** 2)))
        self.assertGreater(alignments[1], alignments[0])

    def test_half_defect_energies_converge_under_refinement(self):
        energies = []
        for n in (16, 32, 64):
            report = self._run("uni_half_defect_2d", [f"mesh.n={n}", "flow.stop_tol=1e-7", "flow.max_steps=6000", "output.snapshot_every=0"]).report
            energies.append(report["energy"]["total"])
        first, second = abs(energies[0] - energies[1]), abs(energies[1] - energies[2])
        self.assertGreaterEqual(first, 1.5 * second)
