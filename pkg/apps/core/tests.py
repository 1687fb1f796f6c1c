import math

from django.test import SimpleTestCase

from .constants import sphere_measure
from .exceptions import ConfigError, MeshFormatError, MonotonicityError


class ConfigErrorTests(SimpleTestCase):
    def test_message_names_key_and_line(self):
        exc = ConfigError("unknown key.", key="flow.dtt", line=4)
        self.assertEqual(str(exc), "flow.dtt (line 4): unknown key.")
        self.assertEqual(exc.detail, "unknown key.")

    def test_override_errors_have_no_line(self):
        self.assertEqual(str(ConfigError("bad.", key="flow.dt")), "flow.dt: bad.")
        self.assertEqual(str(ConfigError("bad.")), "bad.")


class ErrorTests(SimpleTestCase):
    def test_mesh_format_error_location(self):
        exc = MeshFormatError("expected 3 indices.", path="box.mesh", line=12)
        self.assertEqual(str(exc), "box.mesh:12: expected 3 indices.")

    def test_monotonicity_error_keeps_diagnostics(self):
        exc = MonotonicityError(3, 1.0, 1.5, {"min_s": 0.1})
        self.assertEqual((exc.step, exc.before, exc.after), (3, 1.0, 1.5))
        self.assertEqual(exc.diagnostics["min_s"], 0.1)
        self.assertIn("step 3", str(exc))


class SphereMeasureTests(SimpleTestCase):
    def test_measures(self):
        self.assertEqual(sphere_measure(2), 2.0 * math.pi)
        self.assertEqual(sphere_measure(3), 4.0 * math.pi)
        with self.assertRaises(ValueError):
            sphere_measure(4)
