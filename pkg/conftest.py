"""Pytest wiring for the Django test suites (no pytest-django available)."""

import os

import django
import pytest

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
django.setup()


@pytest.fixture(scope="session", autouse=True)
def _django_test_environment():
    from django.db import connections
    from django.test.utils import setup_test_environment, teardown_test_environment

    setup_test_environment()
    old_names = []
    for alias in connections:
        conn = connections[alias]
        old_names.append((conn, conn.settings_dict["NAME"]))
        conn.creation.create_test_db(verbosity=0, autoclobber=True)
    yield
    for conn, name in old_names:
        conn.creation.destroy_test_db(name, verbosity=0)
    teardown_test_environment()
