"""Shared fixtures for the adipal test suite."""

import os
import tempfile

import numpy as np
import pytest

# keep the run log out of the user's home during tests
os.environ.setdefault("ADIPAL_HOME", tempfile.mkdtemp(prefix="adipal-test-"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def problem_2d():
    from adipal.problems import template_problem

    return template_problem("2d-gamma", 0.9)


@pytest.fixture
def problem_3d():
    from adipal.problems import template_problem

    return template_problem("3d-gamma", 0.75)
