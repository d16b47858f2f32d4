import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from helmpso.cases import make_case, synthesize_data
from helmpso.mesh import Tag, boundary_segment, build_unit_disc_mesh, build_unit_square_mesh
from helmpso.objective import InverseProblem, ObjectiveConfig, build_response_basis
from helmpso.param import make_basis

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=50
)
settings.load_profile("default")

DEFAULT_N = {"square": 32, "disc": 64}
# regularization used for each (case, formulation) in the acceptance runs
ALPHA = {
    ("square", "dirichlet"): 1e-8,
    ("square", "neumann"): 1e-8,
    ("disc", "dirichlet"): 1e-8,
    ("disc", "neumann"): 1e-6,
}


@functools.lru_cache(maxsize=None)
def mesh_for(case, n=None):
    n = n or DEFAULT_N[case]
    return build_unit_square_mesh(n) if case == "square" else build_unit_disc_mesh(n)


@functools.lru_cache(maxsize=None)
def problem_for(case, n=None, degree=5):
    bc = make_case(case)
    mesh = mesh_for(case, n)
    data, target = synthesize_data(bc, mesh)
    basis = make_basis(boundary_segment(mesh, Tag.I), degree)
    return InverseProblem(mesh, bc.mu, data, basis), target


@functools.lru_cache(maxsize=None)
def response_for(case, formulation, alpha=None):
    problem, _ = problem_for(case)
    alpha = ALPHA[(case, formulation)] if alpha is None else alpha
    config = ObjectiveConfig(formulation, alpha)
    return config, build_response_basis(config, problem)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
