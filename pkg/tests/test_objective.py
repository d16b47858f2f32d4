import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from helmpso.errors import InvalidArgument
from helmpso.fem import edgewise_inner
from helmpso.mesh import Tag
from helmpso.objective import (
    FastObjective,
    NaiveObjective,
    ObjectiveConfig,
    build_response_basis,
    eval_fast,
    eval_naive,
    reconstruct_solution,
)
from helmpso.param import coeffs_to_field, project

from conftest import ALPHA, problem_for, response_for

SETTINGS = [(c, f) for c in ("square", "disc") for f in ("dirichlet", "neumann")]


@pytest.mark.parametrize("case,form", SETTINGS)
def test_fast_matches_naive(case, form, rng):
    config, rb = response_for(case, form)
    problem, _ = problem_for(case)
    for c in rng.uniform(-7, 7, (10, 6)):
        J = eval_naive(config, problem, c)
        assert abs(eval_fast(rb, c) - J) <= 1e-10 * (1 + abs(J))


@pytest.mark.parametrize("case,form", SETTINGS)
def test_response_basis_shape(case, form):
    _, rb = response_for(case, form)
    assert len(rb.solutions) == 7
    assert rb.n_solves == 7


@pytest.mark.parametrize("case,form", SETTINGS)
def test_affine_reconstruction(case, form, rng):
    config, rb = response_for(case, form)
    problem, _ = problem_for(case)
    c = rng.uniform(-2, 2, 6)
    phi = coeffs_to_field(problem.basis, c).values
    op = problem.operator(config.formulation)
    d = problem.data
    direct = op.solve(phi, d.g.values) if form == "dirichlet" else op.solve(d.f.values, phi)
    u = reconstruct_solution(rb, c)
    assert np.linalg.norm(u - direct.u) <= 1e-10 * np.linalg.norm(direct.u)


def test_inverse_crime_floor():
    problem, target = problem_for("square")
    c = project(problem.basis, target.phi_d)
    assert eval_naive(ObjectiveConfig("dirichlet", 0.0), problem, c) <= 1e-6


def test_neumann_residual_is_a_flux_residual():
    # at the projected exact flux the misfit is at the discretization floor
    problem, target = problem_for("square")
    c = project(problem.basis, target.phi_n)
    J = eval_naive(ObjectiveConfig("neumann", 0.0), problem, c)
    assert J <= 1e-3
    assert eval_naive(ObjectiveConfig("neumann", 0.0), problem, np.zeros(6)) > 100 * J


@pytest.mark.parametrize("form", ["dirichlet", "neumann"])
def test_zero_coeffs_have_no_regularization(form):
    problem, _ = problem_for("square")
    z = np.zeros(6)
    assert eval_naive(ObjectiveConfig(form, 1.0), problem, z) == eval_naive(ObjectiveConfig(form, 0.0), problem, z)


def test_fast_at_zero_is_k():
    config, rb = response_for("square", "dirichlet")
    problem, _ = problem_for("square")
    resid = rb.u0.u[problem.seg_c.node_ids] - problem.data.f.values
    assert eval_fast(rb, np.zeros(6)) == pytest.approx(0.5 * edgewise_inner(resid, resid, problem.seg_c), rel=1e-12)
    assert eval_fast(rb, np.zeros(6)) == rb.k


@pytest.mark.parametrize("case,form", SETTINGS)
def test_hessian_definiteness(case, form):
    _, rb = response_for(case, form)
    assert np.array_equal(rb.H, rb.H.T)
    assert np.linalg.eigvalsh(rb.H).min() > 0
    problem, _ = problem_for(case)
    rb0 = build_response_basis(ObjectiveConfig(form, 0.0), problem)
    assert np.linalg.eigvalsh(rb0.H).min() >= -1e-12 * np.abs(rb0.H).max()


@given(arrays(float, 6, elements=st.floats(-7, 7)), arrays(float, 6, elements=st.floats(-1, 1)))
def test_exactly_quadratic(c, d):
    _, rb = response_for("disc", "neumann")
    J = lambda t: eval_fast(rb, c + t * d)  # noqa: E731
    second = [J(t + 1) - 2 * J(t) + J(t - 1) for t in (-1.0, 0.0, 1.0, 2.0)]
    scale = 1 + abs(J(0.0))
    assert max(second) - min(second) <= 1e-8 * scale
    assert J(0.0) >= 0


@settings(max_examples=20)
@given(arrays(float, 6, elements=st.floats(-7, 7)), st.floats(0, 1e-2), st.floats(0, 1e-2))
def test_alpha_monotone(c, a1, a2):
    problem, _ = problem_for("square")
    lo, hi = sorted((a1, a2))
    assert eval_naive(ObjectiveConfig("dirichlet", lo), problem, c) <= eval_naive(ObjectiveConfig("dirichlet", hi), problem, c)


def test_regularizer_choice():
    problem, _ = problem_for("square")
    c = np.array([0, 1.0, 0, 0, 0, 0])
    j1 = eval_naive(ObjectiveConfig("dirichlet", 1.0, "l2"), problem, c)
    j2 = eval_naive(ObjectiveConfig("dirichlet", 1.0, "l2+h1"), problem, c)
    j0 = eval_naive(ObjectiveConfig("dirichlet", 0.0), problem, c)
    # phi = t on a unit segment: L2^2 = 1/3, H1 seminorm^2 = 4
    assert j1 - j0 == pytest.approx(0.5 / 3, rel=1e-10)
    assert j2 - j0 == pytest.approx(0.5 * (1 / 3 + 4), rel=1e-10)


def test_config_validation_and_mismatch():
    with pytest.raises(InvalidArgument):
        ObjectiveConfig("dirichlet", -1.0)
    with pytest.raises(ValueError):
        ObjectiveConfig("robin", 1.0)
    _, rb = response_for("square", "dirichlet")
    with pytest.raises(InvalidArgument):
        eval_fast(rb, np.zeros(6), ObjectiveConfig("neumann", 1e-8))
    with pytest.raises(InvalidArgument):
        eval_fast(rb, np.zeros(5))


def test_batch_objectives_agree(rng):
    config, rb = response_for("square", "neumann")
    problem, _ = problem_for("square")
    X = rng.uniform(-7, 7, (4, 6))
    np.testing.assert_allclose(FastObjective(rb)(X), NaiveObjective(config, problem)(X), rtol=1e-10)
    assert FastObjective(rb)(X).shape == (4,)
    assert ALPHA[("square", "neumann")] == config.alpha
