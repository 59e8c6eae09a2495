"""Tests for adipal.adi module."""

import numpy as np
import pytest

from adipal.adi import (
    ALL_SCHEMES,
    SchemeConfig,
    SchemeKind,
    integrate,
    solve_line_system,
    step,
)
from adipal.common import InstabilityError, ParameterError
from adipal.discretization import GridSpec, build_split_operator
from adipal.model import ProblemSpec
from adipal.stability.symbol import amplification, grid_eigenvalues, mode_amplification_by_stepping


class TestSchemeKind:
    @pytest.mark.parametrize("name", ["hv", "HV", " Hv "])
    def test_parse_is_case_insensitive(self, name):
        assert SchemeKind.parse(name) is SchemeKind.HV

    def test_parse_unknown(self):
        with pytest.raises(ParameterError, match="Available: Do, CS, MCS, HV"):
            SchemeKind.parse("RK4")

    def test_line_solves(self):
        assert SchemeKind.DO.line_solves_per_direction == 1
        assert SchemeKind.HV.line_solves_per_direction == 2


class TestSchemeConfig:
    def test_coerces_kind(self):
        scheme = SchemeConfig("mcs", 1)
        assert scheme.kind is SchemeKind.MCS
        assert scheme.theta == 1.0
        assert str(scheme) == "MCS(theta=1)"

    @pytest.mark.parametrize("theta", [0.0, -0.5])
    def test_theta_must_be_positive(self, theta):
        with pytest.raises(ParameterError, match="theta"):
            SchemeConfig("Do", theta)

    def test_theta_above_one_allowed(self):
        assert SchemeConfig("Do", 1.5).theta == 1.5


class TestSolveLineSystem:
    def test_zero_weight_is_identity(self, problem_2d, rng):
        op = build_split_operator(problem_2d, GridSpec.uniform(2, 5))
        rhs = rng.standard_normal(op.grid.shape)
        x = solve_line_system(op, 1, 0.0, rhs)
        np.testing.assert_array_equal(x, rhs)
        assert x is not rhs

    def test_inverts_direction_operator(self, problem_2d, rng):
        from adipal.discretization import apply_term

        op = build_split_operator(problem_2d, GridSpec((5, 7)))
        rhs = rng.standard_normal(op.grid.shape)
        for j in (1, 2):
            x = solve_line_system(op, j, 0.3, rhs)
            np.testing.assert_allclose(x - 0.3 * apply_term(op, j, x), rhs, atol=1e-12)

    def test_negative_weight(self, problem_2d):
        op = build_split_operator(problem_2d, GridSpec.uniform(2, 4))
        with pytest.raises(ParameterError):
            solve_line_system(op, 1, -0.1, np.zeros((4, 4)))

    def test_bad_direction(self, problem_2d):
        op = build_split_operator(problem_2d, GridSpec.uniform(2, 4))
        with pytest.raises(ParameterError):
            solve_line_system(op, 0, 0.1, np.zeros((4, 4)))


@pytest.mark.parametrize("kind", ALL_SCHEMES)
def test_constant_field_is_steady(kind, problem_3d):
    op = build_split_operator(problem_3d, GridSpec.uniform(3, 4))
    u = np.full(op.grid.shape, 1.5)
    out = step(SchemeConfig(kind, 0.5), op, u, 0.0, 0.7)
    np.testing.assert_allclose(out, 1.5, atol=1e-13)


@pytest.mark.parametrize("kind", ALL_SCHEMES)
def test_constant_forcing_is_integrated_exactly(kind, problem_2d):
    """u' = A u + c from a constant start gives u(t) = u0 + c t for every scheme."""
    problem = ProblemSpec(
        diffusion=problem_2d.diffusion,
        forcing=[lambda t, x, y: 0.5 + 0 * (x + y), None, None],
    )
    op = build_split_operator(problem, GridSpec.uniform(2, 6))
    u = integrate(SchemeConfig(kind, 0.6), op, np.ones(op.grid.shape), 2.0, 8)
    np.testing.assert_allclose(u, 2.0, atol=1e-12)


def test_step_does_not_modify_input(problem_2d, rng):
    op = build_split_operator(problem_2d, GridSpec.uniform(2, 6))
    u = rng.standard_normal(op.grid.shape)
    before = u.copy()
    step(SchemeConfig("HV", 0.3), op, u, 0.0, 0.1)
    np.testing.assert_array_equal(u, before)


def test_cs_and_mcs_coincide_at_one_half(problem_2d, rng):
    op = build_split_operator(problem_2d, GridSpec.uniform(2, 8))
    u = rng.standard_normal(op.grid.shape)
    cs = step(SchemeConfig("CS", 0.5), op, u, 0.0, 0.2)
    mcs = step(SchemeConfig("MCS", 0.5), op, u, 0.0, 0.2)
    np.testing.assert_allclose(cs, mcs, atol=1e-14)


@pytest.mark.parametrize("kind", ALL_SCHEMES)
def test_step_is_linear(kind, problem_3d, rng):
    op = build_split_operator(problem_3d, GridSpec.uniform(3, 6))
    scheme = SchemeConfig(kind, 0.4)
    u = rng.standard_normal(op.grid.shape)
    v = rng.standard_normal(op.grid.shape)
    c = -2.5
    combined = step(scheme, op, u + c * v, 0.0, 0.1)
    separate = step(scheme, op, u, 0.0, 0.1) + c * step(scheme, op, v, 0.0, 0.1)
    np.testing.assert_allclose(combined, separate, atol=1e-13 * np.max(np.abs(separate)))
    scaled = c * step(scheme, op, u, 0.0, 0.1)
    np.testing.assert_allclose(
        step(scheme, op, c * u, 0.0, 0.1), scaled, atol=1e-13 * np.max(np.abs(scaled))
    )


@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_cs_equals_douglas_without_mixed_terms(theta, rng):
    """With diagonal D the CS corrector repeats the Douglas sweeps exactly."""
    problem = ProblemSpec(diffusion=np.diag([0.3, 0.7, 0.2]))
    op = build_split_operator(problem, GridSpec((5, 6, 7)))
    u = rng.standard_normal(op.grid.shape)
    cs = step(SchemeConfig("CS", theta), op, u, 0.0, 0.05)
    do = step(SchemeConfig("Do", theta), op, u, 0.0, 0.05)
    np.testing.assert_allclose(cs, do, atol=1e-13 * np.max(np.abs(do)))


@pytest.mark.parametrize("kind", ALL_SCHEMES)
def test_zero_diffusion_is_identity(kind, rng):
    op = build_split_operator(ProblemSpec(diffusion=np.zeros((2, 2))), GridSpec.uniform(2, 6))
    u = rng.standard_normal(op.grid.shape)
    np.testing.assert_array_equal(step(SchemeConfig(kind, 0.7), op, u, 0.0, 0.3), u)
    np.testing.assert_array_equal(integrate(SchemeConfig(kind, 0.7), op, u, 1.0, 4), u)


def test_step_rejects_nonpositive_dt(problem_2d):
    op = build_split_operator(problem_2d, GridSpec.uniform(2, 4))
    with pytest.raises(ParameterError):
        step(SchemeConfig("Do", 0.5), op, np.zeros((4, 4)), 0.0, 0.0)


@pytest.mark.parametrize("kind", ALL_SCHEMES)
@pytest.mark.parametrize("theta", [0.25, 0.5, 0.8])
def test_mode_amplification_2d(kind, theta, problem_2d):
    """One step multiplies every grid Fourier mode by M(z_0, ..., z_k)."""
    op = build_split_operator(problem_2d, GridSpec.uniform(2, 8))
    dt = 0.37
    scheme = SchemeConfig(kind, theta)
    measured = mode_amplification_by_stepping(scheme, op, dt)
    expected = np.broadcast_to(amplification(kind, theta, grid_eigenvalues(op, dt)), op.grid.shape)
    np.testing.assert_allclose(measured, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("kind", ALL_SCHEMES)
@pytest.mark.parametrize("theta", [0.25, 0.5, 0.8])
def test_mode_amplification_3d(kind, theta, problem_3d):
    op = build_split_operator(problem_3d, GridSpec.uniform(3, 6))
    dt = 0.9
    measured = mode_amplification_by_stepping(SchemeConfig(kind, theta), op, dt)
    expected = np.broadcast_to(amplification(kind, theta, grid_eigenvalues(op, dt)), op.grid.shape)
    np.testing.assert_allclose(measured, expected, rtol=1e-12, atol=1e-12)


def test_mode_amplification_with_stencil_weights():
    beta = np.array([[0.0, 0.4], [0.4, 0.0]])
    problem = ProblemSpec(diffusion=[[1.0, 0.8], [0.8, 1.0]], beta=beta)
    op = build_split_operator(problem, GridSpec((6, 8)))
    for kind in ALL_SCHEMES:
        measured = mode_amplification_by_stepping(SchemeConfig(kind, 0.4), op, 0.05)
        expected = np.broadcast_to(
            amplification(kind, 0.4, grid_eigenvalues(op, 0.05)), op.grid.shape
        )
        np.testing.assert_allclose(measured, expected, rtol=1e-12, atol=1e-12)


class TestIntegrate:
    def _unstable_setup(self, rng):
        # Do with theta = 0.01 amplifies the (pi, 0) mode by about -90 per step at r = 256
        op = build_split_operator(ProblemSpec(diffusion=np.eye(2)), GridSpec.uniform(2, 16))
        u0 = rng.standard_normal(op.grid.shape)
        return SchemeConfig("Do", 0.01), op, u0

    def test_strict_mode_raises(self, rng):
        scheme, op, u0 = self._unstable_setup(rng)
        with pytest.raises(InstabilityError) as exc_info:
            integrate(scheme, op, u0, 400.0, 400, strict=True)
        assert 1 < exc_info.value.step_index <= 400

    def test_tolerant_mode_returns_nonfinite(self, rng):
        scheme, op, u0 = self._unstable_setup(rng)
        u = integrate(scheme, op, u0, 400.0, 400, strict=False)
        assert not np.all(np.isfinite(u))

    def test_strict_default_from_environment(self, monkeypatch, rng):
        monkeypatch.setattr("adipal.adi.STRICT_MODE", False)
        scheme, op, u0 = self._unstable_setup(rng)
        u = integrate(scheme, op, u0, 400.0, 400)
        assert not np.all(np.isfinite(u))

    def test_bad_arguments(self, problem_2d):
        op = build_split_operator(problem_2d, GridSpec.uniform(2, 4))
        u0 = np.zeros((4, 4))
        with pytest.raises(ParameterError):
            integrate(SchemeConfig("Do", 0.5), op, u0, 0.0, 10)
        with pytest.raises(ParameterError):
            integrate(SchemeConfig("Do", 0.5), op, u0, 1.0, 0)
        with pytest.raises(ParameterError):
            integrate(SchemeConfig("Do", 0.5), op, u0, 1.0, 2.5)

    def test_input_not_modified(self, problem_2d, rng):
        op = build_split_operator(problem_2d, GridSpec.uniform(2, 6))
        u0 = rng.standard_normal(op.grid.shape)
        before = u0.copy()
        integrate(SchemeConfig("MCS", 0.4), op, u0, 1.0, 4)
        np.testing.assert_array_equal(u0, before)

    def test_decays_towards_mean(self, problem_2d, rng):
        op = build_split_operator(problem_2d, GridSpec.uniform(2, 8))
        u0 = rng.standard_normal(op.grid.shape)
        u = integrate(SchemeConfig("HV", 0.5), op, u0, 100.0, 1000)
        np.testing.assert_allclose(u, u0.mean(), atol=1e-6)
