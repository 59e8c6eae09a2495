"""Tests for adipal.reference module."""

import numpy as np
import pytest

from adipal.adi import SchemeConfig, integrate
from adipal.common import ParameterError, StructureError
from adipal.discretization import GridSpec, apply_full, build_split_operator, sample_initial
from adipal.harness import global_error
from adipal.model import ProblemSpec
from adipal.reference import exact_semidiscrete, exact_semidiscrete_many, operator_symbol_table
from adipal.stability.bounds import theorem1_lower_bound


class TestOperatorSymbolTable:
    def test_zero_mode_and_sign(self, problem_2d):
        table = operator_symbol_table(problem_2d, GridSpec((6, 8)))
        assert table.values.shape == (6, 8)
        assert table.values[0, 0] == 0.0
        assert table.max <= 1e-12

    def test_read_only(self, problem_2d):
        table = operator_symbol_table(problem_2d, GridSpec((6, 8)))
        with pytest.raises(ValueError):
            table.values[1, 1] = 0.0

    def test_diagonal_matrix(self):
        problem = ProblemSpec(diffusion=np.diag([0.3, 0.7]))
        table = operator_symbol_table(problem, GridSpec((6, 8)))
        l1 = np.arange(6)[:, None]
        l2 = np.arange(8)[None, :]
        expected = -2 * 0.3 * (1 - np.cos(2 * np.pi * l1 / 6)) * 36 - 2 * 0.7 * (
            1 - np.cos(2 * np.pi * l2 / 8)
        ) * 64
        np.testing.assert_allclose(table.values, expected, atol=1e-12)

    @pytest.mark.parametrize("beta_bar", [0.0, 0.4])
    def test_diagonalizes_the_operator(self, problem_2d, beta_bar, rng):
        """DFT(A U) = lambda * DFT(U) for an arbitrary field."""
        problem = ProblemSpec(
            diffusion=problem_2d.diffusion, beta=[[0.0, beta_bar], [beta_bar, 0.0]]
        )
        grid = GridSpec((6, 8))
        op = build_split_operator(problem, grid)
        u = rng.standard_normal(grid.shape)
        table = operator_symbol_table(problem, grid)
        np.testing.assert_allclose(
            np.fft.fftn(apply_full(op, u)), table.values * np.fft.fftn(u), atol=1e-9
        )

    def test_dimension_mismatch(self, problem_2d):
        with pytest.raises(StructureError):
            operator_symbol_table(problem_2d, GridSpec.uniform(3, 4))


class TestExactSemidiscrete:
    def test_time_zero_returns_copy(self, problem_2d, rng):
        grid = GridSpec.uniform(2, 8)
        u0 = rng.standard_normal(grid.shape)
        u = exact_semidiscrete(problem_2d, grid, u0, 0.0)
        np.testing.assert_array_equal(u, u0)
        assert u is not u0

    def test_constant_is_steady(self, problem_3d):
        grid = GridSpec.uniform(3, 6)
        u = exact_semidiscrete(problem_3d, grid, np.full(grid.shape, 2.0), 3.0)
        np.testing.assert_allclose(u, 2.0, atol=1e-13)
        assert u.dtype == float

    def test_cosine_mode_decays(self, problem_2d):
        m = 16
        grid = GridSpec.uniform(2, m)
        x1, _ = grid.coordinates()
        u0 = np.broadcast_to(np.cos(2 * np.pi * x1), grid.shape).copy()
        lam = -2.0 * problem_2d.diffusion[0, 0] * (1 - np.cos(2 * np.pi / m)) * m**2
        u = exact_semidiscrete(problem_2d, grid, u0, 1.5)
        np.testing.assert_allclose(u, np.exp(1.5 * lam) * u0, atol=1e-13)

    def test_semigroup(self, problem_2d):
        grid = GridSpec.uniform(2, 12)
        u0 = sample_initial(problem_2d, grid)
        direct = exact_semidiscrete(problem_2d, grid, u0, 0.7)
        halfway = exact_semidiscrete(problem_2d, grid, u0, 0.3)
        np.testing.assert_allclose(
            exact_semidiscrete(problem_2d, grid, halfway, 0.4), direct, atol=1e-13
        )

    def test_many_matches_single(self, problem_2d):
        grid = GridSpec.uniform(2, 10)
        u0 = sample_initial(problem_2d, grid)
        many = exact_semidiscrete_many(problem_2d, grid, u0, [0.0, 0.5, 2.0])
        assert list(many) == [0.0, 0.5, 2.0]
        for t, u in many.items():
            np.testing.assert_allclose(u, exact_semidiscrete(problem_2d, grid, u0, t), atol=1e-15)

    def test_negative_time(self, problem_2d):
        grid = GridSpec.uniform(2, 4)
        with pytest.raises(ParameterError):
            exact_semidiscrete(problem_2d, grid, np.zeros(grid.shape), -1.0)

    def test_shape_mismatch(self, problem_2d):
        with pytest.raises(StructureError):
            exact_semidiscrete(problem_2d, GridSpec.uniform(2, 4), np.zeros((4, 5)), 1.0)


def _temporal_errors(problem, kind, theta, m, counts, t_final=1.0):
    grid = GridSpec.uniform(problem.k, m)
    op = build_split_operator(problem, grid)
    u0 = sample_initial(problem, grid)
    u_ref = exact_semidiscrete(problem, grid, u0, t_final)
    return [
        global_error(u_ref, integrate(SchemeConfig(kind, theta), op, u0, t_final, n), problem.k, m)
        for n in counts
    ]


def test_hundsdorfer_verwer_is_second_order(problem_2d):
    theta = theorem1_lower_bound("HV", 2, 0.9).theta_min
    coarse, fine = _temporal_errors(problem_2d, "HV", theta, 16, [20, 40])
    assert 3.0 <= coarse / fine <= 5.0


def test_douglas_is_first_order(problem_2d):
    coarse, fine = _temporal_errors(problem_2d, "Do", 0.5, 16, [20, 40])
    assert 1.6 <= coarse / fine <= 2.4


@pytest.mark.slow
def test_hundsdorfer_verwer_accuracy_on_fine_steps(problem_2d):
    theta = theorem1_lower_bound("HV", 2, 0.9).theta_min
    (error,) = _temporal_errors(problem_2d, "HV", theta, 40, [5000], t_final=5.0)
    assert error < 1e-5
