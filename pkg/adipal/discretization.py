"""Periodic central finite differences and the ADI splitting A = A_0 + A_1 + ... + A_k.

Fields are numpy arrays of shape ``grid.shape = (m_1, ..., m_k)``; axis j-1 is
direction j. Flattening with ``order="F"`` gives the canonical vector layout
with l_1 varying fastest (see ``flatten_field``).
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from adipal.common import InstabilityError, ParameterError, StructureError
from adipal.model import ProblemSpec


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with m_j points per direction and dx_j = 1/m_j."""

    shape: Tuple[int, ...]

    def __post_init__(self):
        shape = tuple(int(m) for m in self.shape)
        if len(shape) < 2:
            raise StructureError(f"Grid needs at least 2 directions, got {len(shape)}")
        if any(m < 3 for m in shape):
            raise ParameterError(f"Every direction needs at least 3 points, got {shape}")
        object.__setattr__(self, "shape", shape)

    @classmethod
    def uniform(cls, k: int, m: int) -> "GridSpec":
        return cls((m,) * k)

    @property
    def k(self) -> int:
        return len(self.shape)

    @property
    def dx(self) -> Tuple[float, ...]:
        return tuple(1.0 / m for m in self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def coordinates(self):
        """Grid coordinates x_j = l_j * dx_j as broadcastable arrays."""
        axes = [np.arange(m) / m for m in self.shape]
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def angles(self):
        """Fourier angles phi_j = 2*pi*l_j/m_j as broadcastable arrays."""
        axes = [2.0 * np.pi * np.arange(m) / m for m in self.shape]
        return np.meshgrid(*axes, indexing="ij", sparse=True)


def flatten_field(u: np.ndarray) -> np.ndarray:
    """Canonical vector layout, l_1 fastest."""
    return np.ravel(u, order="F")


def unflatten_field(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    values = np.asarray(values)
    if values.size != grid.size:
        raise StructureError(f"Expected {grid.size} values for grid {grid.shape}, got {values.size}")
    return np.reshape(values, grid.shape, order="F")


def check_finite(u: np.ndarray, step_index=None, stage: str = ""):
    """Raise InstabilityError if u holds inf or nan."""
    if not np.all(np.isfinite(u)):
        raise InstabilityError(step_index, stage)


@dataclass(frozen=True)
class MixedPair:
    """One unordered direction pair (i, j), i < j, of the mixed operator A_0.

    ``weight`` is d_ij / (4 dx_i dx_j); the ordered pairs (i, j) and (j, i)
    contribute equally, so A_0 applies it twice.
    """

    i: int
    j: int
    weight: float
    beta: float


@dataclass(frozen=True, eq=False)
class SplitOperator:
    """Matrix-free realization of A_0 (mixed terms) and A_1..A_k (one direction each)."""

    grid: GridSpec
    problem: ProblemSpec
    axial: Tuple[float, ...]
    pairs: Tuple[MixedPair, ...]
    forward: Tuple[np.ndarray, ...]
    backward: Tuple[np.ndarray, ...]

    @property
    def k(self) -> int:
        return self.grid.k

    def _shift(self, u: np.ndarray, direction: int, step: int) -> np.ndarray:
        # u_{l + step*e_direction} with periodic wrap
        table = self.forward[direction] if step > 0 else self.backward[direction]
        return np.take(u, table, axis=direction)

    def forcing(self, j: int, t: float):
        """g_j(t) sampled on the grid, or 0.0 when the term is unforced."""
        if self.problem.forcing is None or self.problem.forcing[j] is None:
            return 0.0
        return self.problem.forcing[j](t, *self.grid.coordinates())

    def evaluate(self, j: int, t: float, u: np.ndarray) -> np.ndarray:
        """F_j(t, u) = A_j u + g_j(t)."""
        return apply_term(self, j, u) + self.forcing(j, t)

    def evaluate_full(self, t: float, u: np.ndarray) -> np.ndarray:
        """F(t, u) = A u + g(t)."""
        return sum(self.evaluate(j, t, u) for j in range(self.k + 1))


def build_split_operator(problem: ProblemSpec, grid: GridSpec) -> SplitOperator:
    """Precompute stencil coefficients and periodic neighbor tables.

    Args:
        problem: Validated problem
        grid: Grid with grid.k == problem.k

    Returns:
        SplitOperator for the second-order central discretization

    Raises:
        StructureError: If the dimensions differ
    """
    if grid.k != problem.k:
        raise StructureError(f"Grid has {grid.k} directions but the problem has k={problem.k}")
    d = problem.diffusion.entries
    beta = problem.beta.entries
    dx = grid.dx
    axial = tuple(float(d[j, j] / dx[j] ** 2) for j in range(grid.k))
    pairs = tuple(
        MixedPair(i, j, float(d[i, j] / (4.0 * dx[i] * dx[j])), float(beta[i, j]))
        for i in range(grid.k)
        for j in range(i + 1, grid.k)
        if d[i, j] != 0.0
    )
    forward = tuple(np.roll(np.arange(m), -1) for m in grid.shape)
    backward = tuple(np.roll(np.arange(m), 1) for m in grid.shape)
    return SplitOperator(grid, problem, axial, pairs, forward, backward)


def _mixed_stencil(op: SplitOperator, pair: MixedPair, u: np.ndarray) -> np.ndarray:
    a, b, beta = pair.i, pair.j, pair.beta
    ua_plus, ua_minus = op._shift(u, a, 1), op._shift(u, a, -1)
    pp = op._shift(ua_plus, b, 1)
    mm = op._shift(ua_minus, b, -1)
    mp = op._shift(ua_minus, b, 1)
    pm = op._shift(ua_plus, b, -1)
    out = (1.0 + beta) * (pp + mm) - (1.0 - beta) * (mp + pm)
    if beta != 0.0:
        neighbors = ua_plus + ua_minus + op._shift(u, b, 1) + op._shift(u, b, -1)
        out = out + beta * (4.0 * u - 2.0 * neighbors)
    return out


def apply_term(op: SplitOperator, j: int, u: np.ndarray) -> np.ndarray:
    """Return A_j u without modifying u.

    Args:
        op: Split operator
        j: 0 for the mixed terms, 1..k for direction j
        u: Field on op.grid (real or complex)

    Raises:
        ParameterError: If j is outside 0..k
        StructureError: If u does not live on op.grid
    """
    if not 0 <= j <= op.k:
        raise ParameterError(f"Split term index must be in 0..{op.k}, got {j}")
    if np.shape(u) != op.grid.shape:
        raise StructureError(f"Field has shape {np.shape(u)}, grid is {op.grid.shape}")
    if j == 0:
        out = np.zeros_like(u)
        for pair in op.pairs:
            out += (2.0 * pair.weight) * _mixed_stencil(op, pair, u)
        return out
    axis = j - 1
    kappa = op.axial[axis]
    if kappa == 0.0:
        return np.zeros_like(u)
    return kappa * (op._shift(u, axis, 1) - 2.0 * u + op._shift(u, axis, -1))


def apply_full(op: SplitOperator, u: np.ndarray) -> np.ndarray:
    """Return A u = (A_0 + A_1 + ... + A_k) u."""
    return sum(apply_term(op, j, u) for j in range(op.k + 1))


def sample_initial(problem: ProblemSpec, grid: GridSpec) -> np.ndarray:
    """u0 at the grid points (l_1 dx_1, ..., l_k dx_k), l_j = 0..m_j-1."""
    if grid.k != problem.k:
        raise StructureError(f"Grid has {grid.k} directions but the problem has k={problem.k}")
    values = np.asarray(problem.u0(*grid.coordinates()), dtype=float)
    return np.array(np.broadcast_to(values, grid.shape))
