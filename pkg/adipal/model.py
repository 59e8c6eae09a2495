"""Continuous problem definition: diffusion matrix, mixed stencil weights, initial data.

The PDE is u_t = sum_{i,j} d_ij u_{x_i x_j} on the periodic unit hypercube (0,1)^k.
Mixed terms are summed over ordered pairs, so d_12 and d_21 both contribute.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import eigvalsh

from adipal.common import PSD_TOL, InconsistentMatrixError, ParameterError, StructureError

# u0(x_1, ..., x_k) evaluated on coordinate arrays (broadcasting)
InitialFunction = Callable[..., np.ndarray]

# g_j(t, x_1, ..., x_k), evaluated on the grid once per stage
ForcingFunction = Callable[..., np.ndarray]


def _as_square(M, name: str = "matrix") -> np.ndarray:
    arr = np.array(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructureError(f"{name} must be square, got shape {arr.shape}")
    return arr


def _require_symmetric(arr: np.ndarray, name: str = "matrix"):
    # exact equality, no silent symmetrization
    if not np.array_equal(arr, arr.T):
        i, j = np.argwhere(arr != arr.T)[0]
        raise StructureError(
            f"{name} must be symmetric: entry ({i + 1},{j + 1}) = {arr[i, j]!r} "
            f"but ({j + 1},{i + 1}) = {arr[j, i]!r}"
        )


def validate_psd(M, tol: float = PSD_TOL) -> bool:
    """Check that a symmetric matrix is positive semidefinite within a relative tolerance.

    Args:
        M: Square symmetric real matrix
        tol: Relative tolerance; the smallest eigenvalue may be as low as
            -tol * max|M_ij| (or -tol when M is zero)

    Returns:
        True if M is positive semidefinite within the tolerance

    Raises:
        StructureError: If M is not square or not exactly symmetric
    """
    arr = _as_square(M)
    _require_symmetric(arr)
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    if scale == 0.0:
        scale = 1.0
    smallest = float(eigvalsh(arr)[0])
    return smallest >= -tol * scale


@dataclass(frozen=True, eq=False)
class DiffusionMatrix:
    """Symmetric positive semidefinite k x k diffusion matrix D = (d_ij)."""

    entries: np.ndarray
    tol: float = PSD_TOL

    def __post_init__(self):
        arr = _as_square(self.entries, "Diffusion matrix")
        if arr.shape[0] < 2:
            raise StructureError(f"Dimension k must be at least 2, got {arr.shape[0]}")
        _require_symmetric(arr, "Diffusion matrix")
        if not validate_psd(arr, self.tol):
            raise ParameterError(
                f"Diffusion matrix is not positive semidefinite "
                f"(smallest eigenvalue {eigvalsh(arr)[0]:.3e})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, index):
        return self.entries[index]


def gamma_min(D: DiffusionMatrix) -> float:
    """Smallest gamma with |d_ij| <= gamma * sqrt(d_ii d_jj) for all i != j.

    Pairs where d_ii * d_jj = 0 and d_ij = 0 contribute nothing.

    Raises:
        InconsistentMatrixError: If d_ii * d_jj = 0 while d_ij != 0
    """
    d = D.entries if isinstance(D, DiffusionMatrix) else _as_square(D)
    k = d.shape[0]
    gamma = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            scale = d[i, i] * d[j, j]
            if scale <= 0.0:
                if d[i, j] != 0.0:
                    raise InconsistentMatrixError(
                        f"d_{i + 1}{j + 1} = {d[i, j]!r} is nonzero although "
                        f"d_{i + 1}{i + 1} * d_{j + 1}{j + 1} = 0"
                    )
                continue
            gamma = max(gamma, abs(d[i, j]) / np.sqrt(scale))
    return float(gamma)


@dataclass(frozen=True, eq=False)
class MixedStencilParams:
    """Weights beta_ij of the general centered 9-point mixed-derivative stencil.

    Only off-diagonal entries are meaningful. The derived matrix B = (-beta_ij)
    with unit diagonal must be positive semidefinite, which implies |beta_ij| <= 1.
    """

    entries: np.ndarray
    tol: float = PSD_TOL

    def __post_init__(self):
        arr = _as_square(self.entries, "Stencil weights")
        _require_symmetric(arr, "Stencil weights")
        off = arr[~np.eye(arr.shape[0], dtype=bool)]
        if off.size and np.max(np.abs(off)) > 1.0:
            raise ParameterError(f"|beta_ij| must not exceed 1, got {np.max(np.abs(off))!r}")
        arr = arr.copy()
        np.fill_diagonal(arr, -1.0)
        if not validate_psd(-arr, self.tol):
            raise ParameterError("Matrix B = (-beta_ij) with unit diagonal is not positive semidefinite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def zeros(cls, k: int) -> "MixedStencilParams":
        """Standard 4-point mixed stencil in every plane."""
        return cls(np.zeros((k, k)))

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @property
    def b_matrix(self) -> np.ndarray:
        return -self.entries

    @property
    def mean_off_diagonal(self) -> float:
        k = self.k
        return float((self.entries.sum() + k) / (k * (k - 1)))


def _zero_initial(*coords):
    return np.zeros(np.broadcast(*coords).shape)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Periodic diffusion problem on (0,1)^k.

    Attributes:
        diffusion: Diffusion matrix D
        beta: Mixed stencil weights
        u0: Initial function of k coordinates
        forcing: Optional g_0..g_k, each a function of (t, x_1, ..., x_k)
        name: Label used in logs and CSV output
        gamma: Nominal mixed-term size; defaults to gamma_min(diffusion)
    """

    diffusion: DiffusionMatrix
    beta: MixedStencilParams = None
    u0: InitialFunction = _zero_initial
    forcing: Optional[Sequence[Optional[ForcingFunction]]] = None
    name: str = "custom"
    gamma: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.diffusion, DiffusionMatrix):
            object.__setattr__(self, "diffusion", DiffusionMatrix(self.diffusion))
        k = self.diffusion.k
        if self.beta is None:
            object.__setattr__(self, "beta", MixedStencilParams.zeros(k))
        elif not isinstance(self.beta, MixedStencilParams):
            object.__setattr__(self, "beta", MixedStencilParams(self.beta))
        if self.beta.k != k:
            raise StructureError(f"beta is {self.beta.k}x{self.beta.k} but D is {k}x{k}")
        if self.forcing is not None:
            if len(self.forcing) != k + 1:
                raise StructureError(
                    f"forcing needs one entry per split term g_0..g_{k}, got {len(self.forcing)}"
                )
            object.__setattr__(self, "forcing", tuple(self.forcing))
        smallest = gamma_min(self.diffusion)
        if self.gamma is None:
            object.__setattr__(self, "gamma", smallest)
        elif self.gamma < smallest - PSD_TOL:
            raise ParameterError(
                f"gamma = {self.gamma!r} is below gamma_min(D) = {smallest:.12g}; "
                f"the theta bounds for this gamma would not hold. Use gamma >= {smallest:.12g}"
            )
        else:
            object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def k(self) -> int:
        return self.diffusion.k

    @property
    def has_forcing(self) -> bool:
        return self.forcing is not None and any(g is not None for g in self.forcing)
