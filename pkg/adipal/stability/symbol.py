"""Von Neumann symbol of the split operators and the ADI amplification factors.

For a Fourier mode with angles phi_j the split matrices act as scalars; scaled
by dt these are the eigenvalues z_0 (mixed part) and z_1..z_k (directions).
One step of any scheme multiplies the mode by M(z_0, ..., z_k), and the scheme
is stable for that mode when |M| <= 1.

Every function here accepts numpy arrays: z_0 of shape S and z_j stacked into
shape (k, *S), so whole sample sets are evaluated at once.
"""

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from adipal.adi import SchemeConfig, SchemeKind, step
from adipal.common import STABILITY_TOL, DomainError, StructureError, audit_logger
from adipal.discretization import GridSpec, SplitOperator
from adipal.model import DiffusionMatrix, MixedStencilParams
from adipal.problems import extremal_problem


@dataclass(frozen=True, eq=False)
class ScaledEigenvalues:
    """Scaled eigenvalues (z_0, z_1, ..., z_k), possibly over many samples.

    Attributes:
        z0: Mixed-term eigenvalue, scalar or array of shape S
        zs: Direction eigenvalues, shape (k,) or (k, *S)
    """

    z0: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))
        zs = np.asarray(self.zs, dtype=float)
        if zs.ndim == 0:
            raise StructureError("zs needs a leading axis over the k directions")
        object.__setattr__(self, "zs", zs)

    @classmethod
    def of(cls, z0: float, *zs: float) -> "ScaledEigenvalues":
        return cls(z0, np.array(zs, dtype=float))

    @property
    def k(self) -> int:
        return self.zs.shape[0]

    @property
    def z(self) -> np.ndarray:
        """z = z_1 + ... + z_k."""
        return self.zs.sum(axis=0)

    @property
    def total(self) -> np.ndarray:
        """z_0 + z."""
        return self.z0 + self.z

    def p(self, theta: float) -> np.ndarray:
        """p = (1 - theta z_1) ... (1 - theta z_k)."""
        return np.prod(1.0 - theta * self.zs, axis=0)


def mesh_ratios(dt: float, dx: Sequence[float]) -> np.ndarray:
    """Diagonal mesh ratios r_jj = dt / dx_j^2."""
    return dt / np.asarray(dx, dtype=float) ** 2


def scaled_eigenvalues(D, beta, r, phi) -> ScaledEigenvalues:
    """Evaluate z_0..z_k for given diagonal mesh ratios and angles.

    Off-diagonal ratios are r_ij = sqrt(r_ii r_jj), i.e. r_ij = dt/(dx_i dx_j).

    Args:
        D: DiffusionMatrix (or array)
        beta: MixedStencilParams (or array)
        r: Diagonal mesh ratios r_11..r_kk; each may be an array broadcastable
            against the angles
        phi: Angles phi_1..phi_k, each a scalar or array (broadcast together)

    Returns:
        ScaledEigenvalues with z0 of the broadcast shape
    """
    d = D.entries if isinstance(D, DiffusionMatrix) else np.asarray(D, dtype=float)
    b = beta.entries if isinstance(beta, MixedStencilParams) else np.asarray(beta, dtype=float)
    k = d.shape[0]
    if len(phi) != k or len(r) != k:
        raise StructureError(f"Need {k} angles and {k} mesh ratios, got {len(phi)} and {len(r)}")
    arrays = np.broadcast_arrays(
        *[np.asarray(a, dtype=float) for a in phi], *[np.asarray(x, dtype=float) for x in r]
    )
    angles, ratios = arrays[:k], arrays[k:]
    sin = [np.sin(a) for a in angles]
    one_minus_cos = [1.0 - np.cos(a) for a in angles]

    z0 = np.zeros(angles[0].shape)
    for i in range(k):
        for j in range(i + 1, k):
            if d[i, j] == 0.0:
                continue
            r_ij = np.sqrt(ratios[i] * ratios[j])
            # ordered pairs (i, j) and (j, i) give the same term
            z0 = z0 + 2.0 * r_ij * d[i, j] * (
                -sin[i] * sin[j] + b[i, j] * one_minus_cos[i] * one_minus_cos[j]
            )
    zs = np.stack([-2.0 * ratios[j] * d[j, j] * one_minus_cos[j] for j in range(k)])
    return ScaledEigenvalues(z0, zs)


def amplification(kind, theta: float, zs: ScaledEigenvalues) -> np.ndarray:
    """Amplification factor M = R (Do), S~ (CS), S (MCS) or T (HV).

    Raises:
        DomainError: If p = 0 for some sample (only possible with positive z_j)
    """
    kind = SchemeKind.parse(kind)
    p = zs.p(theta)
    if np.any(p == 0.0):
        raise DomainError("p = prod(1 - theta z_j) vanishes; the z_j must be <= 0")
    s = zs.total / p
    if kind is SchemeKind.DO:
        m = 1.0 + s
    elif kind is SchemeKind.CS:
        m = 1.0 + s + 0.5 * zs.z0 * zs.total / p**2
    elif kind is SchemeKind.MCS:
        m = 1.0 + s + theta * zs.z0 * zs.total / p**2 + (0.5 - theta) * s**2
    else:
        m = 1.0 + 2.0 * s - zs.total / p**2 + 0.5 * s**2
    return m if np.ndim(m) else float(m)


@dataclass(frozen=True)
class Lemma1Check:
    """Outcome of the eigenvalue property check; truthy when all properties hold."""

    ok: bool
    failures: Tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


def lemma1_check(zs: ScaledEigenvalues, gamma: float) -> Lemma1Check:
    """Check z_j <= 0, z_0 + z <= 0 and |z_0| <= gamma * sum_{i != j} sqrt(z_i z_j).

    The tolerance is 1e-12 * (1 + max|z|), taken per sample.
    """
    zs_arr = zs.zs
    scale = np.maximum(np.max(np.abs(zs_arr), axis=0), np.abs(zs.z0))
    tol = 1e-12 * (1.0 + scale)
    failures = []
    if np.any(zs_arr > tol):
        failures.append("z_j <= 0 violated for some direction")
    if np.any(zs.total > tol):
        failures.append("z_0 + z <= 0 violated")
    root = np.sqrt(np.clip(-zs_arr, 0.0, None))
    cross = root.sum(axis=0) ** 2 - (root**2).sum(axis=0)
    if np.any(np.abs(zs.z0) > gamma * cross + tol):
        failures.append(f"|z_0| <= gamma * sum sqrt(z_i z_j) violated for gamma={gamma:g}")
    return Lemma1Check(not failures, tuple(failures))


def hv_conditions(theta: float, zs: ScaledEigenvalues) -> Tuple[bool, bool]:
    """The two inequalities equivalent to |T| <= 1 for eigenvalues with the lemma properties.

    Returns:
        (2p^2 + (2p-1)(z_0+z) + (z_0+z)^2/2 >= 0, 2p - 1 + (z_0+z)/2 >= 0)
    """
    p = zs.p(theta)
    w = zs.total
    first = 2.0 * p**2 + (2.0 * p - 1.0) * w + 0.5 * w**2
    second = 2.0 * p - 1.0 + 0.5 * w
    # relative slack for roundoff in p
    slack_first = 1e-12 * (1.0 + p**2 + w**2)
    slack_second = 1e-12 * (1.0 + np.abs(p) + np.abs(w))
    return bool(np.all(first >= -slack_first)), bool(np.all(second >= -slack_second))


DEFAULT_RATIOS = tuple(np.logspace(-2, 6, 25))


def default_angle_count(k: int) -> int:
    return 64 if k <= 2 else 32


def angle_grid(n_phi: int) -> np.ndarray:
    """Uniform angles 2*pi*l/n on [0, 2*pi), always including pi."""
    angles = 2.0 * np.pi * np.arange(n_phi) / n_phi
    if n_phi % 2:
        angles = np.sort(np.append(angles, np.pi))
    return angles


@dataclass(frozen=True)
class SweepSampling:
    """Sample set of a stability sweep.

    Attributes:
        n_phi: Angles per direction
        ratios: Values of r = dt/dx^2
        anisotropies: Per-direction multipliers of r; the default samples r_jj = r
        diagonal_only: Restrict to equal angles phi_1 = ... = phi_k
    """

    n_phi: int = 64
    ratios: Tuple[float, ...] = DEFAULT_RATIOS
    anisotropies: Optional[Tuple[Tuple[float, ...], ...]] = None
    diagonal_only: bool = False

    def __post_init__(self):
        if self.n_phi < 1 or not len(self.ratios):
            raise StructureError("Sweep sampling must contain at least one angle and one ratio")

    def anisotropy_set(self, k: int) -> Tuple[Tuple[float, ...], ...]:
        if self.anisotropies is None:
            return ((1.0,) * k,)
        for a in self.anisotropies:
            if len(a) != k:
                raise StructureError(f"Anisotropy {a} does not have {k} entries")
        return tuple(tuple(float(x) for x in a) for a in self.anisotropies)

    @property
    def per_direction(self) -> bool:
        """Rows need r_1..r_k once ratios differ between directions."""
        return self.anisotropies is not None


@dataclass(frozen=True)
class SweepResult:
    """Largest |M| found by a sweep and the sample attaining it."""

    kind: SchemeKind
    theta: float
    max_abs: float
    witness_ratios: Tuple[float, ...]
    witness_angles: Tuple[float, ...]
    samples: int
    tol: float = STABILITY_TOL

    @property
    def stable(self) -> bool:
        """Stable on the samples: max|M| <= 1 + tol."""
        return self.max_abs <= 1.0 + self.tol


@dataclass(frozen=True, eq=False)
class _SweepBlock:
    base_ratio: float
    ratios: Tuple[float, ...]
    angles: Tuple[np.ndarray, ...]
    abs_m: np.ndarray = field(repr=False)


def _sweep_blocks(kind, theta, D, beta, sampling: SweepSampling) -> Iterator[_SweepBlock]:
    d = D.entries if isinstance(D, DiffusionMatrix) else np.asarray(D, dtype=float)
    k = d.shape[0]
    angles_1d = angle_grid(sampling.n_phi)
    if sampling.diagonal_only:
        angles = tuple(angles_1d for _ in range(k))
    else:
        angles = tuple(np.meshgrid(*([angles_1d] * k), indexing="ij"))
    for aniso in sampling.anisotropy_set(k):
        for r in sampling.ratios:
            ratios = tuple(float(r) * a for a in aniso)
            zs = scaled_eigenvalues(d, beta, ratios, angles)
            yield _SweepBlock(float(r), ratios, angles, np.abs(amplification(kind, theta, zs)))


def stability_sweep(kind, theta: float, D, beta, sampling: Optional[SweepSampling] = None) -> SweepResult:
    """Brute-force |M| <= 1 check over sampled angles and mesh ratios.

    Samples are visited in a fixed order (anisotropy, ratio, angle multi-index),
    and ties are broken by the first sample, so the witness is deterministic.

    Args:
        kind: Scheme kind
        theta: Scheme parameter
        D: Diffusion matrix
        beta: Mixed stencil weights
        sampling: Angles and ratios to visit (defaults follow the dimension)

    Returns:
        SweepResult with the supremum of |M| and its witness
    """
    kind = SchemeKind.parse(kind)
    d = D.entries if isinstance(D, DiffusionMatrix) else np.asarray(D, dtype=float)
    if sampling is None:
        sampling = SweepSampling(n_phi=default_angle_count(d.shape[0]))
    best, witness_r, witness_phi, count = -np.inf, (), (), 0
    for block in _sweep_blocks(kind, theta, d, beta, sampling):
        count += block.abs_m.size
        idx = int(np.argmax(block.abs_m))
        value = float(block.abs_m.flat[idx])
        if value > best:
            best = value
            witness_r = block.ratios
            witness_phi = tuple(float(a.flat[idx]) for a in block.angles)
    result = SweepResult(kind, float(theta), best, witness_r, witness_phi, count)
    audit_logger.info(
        f"SWEEP: {kind.value} theta={theta:.6g} k={d.shape[0]} samples={count} "
        f"max|M|={best:.17g} stable={result.stable}"
    )
    return result


def sweep_rows(kind, theta: float, D, beta, sampling: SweepSampling) -> Iterator[List]:
    """Every sample as a CSV row [scheme, theta, r, phi_1..phi_k, absM].

    r is the sampled ratio before anisotropy. When the sampling has anisotropies,
    the rows also carry r_1..r_k right after r.
    """
    kind = SchemeKind.parse(kind)
    for block in _sweep_blocks(kind, theta, D, beta, sampling):
        ratios = list(block.ratios) if sampling.per_direction else []
        flat_angles = [a.ravel() for a in np.broadcast_arrays(*block.angles)]
        for idx, value in enumerate(block.abs_m.ravel()):
            yield [kind.value, theta, block.base_ratio, *ratios, *(a[idx] for a in flat_angles), value]


def grid_eigenvalues(op: SplitOperator, dt: float) -> ScaledEigenvalues:
    """Scaled eigenvalues at the grid-representable angles phi_j = 2*pi*l_j/m_j."""
    problem = op.problem
    return scaled_eigenvalues(
        problem.diffusion, problem.beta, mesh_ratios(dt, op.grid.dx), op.grid.angles()
    )


def fourier_mode(grid: GridSpec, wavenumbers: Sequence[int]) -> np.ndarray:
    """Complex mode exp(i * sum_j phi_j l_j) with phi_j = 2*pi*q_j/m_j."""
    phase = sum(
        2.0 * np.pi * q * np.arange(m).reshape([-1 if a == axis else 1 for a in range(grid.k)]) / m
        for axis, (q, m) in enumerate(zip(wavenumbers, grid.shape))
    )
    return np.exp(1j * np.broadcast_to(phase, grid.shape))


def mode_amplification_by_stepping(scheme: SchemeConfig, op: SplitOperator, dt: float) -> np.ndarray:
    """Step every grid Fourier mode once and measure its amplification.

    Returns:
        Complex array of grid shape holding <mode, step(mode)> / <mode, mode>
    """
    out = np.empty(op.grid.shape, dtype=complex)
    for index in np.ndindex(*op.grid.shape):
        mode = fourier_mode(op.grid, index)
        stepped = step(scheme, op, mode, 0.0, dt, strict=False)
        out[index] = np.vdot(mode, stepped) / np.vdot(mode, mode)
    return out


def spectral_radius_by_stepping(scheme: SchemeConfig, op: SplitOperator, dt: float) -> float:
    """Spectral radius of the one-step map, measured on the grid modes."""
    return float(np.max(np.abs(mode_amplification_by_stepping(scheme, op, dt))))


def worst_case_equal_angles(
    kind,
    theta: float,
    k: int,
    gamma: float,
    beta_bar: float = 0.0,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    n_phi: int = 256,
) -> SweepResult:
    """Sweep the extremal family: unit diagonal, every d_ij = gamma, phi_1 = ... = phi_k.

    Along this family the necessary theta bounds are attained in every
    dimension, so theta just below ``theorem2_lower_bound`` shows max|M| > 1.
    """
    problem = extremal_problem(k, gamma, beta_bar)
    sampling = SweepSampling(n_phi=n_phi, ratios=tuple(ratios), diagonal_only=True)
    return stability_sweep(kind, theta, problem.diffusion, problem.beta, sampling)
