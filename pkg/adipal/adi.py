"""Douglas, Craig-Sneyd, modified Craig-Sneyd and Hundsdorfer-Verwer ADI steps.

All four schemes start with the same explicit predictor and k implicit
direction sweeps. CS, MCS and HV then add a second explicit stage and k
corrector sweeps. The mixed-derivative part A_0 is always explicit.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from adipal.common import STRICT_MODE, ParameterError, audit_logger
from adipal.discretization import SplitOperator, check_finite
from adipal.tridiag import diffusion_line_solver


class SchemeKind(str, Enum):
    DO = "Do"
    CS = "CS"
    MCS = "MCS"
    HV = "HV"

    @classmethod
    def parse(cls, name) -> "SchemeKind":
        if isinstance(name, cls):
            return name
        for kind in cls:
            if kind.value.lower() == str(name).strip().lower():
                return kind
        raise ParameterError(
            f"Unknown scheme '{name}'. Available: {', '.join(k.value for k in cls)}"
        )

    @property
    def line_solves_per_direction(self) -> int:
        return 1 if self is SchemeKind.DO else 2


ALL_SCHEMES = tuple(SchemeKind)


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme kind and its parameter theta > 0 (no upper cap)."""

    kind: SchemeKind
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind.parse(self.kind))
        if not self.theta > 0.0:
            raise ParameterError(f"theta must be > 0, got {self.theta!r}")
        object.__setattr__(self, "theta", float(self.theta))

    def __str__(self):
        return f"{self.kind.value}(theta={self.theta:g})"


def solve_line_system(op: SplitOperator, j: int, a: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - a*A_j) x = rhs along every grid line in direction j.

    Args:
        op: Split operator
        j: Direction 1..k
        a: theta * dt, must be >= 0
        rhs: Right-hand side field (real or complex)

    Returns:
        Solution field x; rhs is left untouched

    Raises:
        ParameterError: If a < 0 or j is not a direction
    """
    if a < 0.0:
        raise ParameterError(f"Implicit weight a = theta*dt must be >= 0, got {a!r}")
    if not 1 <= j <= op.k:
        raise ParameterError(f"Direction must be in 1..{op.k}, got {j}")
    coupling = a * op.axial[j - 1]
    if coupling == 0.0:
        return np.array(rhs, copy=True)
    solver = diffusion_line_solver(op.grid.shape[j - 1], coupling)
    return solver.solve(rhs, axis=j - 1)


def _sweep(op, theta, dt, t_next, start, offsets, check):
    # Y_j = Y_{j-1} + theta*dt*(F_j(t_n, Y_j) - offset_j), solved for Y_j
    y = start
    a = theta * dt
    for j in range(1, op.k + 1):
        rhs = y + a * (op.forcing(j, t_next) - offsets[j])
        y = solve_line_system(op, j, a, rhs)
        check(y, f"sweep {j}")
    return y


def step(
    scheme: SchemeConfig,
    op: SplitOperator,
    u_prev: np.ndarray,
    t_prev: float,
    dt: float,
    strict: Optional[bool] = None,
    step_index: Optional[int] = None,
) -> np.ndarray:
    """Advance one time step U_{n-1} -> U_n.

    Args:
        scheme: Scheme kind and theta
        op: Split operator of the semidiscrete system
        u_prev: U_{n-1}
        t_prev: t_{n-1}
        dt: Step size > 0
        strict: Raise on the first non-finite stage (defaults to ADIPAL_STRICT)
        step_index: Reported in InstabilityError

    Returns:
        U_n as a new array

    Raises:
        ParameterError: If dt <= 0
        InstabilityError: In strict mode, when a stage is not finite
    """
    if not dt > 0.0:
        raise ParameterError(f"Step size must be > 0, got {dt!r}")
    strict = STRICT_MODE if strict is None else strict

    def check(y, stage):
        if strict:
            check_finite(y, step_index, stage)

    theta = scheme.theta
    kind = scheme.kind
    t_next = t_prev + dt

    # F_j(t_{n-1}, U_{n-1}) is needed by the predictor and again by CS/MCS correctors
    prev = [op.evaluate(j, t_prev, u_prev) for j in range(op.k + 1)]
    f_prev = sum(prev)

    y0 = u_prev + dt * f_prev
    check(y0, "Y0")
    yk = _sweep(op, theta, dt, t_next, y0, prev, check)
    if kind is SchemeKind.DO:
        return yk

    if kind is SchemeKind.CS:
        y0_tilde = y0 + 0.5 * dt * (op.evaluate(0, t_next, yk) - prev[0])
        offsets = prev
    elif kind is SchemeKind.MCS:
        now = [op.evaluate(j, t_next, yk) for j in range(op.k + 1)]
        y0_hat = y0 + theta * dt * (now[0] - prev[0])
        y0_tilde = y0_hat + (0.5 - theta) * dt * (sum(now) - f_prev)
        offsets = prev
    else:
        now = [op.evaluate(j, t_next, yk) for j in range(op.k + 1)]
        y0_tilde = y0 + 0.5 * dt * (sum(now) - f_prev)
        # HV correctors are offset by F_j(t_n, Y_k)
        offsets = now
    check(y0_tilde, "Y0~")
    return _sweep(op, theta, dt, t_next, y0_tilde, offsets, check)


def integrate(
    scheme: SchemeConfig,
    op: SplitOperator,
    u0: np.ndarray,
    t_final: float,
    n_steps: int,
    strict: Optional[bool] = None,
) -> np.ndarray:
    """Apply ``n_steps`` steps of size dt = t_final / n_steps, starting from u0.

    Times are t_n = n * dt so that long runs do not accumulate drift.

    Raises:
        ParameterError: If t_final <= 0 or n_steps < 1
        InstabilityError: In strict mode, carrying the index of the failing step
    """
    if not t_final > 0.0:
        raise ParameterError(f"Final time must be > 0, got {t_final!r}")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ParameterError(f"Number of steps must be an integer >= 1, got {n_steps!r}")
    n_steps = int(n_steps)
    dt = t_final / n_steps
    strict = STRICT_MODE if strict is None else strict

    audit_logger.info(
        f"INTEGRATE: {scheme} grid={op.grid.shape} T={t_final:g} N={n_steps} strict={strict}"
    )
    u = np.array(u0, copy=True)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            u = step(scheme, op, u, (n - 1) * dt, dt, strict=strict, step_index=n)
    return u
