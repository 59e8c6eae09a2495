"""Lower bounds on theta for unconditional stability of the four ADI schemes.

``theorem1_lower_bound`` gives the sufficient bounds, known for k = 2 and 3.
``theorem2_lower_bound`` gives the necessary bounds for every k >= 2; for
k = 2, 3 the two coincide, so the bounds are sharp there.
"""

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from adipal.adi import SchemeKind
from adipal.common import DomainError, ParameterError, UnsupportedDimensionError

THEOREM1 = "theorem1"
THEOREM2 = "theorem2"

# slack for the nonnegativity criterion, whose inequalities are tight at the values used by the bounds
LEMMA2_TOL = 1e-12


@dataclass(frozen=True)
class BoundResult:
    """A theta lower bound and where it came from.

    Attributes:
        kind: Scheme the bound applies to
        k: Spatial dimension
        gamma: Mixed-term size in [0, 1]
        theta_min: The bound itself
        source: ``theorem1`` (sufficient) or ``theorem2`` (necessary)
        constants: Named constants entering the formula, e.g. {"a_k": 0.2928...}
    """

    kind: SchemeKind
    k: int
    gamma: float
    theta_min: float
    source: str
    constants: Dict[str, float] = field(default_factory=dict)

    @property
    def necessary_only(self) -> bool:
        """True for necessary bounds that are not known to be sufficient (k >= 4)."""
        return self.source == THEOREM2 and self.k >= 4

    @property
    def rounded(self) -> str:
        return round_half_away(self.theta_min)


def round_half_away(value: float, places: int = 3) -> str:
    """Round for display, halves away from zero (0.3165 -> 0.317)."""
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _check_gamma(gamma: float):
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma!r}")


def _check_k(k: int):
    if int(k) != k or k < 2:
        raise ParameterError(f"Dimension k must be an integer >= 2, got {k!r}")


def d_k(k: int) -> float:
    """Douglas constant (1 - 1/k)^(k-1)."""
    _check_k(k)
    return (1.0 - 1.0 / k) ** (k - 1)


def c_k(k: int) -> float:
    """Craig-Sneyd constant (1 - 1/k)^k."""
    _check_k(k)
    return (1.0 - 1.0 / k) ** k


def b_k(k: int) -> float:
    """Modified Craig-Sneyd constant 1 / (1 + (1 + 1/(k-1))^(k-1))."""
    _check_k(k)
    return 1.0 / (1.0 + (1.0 + 1.0 / (k - 1)) ** (k - 1))


def _ak_residual(a: float, k: int) -> float:
    return 2.0 * a * (1.0 + (1.0 - a) / (k - 1)) ** (k - 1) - 1.0


def solve_ak(k: int) -> float:
    """Hundsdorfer-Verwer constant: the root a in (0, 1/2) of 2a(1 + (1-a)/(k-1))^(k-1) = 1.

    Found by bisection; the residual changes sign on the bracket for every k >= 2.
    """
    _check_k(k)
    return float(
        bisect(
            _ak_residual,
            1e-9,
            0.5 - 1e-9,
            args=(int(k),),
            xtol=1e-15,
            rtol=4 * np.finfo(float).eps,
            maxiter=200,
        )
    )


a_k = solve_ak


def h_function(alpha, k: int):
    """h(alpha) = k*alpha / (2(1+alpha)^k - 1), the equal-angle worst case of the HV scheme."""
    alpha = np.asarray(alpha, dtype=float)
    return k * alpha / (2.0 * (1.0 + alpha) ** k - 1.0)


def h_maximum(k: int) -> float:
    """Maximum of h over alpha > 0; it equals a_k."""
    _check_k(k)
    res = minimize_scalar(
        lambda x: -float(h_function(x, k)),
        bounds=(0.0, 4.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-res.fun)


def prior_do_bound_k3_gamma1() -> float:
    """Earlier sufficient Douglas bound for k = 3 without using gamma: 3*sqrt(3) - 9/2."""
    return 3.0 * math.sqrt(3.0) - 4.5


def theorem1_lower_bound(kind, k: int, gamma: float) -> BoundResult:
    """Sufficient lower bound on theta for unconditional stability, k = 2 or 3.

    Args:
        kind: Scheme kind
        k: Spatial dimension, 2 or 3
        gamma: Mixed-term size in [0, 1]

    Returns:
        BoundResult with source ``theorem1``

    Raises:
        UnsupportedDimensionError: For k >= 4, where no sufficient bound is known
    """
    kind = SchemeKind.parse(kind)
    _check_gamma(gamma)
    if k not in (2, 3):
        raise UnsupportedDimensionError(
            f"Sufficient theta bounds are only known for k = 2 and 3, got k={k}. "
            f"Use the necessary bound (theorem2) instead."
        )
    if kind is SchemeKind.DO:
        theta = 0.5 if k == 2 else max(0.5, 2.0 * (2.0 * gamma + 1.0) / 9.0)
    elif kind is SchemeKind.CS:
        theta = 0.5
    elif kind is SchemeKind.MCS:
        theta = max(0.25, (gamma + 1.0) / 6.0 if k == 2 else 2.0 * (2.0 * gamma + 1.0) / 13.0)
    else:
        if k == 2:
            theta = max(0.25, (gamma + 1.0) / (4.0 + 2.0 * math.sqrt(2.0)))
        else:
            theta = max(0.25, (2.0 * gamma + 1.0) / (4.0 + 2.0 * math.sqrt(3.0)))
    return BoundResult(kind, k, float(gamma), float(theta), THEOREM1)


def theorem2_lower_bound(kind, k: int, gamma: float) -> BoundResult:
    """Necessary lower bound on theta for unconditional stability, any k >= 2.

    Returns:
        BoundResult with source ``theorem2`` and the constant used
    """
    kind = SchemeKind.parse(kind)
    _check_k(k)
    _check_gamma(gamma)
    spread = (k - 1) * gamma + 1.0
    if kind is SchemeKind.DO:
        const = d_k(k)
        theta = max(0.5, 0.5 * const * spread)
        name = "d_k"
    elif kind is SchemeKind.CS:
        const = c_k(k)
        theta = max(0.5, 0.5 * const * k * gamma)
        name = "c_k"
    elif kind is SchemeKind.MCS:
        const = b_k(k)
        theta = max(0.25, 0.5 * const * spread)
        name = "b_k"
    else:
        const = solve_ak(k)
        theta = max(0.25, 0.5 * const * spread)
        name = "a_k"
    return BoundResult(kind, int(k), float(gamma), float(theta), THEOREM2, {name: const})


def lower_bound(kind, k: int, gamma: float) -> BoundResult:
    """Best available bound: sufficient when known (k = 2, 3), otherwise necessary."""
    if k in (2, 3):
        return theorem1_lower_bound(kind, k, gamma)
    return theorem2_lower_bound(kind, k, gamma)


def _check_delta(delta: float):
    if not 0.0 < delta <= 4.0:
        raise DomainError(f"delta must lie in (0, 4], got {delta!r}")


def lemma2_polynomial(u, v, w, alpha: float, delta: float):
    """P(u, v, w) = alpha + u^2 + v^2 + w^2 + uvw - delta(u + v + w)."""
    return alpha + u * u + v * v + w * w + u * v * w - delta * (u + v + w)


def lemma2_condition(alpha: float, delta: float) -> bool:
    """Criterion for P >= 0 on the nonnegative octant.

    True iff (delta+1)(3 - 2 sqrt(delta+1)) >= 1 - alpha and delta^2 <= 2 alpha.

    Raises:
        DomainError: If delta is outside (0, 4]
    """
    _check_delta(delta)
    s = math.sqrt(delta + 1.0)
    interior = (delta + 1.0) * (3.0 - 2.0 * s) >= 1.0 - alpha - LEMMA2_TOL
    face = delta * delta <= 2.0 * alpha + LEMMA2_TOL
    return bool(interior and face)


def lemma2_exact_min(alpha: float, delta: float) -> float:
    """Minimum of P over u, v, w >= 0 in closed form.

    Candidates are the corner (alpha), the face minimum at u = v = delta/2
    (alpha - delta^2/2) and the single interior critical point u = v = w = sqrt(delta+1) - 1.
    """
    _check_delta(delta)
    s = math.sqrt(delta + 1.0)
    interior = (delta + 1.0) * (3.0 - 2.0 * s) + alpha - 1.0
    return min(alpha, alpha - 0.5 * delta * delta, interior)


def lemma2_bruteforce_min(alpha: float, delta: float, max_u: float = 8.0, h: float = 0.02) -> float:
    """Grid minimum of P over [0, max_u]^3 with spacing h.

    Raises:
        ParameterError: If max_u < 5 or h > 0.05
    """
    if max_u < 5.0:
        raise ParameterError(f"max_u must be >= 5 to contain the minimizers, got {max_u!r}")
    if not 0.0 < h <= 0.05:
        raise ParameterError(f"Grid spacing must be in (0, 0.05], got {h!r}")
    grid = np.arange(0.0, max_u + 0.5 * h, h)
    v = grid[:, None]
    w = grid[None, :]
    best = np.inf
    # one u-slice at a time keeps memory at len(grid)^2
    for u in grid:
        best = min(best, float(np.min(lemma2_polynomial(u, v, w, alpha, delta))))
    return best
