"""Built-in problem catalog and problem files.

Problem files are YAML mappings. The diffusion matrix may mention ``gamma``,
which is substituted when the file is loaded:

    k: 2
    scale: 0.025
    D:
      - [1, 2*gamma]
      - [2*gamma, 4]
    beta: [[0, 0], [0, 0]]      # optional, defaults to the 4-point stencil
    initial: periodic-bump-2d
    gamma: 0.9                  # default when the caller gives none
"""

import re
from pathlib import Path
from typing import Callable, Dict, Optional, Union

import numpy as np
import yaml

from adipal.common import ConfigError, ParameterError, audit_logger
from adipal.model import MixedStencilParams, ProblemSpec


def periodic_bump_2d(x1, x2):
    return np.exp(-4.0 * (np.sin(np.pi * x1) ** 2 + np.cos(np.pi * x2) ** 2))


def periodic_bump_3d(x1, x2, x3):
    return np.exp(-(np.cos(np.pi * x1) ** 2 + np.cos(np.pi * x2) ** 2 + np.cos(np.pi * x3) ** 2))


def constant_one(*coords):
    return np.ones(np.broadcast(*coords).shape)


INITIAL_FUNCTIONS: Dict[str, Callable[..., np.ndarray]] = {
    "periodic-bump-2d": periodic_bump_2d,
    "periodic-bump-3d": periodic_bump_3d,
    "constant": constant_one,
}

_PROBLEM_KEYS = {"k", "scale", "D", "beta", "initial", "gamma", "name"}

# "gamma", "2*gamma", "0.5 gamma", "-gamma"
_GAMMA_TERM = re.compile(r"^\s*([+-]?\s*(?:\d+\.?\d*(?:[eE][+-]?\d+)?)?)\s*\*?\s*gamma\s*$")


def _check_gamma(gamma: float):
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma!r}")


def matrix_2d(gamma: float) -> np.ndarray:
    """Diffusion matrix of the two-dimensional experiment."""
    return 0.025 * np.array([[1.0, 2.0 * gamma], [2.0 * gamma, 4.0]])


def matrix_3d(gamma: float) -> np.ndarray:
    """Diffusion matrix of the three-dimensional experiment."""
    return 0.025 * np.array(
        [
            [1.0, 2.0 * gamma, gamma],
            [2.0 * gamma, 4.0, 2.0 * gamma],
            [gamma, 2.0 * gamma, 1.0],
        ]
    )


def template_problem(name: str, gamma: float) -> ProblemSpec:
    """Build one of the built-in experiment problems.

    Args:
        name: ``2d-gamma`` or ``3d-gamma``
        gamma: Mixed-term size in [0, 1]

    Returns:
        ProblemSpec with the 4-point mixed stencil and zero forcing
    """
    _check_gamma(gamma)
    if name == "2d-gamma":
        D, u0 = matrix_2d(gamma), periodic_bump_2d
    elif name == "3d-gamma":
        D, u0 = matrix_3d(gamma), periodic_bump_3d
    else:
        raise ConfigError(f"Unknown template '{name}'. Available: {', '.join(TEMPLATES)}")
    return ProblemSpec(diffusion=D, u0=u0, name=name, gamma=gamma)


TEMPLATES = ("2d-gamma", "3d-gamma")


def extremal_problem(k: int, gamma: float, beta_bar: float = 0.0) -> ProblemSpec:
    """Unit-diagonal matrix with every off-diagonal equal to gamma.

    With all angles equal this family attains the necessary theta bounds in any
    dimension, which makes it the natural probe for k >= 4.
    """
    _check_gamma(gamma)
    D = np.full((k, k), gamma)
    np.fill_diagonal(D, 1.0)
    beta = np.full((k, k), beta_bar)
    np.fill_diagonal(beta, 0.0)
    return ProblemSpec(
        diffusion=D,
        beta=MixedStencilParams(beta),
        u0=constant_one,
        name=f"extremal-{k}d",
        gamma=gamma,
    )


def _parse_entry(value, gamma: float) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        match = _GAMMA_TERM.match(value)
        if match:
            coef = match.group(1).replace(" ", "")
            if coef in ("", "+"):
                factor = 1.0
            elif coef == "-":
                factor = -1.0
            else:
                factor = float(coef)
            return factor * gamma
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"Cannot read matrix entry {value!r}; use a number or a multiple of gamma")


def _parse_matrix(rows, k: int, gamma: float, key: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != k:
        raise ConfigError(f"'{key}' must be a list of {k} rows")
    out = np.empty((k, k))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != k:
            raise ConfigError(f"Row {i + 1} of '{key}' must have {k} entries")
        for j, value in enumerate(row):
            out[i, j] = _parse_entry(value, gamma)
    return out


def parse_problem(data: dict, gamma: Optional[float] = None) -> ProblemSpec:
    """Build a ProblemSpec from an already-parsed mapping.

    Args:
        data: Mapping with keys k, D and optionally scale, beta, initial, gamma, name
        gamma: Overrides the file's gamma when given

    Returns:
        Validated ProblemSpec
    """
    if not isinstance(data, dict):
        raise ConfigError("Problem description must be a mapping")
    unknown = set(data) - _PROBLEM_KEYS
    if unknown:
        raise ConfigError(f"Unknown problem keys: {', '.join(sorted(unknown))}")
    for required in ("k", "D"):
        if required not in data:
            raise ConfigError(f"Problem description is missing '{required}'")

    k = data["k"]
    if not isinstance(k, int) or k < 2:
        raise ConfigError(f"'k' must be an integer >= 2, got {k!r}")
    if gamma is None:
        gamma = float(data.get("gamma", 1.0))
    _check_gamma(gamma)

    scale = float(data.get("scale", 1.0))
    D = scale * _parse_matrix(data["D"], k, gamma, "D")
    beta = data.get("beta")
    beta = np.zeros((k, k)) if beta is None else _parse_matrix(beta, k, gamma, "beta")

    initial = data.get("initial", "constant")
    if initial not in INITIAL_FUNCTIONS:
        raise ConfigError(
            f"Unknown initial function '{initial}'. Available: {', '.join(INITIAL_FUNCTIONS)}"
        )

    return ProblemSpec(
        diffusion=D,
        beta=beta,
        u0=INITIAL_FUNCTIONS[initial],
        name=str(data.get("name", initial)),
        gamma=gamma,
    )


def load_problem(path: Union[str, Path], gamma: Optional[float] = None) -> ProblemSpec:
    """Load a problem file (YAML).

    Args:
        path: Path to the file
        gamma: Value substituted for ``gamma`` in the matrices

    Returns:
        Validated ProblemSpec

    Raises:
        ConfigError: If the file cannot be read or is malformed
    """
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot read problem file {path}: {e}") from e
    problem = parse_problem(data, gamma)
    audit_logger.info(f"PROBLEM: loaded {path} (k={problem.k}, gamma={problem.gamma})")
    return problem


def resolve_problem(
    template: Optional[str] = None,
    path: Optional[Union[str, Path]] = None,
    gamma: Optional[float] = None,
) -> ProblemSpec:
    """Pick a built-in template or a problem file, whichever is given."""
    if path is not None:
        return load_problem(path, gamma)
    if template is None:
        raise ConfigError("Give either a template name or a problem file")
    return template_problem(template, 1.0 if gamma is None else gamma)
