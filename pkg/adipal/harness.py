"""Convergence experiments: global temporal errors against the exact semidiscrete solution.

One experiment integrates every (scheme, theta, m, dt) combination to the
final time, compares with ``exact_semidiscrete`` and collects ErrorRecords.
Records come back in canonical order (scheme, then m, then descending dt)
whatever the number of worker threads, so the CSV output is reproducible.
"""

import csv
import hashlib
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from adipal.adi import SchemeConfig, SchemeKind, integrate
from adipal.common import WORKERS, ConfigError, StructureError, audit_logger
from adipal.discretization import GridSpec, build_split_operator, sample_initial
from adipal.model import ProblemSpec
from adipal.problems import TEMPLATES, resolve_problem
from adipal.reference import exact_semidiscrete
from adipal.stability.bounds import theorem1_lower_bound, theorem2_lower_bound

ERROR_HEADER = ("scheme", "theta", "m", "dt", "error")
SLOPE_HEADER = ("scheme", "theta", "m", "slope", "points", "monotone")

DEFAULT_GAMMA = {"2d-gamma": 0.9, "3d-gamma": 0.75}
DEFAULT_SLOPE_WINDOW = (1e-3, 1e-1)

# theta values used for the instability experiments, roughly 90% of the 2D/3D bounds
BELOW_BOUND_THETAS = {
    "paper-2d": {SchemeKind.DO: 0.45, SchemeKind.CS: 0.45, SchemeKind.MCS: 0.29, SchemeKind.HV: 0.25},
    "paper-3d": {SchemeKind.DO: 0.5, SchemeKind.CS: 0.45, SchemeKind.MCS: 0.35, SchemeKind.HV: 0.3},
}

_POLICY = re.compile(r"^\s*(theorem1|theorem2|paper-2d|paper-3d|fraction|value)\s*(?:[:\s]\s*(\S+))?\s*$")


def format_number(value: float) -> str:
    """17 significant digits, locale independent; infinities print as inf."""
    return format(float(value), ".17g")


@dataclass(frozen=True)
class ThetaPolicy:
    """How theta is chosen for each scheme.

    Attributes:
        name: theorem1, theorem2, fraction, value, paper-2d or paper-3d
        value: Fraction of the theorem1 bound, or the explicit theta
    """

    name: str
    value: Optional[float] = None

    def __str__(self):
        return self.name if self.value is None else f"{self.name}:{self.value:g}"


def parse_theta_policy(text: str) -> ThetaPolicy:
    """Parse ``theorem1``, ``theorem2``, ``fraction:F``, ``value:V``, ``paper-2d`` or ``paper-3d``.

    Raises:
        ConfigError: For an unknown policy or a missing / non-positive number
    """
    match = _POLICY.match(str(text))
    if not match:
        raise ConfigError(
            f"Unknown theta policy '{text}'. "
            f"Use theorem1, theorem2, fraction:F, value:V, paper-2d or paper-3d"
        )
    name, arg = match.groups()
    if name in ("fraction", "value"):
        try:
            value = float(arg)
        except (TypeError, ValueError):
            raise ConfigError(f"Theta policy '{name}' needs a number, e.g. {name}:0.9") from None
        if not value > 0.0:
            raise ConfigError(f"Theta policy '{name}' needs a positive number, got {arg}")
        return ThetaPolicy(name, value)
    if arg is not None:
        raise ConfigError(f"Theta policy '{name}' takes no argument, got '{arg}'")
    return ThetaPolicy(name)


def resolve_theta(policy: Union[ThetaPolicy, str], kind, k: int, gamma: float) -> float:
    """Theta for one scheme under a policy.

    Args:
        policy: Parsed policy or policy string
        kind: Scheme kind
        k: Spatial dimension
        gamma: Mixed-term size used by the theorem bounds

    Returns:
        theta > 0
    """
    if not isinstance(policy, ThetaPolicy):
        policy = parse_theta_policy(policy)
    kind = SchemeKind.parse(kind)
    if policy.name == "theorem1":
        return theorem1_lower_bound(kind, k, gamma).theta_min
    if policy.name == "theorem2":
        return theorem2_lower_bound(kind, k, gamma).theta_min
    if policy.name == "fraction":
        return policy.value * theorem1_lower_bound(kind, k, gamma).theta_min
    if policy.name == "value":
        return policy.value
    return BELOW_BOUND_THETAS[policy.name][kind]


def default_step_counts() -> Tuple[int, ...]:
    """25 log-spaced step counts N in 1..1000, deduplicated after rounding."""
    return tuple(int(n) for n in np.unique(np.round(np.logspace(0, 3, 25)).astype(int)))


def step_counts_from_dts(dts: Iterable[float]) -> Tuple[int, ...]:
    """Convert step sizes to step counts; every dt must be 1/N for an integer N >= 1."""
    counts = []
    for dt in dts:
        dt = float(dt)
        if not dt > 0.0:
            raise ConfigError(f"Step sizes must be > 0, got {dt}")
        n = int(round(1.0 / dt))
        if n < 1 or abs(n * dt - 1.0) > 1e-9:
            raise ConfigError(f"Step size {dt} is not of the form 1/N with integer N >= 1")
        counts.append(n)
    return tuple(counts)


_CONFIG_KEYS = {
    "template",
    "problem",
    "gamma",
    "m",
    "schemes",
    "theta_policy",
    "t_final",
    "steps",
    "dt",
    "out",
    "slope_window",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence study.

    Attributes:
        template: Built-in problem (``2d-gamma`` / ``3d-gamma``), ignored when problem_path is set
        problem_path: YAML problem file
        gamma: Value substituted for gamma; defaults per template (0.9 in 2D, 0.75 in 3D)
        m: Grid points per direction, one study per value
        schemes: Schemes to run, in output order
        theta_policy: Policy string, see ``parse_theta_policy``
        t_final: Final time T
        step_counts: Values N of the step sizes dt = 1/N; each run takes T*N steps
        out: CSV output path (None to skip writing)
        slope_window: dt range of the least-squares slope fit
    """

    template: Optional[str] = "2d-gamma"
    problem_path: Optional[Path] = None
    gamma: Optional[float] = None
    m: Tuple[int, ...] = (40,)
    schemes: Tuple[SchemeKind, ...] = tuple(SchemeKind)
    theta_policy: str = "theorem1"
    t_final: float = 5.0
    step_counts: Tuple[int, ...] = field(default_factory=default_step_counts)
    out: Optional[Path] = None
    slope_window: Tuple[float, float] = DEFAULT_SLOPE_WINDOW

    def __post_init__(self):
        if self.problem_path is None and self.template not in TEMPLATES:
            raise ConfigError(
                f"Unknown template '{self.template}'. Available: {', '.join(TEMPLATES)}"
            )
        try:
            m_values = tuple(int(m) for m in self.m)
            t_final = float(self.t_final)
            step_counts = tuple(float(n) for n in self.step_counts)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"m, t_final and step counts must be numbers: {e}") from e
        if not m_values or any(m < 3 for m in m_values):
            raise ConfigError(f"Every m must be an integer >= 3, got {self.m}")
        object.__setattr__(self, "m", m_values)
        object.__setattr__(self, "t_final", t_final)
        if not self.schemes:
            raise ConfigError("At least one scheme is required")
        object.__setattr__(self, "schemes", tuple(SchemeKind.parse(s) for s in self.schemes))
        parse_theta_policy(self.theta_policy)
        if not self.t_final > 0.0:
            raise ConfigError(f"t_final must be > 0, got {self.t_final}")
        if not step_counts or any(int(n) != n or n < 1 for n in step_counts):
            raise ConfigError(f"Step counts must be integers >= 1, got {self.step_counts}")
        object.__setattr__(self, "step_counts", tuple(sorted({int(n) for n in step_counts})))
        for n in self.step_counts:
            if abs(self.t_final * n - round(self.t_final * n)) > 1e-9:
                raise ConfigError(
                    f"t_final={self.t_final:g} is not a whole number of steps of size 1/{n}"
                )
        lo, hi = self.slope_window
        if not 0.0 < lo < hi:
            raise ConfigError(f"Slope window must satisfy 0 < low < high, got {self.slope_window}")
        if self.problem_path is not None:
            object.__setattr__(self, "problem_path", Path(self.problem_path))
        if self.out is not None:
            object.__setattr__(self, "out", Path(self.out))

    @property
    def resolved_gamma(self) -> Optional[float]:
        if self.gamma is not None:
            return float(self.gamma)
        if self.problem_path is None:
            return DEFAULT_GAMMA[self.template]
        return None

    @property
    def dts(self) -> Tuple[float, ...]:
        """Step sizes in descending order."""
        return tuple(1.0 / n for n in self.step_counts)

    def problem(self) -> ProblemSpec:
        return resolve_problem(self.template, self.problem_path, self.resolved_gamma)

    @classmethod
    def from_mapping(cls, data: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        """Build a config from a mapping with the keys of an experiment file.

        Raises:
            ConfigError: For unknown keys or malformed values
        """
        if not isinstance(data, dict):
            raise ConfigError("Experiment file must contain a mapping")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(
                f"Unknown experiment keys: {', '.join(sorted(unknown))}. "
                f"Allowed: {', '.join(sorted(_CONFIG_KEYS))}"
            )
        if "steps" in data and "dt" in data:
            raise ConfigError("Give either 'steps' or 'dt', not both")
        try:
            kwargs = cls._mapping_kwargs(data, base_dir)
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid experiment: {e}") from e

    @staticmethod
    def _mapping_kwargs(data: dict, base_dir: Optional[Path]) -> dict:
        kwargs = {}
        if "template" in data:
            kwargs["template"] = data["template"]
        if "problem" in data:
            path = Path(data["problem"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            kwargs["problem_path"] = path
        for key in ("gamma", "t_final"):
            if key in data:
                kwargs[key] = float(data[key])
        if "m" in data:
            m = data["m"]
            kwargs["m"] = tuple(m) if isinstance(m, (list, tuple)) else (m,)
        if "schemes" in data:
            schemes = data["schemes"]
            kwargs["schemes"] = tuple(
                schemes.split(",") if isinstance(schemes, str) else schemes
            )
        if "theta_policy" in data:
            kwargs["theta_policy"] = str(data["theta_policy"])
        if "steps" in data:
            kwargs["step_counts"] = tuple(data["steps"])
        if "dt" in data:
            kwargs["step_counts"] = step_counts_from_dts(data["dt"])
        if "out" in data:
            kwargs["out"] = Path(data["out"])
        if "slope_window" in data:
            lo, hi = data["slope_window"]
            kwargs["slope_window"] = (float(lo), float(hi))
        return kwargs

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Load an experiment file (YAML mapping mirroring the fields of this class)."""
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot read experiment file {path}: {e}") from e
        config = cls.from_mapping(data, base_dir=path.parent)
        audit_logger.info(f"EXPERIMENT: loaded {path}")
        return config


@dataclass(frozen=True)
class ErrorRecord:
    scheme: SchemeKind
    theta: float
    m: int
    dt: float
    error: float
    n_steps: int = 0

    def row(self) -> List[str]:
        return [
            self.scheme.value,
            format_number(self.theta),
            str(self.m),
            format_number(self.dt),
            format_number(self.error),
        ]


@dataclass(frozen=True)
class SlopeRecord:
    """Least-squares slope of log(error) against log(dt) for one (scheme, theta, m)."""

    scheme: SchemeKind
    theta: float
    m: int
    slope: float
    points: int
    monotone: bool

    def row(self) -> List[str]:
        return [
            self.scheme.value,
            format_number(self.theta),
            str(self.m),
            format_number(self.slope),
            str(self.points),
            "true" if self.monotone else "false",
        ]


def global_error(u_ref: np.ndarray, u_num: np.ndarray, k: int, m: int) -> float:
    """Normalized error m^(-k/2) * ||U_ref - U_num||_2; +inf when U_num is not finite.

    Raises:
        StructureError: If the two fields differ in size or do not have m^k entries
    """
    u_ref = np.asarray(u_ref)
    u_num = np.asarray(u_num)
    if u_ref.size != u_num.size:
        raise StructureError(f"Fields differ in size: {u_ref.size} vs {u_num.size}")
    if u_ref.size != m**k:
        raise StructureError(f"Fields have {u_ref.size} entries, expected m^k = {m**k}")
    if not np.all(np.isfinite(u_num)):
        return math.inf
    diff = u_ref.ravel() - u_num.ravel()
    with np.errstate(over="ignore"):
        norm = float(np.linalg.norm(diff))
    return norm * float(m) ** (-k / 2.0)


class ReferenceCache:
    """Exact semidiscrete solutions keyed by problem content, grid, initial data and T.

    ``calls`` counts actual evaluations, so a run can check it computed each
    reference once.
    """

    def __init__(self):
        self._store: Dict[tuple, np.ndarray] = {}
        self.calls = 0

    def get(self, problem: ProblemSpec, grid: GridSpec, u0: np.ndarray, t_final: float) -> np.ndarray:
        key = (
            problem.diffusion.entries.tobytes(),
            problem.beta.entries.tobytes(),
            problem.name,
            grid.shape,
            hashlib.sha1(np.ascontiguousarray(u0).tobytes()).hexdigest(),
            float(t_final),
        )
        if key in self._store:
            audit_logger.debug(f"REFERENCE: cache hit {problem.name} grid={grid.shape}")
            return self._store[key]
        self.calls += 1
        value = exact_semidiscrete(problem, grid, u0, t_final)
        self._store[key] = value
        return value


def _run_one(scheme, op, u0, u_ref, t_final, n, m) -> ErrorRecord:
    n_steps = int(round(t_final * n))
    u = integrate(scheme, op, u0, t_final, n_steps, strict=False)
    error = global_error(u_ref, u, op.k, m)
    return ErrorRecord(scheme.kind, scheme.theta, m, 1.0 / n, error, n_steps)


def run_convergence(
    config: ExperimentConfig,
    workers: Optional[int] = None,
    cache: Optional[ReferenceCache] = None,
    progress: Optional[Callable[[ErrorRecord], None]] = None,
) -> List[ErrorRecord]:
    """Run every (scheme, theta, m, dt) of an experiment.

    Runs are integrated in tolerant mode: an unstable run yields error = inf
    and the study continues.

    Args:
        config: Experiment
        workers: Thread pool width (defaults to ADIPAL_WORKERS)
        cache: Reference cache shared between calls
        progress: Called with each record as it completes (completion order)

    Returns:
        ErrorRecords in canonical order: scheme, then m, then descending dt
    """
    workers = max(1, WORKERS if workers is None else int(workers))
    cache = ReferenceCache() if cache is None else cache
    problem = config.problem()
    policy = parse_theta_policy(config.theta_policy)
    gamma = problem.gamma if config.resolved_gamma is None else config.resolved_gamma
    schemes = [
        SchemeConfig(kind, resolve_theta(policy, kind, problem.k, gamma)) for kind in config.schemes
    ]
    audit_logger.info(
        f"CONVERGE: {problem.name} k={problem.k} m={list(config.m)} T={config.t_final:g} "
        f"policy={policy} schemes={[str(s) for s in schemes]} runs="
        f"{len(schemes) * len(config.m) * len(config.step_counts)} workers={workers}"
    )

    jobs = []
    for m in config.m:
        grid = GridSpec.uniform(problem.k, m)
        op = build_split_operator(problem, grid)
        u0 = sample_initial(problem, grid)
        u_ref = cache.get(problem, grid, u0, config.t_final)
        for scheme in schemes:
            for n in config.step_counts:
                jobs.append((scheme, op, u0, u_ref, config.t_final, n, m))

    records = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_one, *job) for job in jobs]
        for future in futures:
            record = future.result()
            records.append(record)
            if progress is not None:
                progress(record)

    order = {kind: i for i, kind in enumerate(config.schemes)}
    m_order = {m: i for i, m in enumerate(config.m)}
    records.sort(key=lambda r: (order[r.scheme], m_order[r.m], -r.dt))
    return records


def is_monotone(errors: Sequence[float], rtol: float = 1e-10) -> bool:
    """True when errors listed by descending dt never increase (up to rtol)."""
    errors = list(errors)
    return all(b <= a * (1.0 + rtol) for a, b in zip(errors, errors[1:]))


def fit_slope(
    records: Sequence[ErrorRecord], window: Tuple[float, float] = DEFAULT_SLOPE_WINDOW
) -> List[SlopeRecord]:
    """Least-squares slope of log10(error) against log10(dt) for each (scheme, theta, m).

    Only finite, positive errors with dt inside the window enter the fit; a
    group with fewer than two such points gets slope nan.
    """
    lo, hi = window
    groups: Dict[Tuple[SchemeKind, float, int], List[ErrorRecord]] = {}
    for record in records:
        groups.setdefault((record.scheme, record.theta, record.m), []).append(record)
    out = []
    for (kind, theta, m), group in groups.items():
        group = sorted(group, key=lambda r: -r.dt)
        points = [
            (r.dt, r.error)
            for r in group
            if lo * (1 - 1e-12) <= r.dt <= hi * (1 + 1e-12) and math.isfinite(r.error) and r.error > 0
        ]
        if len(points) >= 2:
            x = np.log10([p[0] for p in points])
            y = np.log10([p[1] for p in points])
            slope = float(np.polyfit(x, y, 1)[0])
        else:
            slope = math.nan
        monotone = is_monotone([r.error for r in group])
        out.append(SlopeRecord(kind, theta, m, slope, len(points), monotone))
    return out


def _write_rows(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_error_csv(records: Sequence[ErrorRecord], path: Union[str, Path]) -> Path:
    """Write scheme,theta,m,dt,error rows."""
    path = _write_rows(path, ERROR_HEADER, (r.row() for r in records))
    audit_logger.info(f"CSV: wrote {len(records)} error records to {path}")
    return path


def slopes_path(path: Union[str, Path]) -> Path:
    """``errors.csv`` -> ``errors.slopes.csv``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.slopes{path.suffix or '.csv'}")


def write_slopes_csv(slopes: Sequence[SlopeRecord], path: Union[str, Path]) -> Path:
    return _write_rows(path, SLOPE_HEADER, (s.row() for s in slopes))


def write_sweep_csv(
    rows: Iterable[Sequence], path: Union[str, Path], k: int, per_direction: bool = False
) -> Path:
    """Write sweep samples as scheme,theta,r,phi_1..phi_k,absM.

    With ``per_direction`` the columns r_1..r_k follow r.
    """
    ratios = [f"r_{j}" for j in range(1, k + 1)] if per_direction else []
    header = ["scheme", "theta", "r", *ratios, *(f"phi_{j}" for j in range(1, k + 1)), "absM"]
    formatted = (
        [row[0], *(format_number(v) for v in row[1:])] for row in rows
    )
    return _write_rows(path, header, formatted)


def with_output(config: ExperimentConfig, out: Optional[Union[str, Path]]) -> ExperimentConfig:
    return config if out is None else replace(config, out=Path(out))
