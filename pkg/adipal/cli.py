import argparse
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table

from adipal.adi import ALL_SCHEMES, SchemeKind
from adipal.common import WORKERS, AdipalError, ConfigError, audit_logger
from adipal.harness import (
    DEFAULT_GAMMA,
    ExperimentConfig,
    ErrorRecord,
    SlopeRecord,
    fit_slope,
    parse_theta_policy,
    resolve_theta,
    run_convergence,
    slopes_path,
    write_error_csv,
    write_slopes_csv,
    write_sweep_csv,
)
from adipal.problems import TEMPLATES, resolve_problem
from adipal.stability.bounds import (
    BoundResult,
    lemma2_bruteforce_min,
    lemma2_condition,
    lemma2_exact_min,
    prior_do_bound_k3_gamma1,
    round_half_away,
    theorem1_lower_bound,
    theorem2_lower_bound,
)
from adipal.stability.symbol import (
    DEFAULT_RATIOS,
    SweepResult,
    SweepSampling,
    default_angle_count,
    stability_sweep,
    sweep_rows,
)

SHARP_TOL = 1e-12


def _get_version() -> str:
    """Get the adipal version string."""
    from adipal import __version__

    return __version__


def _csv_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _format_theta(value: Optional[float]) -> str:
    return "-" if value is None else round_half_away(value)


def cmd_bounds(k: int, gamma: float, console: Optional[Console] = None) -> List[dict]:
    """Print theorem1 / theorem2 theta bounds for all four schemes.

    For k >= 4 only the necessary bound exists and is flagged as such.

    Args:
        k: Spatial dimension >= 2
        gamma: Mixed-term size in [0, 1]
        console: Output console (a fresh one by default)

    Returns:
        One dict per scheme with keys scheme, theorem1, theorem2, sharp, necessary_only
    """
    console = console or Console()
    rows = []
    for kind in ALL_SCHEMES:
        necessary: BoundResult = theorem2_lower_bound(kind, k, gamma)
        sufficient = theorem1_lower_bound(kind, k, gamma) if k in (2, 3) else None
        rows.append(
            {
                "scheme": kind.value,
                "theorem1": None if sufficient is None else sufficient.theta_min,
                "theorem2": necessary.theta_min,
                "sharp": sufficient is not None
                and abs(sufficient.theta_min - necessary.theta_min) <= SHARP_TOL,
                "necessary_only": necessary.necessary_only,
                "constants": necessary.constants,
            }
        )

    table = Table(title=f"Lower bounds on theta (k={k}, gamma={gamma:g})")
    table.add_column("Scheme", style="bold")
    table.add_column("theorem1 (sufficient)", justify="right")
    table.add_column("theorem2 (necessary)", justify="right")
    table.add_column("Constant", justify="right")
    table.add_column("Flag")
    for row in rows:
        constant = ", ".join(f"{name}={value:.10g}" for name, value in row["constants"].items())
        if row["necessary_only"]:
            flag = "[yellow]necessary-only[/yellow]"
        elif row["sharp"]:
            flag = "[green]sharp[/green]"
        else:
            flag = ""
        table.add_row(
            row["scheme"],
            _format_theta(row["theorem1"]),
            _format_theta(row["theorem2"]),
            constant or "-",
            flag,
        )
    console.print(table)
    if k == 3 and gamma == 1.0:
        console.print(
            f"[dim]Note: the earlier sufficient Do bound for k=3 without gamma was "
            f"3*sqrt(3) - 9/2 = {prior_do_bound_k3_gamma1():.3f}[/dim]"
        )
    if k >= 4:
        console.print(
            "[dim]Sufficient bounds are not known for k >= 4; "
            "theorem2 values are necessary conditions only.[/dim]"
        )
    audit_logger.info(f"BOUNDS: k={k} gamma={gamma:g}")
    return rows


def cmd_sweep(
    kind,
    theta: float,
    problem,
    sampling: SweepSampling,
    out: Optional[Path] = None,
    console: Optional[Console] = None,
) -> SweepResult:
    """Run a stability sweep, optionally write every sample, and print the verdict line."""
    console = console or Console()
    kind = SchemeKind.parse(kind)
    result = stability_sweep(kind, theta, problem.diffusion, problem.beta, sampling)
    if out is not None:
        rows = sweep_rows(kind, theta, problem.diffusion, problem.beta, sampling)
        path = write_sweep_csv(rows, out, problem.k, per_direction=sampling.per_direction)
        console.print(f"[dim]Wrote {result.samples} samples to {path}[/dim]")
    witness = ", ".join(f"{a:.6g}" for a in result.witness_angles)
    ratios = ", ".join(f"{r:.6g}" for r in result.witness_ratios)
    verdict = "[green]stable[/green]" if result.stable else "[red]unstable[/red]"
    console.print(
        f"{kind.value} theta={theta:.6g} on {problem.name}: {verdict} "
        f"max|M|={result.max_abs:.17g} at r=({ratios}) phi=({witness}) "
        f"[dim]({result.samples} samples)[/dim]"
    )
    return result


def _print_slopes(console: Console, slopes: Sequence[SlopeRecord]):
    table = Table(title="Least-squares slopes of log(error) vs log(dt)")
    table.add_column("Scheme", style="bold")
    table.add_column("theta", justify="right")
    table.add_column("m", justify="right")
    table.add_column("slope", justify="right")
    table.add_column("points", justify="right")
    table.add_column("monotone")
    for s in slopes:
        slope = "-" if math.isnan(s.slope) else f"{s.slope:.3f}"
        monotone = "[green]yes[/green]" if s.monotone else "[red]no[/red]"
        table.add_row(s.scheme.value, f"{s.theta:.6g}", str(s.m), slope, str(s.points), monotone)
    console.print(table)


def cmd_converge(
    config: ExperimentConfig, workers: Optional[int] = None, console: Optional[Console] = None
) -> List[ErrorRecord]:
    """Run a convergence study, write the error and slope CSVs, and print the slopes."""
    console = console or Console()
    total = len(config.schemes) * len(config.m) * len(config.step_counts)
    done = []

    with console.status(f"Running {total} integrations...") as status:

        def progress(record: ErrorRecord):
            done.append(record)
            status.update(f"Running integrations... {len(done)}/{total}")

        records = run_convergence(config, workers=workers, progress=progress)

    unstable = sum(1 for r in records if math.isinf(r.error))
    if unstable:
        console.print(f"[yellow]{unstable} run(s) overflowed; their error is recorded as inf[/yellow]")
    slopes = fit_slope(records, config.slope_window)
    _print_slopes(console, slopes)
    if config.out is not None:
        path = write_error_csv(records, config.out)
        spath = write_slopes_csv(slopes, slopes_path(config.out))
        console.print(f"[dim]Wrote {len(records)} records to {path} and slopes to {spath}[/dim]")
    return records


def cmd_lemmas(alpha: float, delta: float, max_u: float, h: float, console: Optional[Console] = None):
    """Compare the nonnegativity criterion for P(u, v, w) with the exact and grid minima."""
    console = console or Console()
    condition = lemma2_condition(alpha, delta)
    exact = lemma2_exact_min(alpha, delta)
    brute = lemma2_bruteforce_min(alpha, delta, max_u=max_u, h=h)
    table = Table(title=f"P(u,v,w) >= 0 on u,v,w >= 0 (alpha={alpha:g}, delta={delta:g})")
    table.add_column("Check", style="bold")
    table.add_column("Value", justify="right")
    table.add_row("criterion holds", "[green]yes[/green]" if condition else "[red]no[/red]")
    table.add_row("exact minimum", f"{exact:.12g}")
    table.add_row(f"grid minimum (U={max_u:g}, h={h:g})", f"{brute:.12g}")
    console.print(table)
    return condition, exact, brute


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adipal",
        description="adipal - ADI schemes for diffusion with mixed derivatives",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  adipal bounds --k 2 --gamma 0.9
  adipal sweep --scheme HV --theta-policy theorem1 --template 2d-gamma --gamma 0.9
  adipal sweep --scheme HV --theta 0.25 --template 2d-gamma --out hv.csv
  adipal converge --template 2d-gamma --m 40 --theta-policy paper-2d --out errors.csv
  adipal converge --config experiment.yaml
  adipal lemmas --alpha 0.5 --delta 0.866
        """,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {_get_version()}",
        help="Show program's version number and exit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="Print the theta lower bounds of all four schemes")
    p.add_argument("--k", type=int, required=True, help="Spatial dimension (>= 2)")
    p.add_argument("--gamma", type=float, required=True, help="Mixed-term size in [0, 1]")

    p = sub.add_parser("sweep", help="Brute-force von Neumann stability sweep")
    p.add_argument("--scheme", required=True, help="Do, CS, MCS or HV")
    theta = p.add_mutually_exclusive_group(required=True)
    theta.add_argument("--theta", type=float, help="Explicit theta")
    theta.add_argument("--theta-policy", help="theorem1, theorem2, fraction:F, value:V, paper-2d, paper-3d")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--template", choices=TEMPLATES, default=None, help="Built-in problem")
    source.add_argument("--problem", type=Path, default=None, help="YAML problem file")
    p.add_argument("--gamma", type=float, default=None, help="Value substituted for gamma")
    p.add_argument("--nphi", type=int, default=None, help="Angles per direction (64 in 2D, 32 in 3D)")
    p.add_argument("--rmin", type=float, default=1e-2, help="Smallest mesh ratio dt/dx^2")
    p.add_argument("--rmax", type=float, default=1e6, help="Largest mesh ratio dt/dx^2")
    p.add_argument("--rcount", type=int, default=len(DEFAULT_RATIOS), help="Number of mesh ratios")
    p.add_argument(
        "--anisotropic",
        action="store_true",
        help="Also sample r_22 = 4 r_11 (and permutations) besides equal ratios",
    )
    p.add_argument("--diagonal-only", action="store_true", help="Only equal angles phi_1 = ... = phi_k")
    p.add_argument("--out", type=Path, default=None, help="CSV file for every sample")

    p = sub.add_parser("converge", help="Global temporal errors against the exact semidiscrete solution")
    p.add_argument("--config", type=Path, default=None, help="YAML experiment file")
    source = p.add_mutually_exclusive_group()
    source.add_argument("--template", choices=TEMPLATES, default=None, help="Built-in problem")
    source.add_argument("--problem", type=Path, default=None, help="YAML problem file")
    p.add_argument("--gamma", type=float, default=None, help="Value substituted for gamma")
    p.add_argument("--m", type=str, default=None, help="Grid points per direction, e.g. 40 or 40,80")
    p.add_argument("--fine", action="store_true", help="Add the m=80 grid (slow in 3D)")
    p.add_argument("--schemes", type=str, default=None, help="Comma-separated list, e.g. Do,HV")
    p.add_argument("--theta-policy", type=str, default=None, help="theta policy (default theorem1)")
    p.add_argument("--t-final", type=float, default=None, help="Final time T (default 5)")
    p.add_argument("--out", type=Path, default=None, help="Error CSV; slopes go to <name>.slopes.csv")
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Parallel integrations. Can also be set via ADIPAL_WORKERS.",
    )

    p = sub.add_parser("lemmas", help="Check the nonnegativity criterion for P(u, v, w)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True, help="In (0, 4]")
    p.add_argument("--max-u", type=float, default=8.0, help="Grid extent U (>= 5)")
    p.add_argument("--h", type=float, default=0.02, help="Grid spacing (<= 0.05)")
    return parser


def _sweep_sampling(args, k: int) -> SweepSampling:
    if args.rcount < 1 or not 0.0 < args.rmin <= args.rmax:
        raise ConfigError("Mesh ratios need 0 < rmin <= rmax and rcount >= 1")
    ratios = tuple(np.logspace(np.log10(args.rmin), np.log10(args.rmax), args.rcount))
    anisotropies = None
    if args.anisotropic:
        anisotropies = ((1.0,) * k,) + tuple(
            tuple(4.0 if i == j else 1.0 for i in range(k)) for j in range(k)
        )
    return SweepSampling(
        n_phi=args.nphi or default_angle_count(k),
        ratios=ratios,
        anisotropies=anisotropies,
        diagonal_only=args.diagonal_only,
    )


def _converge_config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_yaml(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.template is not None:
        overrides.update(template=args.template, problem_path=None)
    if args.problem is not None:
        overrides["problem_path"] = args.problem
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    m = list(base.m)
    if args.m is not None:
        try:
            m = [int(x) for x in _csv_list(args.m)]
        except ValueError:
            raise ConfigError(f"--m expects integers, e.g. 40 or 40,80; got '{args.m}'") from None
    if args.fine and 80 not in m:
        m.append(80)
    overrides["m"] = tuple(m)
    if args.schemes is not None:
        overrides["schemes"] = tuple(_csv_list(args.schemes))
    if args.theta_policy is not None:
        overrides["theta_policy"] = args.theta_policy
    if args.t_final is not None:
        overrides["t_final"] = args.t_final
    if args.out is not None:
        overrides["out"] = args.out
    fields = {name: getattr(base, name) for name in base.__dataclass_fields__}
    fields.update(overrides)
    return ExperimentConfig(**fields)


def main(argv: Optional[Sequence[str]] = None):
    """Main CLI entry point for adipal."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    console = Console()

    try:
        if args.command == "bounds":
            cmd_bounds(args.k, args.gamma, console)
        elif args.command == "sweep":
            template = args.template or "2d-gamma"
            gamma = args.gamma
            if gamma is None and args.problem is None:
                gamma = DEFAULT_GAMMA[template]
            problem = resolve_problem(template, args.problem, gamma)
            kind = SchemeKind.parse(args.scheme)
            if args.theta is not None:
                theta = args.theta
            else:
                theta = resolve_theta(parse_theta_policy(args.theta_policy), kind, problem.k, problem.gamma)
            cmd_sweep(kind, theta, problem, _sweep_sampling(args, problem.k), args.out, console)
        elif args.command == "converge":
            config = _converge_config(args)
            # Priority: CLI arg > env var > default
            workers = args.workers or WORKERS
            cmd_converge(config, workers=workers, console=console)
        elif args.command == "lemmas":
            cmd_lemmas(args.alpha, args.delta, args.max_u, args.h, console)
    except AdipalError as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        audit_logger.warning(f"CLI_ERROR: {args.command}: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
