"""
Command-line interface - thin wrapper around the laboratory modules.

Usage:
    python -m src.cli params --n 5 --scalar-curvature 16 --constant 1
    python -m src.cli period-table --n 4 --grid 10
    python -m src.cli certificate --n 5
    python -m src.cli census --n 5 --scalar-curvature 16 --constant 1 --length 7
    python -m src.cli solve --n 5 --scalar-curvature 16 --constant 1 --length 7 --family 1
    python -m src.cli verify profile.csv --n 5 --scalar-curvature 16 --constant 1
    python -m src.cli yamabe --n 3 --length 7
    python -m src.cli bifurcations --constant 4 --k-max 3

Results go to standard output as CSV or as one JSON envelope
{command, params_echo, data, diagnostics}; logging and errors go to
standard error. Exit codes: 0 success, 2 invalid parameters, 3 numerical
failure, 4 I/O.
"""

from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import csv
import io
import json
import logging
import math
import sys

import click

from src.config import Config, load_config
from src.exceptions import AccuracyError, LaboratoryError, ProfileIOError
from src.orbit_solver import (
    bifurcation_lengths,
    census as metric_census,
    energy_for_period,
    profile as solve_profile,
    constant_profile,
)
from src.period_map import log_spaced_energies, monotonicity_certificate, period_table
from src.potential_core import (
    ModelParams,
    derive_params,
    normalized_system,
    printed_alpha_forms,
)
from src.ricci_check import (
    conformal_length,
    ode_residual,
    parallelism_test,
    profile_from_samples,
    ricci_derivatives,
)
from src.yamabe_family import yamabe_bifurcation_points, yamabe_census, yamabe_threshold

logger = logging.getLogger(__name__)

TABLE_COMMANDS = {"period-table", "certificate", "solve", "bifurcations"}


# ============================================================================
# Output
# ============================================================================

def _format_float(value: float) -> str:
    return repr(float(value))


def _check_finite(value: Any, path: str = "data") -> None:
    if isinstance(value, float) and not math.isfinite(value):
        raise AccuracyError(f"non-finite value {value} in output field {path}", reason="non_finite_output")
    if isinstance(value, dict):
        for key, item in value.items():
            _check_finite(item, f"{path}.{key}")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check_finite(item, f"{path}[{i}]")


def render_csv(rows: List[Dict[str, Any]]) -> str:
    """Header plus one line per row, LF endings, floats in shortest round-trip form."""
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    columns = list(rows[0].keys())
    writer.writerow(columns)
    for row in rows:
        cells = []
        for column in columns:
            value = row.get(column)
            if value is None:
                cells.append("")
            elif isinstance(value, bool):
                cells.append(str(value).lower())
            elif isinstance(value, float):
                cells.append(_format_float(value))
            else:
                cells.append(str(value))
        writer.writerow(cells)
    return buffer.getvalue()


def render_json(command: str, params_echo: dict, data: Any, diagnostics: List[str]) -> str:
    envelope = {
        "command": command,
        "params_echo": params_echo,
        "data": data,
        "diagnostics": diagnostics,
    }
    return json.dumps(envelope, indent=2, allow_nan=False) + "\n"


def emit(ctx: click.Context, data: Any, rows: Optional[List[Dict[str, Any]]], diagnostics: List[str]) -> None:
    """Write the command result in the selected format."""
    fmt = ctx.params.get("fmt") or ("csv" if ctx.command.name in TABLE_COMMANDS else "json")
    _check_finite(data)
    if rows is not None:
        _check_finite(rows, "rows")
    echo = {k: v for k, v in ctx.params.items() if k not in ("fmt",)}
    echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in echo.items()}
    if fmt == "csv" and rows is not None:
        for note in diagnostics:
            click.echo(f"warning: {note}", err=True)
        click.echo(render_csv(rows), nl=False)
    else:
        click.echo(render_json(ctx.command.name, echo, data, diagnostics), nl=False)


# ============================================================================
# Shared options
# ============================================================================

def laboratory_command(func):
    """Map laboratory errors to a one-line reason on stderr and the matching exit code."""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except LaboratoryError as e:
            click.echo(f"error: {e.reason}: {e}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def numeric_options(func):
    """Tolerance overrides and output format."""
    options = [
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
                     help="Output format (csv for tables, json otherwise)."),
        click.option("--quad-tol", type=float, default=None, help="Period quadrature tolerance."),
        click.option("--closure-tol", type=float, default=None, help="Orbit closure tolerance."),
        click.option("--parallel-tol", type=float, default=None, help="Ricci parallelism threshold."),
        click.option("--energy-cutoff", type=float, default=None, help="Energy cutoff as a fraction of c_max."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def model_options(func):
    func = click.option("--constant", "C", type=float, required=True, help="Constant C of the warping ODE.")(func)
    func = click.option("--scalar-curvature", "R", type=float, required=True, help="Scalar curvature R of the fiber.")(func)
    func = click.option("--n", "n", type=int, required=True, help="Dimension of the total space.")(func)
    return func


def resolve_config(quad_tol, closure_tol, parallel_tol, energy_cutoff) -> Config:
    return load_config().with_overrides(
        quad_tol=quad_tol,
        closure_tol=closure_tol,
        parallel_tol=parallel_tol,
        energy_cutoff=energy_cutoff,
    )


def parse_energies(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got '{text}'", param_hint="--energies")


def census_rows(result) -> List[Dict[str, Any]]:
    return [
        {
            "kind": f.kind,
            "j": f.j,
            "c": f.c,
            "minimal_period": f.minimal_period,
            "codazzi_residual": f.residuals.get("codazzi"),
            "parallel": f.parallel,
        }
        for f in result.families
    ]


# ============================================================================
# Commands
# ============================================================================

@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging on standard error.")
def cli(verbose: bool):
    """Periodic warped-product metrics with harmonic curvature."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


@cli.command()
@model_options
@numeric_options
@click.pass_context
@laboratory_command
def params(ctx, n, R, C, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Derived constants alpha, beta, c0 and T_min."""
    model = ModelParams(n=n, R=R, C=C)
    derived = derive_params(model)
    forms = printed_alpha_forms(model)
    diagnostics = []
    for name in ("printed_introduction", "printed_bifurcation"):
        if not math.isclose(forms[name], forms["verified"], rel_tol=1e-12):
            diagnostics.append(f"{name} closed form gives {forms[name]!r}, not the constant solution {forms['verified']!r}")
    data = dict(derived.to_dict(), ode_coefficient=model.ode_coefficient, alpha_forms=forms)
    emit(ctx, data, [derived.to_dict()], diagnostics)


@cli.command(name="period-table")
@click.option("--n", "n", type=int, required=True, help="Dimension of the total space.")
@click.option("--energies", type=str, default=None, help="Comma-separated normalized energies.")
@click.option("--grid", type=int, default=None, help="Number of log-spaced energies.")
@numeric_options
@click.pass_context
@laboratory_command
def period_table_command(ctx, n, energies, grid, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Period map of the normalized system with dT/dc."""
    if (energies is None) == (grid is None):
        raise click.UsageError("give exactly one of --energies and --grid")
    config = resolve_config(quad_tol, closure_tol, parallel_tol, energy_cutoff)
    system = normalized_system(n)
    values = parse_energies(energies) if energies is not None else log_spaced_energies(
        system, grid, high_fraction=min(0.99, config.energy_cutoff)
    )
    table = period_table(system, values, config)
    rows = [sample.to_row() for sample in table.rows]
    diagnostics = [f"c={e.c!r}: {e.reason}: {e.message}" for e in table.errors]
    emit(ctx, {"rows": rows, "errors": [e.__dict__ for e in table.errors]}, rows, diagnostics)


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Dimension of the total space.")
@click.option("--grid-min", type=float, default=0.05, show_default=True)
@click.option("--grid-max", type=float, default=4.0, show_default=True)
@click.option("--grid-count", type=int, default=2000, show_default=True)
@numeric_options
@click.pass_context
@laboratory_command
def certificate(ctx, n, grid_min, grid_max, grid_count, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Monotonicity certificates H and Delta on a grid."""
    report = monotonicity_certificate(n, grid_min, grid_max, grid_count)
    rows = [
        {"x": x, "H": H, "Delta": D}
        for x, H, D in zip(report.grid, report.H_values, report.Delta_values)
    ]
    emit(ctx, report.to_dict(), rows, [report.notes])


@cli.command()
@model_options
@click.option("--length", "T", type=float, required=True, help="Circle length T.")
@numeric_options
@click.pass_context
@laboratory_command
def census(ctx, n, R, C, T, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Count and verify the warped metrics for one circle length."""
    config = resolve_config(quad_tol, closure_tol, parallel_tol, energy_cutoff)
    result = metric_census(ModelParams(n=n, R=R, C=C, T=T), T, config)
    emit(ctx, result.to_dict(), census_rows(result), result.diagnostics)


@cli.command()
@model_options
@click.option("--length", "T", type=float, required=True, help="Circle length T.")
@click.option("--family", "j", type=int, default=1, show_default=True, help="Divisor j (0 for the constant solution).")
@click.option("--samples", type=int, default=None, help="Number of samples (config default if omitted).")
@numeric_options
@click.pass_context
@laboratory_command
def solve(ctx, n, R, C, T, j, samples, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Sample the solution of minimal period T/j over [0, T]."""
    config = resolve_config(quad_tol, closure_tol, parallel_tol, energy_cutoff)
    model = ModelParams(n=n, R=R, C=C, T=T)
    if j < 0:
        raise click.BadParameter(f"family must be non-negative, got {j}", param_hint="--family")
    if j == 0:
        prof = constant_profile(model, T, samples or config.profile_samples)
    else:
        derived = derive_params(model)
        c = energy_for_period(normalized_system(n), T / j * derived.beta, config, config.census_cutoff)
        prof = solve_profile(model, c, T, samples, config=config)
    columns = prof.to_columns()
    names = ("t", "h", "h1", "h2", "h3")
    rows = [dict(zip(names, values)) for values in zip(*(columns[k].tolist() for k in names))]
    data = {"j": j, "c": prof.c, "closure": prof.closure_distance, "columns": {k: columns[k].tolist() for k in names}}
    emit(ctx, data, rows, [])


def read_profile(path: Path):
    """Read a CSV with header t,h (extra columns ignored)."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if not reader.fieldnames or "t" not in reader.fieldnames or "h" not in reader.fieldnames:
                raise ProfileIOError(f"profile file {path} needs a header with columns t and h")
            t, h = [], []
            for line, row in enumerate(reader, start=2):
                try:
                    t.append(float(row["t"]))
                    h.append(float(row["h"]))
                except (TypeError, ValueError):
                    raise ProfileIOError(f"profile file {path}: unparsable row {line}")
    except OSError as e:
        if isinstance(e, ProfileIOError):
            raise
        raise ProfileIOError(f"cannot read profile file {path}: {e.strerror or e}")
    return t, h


@cli.command()
@click.argument("profile_file", type=click.Path(path_type=Path))
@model_options
@numeric_options
@click.pass_context
@laboratory_command
def verify(ctx, profile_file, n, R, C, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Ricci residuals of a profile read from a t,h CSV file."""
    config = resolve_config(quad_tol, closure_tol, parallel_tol, energy_cutoff)
    t, h = read_profile(profile_file)
    prof = profile_from_samples(t, h, ModelParams(n=n, R=R, C=C))
    fields_ = ricci_derivatives(prof)
    ode = ode_residual(prof)
    verdict = parallelism_test(prof, config.parallel_tol)
    data = {
        "samples": len(t),
        "T": prof.T,
        "codazzi": fields_.sup_norms["codazzi"],
        "rho_000": fields_.sup_norms["rho_000"],
        "rho_0ij": fields_.sup_norms["rho_0ij"],
        "rho_i0j": fields_.sup_norms["rho_i0j"],
        "ode_closed": ode.closed,
        "ode_finite_difference": ode.finite_difference,
        "ode_fourth_order": ode.fourth_order,
        "parallel": verdict.verdict,
        "parallel_sup": verdict.sup_norm,
        "conformal_length": conformal_length(prof),
    }
    emit(ctx, data, [data], [])


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Dimension of the total space.")
@click.option("--length", "T", type=float, required=True, help="Circle length T.")
@numeric_options
@click.pass_context
@laboratory_command
def yamabe(ctx, n, T, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Threshold and census of pseudo-cylindric metrics."""
    config = resolve_config(quad_tol, closure_tol, parallel_tol, energy_cutoff)
    result = yamabe_census(n, T, config)
    data = dict(result.to_dict(), threshold=yamabe_threshold(n))
    rows = [
        {"kind": f.kind, "j": f.j, "c": f.c, "minimal_period": f.minimal_period,
         "closure": f.residuals.get("closure"), "yamabe_residual": f.residuals.get("yamabe")}
        for f in result.families
    ]
    emit(ctx, data, rows, result.diagnostics)


@cli.command()
@click.option("--constant", "C", type=float, default=None, help="Constant C of the warping ODE.")
@click.option("--k-max", type=int, required=True, help="Number of bifurcation points.")
@click.option("--yamabe", "include_yamabe", is_flag=True, help="Also list 2 pi k / sqrt(n-2).")
@click.option("--n", "n", type=int, default=None, help="Dimension (required with --yamabe).")
@numeric_options
@click.pass_context
@laboratory_command
def bifurcations(ctx, C, k_max, include_yamabe, n, fmt, quad_tol, closure_tol, parallel_tol, energy_cutoff):
    """Circle lengths where non-constant branches appear."""
    if C is None and not include_yamabe:
        raise click.UsageError("give --constant, --yamabe, or both")
    if include_yamabe and n is None:
        raise click.UsageError("--yamabe needs --n")
    rows = []
    if C is not None:
        rows.extend({"system": "derdzinski", "k": k, "T_k": T_k}
                    for k, T_k in enumerate(bifurcation_lengths(C, k_max), start=1))
    if include_yamabe:
        rows.extend({"system": "yamabe", "k": p.k, "T_k": p.T_k} for p in yamabe_bifurcation_points(n, k_max))
    emit(ctx, {"points": rows}, rows, [])


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the CLI on argv and return the process exit code.

    Usage errors are reported like laboratory errors, as one line
    `error: usage: <message>` on stderr with exit code 2.
    """
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="warped-metrics", standalone_mode=False)
    except click.ClickException as e:
        click.echo(f"error: usage: {_one_line(e.format_message())}", err=True)
        return 2 if isinstance(e, click.UsageError) else e.exit_code
    except click.Abort:
        click.echo("error: aborted: interrupted", err=True)
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else (0 if e.code is None else 1)
    return result if isinstance(result, int) else 0


def _one_line(message: str) -> str:
    return " ".join(message.split())


if __name__ == "__main__":
    sys.exit(run())
