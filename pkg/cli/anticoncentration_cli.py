"""anticoncentration CLI - run experiments from configuration files."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

# Load environment variables from .env file
load_dotenv()

from anticoncentration import __version__
from anticoncentration.config import BODY_PRESETS, DEFAULT_SAMPLES, DEFAULT_WORKERS
from anticoncentration.exceptions import BudgetExceededError, ConfigurationError, ValidationError
from anticoncentration.geometry import StarBody, estimate_constants
from anticoncentration.harness import BatchError, RunRecord, batch as run_batch, load_config, load_config_dir, run as run_experiment
from anticoncentration.smallball import sharp_lo_report
from anticoncentration.utils.serialization import write_json

app = typer.Typer(
    name="anticoncentration",
    help="anticoncentration - small-ball probabilities, Esseen bounds and GAP structure",
    add_completion=False,
)
console = Console()

EXIT_VALIDATION = 1
EXIT_BUDGET = 2


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _read_document(path: Path, seed: Optional[int], samples: Optional[int]) -> Dict[str, Any]:
    """Load a JSON config and apply command-line overrides."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a JSON object")
    if seed is not None:
        data["seed"] = seed
    if samples is not None:
        data.setdefault("budgets", {})["samples"] = samples
    return data


def _print_headline(record: RunRecord) -> None:
    table = Table(title=f"{record.name} ({record.experiment})", show_header=True, header_style="bold magenta")
    for column in record.columns:
        table.add_column(column, style="cyan" if column == record.columns[0] else None)
    for row in record.headline:
        table.add_row(*[_format(row.get(c)) for c in record.columns])
    console.print(table)
    console.print(f"[dim]seed {record.seed}, {record.wall_time:.2f}s, version {record.version}[/dim]")


def _format(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "[green]yes[/green]" if value else "[red]no[/red]"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _fail(error: Exception) -> None:
    """Print an error and exit with the code of its class."""
    if isinstance(error, BudgetExceededError):
        console.print(f"[red]Budget exceeded:[/red] {error}")
        raise typer.Exit(EXIT_BUDGET)
    field = getattr(error, "field", None)
    if field:
        console.print(f"[red]Invalid configuration:[/red] {error}")
    else:
        console.print(f"[red]Error:[/red] {error}")
    raise typer.Exit(EXIT_VALIDATION)


@app.command()
def run(
    config_file: Path = typer.Argument(..., help="Experiment configuration (JSON)", exists=True, dir_okay=False),
    seed: Optional[int] = typer.Option(None, "--seed", envvar="ANTICONC_SEED", help="Override the config seed"),
    samples: Optional[int] = typer.Option(
        None, "--samples", envvar="ANTICONC_SAMPLES", help="Override the Monte Carlo sample budget"
    ),
    out: Optional[Path] = typer.Option(None, "--out", "-o", envvar="ANTICONC_OUT", help="Output directory"),
    log_level: str = typer.Option("WARNING", "--log-level", help="Logging level"),
):
    """Run one experiment and write its JSON record and CSV headline."""
    _configure_logging(log_level)
    try:
        config = load_config(_read_document(config_file, seed, samples))
        record = run_experiment(config, out)
    except (ValidationError, BudgetExceededError) as e:
        _fail(e)
    _print_headline(record)
    target = out or config.out
    if target is not None:
        console.print(f"[green]✓[/green] Wrote {Path(target) / (record.name + '.json')}")


@app.command()
def batch(
    config_dir: Path = typer.Argument(..., help="Directory of JSON configurations", exists=True, file_okay=False),
    seed: Optional[int] = typer.Option(None, "--seed", envvar="ANTICONC_SEED", help="Override every config seed"),
    samples: Optional[int] = typer.Option(
        None, "--samples", envvar="ANTICONC_SAMPLES", help="Override the Monte Carlo sample budget"
    ),
    out: Optional[Path] = typer.Option(None, "--out", "-o", envvar="ANTICONC_OUT", help="Output directory"),
    workers: int = typer.Option(DEFAULT_WORKERS, "--workers", "-w", min=1, help="Concurrent runs"),
    log_level: str = typer.Option("WARNING", "--log-level", help="Logging level"),
):
    """Run every configuration in a directory; failures do not stop the others."""
    _configure_logging(log_level)
    try:
        paths = load_config_dir(config_dir)
    except ValidationError as e:
        _fail(e)
    if not paths:
        console.print(f"[yellow]No .json configurations in {config_dir}[/yellow]")
        raise typer.Exit(0)

    documents: List[Any] = []
    for path in paths:
        try:
            documents.append(_read_document(path, seed, samples))
        except ConfigurationError:
            documents.append(path)  # reported by the batch as a structured error
    results = run_batch(documents, out, workers)

    table = Table(title="Batch", show_header=True, header_style="bold magenta")
    table.add_column("Config", style="cyan")
    table.add_column("Status")
    table.add_column("Detail")
    errors = 0
    for path, result in zip(paths, results):
        if isinstance(result, BatchError):
            errors += 1
            table.add_row(path.name, "[red]error[/red]", f"{result.error_type}: {result.message}")
        else:
            table.add_row(path.name, "[green]ok[/green]", f"{result.experiment}, {len(result.headline)} rows")
    console.print(table)
    if out is not None:
        summary = [r.to_dict() if isinstance(r, BatchError) else {"name": r.name, "status": "ok"} for r in results]
        write_json(Path(out) / "batch_summary.json", summary)
    if errors:
        console.print(f"\n[yellow]{errors} of {len(results)} configurations failed[/yellow]")
        raise typer.Exit(EXIT_VALIDATION)


@app.command()
def constants(
    preset: Optional[str] = typer.Option(None, "--preset", "-b", help=f"Body preset ({', '.join(BODY_PRESETS)})"),
    p: Optional[float] = typer.Option(None, "--p", help="Exponent of an lp ball"),
    dimension: int = typer.Option(1, "--dimension", "-d", min=1, help="Dimension"),
    samples: int = typer.Option(DEFAULT_SAMPLES, "--samples", envvar="ANTICONC_SAMPLES", help="Monte Carlo samples"),
    seed: int = typer.Option(0, "--seed", envvar="ANTICONC_SEED", help="Random seed"),
):
    """Show mu, gamma and kappa for a body."""
    try:
        if preset is not None:
            if preset not in BODY_PRESETS:
                raise ConfigurationError(f"unknown preset {preset!r}", field="preset")
            body = StarBody.from_spec({**BODY_PRESETS[preset], "d": dimension})
        elif p is not None:
            body = StarBody.lp_ball(p, dimension)
        else:
            raise ConfigurationError("give --preset or --p", field="body")
        result = estimate_constants(body, samples, seed)
    except (ValidationError, BudgetExceededError) as e:
        _fail(e)

    table = Table(title=f"Constants of {body!r}", show_header=True, header_style="bold magenta")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right", style="yellow")
    table.add_column("Std. error", justify="right")
    table.add_column("Method")
    table.add_row("mu", f"{result.mu:.6g}", f"{result.se_mu:.2g}", result.mu_method)
    table.add_row("gamma", f"{result.gamma:.6g}", f"{result.se_gamma:.2g}", result.gamma_method)
    table.add_row("kappa", f"{result.kappa:.6g}", "-", "-")
    table.add_row("C_K", f"{result.quasi_constant:.6g}", "-", "-")
    console.print(table)


@app.command(name="sharp-lo")
def sharp_lo(
    n: int = typer.Argument(..., help="Number of unit vectors"),
    radius: float = typer.Argument(..., help="Radius R"),
):
    """Compare rho for n copies of 1 with 2^-n S(n, floor(R) + 1)."""
    try:
        report = sharp_lo_report(n, radius)
    except ValidationError as e:
        _fail(e)
    status = "[green]exact match[/green]" if report.exact_match else "[red]mismatch[/red]"
    console.print(f"rho   = {report.rho_fraction} ({report.rho:.10g})")
    console.print(f"bound = {report.bound_fraction} ({report.bound:.10g})")
    console.print(f"ratio = {report.ratio:.10g}  {status}")


@app.command()
def version():
    """Show the library version."""
    console.print(f"anticoncentration {__version__}")


def main():
    """Entry point for CLI."""
    app()


if __name__ == "__main__":
    main()
