"""Command-line interface for the offline zero-sum game toolkit."""

import io
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Tuple

import click
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .config import ExperimentConfig, get_settings
from .core.exact_eval import duality_gap, nash_vi
from .core.offline_data import sample_dataset
from .experiments.coverage import diagnose_coverage
from .experiments.hardness import reproduce_hardness
from .experiments.rates import fit_sweep, median_gaps, theory_rate
from .experiments.sources import resolve_game, resolve_rho
from .experiments.sweep import ALGORITHMS, SweepRunner, run_learner
from .storage.dataset_csv import read_dataset, write_dataset
from .storage.json_codec import (
    load_pair,
    nash_solution_to_dict,
    pnvi_output_to_dict,
    write_json,
)
from .storage.results_csv import read_results
from .utils.exceptions import (
    ConfigurationError,
    GameFileError,
    InvalidGameError,
    OfflineZSGError,
)
from .utils.logger import get_logger, setup_logging

# Rich's legacy Win32 renderer cannot print spinners or check marks on cp1252 consoles.
if sys.platform == "win32":
    for stream_name in ("stdout", "stderr"):
        stream = getattr(sys, stream_name)
        if hasattr(stream, "reconfigure"):
            stream.reconfigure(encoding="utf-8", errors="replace")
        elif hasattr(stream, "buffer"):
            setattr(
                sys,
                stream_name,
                io.TextIOWrapper(stream.buffer, encoding="utf-8", errors="replace"),
            )

console = Console()
logger = get_logger("cli")

EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTERRUPTED = 130

CONFIG_ERRORS = (ConfigurationError, GameFileError, InvalidGameError)


@contextmanager
def cli_errors(verbose: bool):
    """Map toolkit errors to exit codes: 2 for configuration input, 1 otherwise, 130 on Ctrl-C."""
    try:
        yield
    except CONFIG_ERRORS as e:
        console.print(f"\n[bold red]Configuration error:[/bold red] {e}", style="red")
        if verbose:
            console.print_exception()
        sys.exit(EXIT_CONFIG)
    except OfflineZSGError as e:
        console.print(f"\n[bold red]Error:[/bold red] {e}", style="red")
        if verbose:
            console.print_exception()
        sys.exit(EXIT_FAILED)
    except KeyboardInterrupt:
        console.print("\n\n[yellow]Operation cancelled by user[/yellow]")
        sys.exit(EXIT_INTERRUPTED)


def _seed(seed: Optional[int]) -> int:
    return seed if seed is not None else get_settings().seed


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6g}"


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose logging")
@click.pass_context
def cli(ctx: click.Context, verbose: bool):
    """
    Learn Nash equilibria of tabular zero-sum Markov games from offline data.

    Example usage:

        \b
        # Exact NE and coverage of the hard instance
        offline-zsg solve-exact --game hardness1
        offline-zsg coverage --game hardness1 --rho hardness

        \b
        # Sample, learn and evaluate
        offline-zsg sample --game random:seed=1,S=3,A=2,B=2,H=3 --rho uniform --n 10000 --out data.csv
        offline-zsg learn --alg bernstein --game random:seed=1,S=3,A=2,B=2,H=3 --data data.csv

        \b
        # Rate sweep and fit
        offline-zsg sweep --config sweep.json --workers 4
        offline-zsg fit-rate --results sweep.csv
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    with cli_errors(verbose):
        settings = get_settings()
        log_file = settings.get_log_file_path() if not verbose else None
        setup_logging(level=settings.log_level, log_file=log_file, verbose=verbose)


game_option = click.option("--game", "game_source", required=True, help="Game file, hardness1, hardness2 or random:...")
rho_option = click.option("--rho", "rho_source", default="uniform", show_default=True, help="Exploration policy file, uniform or hardness")
seed_option = click.option("--seed", type=int, default=None, help="Seed (default: OFFLINE_ZSG_SEED)")
eps_option = click.option("--eps-ne", type=float, default=None, help="Matrix-game exploitability tolerance")


@cli.command("solve-exact")
@game_option
@eps_option
@click.option("--out", type=click.Path(path_type=Path), help="Write pi_star and values as JSON")
@click.pass_context
def solve_exact(ctx, game_source: str, eps_ne: Optional[float], out: Optional[Path]):
    """Solve a game exactly by Nash value iteration."""
    with cli_errors(ctx.obj["verbose"]):
        settings = get_settings()
        game = resolve_game(game_source, bit_generator=settings.rng_bit_generator)
        solution = nash_vi(game, eps_ne or settings.eps_ne_exact)
        value = solution.values.initial_value(game.initial_state)
        gap = duality_gap(game, solution.pi_star)

        console.print(f"[bold]V*_1(s1)[/bold] = {value:.10g}   [dim]Gap(pi*) = {gap:.3g}[/dim]")
        if out:
            data = nash_solution_to_dict(solution)
            data["game"] = game.name
            write_json(data, out)
            console.print(f"[cyan]Saved to:[/cyan] {out}")


@cli.command()
@game_option
@rho_option
@click.option("--n", "n", type=int, required=True, help="Number of episodes")
@seed_option
@click.option("--out", type=click.Path(path_type=Path), required=True, help="Dataset CSV path")
@click.pass_context
def sample(ctx, game_source: str, rho_source: str, n: int, seed: Optional[int], out: Path):
    """Sample an offline dataset from an exploration policy."""
    with cli_errors(ctx.obj["verbose"]):
        settings = get_settings()
        game = resolve_game(game_source, bit_generator=settings.rng_bit_generator)
        rho = resolve_rho(rho_source, game)
        ds = sample_dataset(game, rho, n, _seed(seed), bit_generator=settings.rng_bit_generator)
        write_dataset(ds, out)
        console.print(f"[green]✓[/green] {ds.n_episodes} episodes written to {out}")


@cli.command()
@click.option("--alg", "algorithm", type=click.Choice(ALGORITHMS), required=True)
@game_option
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True, help="Dataset CSV")
@click.option("--delta", type=float, default=None, help="Failure probability")
@click.option("--c", "c", type=float, default=None, help="Bernstein constant")
@click.option("--hoeffding-constant", type=float, default=None, help="Hoeffding bonus constant")
@eps_option
@seed_option
@click.option("--out", type=click.Path(path_type=Path), help="Write the learner output as JSON")
@click.pass_context
def learn(ctx, algorithm, game_source, data, delta, c, hoeffding_constant, eps_ne, seed, out):
    """Run a pessimistic learner on a dataset and report its exact duality gap."""
    with cli_errors(ctx.obj["verbose"]):
        settings = get_settings()
        game = resolve_game(game_source, bit_generator=settings.rng_bit_generator)
        ds = read_dataset(data, dims=game.dims)
        hoeffding_constant = hoeffding_constant or settings.hoeffding_constant
        scale = hoeffding_constant if algorithm == "hoeffding" else (c or settings.bernstein_c)

        with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
            task = progress.add_task(f"Running {algorithm} on {ds.n_episodes} episodes...", total=None)
            output = run_learner(
                algorithm,
                ds,
                game.dims,
                delta or settings.delta,
                scale,
                eps_ne or settings.eps_ne_learner,
                _seed(seed),
                bit_generator=settings.rng_bit_generator,
                hoeffding_constant=hoeffding_constant,
            )
            progress.update(task, description="[green]✓ Complete!")

        s1 = game.initial_state
        gap = duality_gap(game, output.pair())
        console.print(
            f"V_low_1 = {output.V_low.V[0, s1]:.10g}   V_up_1 = {output.V_up.V[0, s1]:.10g}   "
            f"[bold]Gap = {gap:.6g}[/bold]"
        )
        if out:
            write_json(pnvi_output_to_dict(output), out)
            console.print(f"[cyan]Saved to:[/cyan] {out}")


@cli.command("eval-gap")
@game_option
@click.option("--strategies", type=click.Path(exists=True, path_type=Path), required=True, help="Strategy pair JSON")
@click.pass_context
def eval_gap(ctx, game_source: str, strategies: Path):
    """Exact duality gap of a stored strategy pair."""
    with cli_errors(ctx.obj["verbose"]):
        game = resolve_game(game_source, bit_generator=get_settings().rng_bit_generator)
        pi = load_pair(strategies)
        console.print(f"Gap = {duality_gap(game, pi):.17g}")


@cli.command()
@game_option
@rho_option
@click.option("--out", type=click.Path(path_type=Path), help="Write the report as JSON")
@click.pass_context
def coverage(ctx, game_source: str, rho_source: str, out: Optional[Path]):
    """Diagnose which coverage assumptions an exploration policy satisfies."""
    with cli_errors(ctx.obj["verbose"]):
        diagnosis = diagnose_coverage(game_source, rho_source, out=out)
        report = diagnosis.report

        table = Table(title=f"Coverage of '{diagnosis.rho.name}' on '{diagnosis.game.name}'")
        table.add_column("Quantity")
        table.add_column("Value", justify="right")
        table.add_row("V*_1(s1)", _fmt(diagnosis.nash_value))
        table.add_row("C* (returned NE)", _fmt(report.c_star))
        table.add_row("d_m", _fmt(report.d_m))
        table.add_row("d_m over covered cells", _fmt(report.d_m_positive))
        table.add_row("Assumption 1 (single strategy)", str(report.assumption1_holds))
        table.add_row("Assumption 2 (unilateral)", str(report.assumption2_holds))
        table.add_row("Assumption 3 (uniform)", str(report.assumption3_holds))
        console.print(table)
        if report.witness is not None:
            console.print(Panel(report.witness.describe(), title="Witness", expand=False))


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), help="Experiment config JSON")
@click.option("--game", "game_source", default=None, help="Game source")
@click.option("--rho", "rho_source", default=None, help="Exploration source")
@click.option("--alg", "algorithm", type=click.Choice(ALGORITHMS + ("both",)), default=None)
@click.option("--n", "n_grid", type=int, multiple=True, help="Sample size (repeatable)")
@click.option("--seed", "seeds", type=int, multiple=True, help="Seed (repeatable)")
@click.option("--delta", type=float, default=None)
@click.option("--c", "c", type=float, default=None)
@eps_option
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Results CSV")
@click.pass_context
def sweep(ctx, config_path, game_source, rho_source, algorithm, n_grid, seeds, delta, c, eps_ne, workers, out):
    """Run (or resume) a sweep over sample sizes, seeds and learners."""
    with cli_errors(ctx.obj["verbose"]):
        overrides = dict(
            game=game_source,
            rho=rho_source,
            algorithm=algorithm,
            n_grid=list(n_grid) or None,
            seeds=list(seeds) or None,
            delta=delta,
            c=c,
            eps_ne=eps_ne,
            workers=workers,
            output=out,
        )
        if config_path:
            config = ExperimentConfig.from_file(config_path).with_overrides(**overrides)
        else:
            config = ExperimentConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})

        logger.debug(f"Sweep config: {config.model_dump(mode='json')}")
        runner = SweepRunner(config)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            console=console,
        ) as progress:
            task = progress.add_task("Sweeping...", total=None)

            def on_progress(done: int, total: int) -> None:
                progress.update(task, completed=done, total=total)

            result = runner.run(on_progress=on_progress)
            progress.update(task, description="[green]✓ Complete!")

        console.print(f"\n[cyan]Results:[/cyan] {result.path} ({len(result.rows)} rows, {result.recomputed} computed)")
        if result.failed_rows:
            console.print(f"[bold red]{len(result.failed_rows)} rows failed[/bold red]")
            sys.exit(EXIT_FAILED)


@cli.command()
@click.option("--n", "n", type=int, default=1_000_000, show_default=True)
@seed_option
@click.option("--delta", type=float, default=None)
@click.option("--c", "c", type=float, default=None)
@eps_option
@click.option("--out", type=click.Path(path_type=Path), help="Write the report as JSON")
@click.pass_context
def hardness(ctx, n: int, seed: Optional[int], delta, c, eps_ne, out: Optional[Path]):
    """Reproduce the lower bound under single-strategy coverage."""
    with cli_errors(ctx.obj["verbose"]):
        settings = get_settings()
        report = reproduce_hardness(
            n,
            _seed(seed),
            delta or settings.delta,
            c=c or settings.bernstein_c,
            hoeffding_constant=settings.hoeffding_constant,
            eps_ne=eps_ne,
        )
        table = Table(title=f"Hard instance, n={n}")
        for column in ("Learner", "gap1", "gap2", "sum (>= 0.5)", "max (>= 0.25)"):
            table.add_column(column, justify="right")
        for row in report.learners:
            table.add_row(
                row.algorithm,
                _fmt(row.gap1),
                _fmt(row.gap2),
                f"{_fmt(row.gap_sum)} {'✓' if row.sum_holds else '✗'}",
                f"{_fmt(row.gap_max)} {'✓' if row.max_holds else '✗'}",
            )
        console.print(table)
        console.print(f"Empirical models identical under both games: {report.models_identical}")

        if out:
            write_json(
                {
                    "n": report.n,
                    "seed": report.seed,
                    "delta": report.delta,
                    "models_identical": report.models_identical,
                    "holds": report.holds,
                    "learners": [
                        {
                            "algorithm": r.algorithm,
                            "gap1": r.gap1,
                            "gap2": r.gap2,
                            "sum": r.gap_sum,
                            "max": r.gap_max,
                            "sum_holds": r.sum_holds,
                            "max_holds": r.max_holds,
                        }
                        for r in report.learners
                    ],
                },
                out,
            )
        if not report.holds:
            sys.exit(EXIT_FAILED)


@cli.command("fit-rate")
@click.option("--results", type=click.Path(exists=True, path_type=Path), required=True, help="Sweep CSV")
@click.option("--alg", "algorithm", type=click.Choice(ALGORITHMS), default=None)
@click.pass_context
def fit_rate(ctx, results: Path, algorithm: Optional[str]):
    """Fit log(median gap) against log(n) per learner and bonus constant."""
    with cli_errors(ctx.obj["verbose"]):
        rows = read_results(results)
        keys: Tuple = tuple(
            sorted({(r.algorithm, r.bonus_scale) for r in rows if algorithm in (None, r.algorithm)})
        )
        if not keys:
            raise ConfigurationError(f"No rows for the requested learner in {results}")

        table = Table(title=f"Rate fits for {results.name}")
        for column in ("Learner", "Bonus scale", "Points", "Slope", "R^2", "Theory"):
            table.add_column(column, justify="right")
        for alg, scale in keys:
            fit = fit_sweep(rows, alg, scale)
            rate = theory_rate(alg)
            table.add_row(
                alg,
                f"{scale:g}",
                str(len(median_gaps(rows, alg, scale))),
                f"{fit.slope:.4f}",
                f"{fit.r2:.3f}",
                f"{rate.exponent:+.1f}  {rate.expression}",
            )
        console.print(table)


def main():
    """Entry point for CLI."""
    cli(obj={})


if __name__ == "__main__":
    main()
