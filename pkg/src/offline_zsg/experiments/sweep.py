"""Experiment sweeps over sample sizes, seeds, learners and bonus constants."""

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from ..config import ExperimentConfig, Settings, get_settings
from ..core.exact_eval import CoverageReport, coverage_report, duality_gap, nash_vi
from ..core.game_model import ExplorationPolicy, Game, GameDims
from ..core.offline_data import OfflineDataset, sample_dataset
from ..core.pnvi_bernstein import run_pnvi_bernstein
from ..core.pnvi_hoeffding import DEFAULT_HOEFFDING_CONSTANT, PnviOutput, run_pnvi_hoeffding
from ..storage.json_codec import pnvi_output_to_dict, write_json
from ..storage.results_csv import (
    RowKey,
    SweepRow,
    read_results,
    read_timings,
    write_results,
    write_timings,
)
from ..utils.exceptions import ConfigurationError, OfflineZSGError
from ..utils.logger import get_logger
from .rates import burn_in_samples, theory_rate
from .sources import resolve_game, resolve_rho

logger = get_logger("sweep")

ALGORITHMS = ("hoeffding", "bernstein")


def run_learner(
    algorithm: str,
    ds: OfflineDataset,
    dims: GameDims,
    delta: float,
    bonus_scale: float,
    eps_ne: float,
    seed: int,
    deadline: Optional[float] = None,
    bit_generator: str = "philox",
    hoeffding_constant: float = DEFAULT_HOEFFDING_CONSTANT,
) -> PnviOutput:
    """
    Run one learner; ``bonus_scale`` is the Hoeffding constant or the Bernstein c.

    Raises:
        ConfigurationError: On an unknown algorithm
    """
    if algorithm == "hoeffding":
        return run_pnvi_hoeffding(
            ds, dims, delta, eps_ne=eps_ne, seed=seed, constant=bonus_scale,
            deadline=deadline, bit_generator=bit_generator,
        )
    if algorithm == "bernstein":
        return run_pnvi_bernstein(
            ds, dims, delta, c=bonus_scale, eps_ne=eps_ne, seed=seed,
            hoeffding_constant=hoeffding_constant, deadline=deadline, bit_generator=bit_generator,
        )
    raise ConfigurationError(f"Unknown algorithm '{algorithm}'. Must be one of {ALGORITHMS}")


@dataclass
class RowTask:
    """All learner runs sharing one dataset (n, seed)."""

    game: Game
    rho: ExplorationPolicy
    n: int
    seed: int
    runs: List[Tuple[str, float]]
    delta: float
    eps_ne: float
    hoeffding_constant: float
    timeout_seconds: float
    bit_generator: str
    c_star: float
    d_m: float
    strategies_dir: Optional[Path] = None


def strategy_file(directory: Path, algorithm: str, bonus_scale: float, n: int, seed: int) -> Path:
    return Path(directory) / f"{algorithm}_scale{bonus_scale:g}_n{n}_seed{seed}.json"


def execute_task(task: RowTask) -> List[Tuple[SweepRow, float]]:
    """
    Sample one dataset and run every requested learner on it.

    Any error is recorded on its row; nothing is raised.

    Returns:
        (row, runtime_seconds) per run
    """
    results: List[Tuple[SweepRow, float]] = []
    common = dict(n=task.n, seed=task.seed, c_star=task.c_star, d_m=task.d_m)

    try:
        ds = sample_dataset(task.game, task.rho, task.n, task.seed, bit_generator=task.bit_generator)
    except Exception as e:
        if not isinstance(e, OfflineZSGError):
            logger.exception(f"Sampling n={task.n}, seed={task.seed} failed unexpectedly")
        error = f"sampling: {type(e).__name__}: {e}"
        return [
            (SweepRow(algorithm, scale, status="failed", error=error, **common), 0.0)
            for algorithm, scale in task.runs
        ]

    for algorithm, scale in task.runs:
        started = time.monotonic()
        try:
            output = run_learner(
                algorithm,
                ds,
                task.game.dims,
                task.delta,
                scale,
                task.eps_ne,
                task.seed,
                deadline=started + task.timeout_seconds,
                bit_generator=task.bit_generator,
                hoeffding_constant=task.hoeffding_constant,
            )
            gap = duality_gap(task.game, output.pair())
            s1 = task.game.initial_state
            row = SweepRow(
                algorithm,
                scale,
                status="ok",
                gap=gap,
                V_low_1=float(output.V_low.V[0, s1]),
                V_up_1=float(output.V_up.V[0, s1]),
                **common,
            )
            if task.strategies_dir is not None:
                write_json(
                    pnvi_output_to_dict(output),
                    strategy_file(task.strategies_dir, algorithm, scale, task.n, task.seed),
                )
        except OfflineZSGError as e:
            row = SweepRow(algorithm, scale, status="failed", error=f"{type(e).__name__}: {e}", **common)
        except Exception as e:
            logger.exception(f"{algorithm} at n={task.n}, seed={task.seed} failed unexpectedly")
            row = SweepRow(algorithm, scale, status="failed", error=f"{type(e).__name__}: {e}", **common)
        results.append((row, time.monotonic() - started))
    return results


@dataclass
class SweepResult:
    """Rows of a finished sweep and where they were written."""

    rows: List[SweepRow]
    path: Path
    timings: Dict[RowKey, float] = field(default_factory=dict)
    coverage: Optional[CoverageReport] = None
    recomputed: int = 0

    @property
    def failed_rows(self) -> List[SweepRow]:
        return [row for row in self.rows if not row.ok]

    def rows_for(self, algorithm: str, bonus_scale: Optional[float] = None) -> List[SweepRow]:
        return [
            row
            for row in self.rows
            if row.algorithm == algorithm and (bonus_scale is None or row.bonus_scale == bonus_scale)
        ]


class SweepRunner:
    """Orchestrate a resumable, deterministic sweep."""

    def __init__(self, config: ExperimentConfig, settings: Optional[Settings] = None):
        """
        Initialize sweep runner.

        Args:
            config: Validated experiment configuration
            settings: Application settings (uses global settings if not provided)
        """
        self.config = config
        self.settings = settings or get_settings()

    def planned_keys(self) -> List[RowKey]:
        """Every (algorithm, bonus_scale, n, seed) the config asks for, sorted."""
        keys = [
            (algorithm, float(scale), int(n), int(seed))
            for algorithm in self.config.algorithms()
            for scale in self.config.bonus_scales(algorithm)
            for n in self.config.n_grid
            for seed in self.config.seeds
        ]
        return sorted(keys)

    def _existing_rows(self, planned: List[RowKey]) -> Dict[RowKey, SweepRow]:
        path = Path(self.config.output)
        if not path.exists():
            return {}
        wanted = set(planned)
        existing = {row.key: row for row in read_results(path) if row.key in wanted}
        logger.info(f"✓ Resuming: {len(existing)} of {len(planned)} rows already in {path}")
        return existing

    def _tasks(
        self, missing: List[RowKey], game: Game, rho: ExplorationPolicy, coverage: CoverageReport
    ) -> List[RowTask]:
        grouped: Dict[Tuple[int, int], List[Tuple[str, float]]] = {}
        for algorithm, scale, n, seed in missing:
            grouped.setdefault((n, seed), []).append((algorithm, scale))
        strategies_dir = None
        if self.config.save_strategies:
            out = Path(self.config.output)
            strategies_dir = out.parent / f"{out.stem}_strategies"
        return [
            RowTask(
                game=game,
                rho=rho,
                n=n,
                seed=seed,
                runs=runs,
                delta=self.config.delta,
                eps_ne=self.config.eps_ne,
                hoeffding_constant=self.config.hoeffding_constant,
                timeout_seconds=self.config.run_timeout_seconds,
                bit_generator=self.settings.rng_bit_generator,
                c_star=coverage.c_star,
                d_m=coverage.d_m,
                strategies_dir=strategies_dir,
            )
            for (n, seed), runs in sorted(grouped.items())
        ]

    def run(self, on_progress: Optional[Callable[[int, int], None]] = None) -> SweepResult:
        """
        Run every missing row and write the sorted CSV after each finished task.

        Args:
            on_progress: Called with (finished_tasks, total_tasks)

        Returns:
            SweepResult with all planned rows

        Raises:
            ConfigurationError: If the game or exploration source is invalid
        """
        cfg = self.config
        out = Path(cfg.output)
        logger.info(f"Starting sweep -> {out}")
        logger.info("=" * 60)

        logger.info("Step 1/4: Resolving game and exploration policy...")
        game = resolve_game(cfg.game, bit_generator=self.settings.rng_bit_generator)
        rho = resolve_rho(cfg.rho, game)
        dims = game.dims
        logger.info(
            f"✓ Game '{game.name}' (S={dims.S}, A={dims.A}, B={dims.B}, H={dims.H}, "
            f"turn_based={dims.turn_based}), exploration '{rho.name}'"
        )

        logger.info("Step 2/4: Exact NE and coverage diagnostics...")
        solution = nash_vi(game, self.settings.eps_ne_exact)
        coverage = coverage_report(game, rho, solution.pi_star, self.settings.coverage_threshold)
        logger.info(
            f"✓ V* = {solution.values.V[0, game.initial_state]:.6g}, C* = {coverage.c_star:.6g}, "
            f"d_m = {coverage.d_m:.3g}"
        )
        for algorithm in cfg.algorithms():
            rate = theory_rate(algorithm, turn_based=game.turn_based)
            burn_in = burn_in_samples(
                algorithm, dims.S, dims.A, dims.B, dims.H, c_star=coverage.c_star, turn_based=game.turn_based
            )
            logger.info(
                f"  {algorithm}: expected gap ~ {rate.expression}, burn-in n >~ {rate.burn_in} ({burn_in:.3g})"
            )

        logger.info("Step 3/4: Planning rows...")
        planned = self.planned_keys()
        rows = self._existing_rows(planned)
        timings = {k: v for k, v in read_timings(out).items() if k in rows}
        missing = [key for key in planned if key not in rows]
        tasks = self._tasks(missing, game, rho, coverage)
        logger.info(f"✓ {len(missing)} rows to compute in {len(tasks)} datasets")

        logger.info(f"Step 4/4: Running learners ({cfg.workers} workers)...")
        finished = 0

        def collect(results: List[Tuple[SweepRow, float]]) -> None:
            nonlocal finished
            for row, runtime in results:
                rows[row.key] = row
                timings[row.key] = runtime
                if not row.ok:
                    logger.warning(f"Row {row.key} failed: {row.error}")
            write_results(rows.values(), out)
            write_timings(timings, out)
            finished += 1
            if on_progress:
                on_progress(finished, len(tasks))

        if cfg.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [pool.submit(execute_task, task) for task in tasks]
                for future in as_completed(futures):
                    collect(future.result())
        else:
            for task in tasks:
                collect(execute_task(task))

        if not tasks:
            write_results(rows.values(), out)

        result = SweepResult(
            rows=sorted(rows.values(), key=lambda row: row.key),
            path=out,
            timings=timings,
            coverage=coverage,
            recomputed=len(missing),
        )
        logger.info("=" * 60)
        if result.failed_rows:
            logger.warning(f"Sweep finished with {len(result.failed_rows)} failed rows")
        else:
            logger.info(f"✓ Sweep completed: {len(result.rows)} rows")
        return result


def run_sweep(config: ExperimentConfig, settings: Optional[Settings] = None) -> SweepResult:
    """Run ``config`` with a fresh SweepRunner."""
    return SweepRunner(config, settings).run()
