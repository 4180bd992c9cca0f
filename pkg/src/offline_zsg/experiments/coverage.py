"""Coverage diagnosis of a (game, exploration policy) pair."""

from pathlib import Path
from typing import NamedTuple, Optional, Union

from ..config import Settings, get_settings
from ..core.exact_eval import CoverageReport, coverage_report, nash_vi
from ..core.game_model import ExplorationPolicy, Game
from ..storage.json_codec import coverage_report_to_dict, write_json
from ..utils.logger import get_logger
from .sources import GameSource, resolve_game, resolve_rho

logger = get_logger("coverage")


class CoverageDiagnosis(NamedTuple):
    game: Game
    rho: ExplorationPolicy
    nash_value: float
    report: CoverageReport


def diagnose_coverage(
    game: Union[Game, GameSource],
    rho: Union[ExplorationPolicy, str, Path],
    out: Optional[Path] = None,
    settings: Optional[Settings] = None,
) -> CoverageDiagnosis:
    """
    Solve the game exactly and report which coverage assumptions the policy meets.

    Args:
        game: Game or game source (path, hardness1, hardness2, random:...)
        rho: Exploration policy or its source (path, uniform, hardness)
        out: Optional JSON path for the report
        settings: Application settings

    Returns:
        CoverageDiagnosis with the report and the exact NE value

    Raises:
        GameFileError: If a file cannot be parsed (with its line number)
    """
    settings = settings or get_settings()
    if not isinstance(game, Game):
        game = resolve_game(game, bit_generator=settings.rng_bit_generator)
    if not isinstance(rho, ExplorationPolicy):
        rho = resolve_rho(rho, game)

    solution = nash_vi(game, settings.eps_ne_exact)
    report = coverage_report(game, rho, solution.pi_star, settings.coverage_threshold)
    if report.witness is not None:
        logger.info(f"Unilateral coverage fails: {report.witness.describe()}")

    if out is not None:
        data = coverage_report_to_dict(report)
        data["game"] = game.name
        data["rho"] = rho.name
        data["nash_value"] = solution.values.initial_value(game.initial_state)
        write_json(data, out)
        logger.info(f"✓ Coverage report saved: {out}")

    return CoverageDiagnosis(game, rho, solution.values.initial_value(game.initial_state), report)
