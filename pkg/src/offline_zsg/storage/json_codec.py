"""Structured-text (JSON) codecs for games, strategies, value tables and reports."""

import json
import math
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from ..core.exact_eval import CoverageReport, CoverageWitness, NashSolution, ValueTables
from ..core.game_model import (
    ExplorationPolicy,
    Game,
    Player,
    Strategy,
    StrategyPair,
    TurnBasedMinStrategy,
    validate_game,
)
from ..core.pnvi_hoeffding import PnviOutput
from ..utils.exceptions import (
    GameFileError,
    InvalidDimensionError,
    InvalidGameError,
    InvalidStrategyError,
)
from ..utils.logger import get_logger

logger = get_logger("json_codec")

AnyStrategy = Union[Strategy, TurnBasedMinStrategy, StrategyPair, ExplorationPolicy]


def _float_or_inf(value: float) -> Union[float, str]:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _parse_float(value: Union[float, str]) -> float:
    return float(value)


# Games


def game_to_dict(game: Game) -> Dict[str, Any]:
    """Game as {"S","A","B","H","s1","turn_based","r","P"} plus its name."""
    return {
        "name": game.name,
        "S": game.num_states,
        "A": game.num_actions_max,
        "B": game.num_actions_min,
        "H": game.horizon,
        "s1": game.initial_state,
        "turn_based": game.turn_based,
        "r": game.rewards.tolist(),
        "P": game.transitions.tolist(),
    }


def game_from_dict(data: Dict[str, Any], source: str = "<dict>") -> Game:
    """
    Build and validate a game from its dict form.

    Raises:
        GameFileError: On missing fields or tensors that disagree with S, A, B, H
        InvalidGameError: If the game violates the model constraints
    """
    missing = [key for key in ("S", "A", "B", "H", "r", "P") if key not in data]
    if missing:
        raise GameFileError(f"{source}: missing game fields {missing}", path=source)
    try:
        game = Game(
            transitions=np.asarray(data["P"], dtype=float),
            rewards=np.asarray(data["r"], dtype=float),
            initial_state=int(data.get("s1", 0)),
            turn_based=bool(data.get("turn_based", False)),
            name=str(data.get("name", Path(source).stem)),
        )
    except (ValueError, TypeError, InvalidDimensionError) as e:
        raise GameFileError(f"{source}: malformed game tensors: {e}", path=source)

    declared = (data["H"], data["S"], data["A"], data["B"])
    if game.rewards.shape != tuple(declared):
        raise GameFileError(
            f"{source}: tensors have shape {game.rewards.shape} but H, S, A, B = {declared}",
            path=source,
        )
    report = validate_game(game)
    if not report.ok:
        shown = "; ".join(str(v) for v in report.violations[:5])
        raise InvalidGameError(f"{source}: invalid game ({len(report)} violations): {shown}", report.violations)
    return game


# Strategies


def strategy_to_dict(strategy: AnyStrategy) -> Dict[str, Any]:
    """Dict form of any strategy-like object."""
    if isinstance(strategy, StrategyPair):
        return {"mu": strategy_to_dict(strategy.mu), "nu": strategy_to_dict(strategy.nu)}
    if isinstance(strategy, ExplorationPolicy):
        return {"kind": "exploration", "name": strategy.name, "dist": strategy.dist.tolist()}
    if isinstance(strategy, TurnBasedMinStrategy):
        return {"player": "min", "conditional": True, "dist": strategy.dist.tolist()}
    return {"player": strategy.player.value, "dist": strategy.dist.tolist()}


def strategy_from_dict(data: Dict[str, Any], source: str = "<dict>") -> AnyStrategy:
    """
    Inverse of ``strategy_to_dict``; the kind is recognized from the keys.

    Raises:
        GameFileError: If the object matches no strategy layout
        InvalidStrategyError: If a distribution is invalid
    """
    if "mu" in data and "nu" in data:
        return StrategyPair(strategy_from_dict(data["mu"], source), strategy_from_dict(data["nu"], source))
    if "dist" not in data:
        raise GameFileError(f"{source}: strategy object needs a 'dist' field", path=source)
    dist = np.asarray(data["dist"], dtype=float)
    if data.get("kind") == "exploration":
        return ExplorationPolicy(dist, name=str(data.get("name", Path(source).stem)))
    if data.get("conditional"):
        return TurnBasedMinStrategy(dist)
    if "player" not in data:
        raise GameFileError(f"{source}: strategy object needs a 'player' field", path=source)
    try:
        player = Player(data["player"])
    except ValueError:
        raise GameFileError(f"{source}: unknown player {data['player']!r}", path=source)
    return Strategy(player, dist)


# Value tables and reports


def value_tables_to_dict(values: ValueTables) -> Dict[str, Any]:
    data: Dict[str, Any] = {"V": values.V.tolist()}
    if values.Q is not None:
        data["Q"] = values.Q.tolist()
    return data


def nash_solution_to_dict(solution: NashSolution) -> Dict[str, Any]:
    return {
        "pi_star": strategy_to_dict(solution.pi_star),
        "values": value_tables_to_dict(solution.values),
    }


def coverage_report_to_dict(report: CoverageReport) -> Dict[str, Any]:
    """Coverage report with infinite C* written as the string "inf"."""
    data: Dict[str, Any] = {
        "c_star": _float_or_inf(report.c_star),
        "d_m": report.d_m,
        "d_m_positive": report.d_m_positive,
        "assumption1_holds": report.assumption1_holds,
        "assumption2_holds": report.assumption2_holds,
        "assumption3_holds": report.assumption3_holds,
        "max_ratio_location": list(report.max_ratio_location) if report.max_ratio_location else None,
        "c_star_scope": report.c_star_scope,
        "threshold": report.threshold,
        "witness": None,
    }
    if report.witness is not None:
        w = report.witness
        data["witness"] = {
            "deviating_player": w.deviating_player.value,
            "h": w.h,
            "s": w.s,
            "a": w.a,
            "b": w.b,
            "reach": w.reach,
            "deviation": strategy_to_dict(w.deviation),
        }
    return data


def coverage_report_from_dict(data: Dict[str, Any]) -> CoverageReport:
    witness = None
    if data.get("witness"):
        w = data["witness"]
        witness = CoverageWitness(
            deviating_player=Player(w["deviating_player"]),
            h=w["h"],
            s=w["s"],
            a=w["a"],
            b=w["b"],
            reach=w["reach"],
            deviation=strategy_from_dict(w["deviation"]),
        )
    location = data.get("max_ratio_location")
    return CoverageReport(
        c_star=_parse_float(data["c_star"]),
        d_m=data["d_m"],
        d_m_positive=data["d_m_positive"],
        assumption1_holds=data["assumption1_holds"],
        assumption2_holds=data["assumption2_holds"],
        assumption3_holds=data["assumption3_holds"],
        witness=witness,
        max_ratio_location=tuple(location) if location else None,
        c_star_scope=data.get("c_star_scope", "returned_ne"),
        threshold=data.get("threshold", 1e-12),
    )


def pnvi_output_to_dict(output: PnviOutput) -> Dict[str, Any]:
    """Learner output: both strategy pairs, value tables, bonuses and diagnostics."""
    data: Dict[str, Any] = {
        "algorithm": output.algorithm,
        "pair": strategy_to_dict(output.pair()),
        "nu_low": strategy_to_dict(output.nu_low),
        "mu_up": strategy_to_dict(output.mu_up),
        "V_low": value_tables_to_dict(output.V_low),
        "V_up": value_tables_to_dict(output.V_up),
        "bonus_low": output.bonus_low.tolist(),
        "bonus_up": output.bonus_up.tolist(),
        "diagnostics": output.diagnostics.to_dict(),
    }
    if output.reference is not None:
        data["reference"] = {
            "V_ref_low": value_tables_to_dict(output.reference.V_ref_low),
            "V_ref_up": value_tables_to_dict(output.reference.V_ref_up),
        }
    if output.bernstein_bonuses is not None:
        bonuses = output.bernstein_bonuses
        data["c"] = bonuses.c
        data["bernstein_bonuses"] = {
            "b_low0": bonuses.b_low0.tolist(),
            "b_up0": bonuses.b_up0.tolist(),
            "b_low1": bonuses.b_low1.tolist(),
            "b_up1": bonuses.b_up1.tolist(),
        }
    return data


# Files


def write_json(data: Dict[str, Any], path: Path) -> Path:
    """Write ``data`` as indented JSON, creating parent folders."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    """
    Read a JSON object from ``path``.

    Raises:
        GameFileError: If the file is missing or malformed (with its line number)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise GameFileError(f"Cannot read {path}: {e}", path=str(path))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameFileError(
            f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}",
            path=str(path),
            line=e.lineno,
        )
    if not isinstance(data, dict):
        raise GameFileError(f"{path}: expected a JSON object", path=str(path), line=1)
    return data


def save_game(game: Game, path: Path) -> Path:
    return write_json(game_to_dict(game), path)


def load_game(path: Path) -> Game:
    """Read and validate a game file."""
    return game_from_dict(read_json(path), source=str(path))


def save_strategy(strategy: AnyStrategy, path: Path) -> Path:
    return write_json(strategy_to_dict(strategy), path)


def load_strategy(path: Path) -> AnyStrategy:
    """Read a strategy, strategy pair or exploration policy file."""
    data = read_json(path)
    if "pair" in data:
        data = data["pair"]
    elif "pi_star" in data:
        data = data["pi_star"]
    try:
        return strategy_from_dict(data, source=str(path))
    except (ValueError, TypeError) as e:
        raise GameFileError(f"{path}: malformed strategy: {e}", path=str(path))


def load_pair(path: Path) -> StrategyPair:
    """Read a strategy pair, also from learner-output and exact-solution files."""
    strategy = load_strategy(path)
    if not isinstance(strategy, StrategyPair):
        raise InvalidStrategyError(f"{path} does not hold a strategy pair")
    return strategy


def load_exploration(path: Path) -> ExplorationPolicy:
    """Read an exploration policy file."""
    strategy = load_strategy(path)
    if not isinstance(strategy, ExplorationPolicy):
        raise InvalidStrategyError(f"{path} does not hold an exploration policy")
    return strategy
