"""Resolve game and exploration-policy sources named in configs and CLI flags."""

from pathlib import Path
from typing import Any, Dict, Union

from ..core.game_model import ExplorationPolicy, Game, make_hardness_pair, random_game
from ..core.offline_data import uniform_exploration
from ..storage.json_codec import game_from_dict, load_exploration, load_game
from ..utils.exceptions import ConfigurationError
from ..utils.logger import get_logger

logger = get_logger("sources")

GameSource = Union[str, Path, Dict[str, Any]]

_RANDOM_KEYS = {"seed", "S", "A", "B", "H", "turn_based"}


def _parse_bool(value: str) -> bool:
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise ConfigurationError(f"Expected a boolean, got '{value}'")


def parse_random_spec(spec: str) -> Dict[str, Any]:
    """
    Parse ``random:seed=1,S=3,A=2,B=2,H=3[,turn_based=true]``.

    Raises:
        ConfigurationError: On unknown or missing keys
    """
    body = spec.split(":", 1)[1] if ":" in spec else ""
    params: Dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        if "=" not in item:
            raise ConfigurationError(f"Malformed generator parameter '{item}' in '{spec}'")
        key, value = (x.strip() for x in item.split("=", 1))
        if key not in _RANDOM_KEYS:
            raise ConfigurationError(f"Unknown generator parameter '{key}' in '{spec}'")
        try:
            params[key] = _parse_bool(value) if key == "turn_based" else int(value)
        except ValueError:
            raise ConfigurationError(f"Generator parameter '{key}' must be an integer, got '{value}'")
    missing = {"seed", "S", "A", "B", "H"} - set(params)
    if missing:
        raise ConfigurationError(f"Generator spec '{spec}' is missing {sorted(missing)}")
    return params


def _hardness_game(variant: int, params: Dict[str, Any]) -> Game:
    pair = make_hardness_pair(
        num_actions_max=int(params.get("A", 2)),
        num_actions_min=int(params.get("B", 2)),
        horizon=int(params.get("H", 1)),
    )
    game = pair.game1 if variant == 1 else pair.game2
    return game.as_turn_based() if params.get("turn_based") else game


def resolve_game(source: GameSource, bit_generator: str = "philox") -> Game:
    """
    Game from a file path, ``hardness1``/``hardness2``, a ``random:...`` spec or a dict.

    Dict sources are either a full game object or a generator description:
    ``{"generator": "random", "seed": 1, "S": 3, "A": 2, "B": 2, "H": 3}`` or
    ``{"generator": "hardness1", "A": 3, "B": 2, "H": 2}``.

    Raises:
        ConfigurationError: On an unknown source or generator
        GameFileError: If a game file cannot be parsed
        InvalidGameError: If a game file violates the model constraints
    """
    if isinstance(source, dict):
        generator = source.get("generator")
        if generator is None:
            return game_from_dict(source, source="<config>")
        params = {k: v for k, v in source.items() if k != "generator"}
        if generator == "random":
            return random_game(
                int(params["seed"]),
                int(params["S"]),
                int(params["A"]),
                int(params["B"]),
                int(params["H"]),
                turn_based=bool(params.get("turn_based", False)),
                bit_generator=bit_generator,
            )
        if generator in ("hardness1", "hardness2"):
            return _hardness_game(int(generator[-1]), params)
        raise ConfigurationError(f"Unknown game generator '{generator}'")

    text = str(source)
    if text in ("hardness1", "hardness2"):
        return _hardness_game(int(text[-1]), {})
    if text.startswith("random:"):
        params = parse_random_spec(text)
        return random_game(
            params["seed"],
            params["S"],
            params["A"],
            params["B"],
            params["H"],
            turn_based=params.get("turn_based", False),
            bit_generator=bit_generator,
        )
    path = Path(text).expanduser()
    if not path.exists():
        raise ConfigurationError(
            f"Game source '{text}' is neither a file nor one of hardness1, hardness2, random:..."
        )
    logger.debug(f"Loading game from {path}")
    return load_game(path)


def resolve_rho(source: Union[str, Path], game: Game) -> ExplorationPolicy:
    """
    Exploration policy from a file path, ``uniform`` or ``hardness``.

    ``hardness`` is the policy of the hard instance with the game's action counts
    and horizon; it needs a one-state game.

    Raises:
        ConfigurationError: On an unknown source or a mismatched hardness game
    """
    text = str(source)
    if text == "uniform":
        return uniform_exploration(game.dims)
    if text == "hardness":
        if game.num_states != 1:
            raise ConfigurationError("The 'hardness' exploration policy needs a one-state game")
        return make_hardness_pair(game.num_actions_max, game.num_actions_min, game.horizon).rho
    path = Path(text).expanduser()
    if not path.exists():
        raise ConfigurationError(f"Exploration source '{text}' is neither a file nor 'uniform' or 'hardness'")
    rho = load_exploration(path)
    if rho.dist.shape != game.rewards.shape:
        raise ConfigurationError(
            f"Exploration policy {path} has shape {rho.dist.shape}, game needs {game.rewards.shape}"
        )
    return rho
