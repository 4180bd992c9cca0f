"""Tabular two-player zero-sum Markov games, strategies and the hard instances."""

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import get_settings
from ..utils.exceptions import (
    InvalidDimensionError,
    InvalidStrategyError,
    NotTurnBasedError,
)
from ..utils.logger import get_logger
from ..utils.rng import make_generator

logger = get_logger("game_model")


def prob_tolerance() -> float:
    """Absolute tolerance for probability vectors, from settings."""
    return get_settings().prob_tolerance


class Player(str, Enum):
    """The maximizing (row) and minimizing (column) player."""

    MAX = "max"
    MIN = "min"


class SolveMode(str, Enum):
    """Equilibrium concept used for per-state matrix games."""

    SIMULTANEOUS = "simultaneous"
    TURN_BASED = "turn_based"


def _frozen(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _bad_simplex_rows(dist: np.ndarray, tol: float) -> np.ndarray:
    """Boolean mask over all leading indices whose last axis is not a distribution."""
    finite = np.all(np.isfinite(dist), axis=-1)
    nonneg = np.all(dist >= 0.0, axis=-1)
    normalized = np.abs(dist.sum(axis=-1) - 1.0) <= tol
    return ~(finite & nonneg & normalized)


def _require_positive(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise InvalidDimensionError(
            f"invalid dimension: {name} must be a positive integer, got {value!r}",
            dimension=name,
            value=value,
        )
    return int(value)


@dataclass(frozen=True)
class GameDims:
    """Sizes shared by games, datasets and learners."""

    num_states: int
    num_actions_max: int
    num_actions_min: int
    horizon: int
    initial_state: int = 0
    turn_based: bool = False

    def __post_init__(self):
        for name in ("num_states", "num_actions_max", "num_actions_min", "horizon"):
            object.__setattr__(self, name, _require_positive(name, getattr(self, name)))
        if not 0 <= self.initial_state < self.num_states:
            raise InvalidDimensionError(
                f"invalid dimension: initial state {self.initial_state} outside [0, {self.num_states})",
                dimension="initial_state",
                value=self.initial_state,
            )
        object.__setattr__(self, "initial_state", int(self.initial_state))
        object.__setattr__(self, "turn_based", bool(self.turn_based))

    @property
    def S(self) -> int:
        return self.num_states

    @property
    def A(self) -> int:
        return self.num_actions_max

    @property
    def B(self) -> int:
        return self.num_actions_min

    @property
    def H(self) -> int:
        return self.horizon

    @property
    def table_shape(self) -> Tuple[int, int, int, int]:
        """Shape of every per-(h, s, a, b) table."""
        return (self.horizon, self.num_states, self.num_actions_max, self.num_actions_min)


@dataclass(frozen=True, eq=False)
class Game:
    """
    Finite-horizon tabular zero-sum Markov game.

    ``transitions[h, s, a, b]`` is the next-state distribution and
    ``rewards[h, s, a, b]`` the deterministic reward, with 0-based steps.
    Values are not checked here; use ``validate_game``.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    initial_state: int = 0
    turn_based: bool = False
    name: str = "game"

    def __post_init__(self):
        transitions = _frozen(self.transitions)
        rewards = _frozen(self.rewards)
        if rewards.ndim != 4 or transitions.ndim != 5:
            raise InvalidDimensionError(
                "invalid dimension: rewards must be [h][s][a][b] and transitions [h][s][a][b][s']",
                dimension="tensor_rank",
            )
        if transitions.shape[:4] != rewards.shape or transitions.shape[4] != rewards.shape[1]:
            raise InvalidDimensionError(
                f"invalid dimension: transitions {transitions.shape} do not match rewards {rewards.shape}",
                dimension="tensor_shape",
            )
        for axis, size in zip(("horizon", "num_states", "num_actions_max", "num_actions_min"), rewards.shape):
            _require_positive(axis, size)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "initial_state", int(self.initial_state))
        object.__setattr__(self, "turn_based", bool(self.turn_based))

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    @property
    def num_states(self) -> int:
        return self.rewards.shape[1]

    @property
    def num_actions_max(self) -> int:
        return self.rewards.shape[2]

    @property
    def num_actions_min(self) -> int:
        return self.rewards.shape[3]

    @property
    def dims(self) -> GameDims:
        return GameDims(
            num_states=self.num_states,
            num_actions_max=self.num_actions_max,
            num_actions_min=self.num_actions_min,
            horizon=self.horizon,
            initial_state=self.initial_state,
            turn_based=self.turn_based,
        )

    def as_turn_based(self, turn_based: bool = True) -> "Game":
        """Same tensors with the turn-based flag set (or cleared)."""
        return dataclasses.replace(self, turn_based=turn_based)

    def with_rewards(self, rewards: np.ndarray, name: str = None) -> "Game":
        """Same dynamics with a different reward tensor."""
        return dataclasses.replace(self, rewards=rewards, name=name or self.name)


@dataclass(frozen=True)
class Violation:
    """One broken model constraint."""

    index: Tuple[int, ...]
    constraint: str
    value: float = float("nan")

    def __str__(self) -> str:
        return f"{self.constraint} at {self.index} (value {self.value!r})"


@dataclass(frozen=True)
class ValidationReport:
    """Result of ``validate_game``; empty when the game is valid."""

    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)


def validate_game(game: Game, tol: Optional[float] = None) -> ValidationReport:
    """
    Check every model constraint of ``game``.

    Args:
        game: Game to check
        tol: Absolute tolerance on transition row sums (settings value if omitted)

    Returns:
        Report listing each violation with its (h, s, a, b) index
    """
    tol = prob_tolerance() if tol is None else tol
    violations: List[Violation] = []

    P = game.transitions
    for idx in zip(*np.nonzero(~np.all(np.isfinite(P), axis=-1))):
        violations.append(Violation(tuple(int(i) for i in idx), "non-finite transition probability"))
    for idx in zip(*np.nonzero(np.any(P < 0.0, axis=-1))):
        violations.append(
            Violation(tuple(int(i) for i in idx), "negative transition probability", float(P[idx].min()))
        )
    sums = P.sum(axis=-1)
    for idx in zip(*np.nonzero(np.abs(sums - 1.0) > tol)):
        violations.append(
            Violation(tuple(int(i) for i in idx), "transition row must sum to 1", float(sums[idx]))
        )

    r = game.rewards
    bad_reward = ~np.isfinite(r) | (r < 0.0) | (r > 1.0)
    for idx in zip(*np.nonzero(bad_reward)):
        violations.append(Violation(tuple(int(i) for i in idx), "reward out of [0,1]", float(r[idx])))

    if not 0 <= game.initial_state < game.num_states:
        violations.append(
            Violation((game.initial_state,), "initial state out of range", float(game.initial_state))
        )

    if violations:
        logger.debug(f"Game '{game.name}' has {len(violations)} violations")
    return ValidationReport(violations)


@dataclass(frozen=True, eq=False)
class Strategy:
    """Markov strategy of one player: ``dist[h, s]`` is a distribution over its actions."""

    player: Player
    dist: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "player", Player(self.player))
        dist = _frozen(self.dist)
        if dist.ndim != 3:
            raise InvalidStrategyError(
                f"{self.player.value} strategy must be indexed [h][s][action], got shape {dist.shape}",
                player=self.player.value,
            )
        bad = _bad_simplex_rows(dist, prob_tolerance())
        if bad.any():
            h, s = (int(i) for i in np.argwhere(bad)[0])
            raise InvalidStrategyError(
                f"{self.player.value} strategy at (h={h}, s={s}) is not a probability vector",
                player=self.player.value,
            )
        object.__setattr__(self, "dist", dist)

    @property
    def horizon(self) -> int:
        return self.dist.shape[0]

    @property
    def num_states(self) -> int:
        return self.dist.shape[1]

    @property
    def num_actions(self) -> int:
        return self.dist.shape[2]

    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.dist.max(axis=-1), 1.0, rtol=0.0, atol=prob_tolerance())))

    @classmethod
    def deterministic(cls, player: Player, actions: np.ndarray, num_actions: int) -> "Strategy":
        """Point-mass strategy from an [h][s] table of action indices."""
        actions = np.asarray(actions, dtype=int)
        dist = np.zeros(actions.shape + (num_actions,))
        np.put_along_axis(dist, actions[..., None], 1.0, axis=-1)
        return cls(player, dist)

    @classmethod
    def uniform(cls, player: Player, horizon: int, num_states: int, num_actions: int) -> "Strategy":
        return cls(player, np.full((horizon, num_states, num_actions), 1.0 / num_actions))


@dataclass(frozen=True, eq=False)
class TurnBasedMinStrategy:
    """Min-player strategy that sees the max action: ``dist[h, s, a]`` is a distribution over B."""

    player = Player.MIN
    dist: np.ndarray

    def __post_init__(self):
        dist = _frozen(self.dist)
        if dist.ndim != 4:
            raise InvalidStrategyError(
                f"turn-based min strategy must be indexed [h][s][a][b], got shape {dist.shape}",
                player=Player.MIN.value,
            )
        bad = _bad_simplex_rows(dist, prob_tolerance())
        if bad.any():
            h, s, a = (int(i) for i in np.argwhere(bad)[0])
            raise InvalidStrategyError(
                f"turn-based min strategy at (h={h}, s={s}, a={a}) is not a probability vector",
                player=Player.MIN.value,
            )
        object.__setattr__(self, "dist", dist)

    @property
    def horizon(self) -> int:
        return self.dist.shape[0]

    @property
    def num_states(self) -> int:
        return self.dist.shape[1]

    @property
    def num_actions(self) -> int:
        return self.dist.shape[3]

    def is_deterministic(self) -> bool:
        return bool(np.all(np.isclose(self.dist.max(axis=-1), 1.0, rtol=0.0, atol=prob_tolerance())))


MinStrategy = Union[Strategy, TurnBasedMinStrategy]


def conditional_min_dist(nu: MinStrategy, num_actions_max: int) -> np.ndarray:
    """Min-player distribution as an [h][s][a][b] table (constant in a for simultaneous play)."""
    if isinstance(nu, TurnBasedMinStrategy):
        return nu.dist
    H, S, B = nu.dist.shape
    return np.broadcast_to(nu.dist[:, :, None, :], (H, S, num_actions_max, B))


@dataclass(frozen=True, eq=False)
class StrategyPair:
    """(mu, nu): a max-player strategy and a min-player strategy of matching shape."""

    mu: Strategy
    nu: MinStrategy

    def __post_init__(self):
        if self.mu.player is not Player.MAX:
            raise InvalidStrategyError("first strategy of a pair must belong to the max player", "max")
        if isinstance(self.nu, Strategy) and self.nu.player is not Player.MIN:
            raise InvalidStrategyError("second strategy of a pair must belong to the min player", "min")
        if (self.mu.horizon, self.mu.num_states) != (self.nu.horizon, self.nu.num_states):
            raise InvalidStrategyError("strategies of a pair disagree on horizon or states")
        if isinstance(self.nu, TurnBasedMinStrategy) and self.nu.dist.shape[2] != self.mu.num_actions:
            raise InvalidStrategyError("turn-based min strategy conditions on the wrong action count", "min")

    @property
    def turn_based(self) -> bool:
        return isinstance(self.nu, TurnBasedMinStrategy)

    def nu_conditional(self) -> np.ndarray:
        return conditional_min_dist(self.nu, self.mu.num_actions)

    def joint(self) -> np.ndarray:
        """Joint action distribution mu(a|s) nu(b|s,a) as an [h][s][a][b] table."""
        return self.mu.dist[..., :, None] * self.nu_conditional()

    def is_deterministic(self) -> bool:
        return self.mu.is_deterministic() and self.nu.is_deterministic()


@dataclass(frozen=True, eq=False)
class ExplorationPolicy:
    """Behaviour policy rho: ``dist[h, s]`` is a joint distribution over A x B."""

    dist: np.ndarray
    name: str = "rho"

    def __post_init__(self):
        dist = _frozen(self.dist)
        if dist.ndim != 4:
            raise InvalidStrategyError(
                f"exploration policy must be indexed [h][s][a][b], got shape {dist.shape}"
            )
        H, S, A, B = dist.shape
        bad = _bad_simplex_rows(dist.reshape(H, S, A * B), prob_tolerance())
        if bad.any():
            h, s = (int(i) for i in np.argwhere(bad)[0])
            raise InvalidStrategyError(
                f"exploration policy at (h={h}, s={s}) is not a probability vector over A x B"
            )
        object.__setattr__(self, "dist", dist)

    @property
    def horizon(self) -> int:
        return self.dist.shape[0]

    @property
    def num_states(self) -> int:
        return self.dist.shape[1]

    def joint(self) -> np.ndarray:
        return self.dist


class HardnessPair(NamedTuple):
    game1: Game
    game2: Game
    rho: ExplorationPolicy


def make_hardness_pair(
    num_actions_max: int = 2, num_actions_min: int = 2, horizon: int = 1
) -> HardnessPair:
    """
    Two one-state games that agree on every pair the dataset covers.

    The 2x2 core is
        game1: (a1,b1)=0.25 (a1,b2)=0.5 (a2,b1)=0 (a2,b2)=0.75
        game2: identical except (a2,b1)=1
    with rho uniform over {(a1,b1), (a1,b2), (a2,b2)}. Extra max actions earn 0
    against b1/b2, extra min actions give 1 against a1/a2, and extra steps carry
    zero reward.

    Args:
        num_actions_max: A >= 2
        num_actions_min: B >= 2
        horizon: H >= 1

    Returns:
        (game1, game2, rho)
    """
    A = _require_positive("num_actions_max", num_actions_max)
    B = _require_positive("num_actions_min", num_actions_min)
    H = _require_positive("horizon", horizon)
    if A < 2 or B < 2:
        raise InvalidDimensionError(
            "invalid dimension: the hard instance needs at least two actions per player",
            dimension="actions",
            value=(A, B),
        )

    table = np.full((A, B), 0.5)
    table[2:, :2] = 0.0
    table[:2, 2:] = 1.0
    table[:2, :2] = [[0.25, 0.5], [0.0, 0.75]]

    rewards1 = np.zeros((H, 1, A, B))
    rewards1[0, 0] = table
    rewards2 = rewards1.copy()
    rewards2[0, 0, 1, 0] = 1.0
    transitions = np.ones((H, 1, A, B, 1))

    covered = np.zeros((A, B), dtype=bool)
    covered[:2, :] = True
    covered[:, :2] = True
    covered[1, 0] = False
    rho = np.full((H, 1, A, B), 1.0 / (A * B))
    rho[0, 0] = covered / covered.sum()

    game1 = Game(transitions, rewards1, name="hardness1")
    game2 = Game(transitions, rewards2, name="hardness2")
    return HardnessPair(game1, game2, ExplorationPolicy(rho, name="hardness"))


def random_game(
    seed: int,
    S: int,
    A: int,
    B: int,
    H: int,
    turn_based: bool = False,
    bit_generator: str = "philox",
) -> Game:
    """
    Random valid game, a deterministic function of ``seed``.

    Transition rows are normalized vectors of positive uniforms; rewards are
    uniform in [0, 1).

    Raises:
        InvalidDimensionError: If any dimension is not a positive integer
    """
    S, A, B, H = (_require_positive(n, v) for n, v in zip("SABH", (S, A, B, H)))
    gen = make_generator(seed, "game", bit_generator=bit_generator)
    weights = 1.0 - gen.random((H, S, A, B, S))  # in (0, 1]
    transitions = weights / weights.sum(axis=-1, keepdims=True)
    rewards = gen.random((H, S, A, B))
    return Game(
        transitions,
        rewards,
        turn_based=turn_based,
        name=f"random-{seed}-S{S}A{A}B{B}H{H}" + ("-tb" if turn_based else ""),
    )


def compile_turn_based(game: Game) -> SolveMode:
    """
    Confirm ``game`` is solved as a turn-based game.

    The tensors are unchanged; downstream solvers switch to pure max-min
    solving and min-player outputs become ``TurnBasedMinStrategy``.

    Raises:
        NotTurnBasedError: If the game is not flagged turn-based
    """
    if not game.turn_based:
        raise NotTurnBasedError(f"not a turn-based game: '{game.name}'")
    return SolveMode.TURN_BASED


def solve_mode_for(game_or_dims: Union[Game, GameDims]) -> SolveMode:
    """Equilibrium concept for a game or its dims."""
    return SolveMode.TURN_BASED if game_or_dims.turn_based else SolveMode.SIMULTANEOUS


def with_initial_distribution(game: Game, initial_distribution: Sequence[float]) -> Game:
    """
    Fixed-start game equivalent to starting ``game`` from ``initial_distribution``.

    A dummy start state (index S) moves to the original states according to the
    distribution in one extra zero-reward step; the original step h becomes
    step h + 1.
    """
    p0 = np.asarray(initial_distribution, dtype=float)
    S = game.num_states
    if p0.shape != (S,) or _bad_simplex_rows(p0, prob_tolerance()):
        raise InvalidStrategyError("initial distribution must be a probability vector over states")

    H, _, A, B = game.rewards.shape
    dummy = S
    transitions = np.zeros((H + 1, S + 1, A, B, S + 1))
    rewards = np.zeros((H + 1, S + 1, A, B))

    transitions[0, np.arange(S), :, :, np.arange(S)] = 1.0
    transitions[0, dummy, :, :, :S] = p0
    transitions[1:, :S, :, :, :S] = game.transitions
    transitions[1:, dummy, :, :, dummy] = 1.0
    rewards[1:, :S] = game.rewards

    return Game(
        transitions,
        rewards,
        initial_state=dummy,
        turn_based=game.turn_based,
        name=f"{game.name}-with-start",
    )
