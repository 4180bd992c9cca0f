"""
Exact evaluation of strategies on a known game.

Nash value iteration, best responses, duality gaps, occupancy measures and the
coverage diagnostics (unilateral concentrability, minimum dataset mass).
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..utils.exceptions import InvalidStrategyError
from ..utils.logger import get_logger
from .game_model import (
    ExplorationPolicy,
    Game,
    Player,
    Strategy,
    StrategyPair,
    TurnBasedMinStrategy,
    conditional_min_dist,
    solve_mode_for,
)
from .matrix_ne import solve_stage_games

logger = get_logger("exact_eval")

COVERAGE_THRESHOLD = 1e-12


@dataclass(frozen=True, eq=False)
class ValueTables:
    """``V[h, s]`` for h in 0..H (``V[H] = 0``) and optionally ``Q[h, s, a, b]`` for h < H."""

    V: np.ndarray
    Q: Optional[np.ndarray] = None

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        V.setflags(write=False)
        object.__setattr__(self, "V", V)
        if self.Q is not None:
            Q = np.array(self.Q, dtype=float)
            Q.setflags(write=False)
            object.__setattr__(self, "Q", Q)

    @property
    def horizon(self) -> int:
        return self.V.shape[0] - 1

    def initial_value(self, initial_state: int) -> float:
        return float(self.V[0, initial_state])


@dataclass(frozen=True, eq=False)
class Occupancy:
    """``d[h, s, a, b]``: probability of visiting (s, a, b) at step h."""

    d: np.ndarray

    def totals(self) -> np.ndarray:
        """Total mass per step (1 up to round-off)."""
        return self.d.sum(axis=(1, 2, 3))


class NashSolution(NamedTuple):
    pi_star: StrategyPair
    values: ValueTables


class BestResponse(NamedTuple):
    values: ValueTables
    br: Union[Strategy, TurnBasedMinStrategy]


@dataclass(frozen=True, eq=False)
class CoverageWitness:
    """An uncovered cell reached by a unilateral deviation from the NE."""

    deviating_player: Player
    h: int
    s: int
    a: int
    b: int
    reach: float
    deviation: Union[Strategy, TurnBasedMinStrategy]

    def describe(self) -> str:
        fixed = "nu*" if self.deviating_player is Player.MAX else "mu*"
        return (
            f"{self.deviating_player.value} player deviates against {fixed}: "
            f"(h={self.h}, s={self.s}, a={self.a}, b={self.b}) reached with probability "
            f"{self.reach:.6g} but has no data"
        )


@dataclass(frozen=True, eq=False)
class CoverageReport:
    """Coverage of the dataset distribution relative to the returned NE."""

    c_star: float
    d_m: float
    d_m_positive: float
    assumption1_holds: bool
    assumption2_holds: bool
    assumption3_holds: bool
    witness: Optional[CoverageWitness] = None
    max_ratio_location: Optional[Tuple[str, int, int, int, int]] = None
    c_star_scope: str = "returned_ne"
    threshold: float = COVERAGE_THRESHOLD


def _check_strategy_dims(game: Game, strategy, player_actions: int) -> None:
    conditioned_on = (
        strategy.dist.shape[2] if isinstance(strategy, TurnBasedMinStrategy) else None
    )
    if (strategy.horizon, strategy.num_states, strategy.num_actions) != (
        game.horizon,
        game.num_states,
        player_actions,
    ) or conditioned_on not in (None, game.num_actions_max):
        raise InvalidStrategyError(
            f"{strategy.player.value} strategy shape {strategy.dist.shape} does not fit "
            f"game '{game.name}'",
            player=strategy.player.value,
        )


def _check_pair(game: Game, pi: StrategyPair) -> None:
    _check_strategy_dims(game, pi.mu, game.num_actions_max)
    _check_strategy_dims(game, pi.nu, game.num_actions_min)


def _joint_of(game: Game, policy: Union[StrategyPair, ExplorationPolicy]) -> np.ndarray:
    if isinstance(policy, StrategyPair):
        _check_pair(game, policy)
        return policy.joint()
    if policy.dist.shape != game.rewards.shape:
        raise InvalidStrategyError(
            f"exploration policy shape {policy.dist.shape} does not fit game '{game.name}'"
        )
    return policy.joint()


def nash_vi(game: Game, eps_ne: float = 1e-8) -> NashSolution:
    """
    Nash value iteration: backward induction with a matrix-game solve per state.

    Args:
        game: Valid game
        eps_ne: Per-state exploitability tolerance

    Returns:
        (pi_star, values) with values.V the NE value within H * eps_ne

    Raises:
        NashSolverError: If a stage game cannot be solved
    """
    H, S, A, B = game.rewards.shape
    mode = solve_mode_for(game)
    V = np.zeros((H + 1, S))
    Q = np.zeros((H, S, A, B))
    mu = np.zeros((H, S, A))
    nu = np.zeros((H, S, A, B)) if game.turn_based else np.zeros((H, S, B))

    for h in reversed(range(H)):
        Q[h] = game.rewards[h] + game.transitions[h] @ V[h + 1]
        stage = solve_stage_games(Q[h], mode, eps_ne, stage=h)
        mu[h] = stage.mu
        nu[h] = stage.nu
        V[h] = stage.values

    nu_strategy = TurnBasedMinStrategy(nu) if game.turn_based else Strategy(Player.MIN, nu)
    pi_star = StrategyPair(Strategy(Player.MAX, mu), nu_strategy)
    logger.debug(f"Nash value of '{game.name}': {V[0, game.initial_state]:.10g}")
    return NashSolution(pi_star, ValueTables(V, Q))


def best_response_value(game: Game, fixed: Union[Strategy, TurnBasedMinStrategy]) -> BestResponse:
    """
    Optimal values of the MDP induced by fixing one player's strategy.

    With nu fixed, the max player maximizes sum_b nu(b|s,a) Q(s,a,b). With mu
    fixed, the min player minimizes sum_a mu(a|s) Q(s,a,b); in turn-based games
    it sees the max action and minimizes each Q(s,a,.) separately. Ties go to
    the lowest index.

    Args:
        game: Valid game
        fixed: Strategy of the non-responding player

    Returns:
        (values, br) with br deterministic

    Raises:
        InvalidStrategyError: If ``fixed`` does not fit the game
    """
    H, S, A, B = game.rewards.shape
    V = np.zeros((H + 1, S))
    Q = np.zeros((H, S, A, B))

    if fixed.player is Player.MAX:
        _check_strategy_dims(game, fixed, A)
        replies = np.zeros((H, S, A), dtype=int) if game.turn_based else np.zeros((H, S), dtype=int)
        for h in reversed(range(H)):
            Q[h] = game.rewards[h] + game.transitions[h] @ V[h + 1]
            if game.turn_based:
                replies[h] = np.argmin(Q[h], axis=2)
                V[h] = np.einsum("sa,sa->s", fixed.dist[h], Q[h].min(axis=2))
            else:
                against = np.einsum("sa,sab->sb", fixed.dist[h], Q[h])
                replies[h] = np.argmin(against, axis=1)
                V[h] = against.min(axis=1)
        if game.turn_based:
            br = np.zeros((H, S, A, B))
            np.put_along_axis(br, replies[..., None], 1.0, axis=-1)
            return BestResponse(ValueTables(V, Q), TurnBasedMinStrategy(br))
        return BestResponse(ValueTables(V, Q), Strategy.deterministic(Player.MIN, replies, B))

    _check_strategy_dims(game, fixed, B)
    nu = conditional_min_dist(fixed, A)
    replies = np.zeros((H, S), dtype=int)
    for h in reversed(range(H)):
        Q[h] = game.rewards[h] + game.transitions[h] @ V[h + 1]
        against = np.einsum("sab,sab->sa", nu[h], Q[h])
        replies[h] = np.argmax(against, axis=1)
        V[h] = against.max(axis=1)
    return BestResponse(ValueTables(V, Q), Strategy.deterministic(Player.MAX, replies, A))


def evaluate_pair(game: Game, pi: StrategyPair) -> ValueTables:
    """Exact V^pi and Q^pi of a strategy pair."""
    joint = _joint_of(game, pi)
    H, S, A, B = game.rewards.shape
    V = np.zeros((H + 1, S))
    Q = np.zeros((H, S, A, B))
    for h in reversed(range(H)):
        Q[h] = game.rewards[h] + game.transitions[h] @ V[h + 1]
        V[h] = np.einsum("sab,sab->s", joint[h], Q[h])
    return ValueTables(V, Q)


def duality_gap(game: Game, pi: StrategyPair) -> float:
    """
    Gap(pi) = V_1^{*,nu}(s1) - V_1^{mu,*}(s1), nonnegative up to round-off.
    """
    _check_pair(game, pi)
    upper = best_response_value(game, pi.nu).values.initial_value(game.initial_state)
    lower = best_response_value(game, pi.mu).values.initial_value(game.initial_state)
    return upper - lower


def occupancy(game: Game, policy: Union[StrategyPair, ExplorationPolicy]) -> Occupancy:
    """
    Occupancy measure by forward recursion from the initial state.

    Args:
        game: Valid game
        policy: Strategy pair or joint exploration policy

    Returns:
        Occupancy with one distribution over (s, a, b) per step
    """
    joint = _joint_of(game, policy)
    H, S, A, B = game.rewards.shape
    d = np.zeros((H, S, A, B))
    state_dist = np.zeros(S)
    state_dist[game.initial_state] = 1.0
    for h in range(H):
        d[h] = state_dist[:, None, None] * joint[h]
        state_dist = np.einsum("sab,sabt->t", d[h], game.transitions[h])
    return Occupancy(d)


def _max_reach(game: Game, fixed: Union[Strategy, TurnBasedMinStrategy], target_h: int):
    """
    Maximum probability, over deterministic deviations of the other player, of
    being in each state at ``target_h``.

    Returns:
        (reach[t] from the initial state, choices) where ``choices[k]`` holds the
        maximizing deviation actions at step k per target t: [s][t] for a single
        deviating choice, [s][a][t] when a turn-based min player deviates.
    """
    S = game.num_states
    W = np.eye(S)  # W[s, t]: reach probability of target t from s
    choices: List[np.ndarray] = [None] * target_h
    if fixed.player is Player.MAX:
        mu = fixed.dist
    else:
        nu = conditional_min_dist(fixed, game.num_actions_max)

    for k in reversed(range(target_h)):
        ahead = np.einsum("sabu,ut->sabt", game.transitions[k], W)
        if fixed.player is Player.MIN:
            per_a = np.einsum("sab,sabt->sat", nu[k], ahead)
            choices[k] = np.argmax(per_a, axis=1)
            W = per_a.max(axis=1)
        elif game.turn_based:
            choices[k] = np.argmax(ahead, axis=2)
            W = np.einsum("sa,sat->st", mu[k], ahead.max(axis=2))
        else:
            per_b = np.einsum("sa,sabt->sbt", mu[k], ahead)
            choices[k] = np.argmax(per_b, axis=1)
            W = per_b.max(axis=1)
    return W[game.initial_state], choices


def unilateral_occupancy_table(
    game: Game, fixed: Union[Strategy, TurnBasedMinStrategy]
) -> np.ndarray:
    """
    max over the other player's strategies of d_h(s, a, b), for every cell.

    Args:
        game: Valid game
        fixed: The NE strategy held fixed (mu* or nu*)

    Returns:
        [h][s][a][b] table
    """
    H, S, A, B = game.rewards.shape
    table = np.zeros((H, S, A, B))
    if fixed.player is Player.MAX:
        _check_strategy_dims(game, fixed, A)
    else:
        _check_strategy_dims(game, fixed, B)
        nu = conditional_min_dist(fixed, A)
    for h in range(H):
        reach, _ = _max_reach(game, fixed, h)
        if fixed.player is Player.MAX:
            table[h] = reach[:, None, None] * fixed.dist[h][:, :, None]
        else:
            table[h] = reach[:, None, None] * nu[h]
    return table


def max_unilateral_occupancy(
    game: Game, fixed: Union[Strategy, TurnBasedMinStrategy], h: int, s: int, a: int, b: int
) -> float:
    """
    Exact max over the deviating player's strategies of d_h^{fixed, dev}(s, a, b).

    Deterministic Markov deviations attain the maximum, so a backward DP over the
    reach probability of s at step h suffices; the deviator then plays its action
    of the cell with probability 1.
    """
    reach, _ = _max_reach(game, fixed, h)
    if fixed.player is Player.MAX:
        return float(reach[s] * fixed.dist[h, s, a])
    nu = conditional_min_dist(fixed, game.num_actions_max)
    return float(reach[s] * nu[h, s, a, b])


def _deviation(
    game: Game,
    fixed: Union[Strategy, TurnBasedMinStrategy],
    h: int,
    s: int,
    action: int,
) -> Union[Strategy, TurnBasedMinStrategy]:
    """Deterministic deviation reaching (h, s) with maximum probability, then playing ``action``."""
    H, S, A, B = game.rewards.shape
    _, choices = _max_reach(game, fixed, h)
    if fixed.player is Player.MIN:
        actions = np.zeros((H, S), dtype=int)
        for k in range(h):
            actions[k] = choices[k][:, s]
        actions[h, s] = action
        return Strategy.deterministic(Player.MAX, actions, A)
    if game.turn_based:
        actions = np.zeros((H, S, A), dtype=int)
        for k in range(h):
            actions[k] = choices[k][:, :, s]
        actions[h, s, :] = action
        dist = np.zeros((H, S, A, B))
        np.put_along_axis(dist, actions[..., None], 1.0, axis=-1)
        return TurnBasedMinStrategy(dist)
    actions = np.zeros((H, S), dtype=int)
    for k in range(h):
        actions[k] = choices[k][:, s]
    actions[h, s] = action
    return Strategy.deterministic(Player.MIN, actions, B)


def _ratios(unilateral: np.ndarray, d_rho: np.ndarray, threshold: float) -> np.ndarray:
    """unilateral / d_rho with 0/0 = 0 and x/0 = inf, both judged at ``threshold``."""
    ratios = np.zeros_like(unilateral)
    reached = unilateral > threshold
    covered = d_rho > threshold
    both = reached & covered
    ratios[both] = unilateral[both] / d_rho[both]
    ratios[reached & ~covered] = np.inf
    return ratios


def coverage_report(
    game: Game,
    rho: ExplorationPolicy,
    pi_star: StrategyPair,
    threshold: float = COVERAGE_THRESHOLD,
) -> CoverageReport:
    """
    Coverage diagnostics of ``rho`` for the NE ``pi_star``.

    C* is computed for the supplied NE only. d_m is the minimum dataset mass over
    all cells, ``d_m_positive`` the minimum over cells with positive mass.

    Args:
        game: Valid game
        rho: Exploration policy that generated (or would generate) the data
        pi_star: NE returned by ``nash_vi``
        threshold: Occupancy mass below which a cell counts as uncovered

    Returns:
        CoverageReport
    """
    d_rho = occupancy(game, rho).d
    d_pi = occupancy(game, pi_star).d

    assumption1 = bool(np.all(d_rho[d_pi > threshold] > threshold))

    # Max player deviates against nu*, min player deviates against mu*.
    by_max = _ratios(unilateral_occupancy_table(game, pi_star.nu), d_rho, threshold)
    by_min = _ratios(unilateral_occupancy_table(game, pi_star.mu), d_rho, threshold)

    c_star = float(max(by_max.max(), by_min.max()))
    assumption2 = bool(np.isfinite(c_star))

    d_m = float(d_rho.min())
    positive = d_rho[d_rho > threshold]
    d_m_positive = float(positive.min()) if positive.size else 0.0
    assumption3 = d_m > threshold

    location = None
    if c_star > 0.0:
        table, player = (by_max, Player.MAX) if by_max.max() >= by_min.max() else (by_min, Player.MIN)
        h, s, a, b = (int(i) for i in np.unravel_index(np.argmax(table), table.shape))
        location = (player.value, h, s, a, b)

    witness = None
    if not assumption2:
        for table, player, fixed in ((by_max, Player.MAX, pi_star.nu), (by_min, Player.MIN, pi_star.mu)):
            uncovered = np.argwhere(np.isinf(table))
            if uncovered.size:
                h, s, a, b = (int(i) for i in uncovered[0])
                action = a if player is Player.MAX else b
                witness = CoverageWitness(
                    deviating_player=player,
                    h=h,
                    s=s,
                    a=a,
                    b=b,
                    reach=max_unilateral_occupancy(game, fixed, h, s, a, b),
                    deviation=_deviation(game, fixed, h, s, action),
                )
                break

    logger.debug(
        f"Coverage of '{rho.name}' on '{game.name}': C*={c_star:.6g}, d_m={d_m:.3g}, "
        f"A1={assumption1} A2={assumption2} A3={assumption3}"
    )
    return CoverageReport(
        c_star=c_star,
        d_m=d_m,
        d_m_positive=d_m_positive,
        assumption1_holds=assumption1,
        assumption2_holds=assumption2,
        assumption3_holds=assumption3,
        witness=witness,
        max_ratio_location=location,
        threshold=threshold,
    )
