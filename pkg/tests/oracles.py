"""Brute-force reference computations used to check the solvers."""

import itertools
from typing import Tuple

import numpy as np

from offline_zsg.core.game_model import Game, Player, Strategy, StrategyPair


def zero_game(S: int = 2, A: int = 2, B: int = 2, H: int = 2) -> Game:
    transitions = np.full((H, S, A, B, S), 1.0 / S)
    return Game(transitions, np.zeros((H, S, A, B)), name="zero")


def simplex_grid(k: int, m: int) -> np.ndarray:
    """All probability vectors over k actions with coordinates in multiples of 1/m (k <= 3)."""
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        p = np.linspace(0.0, 1.0, m + 1)
        return np.stack([p, 1.0 - p], axis=1)
    if k == 3:
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = i + j <= m
        i, j = i[keep], j[keep]
        return np.stack([i, j, m - i - j], axis=1) / m
    raise ValueError("grid oracle supports at most three actions")


def grid_value_bounds(Q: np.ndarray, m: int = 1000) -> Tuple[float, float]:
    """(max over grid mu of min_b, min over grid nu of max_a); the matrix value lies in between."""
    Q = np.asarray(Q, dtype=float)
    rows = simplex_grid(Q.shape[0], m)
    cols = simplex_grid(Q.shape[1], m)
    lower = float(np.max(np.min(rows @ Q, axis=1)))
    upper = float(np.min(np.max(cols @ Q.T, axis=1)))
    return lower, upper


def brute_force_nash_value(game: Game, m: int = 20000) -> float:
    """Backward induction with the grid lower bound as the per-state matrix value."""
    H, S, _, _ = game.rewards.shape
    V = np.zeros((H + 1, S))
    for h in reversed(range(H)):
        Q = game.rewards[h] + game.transitions[h] @ V[h + 1]
        for s in range(S):
            V[h, s] = grid_value_bounds(Q[s], m)[0]
    return float(V[0, game.initial_state])


def deterministic_strategies(player: Player, H: int, S: int, num_actions: int):
    """Every deterministic Markov strategy of one player."""
    for choice in itertools.product(range(num_actions), repeat=H * S):
        yield Strategy.deterministic(player, np.array(choice).reshape(H, S), num_actions)


def rollout_occupancy(game: Game, joint: np.ndarray) -> np.ndarray:
    """Occupancy of a joint [h][s][a][b] policy by explicit forward sums."""
    H, S, A, B = game.rewards.shape
    d = np.zeros((H, S, A, B))
    state = np.zeros(S)
    state[game.initial_state] = 1.0
    for h in range(H):
        nxt = np.zeros(S)
        for s, a, b in itertools.product(range(S), range(A), range(B)):
            d[h, s, a, b] = state[s] * joint[h, s, a, b]
            nxt += d[h, s, a, b] * game.transitions[h, s, a, b]
        state = nxt
    return d


def enumerate_unilateral(game: Game, fixed: Strategy) -> np.ndarray:
    """max over deterministic deviations of the other player of d_h(s, a, b), cell by cell."""
    H, S, A, B = game.rewards.shape
    best = np.zeros((H, S, A, B))
    if fixed.player is Player.MIN:
        for mu in deterministic_strategies(Player.MAX, H, S, A):
            best = np.maximum(best, rollout_occupancy(game, StrategyPair(mu, fixed).joint()))
    else:
        for nu in deterministic_strategies(Player.MIN, H, S, B):
            best = np.maximum(best, rollout_occupancy(game, StrategyPair(fixed, nu).joint()))
    return best


def random_strategy(player: Player, H: int, S: int, num_actions: int, gen: np.random.Generator) -> Strategy:
    weights = gen.random((H, S, num_actions)) + 1e-3
    return Strategy(player, weights / weights.sum(axis=-1, keepdims=True))
