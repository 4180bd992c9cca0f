"""Offline datasets: sampling from an exploration policy, data splits and empirical models."""

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from ..utils.exceptions import DatasetError, InsufficientDataError, InvalidStrategyError
from ..utils.logger import get_logger
from ..utils.rng import make_generator
from .game_model import ExplorationPolicy, Game, GameDims, StrategyPair

logger = get_logger("offline_data")


class Transition(NamedTuple):
    s: int
    a: int
    b: int
    r: float
    s_next: int


@dataclass(frozen=True)
class Provenance:
    """Where a dataset came from."""

    game_id: str = "unknown"
    rho_id: str = "unknown"
    seed: Optional[int] = None
    bit_generator: str = "philox"


def _readonly(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class OfflineDataset:
    """
    n episodes stored column-wise.

    ``states`` is [episode][h] for h in 0..H (the last column is the final
    next-state); actions and rewards are [episode][h] for h < H.
    """

    states: np.ndarray
    actions_max: np.ndarray
    actions_min: np.ndarray
    rewards: np.ndarray
    dims: GameDims
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        states = _readonly(self.states, np.int64)
        actions_max = _readonly(self.actions_max, np.int64)
        actions_min = _readonly(self.actions_min, np.int64)
        rewards = _readonly(self.rewards, float)
        n, H = rewards.shape if rewards.ndim == 2 else (None, None)
        if (
            n is None
            or H != self.dims.horizon
            or states.shape != (n, H + 1)
            or actions_max.shape != (n, H)
            or actions_min.shape != (n, H)
        ):
            raise DatasetError(
                f"dataset arrays do not form {self.dims.horizon}-step episodes: states {states.shape}, "
                f"actions {actions_max.shape}/{actions_min.shape}, rewards {rewards.shape}"
            )
        if n and np.any(states[:, 0] != self.dims.initial_state):
            raise DatasetError("every episode must start at the initial state")
        for name, values, size in (
            ("state", states, self.dims.num_states),
            ("max action", actions_max, self.dims.num_actions_max),
            ("min action", actions_min, self.dims.num_actions_min),
        ):
            if values.size and (values.min() < 0 or values.max() >= size):
                raise DatasetError(f"{name} index out of range [0, {size})")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions_max", actions_max)
        object.__setattr__(self, "actions_min", actions_min)
        object.__setattr__(self, "rewards", rewards)

    @property
    def n_episodes(self) -> int:
        return self.rewards.shape[0]

    def __len__(self) -> int:
        return self.n_episodes

    def episode(self, i: int) -> List[Transition]:
        """Episode ``i`` as (s, a, b, r, s') tuples."""
        return [
            Transition(
                int(self.states[i, h]),
                int(self.actions_max[i, h]),
                int(self.actions_min[i, h]),
                float(self.rewards[i, h]),
                int(self.states[i, h + 1]),
            )
            for h in range(self.dims.horizon)
        ]

    def subset(self, indices: Sequence[int]) -> "OfflineDataset":
        """Episodes at ``indices``, in that order."""
        idx = np.asarray(indices, dtype=np.int64)
        return OfflineDataset(
            self.states[idx],
            self.actions_max[idx],
            self.actions_min[idx],
            self.rewards[idx],
            self.dims,
            self.provenance,
        )


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """Visit counts, empirical rewards and empirical transitions of one data part."""

    counts: np.ndarray
    r_hat: np.ndarray
    P_hat: np.ndarray
    n_episodes: int

    def same_as(self, other: "EmpiricalModel") -> bool:
        """Bit-identical comparison of every table."""
        return (
            np.array_equal(self.counts, other.counts)
            and np.array_equal(self.r_hat, other.r_hat)
            and np.array_equal(self.P_hat, other.P_hat)
        )


class BernsteinSplit(NamedTuple):
    reference: OfflineDataset
    base: OfflineDataset
    stages: List[OfflineDataset]


def _draw_index(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row; never selects a zero-probability entry."""
    total = cdf[:, -1]
    idx = np.sum(cdf <= (u * total)[:, None], axis=1)
    # u * total can round up to total; fall back to the last positive entry.
    last = np.argmax(cdf >= total[:, None], axis=1)
    return np.minimum(idx, last)


def sample_dataset(
    game: Game,
    rho: ExplorationPolicy,
    n: int,
    seed: int,
    bit_generator: str = "philox",
) -> OfflineDataset:
    """
    Sample n i.i.d. episodes of ``game`` under ``rho``.

    All episodes advance together, one step at a time, from a single generator.
    The draws depend only on (seed, rho, P), so games that differ in rewards alone
    produce the same episodes.

    Args:
        game: Valid game
        rho: Joint exploration policy
        n: Number of episodes (>= 1)
        seed: Base seed
        bit_generator: Name of the bit generator

    Returns:
        OfflineDataset

    Raises:
        DatasetError: If n < 1
        InvalidStrategyError: If rho does not fit the game
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DatasetError(f"number of episodes must be a positive integer, got {n!r}")
    n = int(n)
    if rho.dist.shape != game.rewards.shape:
        raise InvalidStrategyError(
            f"exploration policy shape {rho.dist.shape} does not fit game '{game.name}'"
        )

    H, S, A, B = game.rewards.shape
    gen = make_generator(seed, "dataset", bit_generator=bit_generator)
    states = np.empty((n, H + 1), dtype=np.int64)
    actions_max = np.empty((n, H), dtype=np.int64)
    actions_min = np.empty((n, H), dtype=np.int64)
    rewards = np.empty((n, H))
    states[:, 0] = game.initial_state

    joint_cdf = np.cumsum(rho.dist.reshape(H, S, A * B), axis=-1)
    next_cdf = np.cumsum(game.transitions, axis=-1)

    for h in range(H):
        s = states[:, h]
        u = gen.random((n, 2))
        joint = _draw_index(joint_cdf[h, s], u[:, 0])
        a, b = np.divmod(joint, B)
        actions_max[:, h] = a
        actions_min[:, h] = b
        rewards[:, h] = game.rewards[h, s, a, b]
        states[:, h + 1] = _draw_index(next_cdf[h, s, a, b], u[:, 1])

    logger.debug(f"Sampled {n} episodes of '{game.name}' under '{rho.name}' (seed {seed})")
    return OfflineDataset(
        states,
        actions_max,
        actions_min,
        rewards,
        game.dims,
        Provenance(game.name, rho.name, int(seed), bit_generator),
    )


def _shuffled(ds: OfflineDataset, seed: int, bit_generator: str) -> np.ndarray:
    return make_generator(seed, "split", bit_generator=bit_generator).permutation(ds.n_episodes)


def split_hoeffding(ds: OfflineDataset, seed: int, bit_generator: str = "philox") -> List[OfflineDataset]:
    """
    H disjoint parts of floor(n/H) episodes; part h feeds step-h statistics only.

    Raises:
        InsufficientDataError: If n < H
    """
    H = ds.dims.horizon
    n = ds.n_episodes
    if n < H:
        raise InsufficientDataError(
            f"insufficient data for split: {n} episodes, need at least {H}", required=H, available=n
        )
    order = _shuffled(ds, seed, bit_generator)
    size = n // H
    return [ds.subset(np.sort(order[h * size : (h + 1) * size])) for h in range(H)]


def split_bernstein(ds: OfflineDataset, seed: int, bit_generator: str = "philox") -> BernsteinSplit:
    """
    Reference, base and per-step parts of sizes floor(n/3), floor(n/3), floor(n/(3H)).

    Raises:
        InsufficientDataError: If n < 3H
    """
    H = ds.dims.horizon
    n = ds.n_episodes
    if n < 3 * H:
        raise InsufficientDataError(
            f"insufficient data for split: {n} episodes, need at least {3 * H}",
            required=3 * H,
            available=n,
        )
    order = _shuffled(ds, seed, bit_generator)
    third = n // 3
    per_stage = n // (3 * H)
    offset = 2 * third
    stages = [
        ds.subset(np.sort(order[offset + h * per_stage : offset + (h + 1) * per_stage]))
        for h in range(H)
    ]
    return BernsteinSplit(
        reference=ds.subset(np.sort(order[:third])),
        base=ds.subset(np.sort(order[third:offset])),
        stages=stages,
    )


def empirical_model(part: OfflineDataset, dims: Optional[GameDims] = None) -> EmpiricalModel:
    """
    Counts, r_hat and P_hat of a data part.

    Unvisited cells get r_hat = 0 and a uniform P_hat row.

    Raises:
        DatasetError: If one cell was observed with different rewards
    """
    dims = dims or part.dims
    H, S, A, B = dims.horizon, dims.num_states, dims.num_actions_max, dims.num_actions_min
    if part.dims.horizon != H:
        raise DatasetError(f"episodes have {part.dims.horizon} steps, expected {H}")

    steps = np.broadcast_to(np.arange(H), part.rewards.shape)
    cells = np.ravel_multi_index(
        (steps, part.states[:, :H], part.actions_max, part.actions_min), (H, S, A, B)
    ).ravel()
    moves = (cells * S + part.states[:, 1:].ravel())
    observed = part.rewards.ravel()

    counts = np.bincount(cells, minlength=H * S * A * B)
    moved = np.bincount(moves, minlength=H * S * A * B * S).reshape(H, S, A, B, S)

    low = np.full(H * S * A * B, np.inf)
    high = np.full(H * S * A * B, -np.inf)
    np.minimum.at(low, cells, observed)
    np.maximum.at(high, cells, observed)
    visited = counts > 0
    if np.any(low[visited] != high[visited]):
        cell = np.unravel_index(np.flatnonzero(visited & (low != high))[0], (H, S, A, B))
        raise DatasetError(f"non-deterministic rewards at (h, s, a, b) = {tuple(int(i) for i in cell)}")

    r_hat = np.where(visited, low, 0.0).reshape(H, S, A, B)
    counts = counts.reshape(H, S, A, B)
    P_hat = np.full((H, S, A, B, S), 1.0 / S)
    seen = counts > 0
    P_hat[seen] = moved[seen] / counts[seen][:, None]

    return EmpiricalModel(counts=counts, r_hat=r_hat, P_hat=P_hat, n_episodes=part.n_episodes)


def uniform_exploration(dims: GameDims) -> ExplorationPolicy:
    """Uniform joint policy over A x B at every (h, s)."""
    shape = dims.table_shape
    return ExplorationPolicy(np.full(shape, 1.0 / (dims.num_actions_max * dims.num_actions_min)), name="uniform")


def exploration_from_pair(pi: StrategyPair, name: str = "pair") -> ExplorationPolicy:
    """Joint policy that plays ``pi``, so its occupancy equals d^pi."""
    return ExplorationPolicy(pi.joint(), name=name)
