"""Pessimistic Nash value iteration with Hoeffding-type bonuses."""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Union

import numpy as np

from ..utils.exceptions import ConfigurationError, InvalidDimensionError, LearnerTimeoutError
from ..utils.logger import describe_table, get_logger
from .exact_eval import ValueTables
from .game_model import (
    GameDims,
    Player,
    SolveMode,
    Strategy,
    StrategyPair,
    TurnBasedMinStrategy,
)
from .matrix_ne import solve_stage_games
from .offline_data import OfflineDataset, empirical_model, split_hoeffding

logger = get_logger("pnvi_hoeffding")

DEFAULT_HOEFFDING_CONSTANT = 4.0


@dataclass
class PnviDiagnostics:
    """Run parameters and per-stage statistics of a learner run."""

    algorithm: str
    delta: float
    iota: float
    eps_ne: float
    bonus_constant: float
    n_episodes: int
    seed: int
    stage_min_count: List[int] = field(default_factory=list)
    stage_total_count: List[int] = field(default_factory=list)
    stage_max_bonus: List[float] = field(default_factory=list)
    runtime_seconds: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "delta": self.delta,
            "iota": self.iota,
            "eps_ne": self.eps_ne,
            "bonus_constant": self.bonus_constant,
            "n_episodes": self.n_episodes,
            "seed": self.seed,
            "stage_min_count": list(self.stage_min_count),
            "stage_total_count": list(self.stage_total_count),
            "stage_max_bonus": list(self.stage_max_bonus),
            "runtime_seconds": self.runtime_seconds,
        }


@dataclass(frozen=True, eq=False)
class ReferenceValues:
    """Lower and upper tables of the reference run on the reference split."""

    V_ref_low: ValueTables
    V_ref_up: ValueTables


@dataclass(frozen=True, eq=False)
class BernsteinBonuses:
    """Reference-part bonuses (b0) and advantage-part bonuses (b1), each [h][s][a][b]."""

    b_low0: np.ndarray
    b_up0: np.ndarray
    b_low1: np.ndarray
    b_up1: np.ndarray
    c: float


@dataclass(frozen=True, eq=False)
class PnviOutput:
    """
    Result of a pessimistic learner.

    ``mu_low``/``nu_low`` solve the lower tables and ``mu_up``/``nu_up`` the upper
    tables; the learned pair is (mu_low, nu_up).
    """

    mu_low: Strategy
    nu_up: Union[Strategy, TurnBasedMinStrategy]
    nu_low: Union[Strategy, TurnBasedMinStrategy]
    mu_up: Strategy
    V_low: ValueTables
    V_up: ValueTables
    bonus_low: np.ndarray
    bonus_up: np.ndarray
    diagnostics: PnviDiagnostics
    reference: Optional[ReferenceValues] = None
    bernstein_bonuses: Optional[BernsteinBonuses] = None

    @property
    def Q_low(self) -> np.ndarray:
        return self.V_low.Q

    @property
    def Q_up(self) -> np.ndarray:
        return self.V_up.Q

    @property
    def algorithm(self) -> str:
        return self.diagnostics.algorithm

    def pair(self) -> StrategyPair:
        return StrategyPair(self.mu_low, self.nu_up)


class StageBounds(NamedTuple):
    mu_low: np.ndarray
    nu_low: np.ndarray
    V_low: np.ndarray
    mu_up: np.ndarray
    nu_up: np.ndarray
    V_up: np.ndarray


def compute_iota(dims: GameDims, delta: float) -> float:
    """iota = ln(HSAB / delta)."""
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
    return math.log(dims.horizon * dims.num_states * dims.num_actions_max * dims.num_actions_min / delta)


def hoeffding_bonus(
    counts: np.ndarray, H: int, iota: float, constant: float = DEFAULT_HOEFFDING_CONSTANT
) -> np.ndarray:
    """
    Hoeffding bonus ``constant * H * sqrt(iota / max(n, 1))``, element-wise.

    Args:
        counts: Visit counts of any shape
        H: Horizon
        iota: Log term (> 0)
        constant: Leading constant

    Returns:
        Bonus table of the same shape as counts
    """
    return constant * H * np.sqrt(iota / np.maximum(counts, 1))


def check_dims(ds: OfflineDataset, dims: GameDims) -> None:
    """Raise if ``dims`` disagree with the dataset."""
    if (ds.dims.num_states, ds.dims.num_actions_max, ds.dims.num_actions_min, ds.dims.horizon) != (
        dims.num_states,
        dims.num_actions_max,
        dims.num_actions_min,
        dims.horizon,
    ):
        raise InvalidDimensionError(
            f"invalid dimension: dataset dims {ds.dims} do not match {dims}", dimension="dims"
        )


def check_deadline(
    deadline: Optional[float], started: float, stage: int, state: Optional[int] = None
) -> None:
    """Raise LearnerTimeoutError once the monotonic clock passes ``deadline``."""
    if deadline is not None:
        now = time.monotonic()
        if now > deadline:
            where = f"stage {stage}" if state is None else f"stage {stage}, state {state}"
            raise LearnerTimeoutError(
                f"learner exceeded its time budget before {where}",
                elapsed=now - started,
                limit=deadline - started,
            )


def solve_bounds(
    Q_low: np.ndarray,
    Q_up: np.ndarray,
    mode: SolveMode,
    eps_ne: float,
    stage: int,
    deadline: Optional[float] = None,
    started: float = 0.0,
) -> StageBounds:
    """Solve the lower and upper stage games of every state, checking ``deadline`` per state."""

    def before_state(s: int) -> None:
        check_deadline(deadline, started, stage, s)

    low = solve_stage_games(Q_low, mode, eps_ne, stage=stage, before_state=before_state)
    up = solve_stage_games(Q_up, mode, eps_ne, stage=stage, before_state=before_state)
    return StageBounds(low.mu, low.nu, low.values, up.mu, up.nu, up.values)


def assemble_output(
    dims: GameDims,
    mu_low: np.ndarray,
    nu_low: np.ndarray,
    mu_up: np.ndarray,
    nu_up: np.ndarray,
    V_low: ValueTables,
    V_up: ValueTables,
    bonus_low: np.ndarray,
    bonus_up: np.ndarray,
    diagnostics: PnviDiagnostics,
    **extra,
) -> PnviOutput:
    """Wrap raw learner tables into a PnviOutput with typed strategies."""

    def min_strategy(dist):
        return TurnBasedMinStrategy(dist) if dims.turn_based else Strategy(Player.MIN, dist)

    return PnviOutput(
        mu_low=Strategy(Player.MAX, mu_low),
        nu_up=min_strategy(nu_up),
        nu_low=min_strategy(nu_low),
        mu_up=Strategy(Player.MAX, mu_up),
        V_low=V_low,
        V_up=V_up,
        bonus_low=bonus_low,
        bonus_up=bonus_up,
        diagnostics=diagnostics,
        **extra,
    )


def empty_tables(dims: GameDims) -> Dict[str, np.ndarray]:
    H, S, A, B = dims.horizon, dims.num_states, dims.num_actions_max, dims.num_actions_min
    nu_shape = (H, S, A, B) if dims.turn_based else (H, S, B)
    return {
        "Q_low": np.zeros((H, S, A, B)),
        "Q_up": np.zeros((H, S, A, B)),
        "V_low": np.zeros((H + 1, S)),
        "V_up": np.zeros((H + 1, S)),
        "mu_low": np.zeros((H, S, A)),
        "mu_up": np.zeros((H, S, A)),
        "nu_low": np.zeros(nu_shape),
        "nu_up": np.zeros(nu_shape),
    }


def run_pnvi_hoeffding(
    ds: OfflineDataset,
    dims: GameDims,
    delta: float,
    eps_ne: float = 1e-6,
    seed: int = 0,
    constant: float = DEFAULT_HOEFFDING_CONSTANT,
    deadline: Optional[float] = None,
    bit_generator: str = "philox",
) -> PnviOutput:
    """
    Pessimistic Nash value iteration on a Hoeffding split of ``ds``.

    Q_low = max(r_hat + P_hat V_low - b, 0) and Q_up = min(r_hat + P_hat V_up + b, H - h),
    with the stage-h statistics taken from split part h. Each state's lower
    (upper) stage game gives mu_low (nu_up) and the value V_low (V_up).

    Args:
        ds: Offline dataset
        dims: Game dimensions (must match the dataset)
        delta: Failure probability in (0, 1)
        eps_ne: Per-state exploitability tolerance
        seed: Split seed
        constant: Leading bonus constant
        deadline: time.monotonic() value after which the run aborts
        bit_generator: Name of the bit generator for the split

    Returns:
        PnviOutput

    Raises:
        InsufficientDataError: If the dataset has fewer than H episodes
        NashSolverError: With the failing stage and state
        LearnerTimeoutError: If the deadline passes
    """
    started = time.monotonic()
    check_dims(ds, dims)
    H = dims.horizon
    mode = SolveMode.TURN_BASED if dims.turn_based else SolveMode.SIMULTANEOUS
    iota = compute_iota(dims, delta)

    logger.debug(f"Step 1/2: Splitting {ds.n_episodes} episodes into {H} parts")
    parts = split_hoeffding(ds, seed, bit_generator)

    diagnostics = PnviDiagnostics(
        algorithm="hoeffding",
        delta=delta,
        iota=iota,
        eps_ne=eps_ne,
        bonus_constant=constant,
        n_episodes=ds.n_episodes,
        seed=seed,
    )
    t = empty_tables(dims)
    bonus = np.zeros((H,) + t["Q_low"].shape[1:])

    logger.debug(f"Step 2/2: Backward pass over {H} stages (iota={iota:.4g})")
    for h in reversed(range(H)):
        check_deadline(deadline, started, h)
        model = empirical_model(parts[h])
        counts = model.counts[h]
        bonus[h] = hoeffding_bonus(counts, H, iota, constant)

        t["Q_low"][h] = np.maximum(
            model.r_hat[h] + model.P_hat[h] @ t["V_low"][h + 1] - bonus[h], 0.0
        )
        t["Q_up"][h] = np.minimum(model.r_hat[h] + model.P_hat[h] @ t["V_up"][h + 1] + bonus[h], H - h)

        stage = solve_bounds(t["Q_low"][h], t["Q_up"][h], mode, eps_ne, h, deadline, started)
        t["mu_low"][h], t["nu_low"][h], t["V_low"][h] = stage.mu_low, stage.nu_low, stage.V_low
        t["mu_up"][h], t["nu_up"][h], t["V_up"][h] = stage.mu_up, stage.nu_up, stage.V_up

        diagnostics.stage_min_count.insert(0, int(counts.min()))
        diagnostics.stage_total_count.insert(0, int(counts.sum()))
        diagnostics.stage_max_bonus.insert(0, float(bonus[h].max()))
        logger.debug(f"  stage {h}: bonus {describe_table(bonus[h])}, counts {describe_table(counts)}")

    diagnostics.runtime_seconds = time.monotonic() - started
    return assemble_output(
        dims,
        t["mu_low"],
        t["nu_low"],
        t["mu_up"],
        t["nu_up"],
        ValueTables(t["V_low"], t["Q_low"]),
        ValueTables(t["V_up"], t["Q_up"]),
        bonus,
        bonus.copy(),
        diagnostics,
    )
