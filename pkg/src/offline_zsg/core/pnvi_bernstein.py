"""Pessimistic Nash value iteration with reference-advantage decomposition and Bernstein bonuses."""

import time
from typing import Optional

import numpy as np

from ..utils.logger import describe_table, get_logger
from ..utils.rng import derive_seed
from .exact_eval import ValueTables
from .game_model import GameDims, SolveMode
from .offline_data import OfflineDataset, empirical_model, split_bernstein
from .pnvi_hoeffding import (
    DEFAULT_HOEFFDING_CONSTANT,
    BernsteinBonuses,
    PnviDiagnostics,
    PnviOutput,
    ReferenceValues,
    assemble_output,
    check_deadline,
    check_dims,
    compute_iota,
    empty_tables,
    run_pnvi_hoeffding,
    solve_bounds,
)

logger = get_logger("pnvi_bernstein")

DEFAULT_BERNSTEIN_C = 1.0


def variance_under(P_row: np.ndarray, V: np.ndarray) -> np.ndarray:
    """
    Var_{P}(V) = sum P (V - PV)^2 over the last axis of ``P_row``, computed in two passes.

    Args:
        P_row: Probability vector(s) over S, any leading shape
        V: Value vector over S

    Returns:
        Variance with the leading shape of P_row (a float for a single row)
    """
    P_row = np.asarray(P_row, dtype=float)
    V = np.asarray(V, dtype=float)
    mean = P_row @ V
    centered = V - np.expand_dims(mean, -1)
    variance = np.sum(P_row * centered * centered, axis=-1)
    return float(variance) if np.ndim(variance) == 0 else variance


def bernstein_bonus(
    counts: np.ndarray,
    P_hat: np.ndarray,
    V: np.ndarray,
    c: float,
    iota: float,
    H: int,
) -> np.ndarray:
    """
    Bernstein bonus c * (sqrt(Var_{P_hat}(V) * iota / (n v 1)) + H * iota / (n v 1)).

    Args:
        counts: [s][a][b] visit counts
        P_hat: [s][a][b][s'] empirical transitions
        V: Next-step value vector (or advantage V - V_ref)
        c: Universal constant (> 0)
        iota: Log term
        H: Horizon

    Returns:
        [s][a][b] bonus table
    """
    visits = np.maximum(counts, 1)
    return c * (np.sqrt(variance_under(P_hat, V) * iota / visits) + H * iota / visits)


def run_pnvi_bernstein(
    ds: OfflineDataset,
    dims: GameDims,
    delta: float,
    c: float = DEFAULT_BERNSTEIN_C,
    eps_ne: float = 1e-6,
    seed: int = 0,
    hoeffding_constant: float = DEFAULT_HOEFFDING_CONSTANT,
    deadline: Optional[float] = None,
    bit_generator: str = "philox",
) -> PnviOutput:
    """
    Pessimistic Nash value iteration with reference-advantage decomposition.

    The reference tables come from the Hoeffding learner on the reference split.
    The base split estimates r_hat0, P_hat0 for every step and the per-step
    splits estimate P_hat1. At stage h

        Q_low = Q_ref_low v clip(r0 + P0 V_ref_low - b_low0 + P1 (V_low - V_ref_low) - b_low1)
        Q_up  = Q_ref_up  ^ clip(r0 + P0 V_ref_up + b_up0 + P1 (V_up - V_ref_up) + b_up1)

    where clip keeps the bracket in [0, H - h]. Reference bonuses b0 are computed
    once; advantage bonuses b1 at each stage from the finished step h + 1.

    Args:
        ds: Offline dataset (n >= 3H)
        dims: Game dimensions
        delta: Failure probability shared by the reference and main passes
        c: Bernstein constant
        eps_ne: Per-state exploitability tolerance
        seed: Split seed; the reference run derives its own
        hoeffding_constant: Bonus constant of the reference run
        deadline: time.monotonic() value after which the run aborts
        bit_generator: Name of the bit generator for the splits

    Returns:
        PnviOutput with ``reference`` and ``bernstein_bonuses`` filled in

    Raises:
        InsufficientDataError: If n < 3H
        NashSolverError: With the failing stage and state
        LearnerTimeoutError: If the deadline passes
    """
    started = time.monotonic()
    check_dims(ds, dims)
    H = dims.horizon
    mode = SolveMode.TURN_BASED if dims.turn_based else SolveMode.SIMULTANEOUS
    iota = compute_iota(dims, delta)

    logger.debug(f"Step 1/4: Splitting {ds.n_episodes} episodes into reference, base and {H} stage parts")
    split = split_bernstein(ds, seed, bit_generator)

    logger.debug(f"Step 2/4: Reference run on {split.reference.n_episodes} episodes")
    ref = run_pnvi_hoeffding(
        split.reference,
        dims,
        delta,
        eps_ne=eps_ne,
        seed=derive_seed(seed, "reference"),
        constant=hoeffding_constant,
        deadline=deadline,
        bit_generator=bit_generator,
    )
    V_ref_low, V_ref_up = ref.V_low.V, ref.V_up.V
    Q_ref_low, Q_ref_up = ref.Q_low, ref.Q_up

    logger.debug("Step 3/4: Empirical models and reference bonuses")
    base = empirical_model(split.base)
    stage_models = [empirical_model(part) for part in split.stages]
    shape = base.counts.shape
    b_low0 = np.zeros(shape)
    b_up0 = np.zeros(shape)
    for h in range(H):
        b_low0[h] = bernstein_bonus(base.counts[h], base.P_hat[h], V_ref_low[h + 1], c, iota, H)
        b_up0[h] = bernstein_bonus(base.counts[h], base.P_hat[h], V_ref_up[h + 1], c, iota, H)
    b_low1 = np.zeros(shape)
    b_up1 = np.zeros(shape)

    diagnostics = PnviDiagnostics(
        algorithm="bernstein",
        delta=delta,
        iota=iota,
        eps_ne=eps_ne,
        bonus_constant=c,
        n_episodes=ds.n_episodes,
        seed=seed,
    )
    t = empty_tables(dims)

    logger.debug(f"Step 4/4: Backward pass over {H} stages")
    for h in reversed(range(H)):
        check_deadline(deadline, started, h)
        counts1 = stage_models[h].counts[h]
        P1 = stage_models[h].P_hat[h]
        advantage_low = t["V_low"][h + 1] - V_ref_low[h + 1]
        advantage_up = t["V_up"][h + 1] - V_ref_up[h + 1]
        b_low1[h] = bernstein_bonus(counts1, P1, advantage_low, c, iota, H)
        b_up1[h] = bernstein_bonus(counts1, P1, advantage_up, c, iota, H)

        reference_low = base.r_hat[h] + base.P_hat[h] @ V_ref_low[h + 1] - b_low0[h]
        reference_up = base.r_hat[h] + base.P_hat[h] @ V_ref_up[h + 1] + b_up0[h]
        estimate_low = np.clip(reference_low + P1 @ advantage_low - b_low1[h], 0.0, H - h)
        estimate_up = np.clip(reference_up + P1 @ advantage_up + b_up1[h], 0.0, H - h)
        t["Q_low"][h] = np.maximum(Q_ref_low[h], estimate_low)
        t["Q_up"][h] = np.minimum(Q_ref_up[h], estimate_up)

        stage = solve_bounds(t["Q_low"][h], t["Q_up"][h], mode, eps_ne, h, deadline, started)
        t["mu_low"][h], t["nu_low"][h], t["mu_up"][h], t["nu_up"][h] = (
            stage.mu_low,
            stage.nu_low,
            stage.mu_up,
            stage.nu_up,
        )
        # Clamp V to the reference tables; solver round-off can cross them.
        t["V_low"][h] = np.maximum(stage.V_low, V_ref_low[h])
        t["V_up"][h] = np.minimum(stage.V_up, V_ref_up[h])

        diagnostics.stage_min_count.insert(0, int(counts1.min()))
        diagnostics.stage_total_count.insert(0, int(counts1.sum()))
        diagnostics.stage_max_bonus.insert(0, float((b_low0[h] + b_low1[h]).max()))
        logger.debug(
            f"  stage {h}: b0 {describe_table(b_low0[h])}, b1 {describe_table(b_low1[h])}"
        )

    diagnostics.runtime_seconds = time.monotonic() - started
    return assemble_output(
        dims,
        t["mu_low"],
        t["nu_low"],
        t["mu_up"],
        t["nu_up"],
        ValueTables(t["V_low"], t["Q_low"]),
        ValueTables(t["V_up"], t["Q_up"]),
        b_low0 + b_low1,
        b_up0 + b_up1,
        diagnostics,
        reference=ReferenceValues(ref.V_low, ref.V_up),
        bernstein_bonuses=BernsteinBonuses(b_low0, b_up0, b_low1, b_up1, c),
    )
