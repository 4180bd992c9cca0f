"""One-shot zero-sum matrix games: certified approximate NE and pure max-min solving."""

from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from ..utils.exceptions import InvalidPayoffError, NashSolverError
from ..utils.logger import get_logger
from .game_model import SolveMode

logger = get_logger("matrix_ne")

# HiGHS back-ends, tried in order until one certifies the tolerance.
LP_METHODS = ("highs-ds", "highs-ipm", "highs")

SUPPORT_TOL = 1e-9


class MatrixGameSolution(NamedTuple):
    """Approximate NE (mu, nu) of a matrix game with its value and exploitability."""

    mu: np.ndarray
    nu: np.ndarray
    value: float
    exploitability: float
    method: str = "saddle"


class MaxMinSolution(NamedTuple):
    """Pure max-min solution of a turn-based stage: ``b_reply[a]`` answers max action ``a``."""

    a_star: int
    b_reply: np.ndarray
    value: float


class StageSolution(NamedTuple):
    """Per-state strategies and values of one stage.

    ``nu`` is [s][b] for simultaneous stages and [s][a][b] for turn-based ones.
    """

    mu: np.ndarray
    nu: np.ndarray
    values: np.ndarray
    exploitability: np.ndarray


class _LPAttemptFailed(Exception):
    def __init__(self, method: str, candidate: Optional[MatrixGameSolution]):
        self.method = method
        self.candidate = candidate
        super().__init__(method)


def _as_payoff(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or 0 in Q.shape:
        raise InvalidPayoffError(f"invalid payoff: expected a non-empty A x B matrix, got shape {Q.shape}")
    if not np.all(np.isfinite(Q)):
        raise InvalidPayoffError("invalid payoff: matrix has non-finite entries")
    return Q


def exploitability(Q, mu, nu) -> float:
    """
    Exploitability max_a (Q nu)_a - min_b (mu^T Q)_b of a mixed pair.

    Raises:
        InvalidPayoffError: On non-finite payoffs or a dimension mismatch
    """
    Q = _as_payoff(Q)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != (Q.shape[0],) or nu.shape != (Q.shape[1],):
        raise InvalidPayoffError(
            f"dimension mismatch: Q is {Q.shape}, mu has {mu.shape}, nu has {nu.shape}"
        )
    return float(np.max(Q @ nu) - np.min(mu @ Q))


def pure_saddle_point(Q) -> Optional[Tuple[int, int]]:
    """Lowest-index pure saddle point (a, b) of ``Q``, or None when max-min < min-max."""
    Q = _as_payoff(Q)
    row_min = Q.min(axis=1)
    col_max = Q.max(axis=0)
    lower = row_min.max()
    if lower != col_max.min():
        return None
    return int(np.argmax(row_min == lower)), int(np.argmax(col_max == lower))


def _normalize(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, None)
    total = x.sum()
    if total <= 0.0:
        return np.full(x.shape, 1.0 / x.size)
    return x / total


def _solution(Q: np.ndarray, mu: np.ndarray, nu: np.ndarray, method: str) -> MatrixGameSolution:
    mu = _normalize(mu)
    nu = _normalize(nu)
    return MatrixGameSolution(
        mu=mu,
        nu=nu,
        value=float(mu @ Q @ nu),
        exploitability=max(exploitability(Q, mu, nu), 0.0),
        method=method,
    )


def _lp_joint(Q: np.ndarray, method: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve the joint LP  max v  s.t.  v <= (x^T Q)_j,  (Q y)_i <= v,  x, y in simplices.

    The payoffs are centered and scaled to unit range first.
    """
    A, B = Q.shape
    scale = float(np.max(np.abs(Q - Q.mean())))
    Qs = (Q - Q.mean()) / scale

    num = A + B + 1
    c = np.zeros(num)
    c[-1] = -1.0

    upper_cols = np.hstack([-Qs.T, np.zeros((B, B)), np.ones((B, 1))])
    upper_rows = np.hstack([np.zeros((A, A)), Qs, -np.ones((A, 1))])
    A_ub = np.vstack([upper_cols, upper_rows])
    b_ub = np.zeros(A + B)

    A_eq = np.zeros((2, num))
    A_eq[0, :A] = 1.0
    A_eq[1, A : A + B] = 1.0
    b_eq = np.ones(2)
    bounds = [(0.0, None)] * (A + B) + [(None, None)]

    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method=method)
    if res.status != 0 or res.x is None:
        raise _LPAttemptFailed(method, None)
    return res.x[:A], res.x[A : A + B]


def _equalize(Q: np.ndarray, own: np.ndarray, other: np.ndarray) -> Optional[np.ndarray]:
    """
    Re-solve ``other`` on its support so the rows in ``own``'s support are equalized.

    Least squares on [Q_support | -1; 1 | 0] [y; v] = [0; 1]. Returns None if the
    solution leaves the simplex.
    """
    rows = np.flatnonzero(own > SUPPORT_TOL)
    cols = np.flatnonzero(other > SUPPORT_TOL)
    system = np.zeros((rows.size + 1, cols.size + 1))
    system[:-1, :-1] = Q[np.ix_(rows, cols)]
    system[:-1, -1] = -1.0
    system[-1, :-1] = 1.0
    rhs = np.zeros(rows.size + 1)
    rhs[-1] = 1.0
    solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    weights = solution[:-1]
    if np.any(weights < -SUPPORT_TOL):
        return None
    polished = np.zeros_like(other)
    polished[cols] = np.clip(weights, 0.0, None)
    return polished


def _polish(Q: np.ndarray, candidate: MatrixGameSolution) -> MatrixGameSolution:
    nu = _equalize(Q, candidate.mu, candidate.nu)
    mu = _equalize(Q.T, candidate.nu, candidate.mu)
    if mu is None or nu is None:
        return candidate
    polished = _solution(Q, mu, nu, candidate.method + "+polish")
    if polished.exploitability < candidate.exploitability:
        return polished
    return candidate


def solve_matrix_game(Q, eps_ne: float = 1e-8) -> MatrixGameSolution:
    """
    Approximate NE of the zero-sum matrix game ``Q`` (row player maximizes).

    Pure saddle points are returned exactly. Otherwise the joint LP is solved with
    the HiGHS back-ends in turn until the exploitability is at most ``eps_ne``.

    Args:
        Q: A x B payoff matrix
        eps_ne: Exploitability tolerance (> 0)

    Returns:
        MatrixGameSolution with exploitability <= eps_ne

    Raises:
        InvalidPayoffError: If Q has non-finite entries or eps_ne <= 0
        NashSolverError: If no back-end certifies eps_ne; carries the best candidate
    """
    Q = _as_payoff(Q)
    if not eps_ne > 0.0:
        raise InvalidPayoffError(f"eps_ne must be positive, got {eps_ne}")

    saddle = pure_saddle_point(Q)
    if saddle is not None:
        a, b = saddle
        mu = np.zeros(Q.shape[0])
        nu = np.zeros(Q.shape[1])
        mu[a] = 1.0
        nu[b] = 1.0
        return MatrixGameSolution(mu, nu, float(Q[a, b]), 0.0, "saddle")

    best: Optional[MatrixGameSolution] = None
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(len(LP_METHODS)),
            retry=retry_if_exception_type(_LPAttemptFailed),
            reraise=True,
        ):
            with attempt:
                method = LP_METHODS[attempt.retry_state.attempt_number - 1]
                x, y = _lp_joint(Q, method)
                candidate = _polish(Q, _solution(Q, x, y, method))
                if best is None or candidate.exploitability < best.exploitability:
                    best = candidate
                if candidate.exploitability > eps_ne:
                    logger.debug(
                        f"LP back-end {method} reached exploitability "
                        f"{candidate.exploitability:.3g} > {eps_ne:.3g}"
                    )
                    raise _LPAttemptFailed(method, candidate)
                return candidate
    except _LPAttemptFailed as e:
        raise NashSolverError(
            f"matrix game not solved to exploitability {eps_ne:.3g} "
            f"(best {best.exploitability if best else float('nan'):.3g} via {e.method})",
            best_solution=best,
            exploitability=best.exploitability if best else None,
        )


def solve_maxmin_pure(Q) -> MaxMinSolution:
    """
    Pure max-min solution of a turn-based stage game.

    b_reply(a) = argmin_b Q(a, b), a_star = argmax_a Q(a, b_reply(a)), lowest index
    on ties.

    Raises:
        InvalidPayoffError: If Q has non-finite entries
    """
    Q = _as_payoff(Q)
    b_reply = np.argmin(Q, axis=1)
    guaranteed = Q[np.arange(Q.shape[0]), b_reply]
    a_star = int(np.argmax(guaranteed))
    return MaxMinSolution(a_star, b_reply, float(guaranteed[a_star]))


def solve_stage_games(
    Q_stage: np.ndarray,
    mode: SolveMode,
    eps_ne: float,
    stage: Optional[int] = None,
    before_state: Optional[Callable[[int], None]] = None,
) -> StageSolution:
    """
    Solve the matrix game of every state of one stage.

    Args:
        Q_stage: [s][a][b] payoffs
        mode: Simultaneous NE or turn-based pure max-min
        eps_ne: Exploitability tolerance for simultaneous stages
        stage: Step index, attached to solver errors
        before_state: Called with each state index before it is solved; may raise

    Returns:
        StageSolution

    Raises:
        NashSolverError: With ``stage`` and ``state`` filled in
    """
    S, A, B = Q_stage.shape
    mu = np.zeros((S, A))
    values = np.zeros(S)
    gaps = np.zeros(S)

    if mode is SolveMode.TURN_BASED:
        nu = np.zeros((S, A, B))
        for s in range(S):
            if before_state:
                before_state(s)
            sol = solve_maxmin_pure(Q_stage[s])
            mu[s, sol.a_star] = 1.0
            nu[s, np.arange(A), sol.b_reply] = 1.0
            values[s] = sol.value
        return StageSolution(mu, nu, values, gaps)

    nu = np.zeros((S, B))
    for s in range(S):
        if before_state:
            before_state(s)
        try:
            sol = solve_matrix_game(Q_stage[s], eps_ne)
        except NashSolverError as e:
            raise NashSolverError(
                f"stage {stage}, state {s}: {e}",
                best_solution=e.best_solution,
                exploitability=e.exploitability,
                stage=stage,
                state=s,
            ) from e
        mu[s] = sol.mu
        nu[s] = sol.nu
        values[s] = sol.value
        gaps[s] = sol.exploitability
    return StageSolution(mu, nu, values, gaps)
