"""Rate fitting of duality gaps against sample size, and the rates the bounds predict."""

import math
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..storage.results_csv import SweepRow
from ..utils.exceptions import ConfigurationError, RateFitError
from ..utils.logger import get_logger

logger = get_logger("rates")

MIN_POINTS = 3


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    used: int
    dropped: List[int]


class TheoryRate(NamedTuple):
    """Gap exponent in n, the scaling expression, and the burn-in sample size."""

    exponent: float
    expression: str
    burn_in: str


_RATES: Dict[Tuple[str, str, bool], TheoryRate] = {
    ("hoeffding", "unilateral", False): TheoryRate(-0.5, "sqrt(C* S A B H^5 / n)", "C* S A B H^4"),
    ("bernstein", "unilateral", False): TheoryRate(-0.5, "sqrt(C* S A B H^3 / n)", "C* S A B H^4"),
    ("bernstein", "uniform", False): TheoryRate(-0.5, "sqrt(H^3 / (n d_m))", "H^4 / d_m"),
    ("hoeffding", "unilateral", True): TheoryRate(-0.5, "sqrt(C* S H^5 / n)", "C* S H^4"),
    ("bernstein", "unilateral", True): TheoryRate(-0.5, "sqrt(C* S H^3 / n)", "C* S H^4"),
}


def theory_rate(algorithm: str, regime: str = "unilateral", turn_based: bool = False) -> TheoryRate:
    """
    Predicted gap scaling of a learner.

    Args:
        algorithm: "hoeffding" or "bernstein"
        regime: "unilateral" (C*-based bound) or "uniform" (d_m-based bound)
        turn_based: Whether the game is turn-based

    Raises:
        ConfigurationError: If no bound covers the combination
    """
    key = (algorithm, regime, bool(turn_based))
    if key not in _RATES:
        if regime == "uniform" and (algorithm, "uniform", False) in _RATES:
            return _RATES[(algorithm, "uniform", False)]
        raise ConfigurationError(f"No rate known for algorithm={algorithm}, regime={regime}")
    return _RATES[key]


def burn_in_samples(
    algorithm: str,
    S: int,
    A: int,
    B: int,
    H: int,
    c_star: Optional[float] = None,
    d_m: Optional[float] = None,
    turn_based: bool = False,
) -> float:
    """Numeric burn-in threshold (up to constants and logs); inf when C* or d_m rule it out."""
    if d_m is not None and c_star is None:
        return math.inf if d_m <= 0 else H**4 / d_m
    if c_star is None or not math.isfinite(c_star):
        return math.inf
    actions = 1 if turn_based else A * B
    return c_star * S * actions * H**4


def fit_loglog_slope(points: Iterable[Tuple[float, float]]) -> SlopeFit:
    """
    Least-squares fit of log(gap) on log(n).

    Points with gap <= 0 (or non-finite) are dropped and reported by index.

    Args:
        points: (n, gap) pairs with n > 0

    Returns:
        SlopeFit(slope, intercept, r2, used, dropped)

    Raises:
        RateFitError: If fewer than three usable points remain
    """
    points = list(points)
    usable: List[Tuple[float, float]] = []
    dropped: List[int] = []
    for i, (n, gap) in enumerate(points):
        if n > 0 and gap > 0 and math.isfinite(gap):
            usable.append((float(n), float(gap)))
        else:
            dropped.append(i)
    if len(usable) < MIN_POINTS:
        raise RateFitError(
            f"insufficient points: {len(usable)} usable, need {MIN_POINTS}",
            usable=len(usable),
            dropped=dropped,
        )
    log_n = np.log([n for n, _ in usable])
    log_gap = np.log([gap for _, gap in usable])
    if np.allclose(log_gap, log_gap[0], rtol=0.0, atol=0.0):
        return SlopeFit(0.0, float(log_gap[0]), 1.0, len(usable), dropped)
    fit = stats.linregress(log_n, log_gap)
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2), len(usable), dropped)


def median_gaps(rows: Sequence[SweepRow], algorithm: str, bonus_scale: Optional[float] = None) -> List[Tuple[int, float]]:
    """
    Median gap over seeds for each n, from successful rows only.

    Args:
        rows: Sweep rows
        algorithm: Learner to select
        bonus_scale: Constant to select (all if None)

    Returns:
        Sorted (n, median_gap) pairs
    """
    by_n: Dict[int, List[float]] = {}
    for row in rows:
        if row.ok and row.algorithm == algorithm and (bonus_scale is None or row.bonus_scale == bonus_scale):
            by_n.setdefault(row.n, []).append(row.gap)
    return [(n, float(np.median(gaps))) for n, gaps in sorted(by_n.items())]


def fit_sweep(rows: Sequence[SweepRow], algorithm: str, bonus_scale: Optional[float] = None) -> SlopeFit:
    """Median-over-seeds, then ``fit_loglog_slope``."""
    points = median_gaps(rows, algorithm, bonus_scale)
    fit = fit_loglog_slope(points)
    logger.debug(f"{algorithm}: slope {fit.slope:.4f} (r2={fit.r2:.3f}) over {fit.used} sample sizes")
    return fit
