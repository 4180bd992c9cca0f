"""Sweep result rows: sorted, byte-deterministic CSV plus a runtime sidecar."""

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

import pandas as pd

from ..utils.exceptions import DatasetError
from ..utils.logger import get_logger

logger = get_logger("results_csv")

RESULT_COLUMNS = [
    "algorithm",
    "bonus_scale",
    "n",
    "seed",
    "status",
    "gap",
    "V_low_1",
    "V_up_1",
    "c_star",
    "d_m",
    "error",
]
TEXT_COLUMNS = ("algorithm", "status", "error")
TIMING_COLUMNS = ["algorithm", "bonus_scale", "n", "seed", "runtime_seconds"]
FLOAT_FORMAT = "%.17g"

RowKey = Tuple[str, float, int, int]


@dataclass(frozen=True)
class SweepRow:
    """One (algorithm, bonus_scale, n, seed) run of a sweep."""

    algorithm: str
    bonus_scale: float
    n: int
    seed: int
    status: str
    gap: float = math.nan
    V_low_1: float = math.nan
    V_up_1: float = math.nan
    c_star: float = math.nan
    d_m: float = math.nan
    error: str = ""

    @property
    def key(self) -> RowKey:
        return (self.algorithm, float(self.bonus_scale), int(self.n), int(self.seed))

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def timings_path(path: Path) -> Path:
    """Sidecar path ``<file>.timings.csv``."""
    path = Path(path)
    return path.with_name(path.name + ".timings.csv")


def write_results(rows: Iterable[SweepRow], path: Path) -> Path:
    """
    Write rows sorted by key with floats at 17 significant digits.

    Args:
        rows: Sweep rows (any order)
        path: Target CSV path

    Returns:
        The CSV path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(rows, key=lambda row: row.key)
    frame = pd.DataFrame([asdict(row) for row in ordered], columns=RESULT_COLUMNS)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_results(path: Path) -> List[SweepRow]:
    """
    Read a sweep CSV back into rows.

    Raises:
        DatasetError: If the file is unreadable or lacks result columns
    """
    path = Path(path)
    # Empty error text stays a string; empty numeric cells are NaN.
    numeric_na = {c: ["", "nan", "NaN"] for c in RESULT_COLUMNS if c not in TEXT_COLUMNS}
    try:
        frame = pd.read_csv(
            path, keep_default_na=False, na_values=numeric_na, dtype={c: str for c in TEXT_COLUMNS}
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"Cannot read results {path}: {e}", path=str(path))
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"{path}: missing result columns {missing}", path=str(path))
    rows = []
    for record in frame.to_dict(orient="records"):
        rows.append(
            SweepRow(
                algorithm=str(record["algorithm"]),
                bonus_scale=float(record["bonus_scale"]),
                n=int(record["n"]),
                seed=int(record["seed"]),
                status=str(record["status"]),
                gap=float(record["gap"]),
                V_low_1=float(record["V_low_1"]),
                V_up_1=float(record["V_up_1"]),
                c_star=float(record["c_star"]),
                d_m=float(record["d_m"]),
                error=str(record["error"]),
            )
        )
    return rows


def write_timings(timings: Dict[RowKey, float], path: Path) -> Path:
    """Write the runtime sidecar of the sweep CSV at ``path``."""
    target = timings_path(path)
    records = [
        {"algorithm": k[0], "bonus_scale": k[1], "n": k[2], "seed": k[3], "runtime_seconds": v}
        for k, v in sorted(timings.items())
    ]
    pd.DataFrame(records, columns=TIMING_COLUMNS).to_csv(target, index=False, float_format=FLOAT_FORMAT)
    return target


def read_timings(path: Path) -> Dict[RowKey, float]:
    """Runtimes recorded next to the sweep CSV at ``path`` (empty if none)."""
    target = timings_path(path)
    if not target.exists():
        return {}
    frame = pd.read_csv(target)
    return {
        (str(r["algorithm"]), float(r["bonus_scale"]), int(r["n"]), int(r["seed"])): float(r["runtime_seconds"])
        for r in frame.to_dict(orient="records")
    }
