"""Columnar CSV storage of offline datasets with a JSON provenance sidecar."""

import dataclasses
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from ..core.game_model import GameDims
from ..core.offline_data import OfflineDataset, Provenance
from ..utils.exceptions import DatasetError
from ..utils.logger import get_logger
from .json_codec import read_json, write_json

logger = get_logger("dataset_csv")

COLUMNS = ["episode", "h", "s", "a", "b", "r", "s_next"]
FLOAT_FORMAT = "%.17g"


def meta_path(path: Path) -> Path:
    """Sidecar path ``<file>.meta.json``."""
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def dataset_to_frame(ds: OfflineDataset) -> pd.DataFrame:
    """One row per (episode, h), sorted by (episode, h)."""
    n, H = ds.rewards.shape
    return pd.DataFrame(
        {
            "episode": np.repeat(np.arange(n), H),
            "h": np.tile(np.arange(H), n),
            "s": ds.states[:, :H].ravel(),
            "a": ds.actions_max.ravel(),
            "b": ds.actions_min.ravel(),
            "r": ds.rewards.ravel(),
            "s_next": ds.states[:, 1:].ravel(),
        },
        columns=COLUMNS,
    )


def write_dataset(ds: OfflineDataset, path: Path) -> Path:
    """
    Write ``ds`` as CSV (rewards with 17 significant digits) plus its sidecar.

    Args:
        ds: Dataset to store
        path: Target CSV path

    Returns:
        The CSV path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_to_frame(ds).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    write_json(
        {
            "dims": dataclasses.asdict(ds.dims),
            "provenance": dataclasses.asdict(ds.provenance),
            "n_episodes": ds.n_episodes,
        },
        meta_path(path),
    )
    logger.info(f"Wrote {ds.n_episodes} episodes to {path}")
    return path


def _fail(path: Path, message: str, row: Optional[int] = None) -> DatasetError:
    # Line numbers count the header as line 1.
    line = None if row is None else int(row) + 2
    where = f" (line {line})" if line is not None else ""
    return DatasetError(f"{path}{where}: {message}", path=str(path), line=line)


def read_dataset(path: Path, dims: Optional[GameDims] = None) -> OfflineDataset:
    """
    Read a dataset CSV.

    Dims come from ``dims`` or else from the sidecar.

    Raises:
        DatasetError: On a missing header column, non-integer indices, episodes
            with missing or repeated steps, or broken state chains
    """
    path = Path(path)
    provenance = Provenance(game_id="unknown", rho_id="unknown")
    sidecar = meta_path(path)
    if sidecar.exists():
        meta = read_json(sidecar)
        provenance = Provenance(**meta.get("provenance", {}))
        if dims is None:
            dims = GameDims(**meta["dims"])
    if dims is None:
        raise DatasetError(f"{path}: no sidecar {sidecar.name}; dims must be given", path=str(path))

    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"Cannot read dataset {path}: {e}", path=str(path))
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise _fail(path, f"missing columns {missing}")
    for column in COLUMNS:
        if column == "r":
            continue
        if not pd.api.types.is_integer_dtype(frame[column]):
            raise _fail(path, f"column '{column}' must hold integers")
    if frame["r"].isna().any():
        raise _fail(path, "missing reward", int(np.flatnonzero(frame["r"].isna())[0]))

    H = dims.horizon
    frame = frame.sort_values(["episode", "h"], kind="stable")
    sizes = frame.groupby("episode", sort=True).size()
    if (sizes != H).any():
        episode = sizes.index[np.flatnonzero(sizes.to_numpy() != H)[0]]
        row = frame.index[frame["episode"] == episode][0]
        raise _fail(path, f"episode {episode} has {sizes[episode]} steps, expected {H}", row)

    n = len(sizes)
    steps = frame["h"].to_numpy().reshape(n, H)
    if not np.array_equal(steps, np.broadcast_to(np.arange(H), (n, H))):
        row = frame.index[np.flatnonzero((steps != np.arange(H)).ravel())[0]]
        raise _fail(path, "steps of an episode must be 0..H-1", row)

    s = frame["s"].to_numpy().reshape(n, H)
    s_next = frame["s_next"].to_numpy().reshape(n, H)
    if H > 1 and np.any(s[:, 1:] != s_next[:, :-1]):
        flat = np.flatnonzero((s[:, 1:] != s_next[:, :-1]).ravel())[0]
        row = frame.index[(flat // (H - 1)) * H + flat % (H - 1) + 1]
        raise _fail(path, "state does not chain from the previous step's next state", row)

    states = np.concatenate([s, s_next[:, -1:]], axis=1)
    try:
        ds = OfflineDataset(
            states=states,
            actions_max=frame["a"].to_numpy().reshape(n, H),
            actions_min=frame["b"].to_numpy().reshape(n, H),
            rewards=frame["r"].to_numpy(dtype=float).reshape(n, H),
            dims=dims,
            provenance=provenance,
        )
    except DatasetError as e:
        raise DatasetError(f"{path}: {e}", path=str(path))
    logger.debug(f"Read {n} episodes from {path}")
    return ds

