"""Reading return panels and writing run artifacts."""
import json
import logging
import platform
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import click
import numpy as np
import pandas as pd
import pydantic
import scipy

from src.errors import EmptyPanel, ParseError, UnknownName
from src.model.params import AnyParams, params_from_json

logger = logging.getLogger(__name__)

MISSING_POLICIES = ("drop_common_and_zero_fill", "error")
INDEX_HEADERS = {"date", "time", "index", "period", "unnamed: 0", ""}

PathLike = Union[str, Path]


@dataclass
class ReturnsPanel:
    values: np.ndarray
    columns: List[str]
    index: Optional[pd.Index] = None
    n_dropped_rows: int = 0
    n_zero_filled: int = 0
    centered: bool = False
    source: Optional[str] = None

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.columns)
        if self.index is not None:
            frame.index = self.index
        return frame


def _is_index_header(name: Any) -> bool:
    return str(name).strip().lower() in INDEX_HEADERS


def load_panel(
    path: PathLike,
    center: bool = False,
    missing: str = "drop_common_and_zero_fill",
) -> ReturnsPanel:
    """Load an n x m CSV of returns with a header row of series names.

    Rows missing in every series are dropped and remaining gaps are set to
    zero (``drop_common_and_zero_fill``), or any gap is an error. Centering
    subtracts column means after the missing-value handling.
    """
    if missing not in MISSING_POLICIES:
        raise UnknownName(f"unknown missing policy '{missing}' ({', '.join(MISSING_POLICIES)})")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise EmptyPanel(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: {e}") from e

    index = None
    if raw.shape[1] > 0 and _is_index_header(raw.columns[0]):
        index = pd.Index(raw.iloc[:, 0].str.strip(), name=str(raw.columns[0]) or "index")
        raw = raw.iloc[:, 1:]
    if raw.shape[1] == 0:
        raise EmptyPanel(f"{path} has no return columns")

    values = np.full(raw.shape, np.nan)
    for col, name in enumerate(raw.columns):
        for row, cell in enumerate(raw.iloc[:, col]):
            text = cell.strip()
            if text == "" or text.lower() in ("na", "nan", "null"):
                continue
            try:
                number = float(text)
            except ValueError:
                # +2 for the header row and 1-based line numbers
                raise ParseError(f"non-numeric cell '{cell}'", row=row + 2, column=str(name)) from None
            if not np.isfinite(number):
                raise ParseError(f"non-finite cell '{cell}'", row=row + 2, column=str(name))
            values[row, col] = number

    gaps = np.isnan(values)
    n_dropped = n_filled = 0
    if gaps.any():
        if missing == "error":
            row, col = np.argwhere(gaps)[0]
            raise ParseError("missing value", row=int(row) + 2, column=str(raw.columns[col]))
        common = gaps.all(axis=1)
        n_dropped = int(common.sum())
        values = values[~common]
        if index is not None:
            index = index[~common]
        n_filled = int(np.isnan(values).sum())
        values = np.nan_to_num(values, nan=0.0)
    if values.shape[0] == 0:
        raise EmptyPanel(f"{path} has no usable rows")
    if center:
        values = values - values.mean(axis=0)

    logger.info(
        f"📊 Loaded {values.shape[0]} x {values.shape[1]} panel from {path} "
        f"({n_dropped} rows dropped, {n_filled} cells zero-filled)"
    )
    return ReturnsPanel(
        values=values,
        columns=[str(c) for c in raw.columns],
        index=index,
        n_dropped_rows=n_dropped,
        n_zero_filled=n_filled,
        centered=center,
        source=str(path),
    )


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def ensure_dir(path: PathLike) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_json(path: PathLike, data: Any) -> Path:
    path = Path(path)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=False, default=_default)
        f.write("\n")
    logger.debug(f"✅ Wrote {path}")
    return path


def read_json(path: PathLike) -> Any:
    with open(path) as f:
        return json.load(f)


def write_frame(path: PathLike, frame: pd.DataFrame, index: bool = False) -> Path:
    path = Path(path)
    frame.to_csv(path, index=index, float_format="%.17g")
    logger.debug(f"✅ Wrote {path}")
    return path


def write_panel(path: PathLike, values: np.ndarray, columns: Optional[List[str]] = None,
                index: Optional[pd.Index] = None) -> Path:
    """Panel CSV in the layout load_panel reads back."""
    values = np.asarray(values, dtype=float)
    names = columns or [f"y{j + 1}" for j in range(values.shape[1])]
    frame = pd.DataFrame(values, columns=names)
    if index is not None:
        frame.insert(0, index.name or "index", list(index))
    return write_frame(path, frame)


def _versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
        "click": click.__version__,
    }


def write_manifest(
    out_dir: PathLike,
    command: str,
    config: Dict[str, Any],
    seed: Optional[int],
    started: float,
    artifacts: List[str],
    status: str = "ok",
) -> Path:
    """Run manifest; only ``finished_at`` and ``wall_time_s`` vary between identical runs."""
    finished = time.time()
    return write_json(
        Path(out_dir) / "manifest.json",
        {
            "command": command,
            "status": status,
            "seed": seed,
            "config": config,
            "artifacts": artifacts,
            "versions": _versions(),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(finished)),
            "wall_time_s": round(finished - started, 3),
        },
    )


# ---------------------------------------------------------------------------
# Loaders
# ---------------------------------------------------------------------------


def load_bic_table(path: PathLike) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = {"r", "s", "bic"} - set(frame.columns)
    if missing:
        raise ParseError(f"{path} lacks columns {sorted(missing)}")
    return frame


def load_params(path: PathLike, lowrank: bool = False) -> AnyParams:
    """Parameters from a params.json, or the fitted point stored in a fit.json."""
    data = read_json(path)
    if "kind" not in data and "params" in data:
        data = data["lowrank"] if lowrank and data.get("lowrank") else data["params"]
    return params_from_json(data)


def load_backtest_csv(path: PathLike) -> pd.DataFrame:
    """Per-origin backtest rows (index, z, sigma, var, hit)."""
    frame = pd.read_csv(path)
    missing = {"index", "z", "sigma", "var", "hit"} - set(frame.columns)
    if missing:
        raise ParseError(f"{path} lacks columns {sorted(missing)}")
    return frame
