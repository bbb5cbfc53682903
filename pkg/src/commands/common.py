"""Options, config file handling and artifact bookkeeping shared by every command."""
import json
import logging
import time
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import click
import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from src.config import Config
from src.services.estimation import FitOptions
from src.utils.panel_io import ReturnsPanel, ensure_dir, load_panel, write_manifest

logger = logging.getLogger(__name__)


class FitOverrides(BaseModel):
    """Optimizer settings a config file may pin; unset fields keep the environment defaults."""

    model_config = ConfigDict(extra="forbid")

    n_starts: Optional[int] = None
    max_iter: Optional[int] = None
    grad_tol: Optional[float] = None
    accept_tol: Optional[float] = None
    floor: Optional[float] = None
    eig_floor: Optional[float] = None
    penalty: Optional[float] = None
    margin: Optional[float] = None
    chunk_budget: Optional[int] = None


class RunConfig(BaseModel):
    """JSON run configuration (``--config FILE``); command-line flags win."""

    model_config = ConfigDict(extra="forbid")

    seed: Optional[int] = None
    threads: Optional[int] = None
    out: Optional[str] = None
    log_level: Optional[str] = None
    log_format: Optional[Literal["text", "json"]] = None
    fit: FitOverrides = FitOverrides()
    commands: Dict[str, Dict[str, Any]] = {}

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as f:
                return cls.model_validate(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise click.BadParameter(f"cannot read {path}: {e}", param_hint="--config")
        except ValidationError as e:
            raise click.BadParameter(f"invalid config {path}: {e}", param_hint="--config")

    def default_map(self, command_names: List[str], env_seed: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
        """Per-command click defaults: shared keys first, then the command's own section."""
        shared = {
            key: value
            for key, value in (("seed", self.seed), ("threads", self.threads), ("out", self.out))
            if value is not None
        }
        if "seed" not in shared and env_seed:
            shared["seed"] = int(env_seed)
        return {name: {**shared, **self.commands.get(name, {})} for name in command_names}


def get_config() -> Config:
    return click.get_current_context().find_root().obj["config"]


def get_run_config() -> RunConfig:
    return click.get_current_context().find_root().obj["run_config"]


def fit_options(seed: Optional[int], threads: Optional[int], **flags: Any) -> FitOptions:
    """Environment defaults, then the config file's fit section, then flags."""
    values = get_run_config().fit.model_dump(exclude_none=True)
    values.update({k: v for k, v in flags.items() if v is not None})
    return FitOptions.from_config(get_config(), seed=seed, threads=threads, **values)


# ---------------------------------------------------------------------------
# Option groups
# ---------------------------------------------------------------------------


def _stack(options: List[Callable]) -> Callable:
    def decorator(fn: Callable) -> Callable:
        for option in reversed(options):
            fn = option(fn)
        return fn

    return decorator


def output_options(fn: Callable) -> Callable:
    return _stack(
        [
            click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                         help="Output directory (default MGARCH_OUTPUT_DIR)."),
            click.option("--threads", type=click.IntRange(min=1), default=None,
                         help="Worker processes."),
        ]
    )(fn)


def seed_option(fn: Callable) -> Callable:
    return click.option("--seed", type=int, required=True, help="Root seed for every random stream.")(fn)


def data_options(fn: Callable) -> Callable:
    return _stack(
        [
            click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
                         required=True, help="CSV panel of returns."),
            click.option("--center/--no-center", default=False, help="Demean each column."),
            click.option("--missing", type=click.Choice(["drop_common_and_zero_fill", "error"]),
                         default="drop_common_and_zero_fill", show_default=True),
        ]
    )(fn)


def fit_flag_options(fn: Callable) -> Callable:
    return _stack(
        [
            click.option("--estimator", type=click.Choice(["general", "lowrank"]), default="general",
                         show_default=True),
            click.option("--starts", "n_starts", type=click.IntRange(min=1), default=None,
                         help="Random optimizer starts."),
            click.option("--max-iter", type=click.IntRange(min=1), default=None),
        ]
    )(fn)


def parse_order(ctx, param, value: Optional[str]) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    try:
        r, s = (int(part) for part in value.split(","))
    except ValueError:
        raise click.BadParameter("expected 'r,s', e.g. 1,0")
    if r < 0 or s < 0 or r + 2 * s < 1:
        raise click.BadParameter("need r, s >= 0 and r + 2s >= 1")
    return r, s


def parse_levels(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        levels = [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated levels, e.g. 0.01,0.05")
    if not levels or any(not 0 < level < 1 for level in levels):
        raise click.BadParameter("levels must lie in (0, 1)")
    return levels


def read_panel(data_path: str, center: bool, missing: str) -> ReturnsPanel:
    return load_panel(data_path, center=center, missing=missing)


# ---------------------------------------------------------------------------
# Artifact bookkeeping
# ---------------------------------------------------------------------------


class RunRecorder:
    """Output directory, artifact list and manifest of one command run."""

    def __init__(self, command: str, out: Optional[str], seed: Optional[int], settings: Dict[str, Any]):
        self.command = command
        self.seed = seed
        self.settings = {"options": settings, "runtime": get_config().get_runtime_info()}
        self.started = time.time()
        self.out_dir = ensure_dir(out or get_config().OUTPUT_DIR)
        self.artifacts: List[str] = []

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out_dir / name

    def finish(self, status: str = "ok") -> None:
        write_manifest(self.out_dir, self.command, self.settings, self.seed, self.started,
                       self.artifacts, status)
        logger.info(f"✅ {self.command} wrote {len(self.artifacts)} artifacts to {self.out_dir}")


def recorded(command: str) -> Callable:
    """Wrap a command body so it receives a RunRecorder and always leaves a manifest."""

    def decorator(fn: Callable) -> Callable:
        @wraps(fn)
        def wrapper(**kwargs: Any) -> Any:
            settings = {k: v for k, v in kwargs.items() if k not in ("out",)}
            recorder = RunRecorder(command, kwargs.get("out"), kwargs.get("seed"), _jsonable(settings))
            status = "ok"
            try:
                return fn(recorder, **kwargs)
            except Exception as e:
                status = type(e).__name__
                raise
            finally:
                recorder.finish(status)

        return wrapper

    return decorator


def _jsonable(values: Dict[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in values.items():
        if isinstance(value, tuple):
            value = list(value)
        if isinstance(value, np.generic):
            value = value.item()
        out[key] = value
    return out
