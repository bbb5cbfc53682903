"""BIC order selection over (r, s) with 1 <= r + 2s <= o_max."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.errors import ConstraintViolation, DimensionMismatch, MGARCHError, NoConvergence
from src.model.params import ModelOrder
from src.services.estimation import FitOptions, FitReport, get_estimator
from src.utils.parallel import run_parallel, spawn_seeds

logger = logging.getLogger(__name__)

NESTED_TOL = 1e-3
BIC_COLUMNS = ["r", "s", "dbar", "neg_loglik", "bic", "converged", "note"]


def bic(fit: FitReport) -> float:
    """2 L + dbar ln n, with dbar the free-parameter count of the fit's mode."""
    return 2.0 * fit.neg_loglik + fit.dim * np.log(fit.n_obs)


def candidate_orders(m: int, o_max: int) -> List[Tuple[int, int]]:
    """(r, s) pairs by increasing r + 2s, then increasing s."""
    if o_max < 1:
        raise ConstraintViolation("o_max >= 1", f"o_max={o_max}")
    cells = []
    for total in range(1, min(o_max, m) + 1):
        for s in range(total // 2 + 1):
            cells.append((total - 2 * s, s))
    return cells


@dataclass
class SelectionResult:
    best: Tuple[int, int]
    table: pd.DataFrame
    fits: Dict[Tuple[int, int], Optional[FitReport]] = field(default_factory=dict)

    @property
    def best_fit(self) -> Optional[FitReport]:
        return self.fits.get(self.best)


def _fit_cell(task: tuple) -> Tuple[Tuple[int, int], Optional[FitReport], str]:
    """Worker: fit one (r, s) cell."""
    cell, panel, m, k_window, estimator, options = task
    order = ModelOrder(m, cell[0], cell[1], k_window)
    try:
        return cell, get_estimator(estimator)(panel, order, options), ""
    except NoConvergence as e:
        return cell, e.report, "no start converged"
    except MGARCHError as e:
        return cell, None, str(e)


def _flag_nested(rows: Dict[Tuple[int, int], dict]) -> None:
    """A larger nested model must not fit worse than its sub-model."""
    for (r, s), row in rows.items():
        for smaller in ((r - 1, s), (r, s - 1)):
            base = rows.get(smaller)
            if base is None or not base["converged"] or not row["converged"]:
                continue
            if row["neg_loglik"] > base["neg_loglik"] + NESTED_TOL:
                logger.warning(
                    f"⚠️ ({r},{s}) fits worse than nested {smaller}; treating as convergence failure"
                )
                row["converged"] = False
                row["note"] = f"worse than nested {smaller}"


def select_order(
    panel: np.ndarray,
    o_max: int,
    estimator: str = "general",
    opts: Optional[FitOptions] = None,
    k_window: Optional[int] = None,
) -> SelectionResult:
    """Fit every candidate order and pick the BIC minimiser.

    Ties go to the smaller r + 2s, then the smaller s. Each cell draws its
    starts from its own child seed, so cells are reproducible one by one.
    """
    y = np.asarray(panel, dtype=float)
    if y.ndim != 2:
        raise DimensionMismatch(f"panel must be n x m, got shape {y.shape}")
    m = y.shape[1]
    options = opts or FitOptions()
    cells = candidate_orders(m, o_max)
    seeds = spawn_seeds(options.seed, len(cells))
    logger.info(f"🚀 Order selection over {len(cells)} cells ({estimator})")

    # cells run in parallel, starts inside each cell run serially
    tasks = [
        (cell, y, m, k_window, estimator, options.model_copy(update={"seed": seed, "threads": 1}))
        for cell, seed in zip(cells, seeds)
    ]
    outcomes = run_parallel(_fit_cell, tasks, options.threads)

    rows: Dict[Tuple[int, int], dict] = {}
    fits: Dict[Tuple[int, int], Optional[FitReport]] = {}
    for cell, fit, note in outcomes:
        fits[cell] = fit
        order = ModelOrder(m, cell[0], cell[1], k_window)
        dbar = order.dim_lowrank if estimator == "lowrank" else order.dim
        converged = fit is not None and fit.converged
        rows[cell] = {
            "r": cell[0],
            "s": cell[1],
            "dbar": dbar,
            "neg_loglik": fit.neg_loglik if fit is not None else np.nan,
            "bic": bic(fit) if fit is not None else np.nan,
            "converged": converged,
            "note": note,
        }
    _flag_nested(rows)

    valid = [row for row in rows.values() if row["converged"] and np.isfinite(row["bic"])]
    if not valid:
        raise NoConvergence("no candidate order converged")
    best_row = min(valid, key=lambda row: (row["bic"], row["r"] + 2 * row["s"], row["s"]))
    best = (int(best_row["r"]), int(best_row["s"]))
    table = pd.DataFrame([rows[cell] for cell in cells], columns=BIC_COLUMNS)
    logger.info(f"✅ BIC selects (r, s) = {best}")
    return SelectionResult(best=best, table=table, fits=fits)
