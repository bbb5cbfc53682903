"""Monte-Carlo estimation and order-selection studies over the DGP catalog."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.errors import MGARCHError, NoConvergence
from src.model.catalog import catalog_lowrank
from src.model.params import canonicalize, canonicalize_lowrank, pack, param_labels, theta_of_vartheta
from src.services.estimation import FitOptions, get_estimator
from src.services.inference import asymptotic_cov, standard_errors
from src.services.selection import select_order
from src.services.simulate import simulate
from src.utils.parallel import run_parallel, spawn_seeds

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["parameter", "true", "mean", "bias", "mae", "esd", "asd", "n_used"]


@dataclass
class EstimationStudy:
    dgp: str
    estimator: str
    n: int
    reps: int
    summary: pd.DataFrame
    replications: pd.DataFrame
    n_failed: int = 0


@dataclass
class SelectionStudy:
    dgp: str
    estimator: str
    n: int
    reps: int
    true_order: tuple
    rates: Dict[str, float]
    choices: pd.DataFrame
    n_failed: int = 0
    summary: pd.DataFrame = field(default_factory=pd.DataFrame)


def _truth(dgp: str, estimator: str, dgp_seed: Optional[int]):
    lowrank = canonicalize_lowrank(catalog_lowrank(dgp, dgp_seed))
    general = canonicalize(theta_of_vartheta(lowrank))
    return general, (lowrank if estimator == "lowrank" else general)


def _simulate_rep(dgp: str, dgp_seed, n: int, dist: str, df: float, sim_seed: int) -> np.ndarray:
    general, _ = _truth(dgp, "general", dgp_seed)
    return simulate(general, n, dist=dist, df=df, seed=sim_seed).panel


def _estimation_rep(task: tuple) -> dict:
    """Worker: simulate, fit from the true point plus random starts, get s.e."""
    rep, dgp, dgp_seed, n, dist, df, estimator, options, rep_seed = task
    sim_seed, fit_seed = spawn_seeds(rep_seed, 2)
    general, start = _truth(dgp, estimator, dgp_seed)
    order = general.order
    d = len(param_labels(order))
    row = {"rep": rep, "converged": False, "estimate": np.full(d, np.nan), "se": np.full(d, np.nan)}
    try:
        panel = simulate(general, n, dist=dist, df=df, seed=sim_seed).panel
        fit = get_estimator(estimator)(
            panel, order, options.model_copy(update={"seed": fit_seed, "threads": 1}), initial=start
        )
    except NoConvergence as e:
        row["note"] = str(e)
        return row
    except MGARCHError as e:
        row["note"] = f"{type(e).__name__}: {e}"
        return row
    row["converged"] = True
    row["estimate"] = pack(fit.params)
    try:
        cov = asymptotic_cov(fit, panel)
        row["se"] = standard_errors(fit.params, cov)["se"].to_numpy()
    except MGARCHError as e:
        row["note"] = f"no standard errors: {e}"
    return row


def run_estimation_study(
    dgp: str,
    n: int,
    reps: int,
    estimator: str = "general",
    dist: str = "normal",
    df: float = 5.0,
    seed: Optional[int] = None,
    opts: Optional[FitOptions] = None,
    threads: int = 1,
    dgp_seed: Optional[int] = None,
) -> EstimationStudy:
    """Bias, mean absolute error, ESD and ASD of the estimator over ``reps`` paths."""
    options = opts or FitOptions(n_starts=5)
    general, _ = _truth(dgp, estimator, dgp_seed)
    labels = param_labels(general.order)
    theta0 = pack(general)
    seeds = spawn_seeds(seed, reps)
    logger.info(f"🚀 Estimation study {dgp}: n={n}, reps={reps}, {estimator}, {dist}")
    tasks = [
        (rep, dgp, dgp_seed, n, dist, df, estimator, options, rep_seed)
        for rep, rep_seed in enumerate(seeds)
    ]
    rows = run_parallel(_estimation_rep, tasks, threads)

    ok = [row for row in rows if row["converged"]]
    n_failed = reps - len(ok)
    if n_failed:
        logger.warning(f"⚠️ {n_failed} of {reps} replications failed to converge")
    records: List[dict] = []
    for row in rows:
        for label, value, se in zip(labels, row["estimate"], row["se"]):
            records.append(
                {"rep": row["rep"], "parameter": label, "estimate": value, "se": se,
                 "converged": row["converged"], "note": row.get("note", "")}
            )
    replications = pd.DataFrame(records, columns=["rep", "parameter", "estimate", "se", "converged", "note"])

    if ok:
        est = np.vstack([row["estimate"] for row in ok])
        ses = np.vstack([row["se"] for row in ok])
    else:
        est = np.full((0, theta0.size), np.nan)
        ses = est
    summary_rows = []
    for col, label in enumerate(labels):
        values = est[:, col]
        errors = values - theta0[col]
        summary_rows.append(
            {
                "parameter": label,
                "true": float(theta0[col]),
                "mean": float(np.mean(values)) if values.size else np.nan,
                "bias": float(np.mean(errors)) if values.size else np.nan,
                "mae": float(np.mean(np.abs(errors))) if values.size else np.nan,
                "esd": float(np.std(values, ddof=1)) if values.size > 1 else np.nan,
                "asd": float(np.nanmean(ses[:, col])) if np.isfinite(ses[:, col]).any() else np.nan,
                "n_used": int(values.size),
            }
        )
    summary = pd.DataFrame(summary_rows, columns=SUMMARY_COLUMNS)
    logger.info(f"✅ Estimation study done ({len(ok)}/{reps} replications used)")
    return EstimationStudy(
        dgp=dgp,
        estimator=estimator,
        n=n,
        reps=reps,
        summary=summary,
        replications=replications,
        n_failed=n_failed,
    )


def classify_order(chosen: tuple, true_order: tuple) -> str:
    """exact, under or over; a wrong order of the same size counts as under."""
    if tuple(chosen) == tuple(true_order):
        return "exact"
    size = chosen[0] + 2 * chosen[1]
    return "over" if size > true_order[0] + 2 * true_order[1] else "under"


def _selection_rep(task: tuple) -> dict:
    rep, dgp, dgp_seed, n, dist, df, o_max, estimator, options, rep_seed = task
    sim_seed, fit_seed = spawn_seeds(rep_seed, 2)
    try:
        panel = _simulate_rep(dgp, dgp_seed, n, dist, df, sim_seed)
        result = select_order(
            panel, o_max, estimator, options.model_copy(update={"seed": fit_seed, "threads": 1})
        )
    except MGARCHError as e:
        return {"rep": rep, "r": np.nan, "s": np.nan, "note": f"{type(e).__name__}: {e}"}
    return {"rep": rep, "r": result.best[0], "s": result.best[1], "note": ""}


def run_selection_study(
    dgp: str,
    n: int,
    reps: int,
    o_max: int = 2,
    estimator: str = "general",
    dist: str = "normal",
    df: float = 5.0,
    seed: Optional[int] = None,
    opts: Optional[FitOptions] = None,
    threads: int = 1,
    dgp_seed: Optional[int] = None,
) -> SelectionStudy:
    """Percentages of under-, exactly and over-fitted BIC choices."""
    options = opts or FitOptions(n_starts=5)
    general, _ = _truth(dgp, estimator, dgp_seed)
    true_order = (general.order.r, general.order.s)
    seeds = spawn_seeds(seed, reps)
    logger.info(f"🚀 Selection study {dgp}: n={n}, reps={reps}, o_max={o_max}, {estimator}")
    tasks = [
        (rep, dgp, dgp_seed, n, dist, df, o_max, estimator, options, rep_seed)
        for rep, rep_seed in enumerate(seeds)
    ]
    rows = run_parallel(_selection_rep, tasks, threads)

    done = [row for row in rows if not row["note"]]
    for row in rows:
        row["outcome"] = classify_order((row["r"], row["s"]), true_order) if not row["note"] else "failed"
    choices = pd.DataFrame(rows, columns=["rep", "r", "s", "outcome", "note"])
    counts = {key: sum(row["outcome"] == key for row in done) for key in ("under", "exact", "over")}
    rates = {key: (100.0 * value / len(done) if done else float("nan")) for key, value in counts.items()}
    summary = pd.DataFrame([{"dgp": dgp, "estimator": estimator, "n": n, **rates, "n_used": len(done)}])
    logger.info(f"✅ Selection study done: exact {rates['exact']:.1f}%")
    return SelectionStudy(
        dgp=dgp,
        estimator=estimator,
        n=n,
        reps=reps,
        true_order=true_order,
        rates=rates,
        choices=choices,
        n_failed=reps - len(done),
        summary=summary,
    )
