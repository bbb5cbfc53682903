"""fit and select commands."""
import logging
from typing import Optional, Tuple

import click

from src.commands.common import (
    data_options,
    fit_flag_options,
    fit_options,
    output_options,
    parse_order,
    read_panel,
    recorded,
    seed_option,
)
from src.errors import NoConvergence
from src.model.params import ModelOrder, params_to_json
from src.services.estimation import get_estimator
from src.services.selection import select_order
from src.utils.panel_io import write_frame, write_json

logger = logging.getLogger(__name__)


@click.command("fit")
@data_options
@click.option("--order", "order", callback=parse_order, required=True, help="r,s (e.g. 1,0).")
@click.option("--k-window", type=click.IntRange(min=1), default=None,
              help="Correlation window (default m).")
@fit_flag_options
@seed_option
@output_options
@recorded("fit")
def fit_command(
    recorder,
    data_path: str,
    center: bool,
    missing: str,
    order: Tuple[int, int],
    k_window: Optional[int],
    estimator: str,
    n_starts: Optional[int],
    max_iter: Optional[int],
    seed: int,
    out: Optional[str],
    threads: Optional[int],
):
    """Quasi-maximum-likelihood fit of one order."""
    panel = read_panel(data_path, center, missing)
    model = ModelOrder(panel.m, order[0], order[1], k_window)
    opts = fit_options(seed, threads, n_starts=n_starts, max_iter=max_iter)
    try:
        report = get_estimator(estimator)(panel.values, model, opts)
    except NoConvergence as e:
        if e.report is not None:
            write_json(recorder.path("fit.json"), e.report.to_dict())
        raise
    write_json(recorder.path("fit.json"), report.to_dict())
    write_json(recorder.path("params.json"), params_to_json(report.params))
    click.echo(f"L = {report.neg_loglik:.6f}  ({report.n_starts_converged}/{opts.n_starts} starts converged)")
    click.echo(report.stationarity.message)


@click.command("select")
@data_options
@click.option("--omax", "o_max", type=click.IntRange(min=1), required=True,
              help="Largest r + 2s searched.")
@click.option("--k-window", type=click.IntRange(min=1), default=None)
@fit_flag_options
@seed_option
@output_options
@recorded("select")
def select_command(
    recorder,
    data_path: str,
    center: bool,
    missing: str,
    o_max: int,
    k_window: Optional[int],
    estimator: str,
    n_starts: Optional[int],
    max_iter: Optional[int],
    seed: int,
    out: Optional[str],
    threads: Optional[int],
):
    """BIC order selection over 1 <= r + 2s <= omax."""
    panel = read_panel(data_path, center, missing)
    opts = fit_options(seed, threads, n_starts=n_starts, max_iter=max_iter)
    result = select_order(panel.values, o_max, estimator, opts, k_window)
    write_frame(recorder.path("bic.csv"), result.table)
    write_json(recorder.path("selection.json"), {"best": list(result.best), "estimator": estimator})
    if result.best_fit is not None:
        write_json(recorder.path("fit.json"), result.best_fit.to_dict())
    click.echo(result.table.to_string(index=False))
    click.echo(f"selected (r, s) = {result.best}")
