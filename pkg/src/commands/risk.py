"""forecast and backtest commands."""
import logging
from typing import List, Optional, Tuple

import click
import numpy as np

from src.commands.common import (
    data_options,
    fit_flag_options,
    fit_options,
    output_options,
    parse_levels,
    parse_order,
    read_panel,
    recorded,
    seed_option,
)
from src.model.params import ModelOrder
from src.services.estimation import load_fit_report
from src.services.riskcast import WEEKLY, forecast_H, mv_weights, rolling_var
from src.utils.panel_io import load_params, write_frame, write_json

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = "0.01,0.025,0.05,0.95,0.975,0.99"


@click.command("forecast")
@data_options
@click.option("--fit", "fit_path", type=click.Path(exists=True, dir_okay=False), required=True)
@output_options
@recorded("forecast")
def forecast_command(
    recorder,
    data_path: str,
    center: bool,
    missing: str,
    fit_path: str,
    out: Optional[str],
    threads: Optional[int],
):
    """One-step-ahead H and minimum-variance weights after the last row."""
    panel = read_panel(data_path, center, missing)
    fit = load_fit_report(fit_path)
    opts = fit.options
    H = forecast_H(fit, panel.values, opts.get("floor", 1e-8), opts.get("eig_floor", 1e-6))
    weights = mv_weights(H)
    write_json(
        recorder.path("forecast.json"),
        {
            "columns": panel.columns,
            "H": H,
            "weights": weights,
            "portfolio_variance": float(weights @ H @ weights),
        },
    )
    click.echo(f"MV weights: {np.array2string(weights, precision=4)}")


@click.command("backtest")
@data_options
@click.option("--window", "n0", type=click.IntRange(min=2), required=True, help="Moving window n0.")
@click.option("--order", "order", callback=parse_order, default=None, help="r,s to refit.")
@click.option("--k-window", type=click.IntRange(min=1), default=None)
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Fixed parameters: forecast without refitting.")
@click.option("--levels", callback=parse_levels, default=DEFAULT_LEVELS, show_default=True)
@click.option("--refit-every", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--weekly", is_flag=True, default=False, help=f"Refit every {WEEKLY} origins.")
@fit_flag_options
@seed_option
@output_options
@recorded("backtest")
def backtest_command(
    recorder,
    data_path: str,
    center: bool,
    missing: str,
    n0: int,
    order: Optional[Tuple[int, int]],
    k_window: Optional[int],
    params_path: Optional[str],
    levels: List[float],
    refit_every: int,
    weekly: bool,
    estimator: str,
    n_starts: Optional[int],
    max_iter: Optional[int],
    seed: int,
    out: Optional[str],
    threads: Optional[int],
):
    """Rolling minimum-variance VaR with ECR, PE, CC and DQ backtests."""
    if (order is None) == (params_path is None):
        raise click.UsageError("give exactly one of --order or --params")
    panel = read_panel(data_path, center, missing)
    model = ModelOrder(panel.m, order[0], order[1], k_window) if order else None
    fixed = load_params(params_path) if params_path else None
    opts = fit_options(seed, threads, n_starts=n_starts, max_iter=max_iter)
    index = list(panel.index) if panel.index is not None else None
    reports = rolling_var(
        panel.values,
        n0,
        model,
        estimator,
        levels,
        WEEKLY if weekly else refit_every,
        opts,
        fixed_params=fixed,
        index=index,
    )
    summary = []
    for tau, report in reports.items():
        write_frame(recorder.path(f"backtest_tau{tau:g}.csv"), report.to_frame())
        summary.append(report.summary())
    write_json(recorder.path("backtest_summary.json"), {"window": n0, "reports": summary})
    for row in summary:
        click.echo(
            f"tau={row['tau']:<6g} ECR {row['ecr']:6.2f}%  PE {row['pe']:.2f}  "
            f"CC p {row['cc_p']:.3f}  DQ p {row['dq_p']:.3f}"
        )
