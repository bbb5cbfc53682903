"""infer, spillover and stationarity commands."""
import logging
from typing import Optional

import click

from src.commands.common import data_options, output_options, read_panel, recorded
from src.model.catalog import DGP_NAMES, dgp_catalog
from src.services.estimation import load_fit_report
from src.services.inference import (
    CovReport,
    asymptotic_cov,
    spillover_matrix,
    spillover_test,
    standard_errors,
)
from src.services.stationarity import NORMS, check_stationarity
from src.utils.panel_io import load_params, read_json, write_frame, write_json

logger = logging.getLogger(__name__)

fit_file = click.option("--fit", "fit_path", type=click.Path(exists=True, dir_okay=False),
                        required=True, help="fit.json written by the fit command.")


@click.command("infer")
@data_options
@fit_file
@click.option("--gaussian", is_flag=True, default=False,
              help="Use the inverse Hessian instead of the sandwich.")
@output_options
@recorded("infer")
def infer_command(
    recorder,
    data_path: str,
    center: bool,
    missing: str,
    fit_path: str,
    gaussian: bool,
    out: Optional[str],
    threads: Optional[int],
):
    """Asymptotic covariance and the fitted-coefficient table."""
    panel = read_panel(data_path, center, missing)
    fit = load_fit_report(fit_path)
    cov = asymptotic_cov(fit, panel.values, gaussian=gaussian)
    table = standard_errors(fit.params, cov)
    write_json(recorder.path("cov.json"), cov.to_dict())
    write_frame(recorder.path("coefficients.csv"), table)
    click.echo(table.to_string(index=False))


@click.command("spillover")
@data_options
@fit_file
@click.option("--cov", "cov_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="cov.json from infer (computed when omitted).")
@click.option("--i", "i", type=click.IntRange(min=1), default=None, help="Receiving series (1-based).")
@click.option("--j", "j", type=click.IntRange(min=1), default=None, help="Sending series (1-based).")
@click.option("--gaussian", is_flag=True, default=False)
@output_options
@recorded("spillover")
def spillover_command(
    recorder,
    data_path: str,
    center: bool,
    missing: str,
    fit_path: str,
    cov_path: Optional[str],
    i: Optional[int],
    j: Optional[int],
    gaussian: bool,
    out: Optional[str],
    threads: Optional[int],
):
    """Wald test of no first-lag spillover; every pair unless --i and --j are given."""
    if (i is None) != (j is None):
        raise click.UsageError("give both --i and --j, or neither")
    fit = load_fit_report(fit_path)
    if cov_path:
        cov = CovReport.from_dict(read_json(cov_path))
    else:
        cov = asymptotic_cov(fit, read_panel(data_path, center, missing).values, gaussian=gaussian)
    if i is not None:
        result = spillover_test(fit.params, cov, i, j)
        write_json(recorder.path("spillover.json"), result.to_dict())
        click.echo(
            f"Phi1[{i},{j}] = {result.estimate:.6f}  se {result.se:.6f}  "
            f"z {result.z:.3f}  p {result.p_value:.4f}"
        )
    else:
        table = spillover_matrix(fit.params, cov)
        write_frame(recorder.path("spillover.csv"), table)
        click.echo(table.to_string(index=False))


@click.command("stationarity")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="params.json or fit.json.")
@click.option("--dgp", type=click.Choice(list(DGP_NAMES), case_sensitive=False), default=None)
@click.option("--dgp-seed", type=int, default=None)
@click.option("--norm", type=click.Choice(["min", *NORMS]), default="min", show_default=True)
@output_options
@recorded("stationarity")
def stationarity_command(
    recorder,
    params_path: Optional[str],
    dgp: Optional[str],
    dgp_seed: Optional[int],
    norm: str,
    out: Optional[str],
    threads: Optional[int],
):
    """Sufficient stationarity condition sum_i ||Phi_i|| < 1."""
    if (dgp is None) == (params_path is None):
        raise click.UsageError("give exactly one of --params or --dgp")
    params = dgp_catalog(dgp, dgp_seed) if dgp else load_params(params_path)
    report = check_stationarity(params, norm=norm)
    write_json(recorder.path("stationarity.json"), report.to_dict())
    click.echo(f"{report.norm}-norm sum = {report.sum:.6f}: {report.message}")
