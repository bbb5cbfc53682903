"""simulate and study commands."""
import logging
from typing import Optional

import click

from src.commands.common import (
    fit_flag_options,
    fit_options,
    get_config,
    get_run_config,
    output_options,
    recorded,
    seed_option,
)
from src.model.catalog import DGP_NAMES, dgp_catalog
from src.model.params import params_to_json
from src.services.simulate import simulate
from src.services.study import run_estimation_study, run_selection_study
from src.utils.panel_io import load_params, write_frame, write_json, write_panel

logger = logging.getLogger(__name__)

dgp_choice = click.Choice(list(DGP_NAMES), case_sensitive=False)


@click.command("simulate")
@click.option("--dgp", type=dgp_choice, default=None, help="Catalog design.")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="params.json or fit.json to simulate from instead of a catalog design.")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="Retained observations.")
@click.option("--burn", type=click.IntRange(min=0), default=None, help="Burn-in (default max(500, 5k)).")
@click.option("--dist", type=click.Choice(["normal", "t"]), default="normal", show_default=True)
@click.option("--df", type=float, default=5.0, show_default=True, help="t degrees of freedom.")
@click.option("--dgp-seed", type=int, default=None, help="Seed of the random DGP5 factors.")
@click.option("--allow-nonstationary", is_flag=True, default=False)
@seed_option
@output_options
@recorded("simulate")
def simulate_command(
    recorder,
    dgp: Optional[str],
    params_path: Optional[str],
    n: int,
    burn: Optional[int],
    dist: str,
    df: float,
    dgp_seed: Optional[int],
    allow_nonstationary: bool,
    seed: int,
    out: Optional[str],
    threads: Optional[int],
):
    """Simulate a return panel from a catalog design or a parameter file."""
    if (dgp is None) == (params_path is None):
        raise click.UsageError("give exactly one of --dgp or --params")
    params = dgp_catalog(dgp, dgp_seed) if dgp else load_params(params_path)
    result = simulate(
        params, n, burn=burn, dist=dist, df=df, seed=seed, allow_nonstationary=allow_nonstationary
    )
    write_panel(recorder.path("panel.csv"), result.panel)
    write_json(recorder.path("params.json"), params_to_json(result.params))
    write_json(recorder.path("simulation.json"), {"dgp": dgp, **result.diagnostics})
    click.echo(f"simulated {result.panel.shape[0]} x {result.panel.shape[1]} panel (burn {result.burn})")


@click.command("study")
@click.option("--kind", type=click.Choice(["estimation", "selection"]), default="estimation",
              show_default=True)
@click.option("--dgp", type=dgp_choice, required=True)
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--reps", type=click.IntRange(min=1), required=True)
@click.option("--dist", type=click.Choice(["normal", "t"]), default="normal", show_default=True)
@click.option("--df", type=float, default=5.0, show_default=True)
@click.option("--omax", "o_max", type=click.IntRange(min=1), default=2, show_default=True)
@click.option("--dgp-seed", type=int, default=None)
@fit_flag_options
@seed_option
@output_options
@recorded("study")
def study_command(
    recorder,
    kind: str,
    dgp: str,
    n: int,
    reps: int,
    dist: str,
    df: float,
    o_max: int,
    dgp_seed: Optional[int],
    estimator: str,
    n_starts: Optional[int],
    max_iter: Optional[int],
    seed: int,
    out: Optional[str],
    threads: Optional[int],
):
    """Monte-Carlo estimation or order-selection study."""
    config_starts = n_starts or _study_starts()
    opts = fit_options(seed, 1, n_starts=config_starts, max_iter=max_iter)
    workers = threads or get_config().THREADS
    if kind == "estimation":
        study = run_estimation_study(
            dgp, n, reps, estimator, dist, df, seed, opts, workers, dgp_seed
        )
        write_frame(recorder.path("study.csv"), study.summary)
        write_frame(recorder.path("study_replications.csv"), study.replications)
        click.echo(study.summary.to_string(index=False))
    else:
        study = run_selection_study(
            dgp, n, reps, o_max, estimator, dist, df, seed, opts, workers, dgp_seed
        )
        write_frame(recorder.path("study.csv"), study.summary)
        write_frame(recorder.path("study_replications.csv"), study.choices)
        click.echo(study.summary.to_string(index=False))


def _study_starts() -> int:
    """Simulation studies default to the smaller simulation start count."""
    return get_run_config().fit.n_starts or get_config().STARTS_SIMULATION
