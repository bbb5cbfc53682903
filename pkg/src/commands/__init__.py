import click


def register_commands(cli: click.Group) -> None:
    """Register every subcommand with the CLI group."""

    from .estimate import fit_command, select_command
    from .inference import infer_command, spillover_command, stationarity_command
    from .risk import backtest_command, forecast_command
    from .simulate import simulate_command, study_command

    cli.add_command(simulate_command)
    cli.add_command(fit_command)
    cli.add_command(select_command)
    cli.add_command(infer_command)
    cli.add_command(spillover_command)
    cli.add_command(stationarity_command)
    cli.add_command(forecast_command)
    cli.add_command(backtest_command)
    cli.add_command(study_command)
