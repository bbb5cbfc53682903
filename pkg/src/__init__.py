# src/__init__.py
"""Log-volatility multivariate GARCH with DCC-type correlations."""
import logging
from typing import Optional

import click

from src.commands import register_commands
from src.commands.common import RunConfig
from src.config import Config
from src.utils.logger import setup_logging

logger = logging.getLogger(__name__)

__version__ = "1.0.0"


def create_cli(config: Config) -> click.Group:
    """CLI factory."""

    @click.group(name="mgarch")
    @click.version_option(__version__)
    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                  default=None, help="JSON run configuration.")
    @click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"],
                                                   case_sensitive=False), default=None)
    @click.option("--log-format", type=click.Choice(["text", "json"]), default=None)
    @click.pass_context
    def cli(ctx: click.Context, config_path: Optional[str], log_level: Optional[str],
            log_format: Optional[str]) -> None:
        run_config = RunConfig.from_file(config_path) if config_path else RunConfig()
        setup_logging(
            config,
            level=log_level or run_config.log_level,
            fmt=log_format or run_config.log_format,
        )
        ctx.ensure_object(dict)
        ctx.obj["config"] = config
        ctx.obj["run_config"] = run_config
        ctx.default_map = run_config.default_map(list(cli.commands), config.DEFAULT_SEED)
        logger.debug(f"🚀 mgarch {ctx.invoked_subcommand} ({config.ENV})")

    register_commands(cli)
    return cli
