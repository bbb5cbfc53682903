#!/usr/bin/env python
"""Command-line entry point.

Exit status: 0 on success, 1 on input errors, 2 when estimation did not
converge (artifacts are still written).
"""
import logging
import os
import sys
from typing import List, Optional

import click

from src import create_cli
from src.config import get_config
from src.errors import MGARCHError, NoConvergence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2


def main(argv: Optional[List[str]] = None) -> int:
    config = get_config(os.getenv("ENV", "dev"))
    cli = create_cli(config)
    try:
        result = cli.main(args=argv, prog_name="mgarch", standalone_mode=False)
    except NoConvergence as e:
        logger.error(f"❌ {e}")
        return EXIT_NO_CONVERGENCE
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_INPUT
    except click.ClickException as e:
        e.show()
        return EXIT_INPUT
    except (MGARCHError, OSError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_INPUT
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
