import logging
from functools import wraps

import click
from flask import current_app

from app.config import PATH_OVERRIDES, RunConfig
from app.errors import CohortError, ConfigError

logger = logging.getLogger(__name__)


def cli_errors(f):
    """Turn library exceptions into a one-line stderr message and an exit code."""
    @wraps(f)
    def decorated(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except CohortError as e:
            click.echo(f"Error [{e.module}]: {e}", err=True)
            click.get_current_context().exit(e.exit_code)
        except click.exceptions.Exit:
            raise
        except Exception as e:
            logger.exception("Unhandled error in %s", f.__name__)
            click.echo(f"Internal error: {e}", err=True)
            click.get_current_context().exit(CohortError.exit_code)

    return decorated


def run_config_required(f):
    """Load the RunConfig named by --config (or COHORT_CONFIG) and pass it first."""
    @wraps(f)
    def decorated(config_path, *args, **kwargs):
        config_path = config_path or current_app.config.get("COHORT_CONFIG")
        if not config_path:
            raise ConfigError("no run config given; pass --config or set COHORT_CONFIG")
        overrides = {key: current_app.config.get(key) for key in PATH_OVERRIDES.values()}
        run = RunConfig.load(config_path, overrides=overrides)
        return f(run, *args, **kwargs)

    return decorated
