import click
from flask import Blueprint

from app.middlewares.error_middleware import cli_errors, run_config_required
from app.services.pipeline_service import PipelineService

train_bp = Blueprint("train", __name__, cli_group=None)


@train_bp.cli.command("train")
@click.option("--config", "config_path", default=None, help="Run config (INI); defaults to COHORT_CONFIG.")
@cli_errors
@run_config_required
def train(run):
    """Train one boosted model per alarm and feature set on the whole cohort."""
    for path in PipelineService.train(run):
        click.echo(f"Wrote {path}")
