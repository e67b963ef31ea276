import click
from flask import Blueprint

from app.middlewares.error_middleware import cli_errors, run_config_required
from app.services.pipeline_service import PipelineService

featurize_bp = Blueprint("featurize", __name__, cli_group=None)


@featurize_bp.cli.command("featurize")
@click.option("--config", "config_path", default=None, help="Run config (INI); defaults to COHORT_CONFIG.")
@cli_errors
@run_config_required
def featurize(run):
    """Window, label and featurize the cohort; writes features.csv and window manifests."""
    for path in PipelineService.featurize(run):
        click.echo(f"Wrote {path}")
