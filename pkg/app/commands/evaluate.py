import click
from flask import Blueprint

from app.middlewares.error_middleware import cli_errors, run_config_required
from app.services.pipeline_service import PipelineService
from app.services.report_service import ReportService

evaluate_bp = Blueprint("evaluate", __name__, cli_group=None)


@evaluate_bp.cli.command("evaluate")
@click.option("--config", "config_path", default=None, help="Run config (INI); defaults to COHORT_CONFIG.")
@cli_errors
@run_config_required
def evaluate(run):
    """Leave-one-appliance-out evaluation for every configured alarm and feature set."""
    results = PipelineService.evaluate(run)
    written = ReportService.write_experiments(
        results, run.paths.output_dir, PipelineService.header(run), run.cost
    )
    for r in results:
        click.echo(f"{r.alarm_id:<10} {r.feature_set:<16} mean AUC {r.mean_auc:.3f}")
    for path in written:
        click.echo(f"Wrote {path}")
