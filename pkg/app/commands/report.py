import click
from flask import Blueprint

from app.middlewares.error_middleware import cli_errors, run_config_required
from app.services.pipeline_service import PipelineService
from app.services.report_service import SUMMARY_COLUMNS, ReportService
from app.utils.artifacts import atomic_write_text

report_bp = Blueprint("report", __name__, cli_group=None)


@report_bp.cli.command("report")
@click.option("--config", "config_path", default=None, help="Run config (INI); defaults to COHORT_CONFIG.")
@cli_errors
@run_config_required
def report(run):
    """Render summary.csv as the per-alarm AUC table (also saved to report.txt)."""
    summary = ReportService.read_csv(run.paths.output("summary.csv"), SUMMARY_COLUMNS)
    table = ReportService.render_table(summary)
    atomic_write_text(run.paths.output("report.txt"), PipelineService.header(run) + table)
    click.echo(table, nl=False)
