import click
from flask import Blueprint

from app.middlewares.error_middleware import cli_errors, run_config_required
from app.services.simulation_service import SimulationService
from app.utils.artifacts import comment_header, content_hash

simulate_bp = Blueprint("simulate", __name__, cli_group=None)


@simulate_bp.cli.command("simulate")
@click.option("--config", "config_path", default=None, help="Run config (INI); defaults to COHORT_CONFIG.")
@cli_errors
@run_config_required
def simulate(run):
    """Generate a synthetic cohort into the configured telemetry and alarm CSVs."""
    dataset, alarms = SimulationService.generate_cohort(run.simulation)
    # Simulated files derive from the config alone; there is no input to hash.
    header = comment_header(run.to_lines(), content_hash(()))
    SimulationService.write_cohort(dataset, run.paths.telemetry, run.paths.alarms, header)
    click.echo(f"Simulated {len(dataset.appliances)} appliances x {len(dataset.roster)} sensors, "
               f"{len(alarms)} alarms")
    click.echo(f"Wrote {run.paths.telemetry}")
    click.echo(f"Wrote {run.paths.alarms}")
