import logging

from flask import Flask
from flask.cli import FlaskGroup

from app.commands.evaluate import evaluate_bp
from app.commands.featurize import featurize_bp
from app.commands.report import report_bp
from app.commands.simulate import simulate_bp
from app.commands.train import train_bp
from app.config import Config


def create_app(test_config=None):
    app = Flask(__name__)
    app.config.from_object(Config)
    if test_config:
        app.config.update(test_config)

    logging.basicConfig(
        level=app.config.get("COHORT_LOG_LEVEL") or "INFO",
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    # Register subcommands
    app.register_blueprint(simulate_bp)
    app.register_blueprint(featurize_bp)
    app.register_blueprint(train_bp)
    app.register_blueprint(evaluate_bp)
    app.register_blueprint(report_bp)

    return app


cli = FlaskGroup(
    create_app=create_app,
    add_default_commands=False,
    help="Cohort-dissimilarity fault prognosis: simulate, featurize, train, evaluate, report.",
)

if __name__ == '__main__':
    cli()
