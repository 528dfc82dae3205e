"""
Application factory.

Creates the Flask app, loads configuration, installs logging, registers the
run-service blueprint and the command-line commands.
"""
import logging

from flask import Flask

from .config import Config

LOG_FORMAT = "[%(levelname)s] [%(name)s] %(message)s"


def configure_logging(level: str) -> None:
    """One stream handler on the `app` logger hierarchy."""
    logger = logging.getLogger(__name__)
    if not any(getattr(h, "_thermo", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._thermo = True
        logger.addHandler(handler)
    logger.setLevel(level.upper())


def create_app(config_object: object = None):
    """Create and configure the Flask application.

    Args:
        config_object: Optional config object (defaults to Config class)

    Returns:
        Flask app instance
    """
    app = Flask(__name__)

    if config_object is None:
        app.config.from_object(Config)
    else:
        app.config.from_object(config_object)

    configure_logging(app.config.get("LOG_LEVEL", "INFO"))

    from .main import bp as service_bp

    app.register_blueprint(service_bp)

    from .cli import register_cli

    register_cli(app)

    return app
