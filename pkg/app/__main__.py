"""`python -m app <command>` runs the Flask CLI with the app factory."""
from flask.cli import FlaskGroup

from . import create_app

cli = FlaskGroup(create_app=create_app)

if __name__ == "__main__":
    cli()
