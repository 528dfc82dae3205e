"""Run-service blueprint: scenario presets and background optimization jobs."""
from flask import Blueprint

bp = Blueprint("service", __name__)

from . import routes  # noqa: E402,F401
