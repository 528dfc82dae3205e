"""
Process-level configuration for the Flask app and the CLI.

Run parameters live in JSON run configurations (see run_config.py); this class
only carries what comes from the environment.
"""
import os


def _workers() -> int:
    raw = os.environ.get("THERMO_WORKERS")
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


class Config:
    SECRET_KEY = os.environ.get("FLASK_SECRET_KEY", "dev-secret-key-change-me")
    # Replaces output.directory of every run configuration when set
    OUTPUT_DIR = os.environ.get("THERMO_OUTPUT_DIR") or None
    LOG_LEVEL = os.environ.get("THERMO_LOG_LEVEL", "INFO")
    WORKERS = _workers()
