"""Shared fixtures: Flask app, small models and a small cell database."""
import numpy as np
import pytest

from app import create_app
from app.config import Config
from app.database import build_database, save
from app.optimizer import build_model
from app.run_config import rescaled, scenario_config


@pytest.fixture
def app(tmp_path):
    class TestConfig(Config):
        TESTING = True
        OUTPUT_DIR = str(tmp_path / "runs")
        WORKERS = 1
        LOG_LEVEL = "WARNING"

    return create_app(TestConfig)


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture
def client(app):
    return app.test_client()


def small_config(name, nx=10, ny=10, **optimizer):
    config = rescaled(scenario_config(name), nx, ny)
    config["optimizer"].update(optimizer)
    return config


@pytest.fixture
def small_model_of():
    def _build(name, nx=10, ny=10):
        return build_model(small_config(name, nx, ny))
    return _build


@pytest.fixture(scope="session")
def small_db():
    """All (t1, t2, t3) cells at n=8."""
    return build_database(8, workers=1)


@pytest.fixture
def small_db_dir(tmp_path, small_db):
    path = tmp_path / "database"
    save(small_db, str(path))
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
