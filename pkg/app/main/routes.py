"""
Routes for the run service.

GET  /              scenario presets and their descriptions
POST /optimize      {"scenario": ..., "overrides": {...}} -> job id
GET  /jobs/<id>     job status, captured logs, latest history and final summary
"""
from flask import current_app, jsonify, request, url_for

from . import bp
from ..jobs import JobError, get_job_status, start_optimization
from ..objectives import ObjectiveError
from ..fem import BoundaryConditionError, SolverError
from ..run_config import CONFIG_PATH, SCENARIOS, ConfigError, resolve_run_config


@bp.route("/")
def index():
    """List the scenario presets."""
    scenarios = [{"name": name, "description": entry["description"]} for name, entry in SCENARIOS.items()]
    return jsonify(success=True, scenarios=scenarios)


@bp.route("/optimize", methods=["POST"])
def optimize_route():
    """Start an optimization job.

    Without a scenario the default run configuration (app/config.json) is used.
    """
    payload = request.get_json(silent=True)
    if payload is None:
        return jsonify(success=False, message='Expected a JSON body'), 400
    scenario = payload.get('scenario')
    overrides = payload.get('overrides') or {}
    try:
        config = resolve_run_config(None if scenario else CONFIG_PATH, scenario, overrides,
                                    current_app.config.get("OUTPUT_DIR"))
        job_id = start_optimization(config)
    except ConfigError as e:
        return jsonify(success=False, message=f'Invalid run configuration: {e}'), 400
    except (BoundaryConditionError, ObjectiveError, ValueError) as e:
        return jsonify(success=False, message=str(e)), 400
    except SolverError as e:
        return jsonify(success=False, message=f'Reference solve failed: {e}'), 500

    return jsonify(success=True, job_id=job_id,
                   status_url=url_for('service.job_status', job_id=job_id)), 202


@bp.route("/jobs/<job_id>", methods=["GET"])
def job_status(job_id):
    try:
        job = get_job_status(job_id)
    except JobError as e:
        return jsonify(success=False, message=str(e)), 404
    return jsonify(success=True, job=job)
