"""Run service endpoints."""
import time

from conftest import small_config
from app.run_config import SCENARIOS


def wait_for(client, status_url, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(status_url).get_json()["job"]
        if job["status"] in ("finished", "failed"):
            return job
        time.sleep(0.1)
    raise AssertionError(f"job did not finish within {timeout} s")


def test_index_lists_the_presets(client):
    resp = client.get("/")
    assert resp.status_code == 200
    data = resp.get_json()
    assert data["success"] is True
    assert [s["name"] for s in data["scenarios"]] == list(SCENARIOS)
    assert len(data["scenarios"]) == 10


def test_optimize_job_runs_to_completion(client):
    config = small_config("conc-uniform", max_iter=4)
    resp = client.post("/optimize", json={"scenario": "conc-uniform", "overrides": config})
    assert resp.status_code == 202
    data = resp.get_json()
    assert data["success"] is True
    assert data["status_url"] == f"/jobs/{data['job_id']}"

    job = wait_for(client, data["status_url"])
    assert job["status"] == "finished", job["logs"]
    assert job["exit_code"] == 0
    assert job["scenario"] == "conc-uniform"
    assert 1 <= len(job["history"]) <= 5
    assert job["summary"]["final"]["components"]["index"] > 0.0
    assert job["finished_at"] >= job["started_at"]


def test_unknown_job_is_not_found(client):
    resp = client.get("/jobs/not-a-job")
    assert resp.status_code == 404
    assert resp.get_json()["success"] is False


def test_unknown_override_key_is_rejected(client):
    resp = client.post("/optimize", json={"scenario": "rot-uniform", "overrides": {"optimizer": {"max_iters": 3}}})
    assert resp.status_code == 400
    assert "optimizer.max_iters" in resp.get_json()["message"]


def test_unknown_scenario_is_rejected(client):
    resp = client.post("/optimize", json={"scenario": "cloak-sideways"})
    assert resp.status_code == 400


def test_body_must_be_json(client):
    resp = client.post("/optimize", data="scenario=cloak-uniform")
    assert resp.status_code == 400


def _job(finished_at):
    return {"status": "running" if finished_at is None else "finished", "finished_at": finished_at}


def test_prune_jobs_evicts_old_and_surplus_finished_jobs(monkeypatch):
    from app import jobs
    table = {"running": _job(None), "stale": _job(0.0)}
    table.update({f"done-{i}": _job(1000.0 + i) for i in range(5)})
    monkeypatch.setattr(jobs, "JOBS", table)
    monkeypatch.setattr(jobs, "MAX_FINISHED_JOBS", 3)
    monkeypatch.setattr(jobs, "FINISHED_JOB_TTL", 500.0)

    assert jobs.prune_jobs(now=1010.0) == 3
    assert set(table) == {"running", "done-2", "done-3", "done-4"}
    assert jobs.prune_jobs(now=1010.0) == 0
    assert jobs.prune_jobs(now=1e9) == 3
    assert set(table) == {"running"}
