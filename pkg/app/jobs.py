"""
Background optimization jobs for the run service.

Each job runs one optimization in a daemon thread. Job records live in memory
(JOBS) and are polled through `get_job_status(job_id)`; log lines emitted by the
job's thread are captured into the record.

Notes:
- Jobs do not survive a restart. For long campaigns use the `optimize` command,
  which writes a full run directory.
- Finished and failed jobs are evicted once they are older than FINISHED_JOB_TTL
  seconds or more than MAX_FINISHED_JOBS of them are kept; running jobs stay.
"""
import logging
import threading
import time
import uuid
from typing import Any, Dict, Optional

from .optimizer import OptimizationError, build_problem, optimize
from .reporting import build_summary

logger = logging.getLogger(__name__)

JOBS: Dict[str, Dict[str, Any]] = {}
JOBS_LOCK = threading.Lock()
HISTORY_TAIL = 20
MAX_FINISHED_JOBS = 50
FINISHED_JOB_TTL = 24 * 3600.0


class JobError(Exception):
    pass


class _ThreadLogHandler(logging.Handler):
    """Appends records from one thread to a job's log list."""

    def __init__(self, thread_id: int, logs: list):
        super().__init__(logging.INFO)
        self.thread_id = thread_id
        self.logs = logs
        self.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))

    def emit(self, record):
        if record.thread == self.thread_id:
            self.logs.append(self.format(record))


def _history_rows(history):
    return [{"iteration": r.iteration, "objective": r.objective, "components": r.components,
             "max_change": r.max_change, "step": r.step} for r in history]


def prune_jobs(now: Optional[float] = None) -> int:
    """Drop finished and failed jobs past the age limit or beyond the newest MAX_FINISHED_JOBS.

    Returns the number of evicted records.
    """
    now = time.time() if now is None else now
    with JOBS_LOCK:
        done = sorted((job['finished_at'], job_id) for job_id, job in JOBS.items()
                      if job['finished_at'] is not None)
        expired = {job_id for finished_at, job_id in done if now - finished_at > FINISHED_JOB_TTL}
        kept = [job_id for _, job_id in done if job_id not in expired]
        expired.update(kept[:max(0, len(kept) - MAX_FINISHED_JOBS)])
        for job_id in expired:
            del JOBS[job_id]
    if expired:
        logger.info("Evicted %d finished jobs", len(expired))
    return len(expired)


def start_optimization(config: Dict[str, Any]) -> str:
    """Start a background optimization of a resolved run configuration.

    Returns a job id that can be polled using `get_job_status(job_id)`.
    """
    problem = build_problem(config)
    prune_jobs()

    job_id = str(uuid.uuid4())
    job = {
        'status': 'queued',
        'scenario': config.get('scenario'),
        'logs': [],
        'history': [],
        'summary': None,
        'started_at': time.time(),
        'finished_at': None,
        'exit_code': None,
    }
    with JOBS_LOCK:
        JOBS[job_id] = job

    def _run():
        job['status'] = 'running'
        handler = _ThreadLogHandler(threading.get_ident(), job['logs'])
        root = logging.getLogger("app")
        root.addHandler(handler)
        try:
            result = optimize(problem)
            job['history'] = _history_rows(result.history)
            job['summary'] = build_summary(problem, result, config)
            job['exit_code'] = 0
            job['status'] = 'finished'
        except OptimizationError as e:
            if e.result is not None:
                job['history'] = _history_rows(e.result.history)
            job['logs'].append(f"Optimization failed: {e}")
            job['exit_code'] = 1
            job['status'] = 'failed'
        except Exception as e:
            logger.exception("Job %s crashed", job_id)
            job['logs'].append(f"Exception: {e}")
            job['exit_code'] = 1
            job['status'] = 'failed'
        finally:
            job['finished_at'] = time.time()
            root.removeHandler(handler)

    thread = threading.Thread(target=_run, daemon=True)
    thread.start()
    logger.info("Started job %s (%s)", job_id, config.get('scenario') or 'custom')
    return job_id


def get_job_status(job_id: str) -> Dict[str, Any]:
    job = JOBS.get(job_id)
    if not job:
        raise JobError("Job not found")
    view = dict(job)
    view['logs'] = list(job['logs'])
    view['history'] = job['history'][-HISTORY_TAIL:]
    return view
