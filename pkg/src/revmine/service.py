"""Loopback HTTP service for the dashboard and scripts.

Thin adapter over the pipeline modules: handlers validate the envelope,
call the corresponding module operation, and wrap its output. All state
lives under the workspace root (runs/, datasets/), so a restarted service
re-lists everything from disk. Collection and dataset builds run on
background threads and are observed by polling.
"""

from __future__ import annotations

import json
import secrets
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import analysis as _analysis
from . import collector as _collector
from . import dataset as _dataset
from . import orchestrator as _orchestrator
from . import platform_access as _pa
from .errors import (
    NetworkUnreachable,
    PlanParseError,
    RefinementExhausted,
    RevMineError,
    RunLocked,
    RunNotFound,
    SpecValidationError,
    UnsupportedSchemaVersion,
)
from .plan import (
    filters_from_doc,
    normalize_plan,
    plan_from_doc,
    plan_to_doc,
    validate_plan,
)

API = "/api/v1"


def _error(status: int, code: str, message: str, issues=None) -> JSONResponse:
    body: dict = {"error": {"code": code, "message": message}}
    if issues is not None:
        body["error"]["issues"] = issues
    return JSONResponse(body, status_code=status)


class Workspace:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.runs_dir = self.root / "runs"
        self.datasets_dir = self.root / "datasets"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.datasets_dir.mkdir(parents=True, exist_ok=True)
        self.jobs: dict[str, dict] = {}
        self.jobs_lock = threading.Lock()
        self.active_projects: set[str] = set()

    def new_job(self, kind: str) -> dict:
        job = {"job_id": "job-" + secrets.token_hex(4), "kind": kind,
               "state": "queued", "progress": None, "result_ref": None,
               "error_message": None}
        with self.jobs_lock:
            self.jobs[job["job_id"]] = job
        return job


def create_app(
    root,
    config: _pa.PlatformConfig | None = None,
    provider=None,
    executor_factory=None,
    static_dir: Path | None = None,
) -> FastAPI:
    """Build the service app.

    config/provider may be None; the corresponding endpoints then answer
    with configuration errors. executor_factory lets tests inject clocks
    and transports into the collector.
    """
    app = FastAPI(title="revmine", version="1")
    ws = Workspace(Path(root))
    app.state.workspace = ws

    def make_executor(**kwargs) -> _collector.RunExecutor:
        if executor_factory is not None:
            return executor_factory(**kwargs)
        return _collector.RunExecutor(config, **kwargs)

    @app.exception_handler(RevMineError)
    async def on_revmine_error(request: Request, exc: RevMineError):
        return _error(500, type(exc).__name__, str(exc))

    # --- platform ---------------------------------------------------------

    @app.post(API + "/platform/verify")
    async def verify(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        if config is None:
            return _error(503, "NO_CREDENTIALS", "server has no platform credentials")
        if "kind" in body and body["kind"] != config.kind:
            return _error(400, "KIND_MISMATCH",
                          f"server is configured for {config.kind}")
        try:
            manifest = _pa.verify_access(config)
        except NetworkUnreachable as exc:
            return _error(502, "NETWORK_UNREACHABLE", str(exc))
        return manifest.as_dict()

    # --- plans ------------------------------------------------------------

    @app.post(API + "/plans")
    async def plans(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        if "query" in body:
            if provider is None:
                return _error(503, "NO_PROVIDER", "no LLM provider configured")
            manifest = _offline_manifest(config.kind if config else "gitlab")
            try:
                plan, transcript = _orchestrator.generate_plan(
                    body["query"], provider, manifest,
                    secret_values=(config.token,) if config else ())
            except RefinementExhausted as exc:
                return _error(422, "REFINEMENT_EXHAUSTED",
                              "no valid plan after all refinement rounds",
                              issues=_transcript_doc(exc.transcript))
            except (OSError, ConnectionError) as exc:
                return _error(503, "PROVIDER_UNREACHABLE", str(exc))
            report = validate_plan(plan)
            return {"plan": plan_to_doc(plan), "validation": report.as_dict(),
                    "transcript": _transcript_doc(transcript)}
        if "plan" in body:
            try:
                plan = plan_from_doc(body["plan"])
                plan = normalize_plan(plan)
            except (PlanParseError, UnsupportedSchemaVersion, RevMineError) as exc:
                return _error(422, type(exc).__name__, str(exc))
            report = validate_plan(plan)
            return {"plan": plan_to_doc(plan), "validation": report.as_dict()}
        return _error(400, "BAD_REQUEST", "body needs 'query' or 'plan'")

    # --- runs -------------------------------------------------------------

    @app.post(API + "/runs", status_code=202)
    async def start_run(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        if config is None:
            return _error(503, "NO_CREDENTIALS", "server has no platform credentials")
        try:
            plan = normalize_plan(plan_from_doc(body.get("plan", {})))
        except RevMineError as exc:
            return _error(422, type(exc).__name__, str(exc))
        report = validate_plan(plan)
        if not report.valid:
            return _error(422, "INVALID_PLAN", "plan failed validation",
                          issues=[i.as_dict() for i in report.issues])
        with ws.jobs_lock:
            if config.project in ws.active_projects:
                return _error(409, "PROJECT_LOCKED",
                              "a run for this project is already executing")
            ws.active_projects.add(config.project)
        job = ws.new_job("collection_run")

        def work():
            job["state"] = "running"
            try:
                manifest = make_executor().execute_run(plan, ws.runs_dir)
                job["result_ref"] = manifest["run_id"]
                job["state"] = {"completed": "done", "partial": "partial"}.get(
                    manifest["status"], "error")
                if job["state"] == "error":
                    job["error_message"] = f"run status: {manifest['status']}"
            except RunLocked as exc:
                job["state"] = "error"
                job["error_message"] = str(exc)
            except Exception as exc:  # surfaced via polling, not a crash
                job["state"] = "error"
                job["error_message"] = str(exc)
            finally:
                with ws.jobs_lock:
                    ws.active_projects.discard(config.project)

        threading.Thread(target=work, daemon=True).start()
        return {"job": job}

    @app.get(API + "/runs")
    async def list_runs():
        runs = []
        for run_dir in sorted(ws.runs_dir.iterdir()) if ws.runs_dir.is_dir() else []:
            manifest_path = run_dir / "manifest.json"
            if not manifest_path.exists():
                continue
            doc = json.loads(manifest_path.read_text())
            runs.append({"run_id": doc["run_id"], "status": doc["status"],
                         "started_at": doc["started_at"],
                         "counters": doc["counters"]})
        return {"runs": runs}

    @app.get(API + "/runs/{run_id}")
    async def get_run(run_id: str):
        try:
            return {"manifest": _collector.read_manifest(ws.runs_dir, run_id)}
        except RunNotFound:
            return _error(404, "RUN_NOT_FOUND", f"unknown run {run_id}")

    @app.get(API + "/jobs/{job_id}")
    async def get_job(job_id: str):
        job = ws.jobs.get(job_id)
        if job is None:
            return _error(404, "JOB_NOT_FOUND", f"unknown job {job_id}")
        return {"job": job}

    # --- datasets ---------------------------------------------------------

    @app.post(API + "/datasets", status_code=202)
    async def build_dataset_endpoint(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        run_id = body.get("run_id")
        if not run_id:
            return _error(400, "BAD_REQUEST", "run_id is required")
        try:
            manifest = _collector.read_manifest(ws.runs_dir, run_id)
        except RunNotFound:
            return _error(404, "RUN_NOT_FOUND", f"unknown run {run_id}")
        if manifest["status"] not in ("completed", "partial"):
            return _error(409, "RUN_NOT_FINISHED",
                          f"run status is {manifest['status']}")
        try:
            filters = filters_from_doc(body.get("filters") or {})
        except (KeyError, ValueError) as exc:
            return _error(400, "BAD_FILTERS", str(exc))
        run_dir = ws.runs_dir / run_id
        if body.get("metrics"):
            metric_ids = list(body["metrics"])
        else:
            from .plan import expanded_metric_ids, parse_plan

            metric_ids = expanded_metric_ids(
                parse_plan((run_dir / "plan.json").read_text()))
        job = ws.new_job("dataset_build")

        def work():
            job["state"] = "running"
            try:
                ds = _dataset.build_dataset(run_dir, metric_ids, filters)
                out_dir = ws.datasets_dir / ds.dataset_id
                _dataset.export_csv(ds, out_dir)
                (out_dir / "tables.json").write_text(
                    json.dumps(_dataset.dataset_to_doc(ds), sort_keys=True) + "\n")
                job["result_ref"] = ds.dataset_id
                job["state"] = "done"
            except Exception as exc:
                job["state"] = "error"
                job["error_message"] = str(exc)

        threading.Thread(target=work, daemon=True).start()
        return {"job": job}

    def load_dataset(dataset_id: str) -> _dataset.Dataset | None:
        path = ws.datasets_dir / dataset_id / "tables.json"
        if not path.exists():
            return None
        return _dataset.dataset_from_doc(json.loads(path.read_text()))

    @app.get(API + "/datasets")
    async def list_datasets():
        out = []
        for d in sorted(ws.datasets_dir.iterdir()) if ws.datasets_dir.is_dir() else []:
            meta = d / "dataset.json"
            if meta.exists():
                out.append(json.loads(meta.read_text()))
        return {"datasets": out}

    @app.get(API + "/datasets/{dataset_id}")
    async def get_dataset(dataset_id: str):
        meta = ws.datasets_dir / dataset_id / "dataset.json"
        if not meta.exists():
            return _error(404, "DATASET_NOT_FOUND", f"unknown dataset {dataset_id}")
        return {"metadata": json.loads(meta.read_text())}

    @app.get(API + "/datasets/{dataset_id}/rows")
    async def dataset_rows(dataset_id: str, table: str = "reviews",
                           offset: int = 0, limit: int = 100):
        if limit < 1 or limit > 500 or offset < 0:
            return _error(400, "BAD_PAGINATION",
                          "offset must be >= 0 and 1 <= limit <= 500")
        ds = load_dataset(dataset_id)
        if ds is None:
            return _error(404, "DATASET_NOT_FOUND", f"unknown dataset {dataset_id}")
        t = ds.tables.get(table)
        if t is None:
            return _error(400, "UNKNOWN_TABLE", f"dataset has no table {table!r}")
        rows = [[_dataset._json_value(v) for v in row]
                for row in t.rows[offset:offset + limit]]
        return {"columns": [n for n, _ in t.columns], "rows": rows,
                "total": len(t.rows)}

    # --- analyses ---------------------------------------------------------

    @app.post(API + "/analyses")
    async def analyses(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        ds = load_dataset(body.get("dataset_id", ""))
        if ds is None:
            return _error(404, "DATASET_NOT_FOUND",
                          f"unknown dataset {body.get('dataset_id')}")
        if body.get("summary"):
            return {"summary": _analysis.summarize(ds)}
        if "intent" in body:
            if provider is None:
                return _error(503, "NO_PROVIDER", "no LLM provider configured")
            try:
                spec = _orchestrator.generate_analysis_spec(body["intent"], ds,
                                                            provider)
            except RefinementExhausted:
                return _error(422, "REFINEMENT_EXHAUSTED",
                              "no valid spec after all refinement rounds")
        elif "spec" in body:
            try:
                spec = _analysis.spec_from_doc(body["spec"])
            except SpecValidationError as exc:
                return _error(422, "INVALID_SPEC", str(exc), issues=exc.issues)
        else:
            return _error(400, "BAD_REQUEST",
                          "body needs 'spec', 'intent', or 'summary'")
        try:
            result = _analysis.run_spec(ds, spec)
        except SpecValidationError as exc:
            return _error(422, "INVALID_SPEC", str(exc), issues=exc.issues)
        doc = _analysis.chart_data(result)
        doc["spec"] = spec.as_dict()
        return doc

    @app.post(API + "/keyword-screen")
    async def keyword_screen_endpoint(request: Request):
        body = await _json_body(request)
        if isinstance(body, JSONResponse):
            return body
        ds = load_dataset(body.get("dataset_id", ""))
        if ds is None:
            return _error(404, "DATASET_NOT_FOUND",
                          f"unknown dataset {body.get('dataset_id')}")
        patterns = body.get("patterns")
        if patterns is None and "intent" in body:
            if provider is None:
                return _error(503, "NO_PROVIDER", "no LLM provider configured")
            patterns = _orchestrator.generate_patterns(body["intent"], provider)
        if not isinstance(patterns, list):
            return _error(400, "BAD_REQUEST", "body needs 'patterns' or 'intent'")
        return {"patterns": patterns,
                "hits": _analysis.keyword_screen(ds, patterns)}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="dashboard")

    return app


async def _json_body(request: Request):
    try:
        body = await request.json()
    except Exception:
        return _error(400, "BAD_JSON", "request body is not valid JSON")
    if not isinstance(body, dict):
        return _error(400, "BAD_JSON", "request body must be a JSON object")
    return body


def _offline_manifest(kind: str) -> _pa.CapabilityManifest:
    """Synthetic manifest listing declared endpoints, for prompt building
    when no live verification has been made."""
    from datetime import datetime, timezone

    from . import adapters

    return _pa.CapabilityManifest(
        token_valid=True, authenticated_user=None, scopes=(),
        project_accessible=True,
        endpoints=tuple(_pa.EndpointProbe(eid, True, 0)
                        for eid in adapters.declared_endpoints(kind)),
        rate_limit_snapshot=None,
        checked_at=datetime.now(timezone.utc),
    )


def _transcript_doc(transcript) -> list[dict]:
    return [
        {"extraction_outcome": r.extraction_outcome,
         "valid": r.validation.valid if r.validation else None,
         "issues": [i.as_dict() for i in r.validation.issues]
         if r.validation else []}
        for r in transcript.rounds
    ]
