"""Run executor: fetches a plan's request graph into an append-only raw archive.

Archive layout per run:

    <root>/<run_id>/
        plan.json        canonical plan snapshot (written first)
        manifest.json    status, counters, checkpoints, error log (atomic writes)
        raw/<entity>/<key>.json   verbatim response bodies
        log.ndjson       one structured record per request attempt
        .lock            executor identity while the run is owned

Checkpoints only advance, and every raw file is persisted before the
checkpoint that covers it, so a run killed at any point can be resumed
into an archive byte-identical to an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import secrets
import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import requests

from . import adapters
from .clock import Clock
from .errors import (
    ArchiveIoError,
    AuthRevoked,
    NetworkUnreachable,
    NonRetriable,
    PlanMismatch,
    RetriesExhausted,
    RunLocked,
    RunNotFound,
)
from .plan import CollectionPlan, parse_plan, serialize_plan
from .platform_access import PlatformConfig
from .timestamps import format_ts

RETRIABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base_delay: float = 1.0
    multiplier: float = 2.0
    jitter: float = 0.2  # +/- fraction of the computed backoff
    max_delay: float = 60.0
    honor_retry_after: bool = True
    retriable: frozenset[int] = RETRIABLE_STATUSES


@dataclass
class RateBudget:
    remaining: int | None = None
    reset_at: datetime | None = None
    min_reserve: int = 10

    def update_from_headers(self, platform: str, headers: dict) -> None:
        headers = {k.lower(): v for k, v in headers.items()}
        prefix = "x-ratelimit" if platform == "github" else "ratelimit"
        remaining = headers.get(f"{prefix}-remaining")
        reset = headers.get(f"{prefix}-reset")
        if remaining is None:
            return
        try:
            self.remaining = int(remaining)
            if reset is not None:
                self.reset_at = datetime.fromtimestamp(int(reset), tz=timezone.utc)
        except ValueError:
            pass

    def seconds_until_reset(self, now: datetime) -> float:
        if self.remaining is None or self.reset_at is None:
            return 0.0
        if self.remaining > self.min_reserve:
            return 0.0
        return max(0.0, (self.reset_at - now).total_seconds())


class RunManifest:
    """Mutable in-memory view of manifest.json."""

    def __init__(self, run_id: str, plan_checksum: str, started_at: str):
        self.doc: dict = {
            "run_id": run_id,
            "plan_checksum": plan_checksum,
            "status": "pending",
            "started_at": started_at,
            "finished_at": None,
            "counters": {"requests_issued": 0, "retries": 0, "pages_fetched": 0,
                         "reviews_discovered": 0, "errors": 0},
            "checkpoints": {
                "list_pages_done": 0,
                "list_exhausted": False,
                "review_numbers": [],
                "fanouts_done": {"commits": [], "comments": [], "files": []},
            },
            "error_log": [],
            "resume_audit": [],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "RunManifest":
        m = cls.__new__(cls)
        m.doc = doc
        return m

    @property
    def status(self) -> str:
        return self.doc["status"]


def _atomic_write(path: Path, data: bytes) -> None:
    try:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise ArchiveIoError(str(exc)) from exc


def write_raw(run_dir: Path, entity: str, key: str, body: bytes) -> str:
    """Persist a verbatim response body; idempotent for identical bytes."""
    rel = f"raw/{entity}/{key}.json"
    path = Path(run_dir) / rel
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.exists() and path.read_bytes() == body:
            return rel
    except OSError as exc:
        raise ArchiveIoError(str(exc)) from exc
    _atomic_write(path, body)
    return rel


def default_transport(session: requests.Session | None = None):
    session = session or requests.Session()

    def send(url: str, headers: dict, params: list[tuple[str, str]], timeout: float):
        try:
            resp = session.get(url, headers=headers, params=params, timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise NetworkUnreachable(str(exc)) from exc
        return resp.status_code, dict(resp.headers), resp.content

    return send


class RunExecutor:
    def __init__(
        self,
        config: PlatformConfig,
        policy: RetryPolicy | None = None,
        clock: Clock | None = None,
        transport=None,
        parallelism: int = 4,
        rng: random.Random | None = None,
        checkpoint_hook=None,
        timeout: float = 30.0,
    ):
        self.config = config
        self.policy = policy or RetryPolicy()
        self.clock = clock or Clock()
        self.transport = transport or default_transport()
        self.parallelism = max(1, parallelism)
        self.rng = rng or random.Random()
        self.checkpoint_hook = checkpoint_hook or (lambda: None)
        self.timeout = timeout
        self.budget = RateBudget()
        self._headers = adapters.auth_headers(config.kind, config.token)

    # --- low-level fetch ---------------------------------------------------

    def fetch_with_retry(self, path: str, query: tuple[tuple[str, str], ...],
                         endpoint_id: str, run_dir: Path | None = None):
        """GET with bounded retries, Retry-After honoring, and budget tracking."""
        url = self.config.base_url + path
        last_status = None
        for attempt in range(1, self.policy.max_attempts + 1):
            wait = self.budget.seconds_until_reset(self.clock.now())
            if wait > 0:
                self.clock.sleep(wait)
            t0 = self.clock.monotonic()
            status, headers, body = self.transport(url, self._headers, list(query),
                                                  self.timeout)
            duration_ms = (self.clock.monotonic() - t0) * 1000
            self._log(run_dir, endpoint_id, status, attempt, duration_ms)
            self.budget.update_from_headers(self.config.kind, headers)
            if status == 200:
                return status, headers, body, attempt
            last_status = status
            if status == 401:
                raise AuthRevoked(f"401 on {endpoint_id}")
            if status not in self.policy.retriable:
                raise NonRetriable(status)
            if attempt == self.policy.max_attempts:
                break
            backoff = self.policy.base_delay * (self.policy.multiplier ** (attempt - 1))
            backoff *= 1 + self.rng.uniform(-self.policy.jitter, self.policy.jitter)
            backoff = min(backoff, self.policy.max_delay)
            if status == 429 and self.policy.honor_retry_after:
                lowered = {k.lower(): v for k, v in headers.items()}
                try:
                    retry_after = float(lowered.get("retry-after", "0"))
                except ValueError:
                    retry_after = 0.0
                backoff = max(backoff, retry_after)
            self.clock.sleep(min(backoff, self.policy.max_delay))
        raise RetriesExhausted(last_status)

    def _log(self, run_dir: Path | None, endpoint_id: str, status: int,
             attempt: int, duration_ms: float) -> None:
        if run_dir is None:
            return
        record = {
            "timestamp": format_ts(self.clock.now()),
            "level": "info" if status == 200 else "warning",
            "endpoint_id": endpoint_id,
            "status": status,
            "attempt": attempt,
            "duration_ms": round(duration_ms, 3),
        }
        try:
            with open(Path(run_dir) / "log.ndjson", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as exc:
            raise ArchiveIoError(str(exc)) from exc

    # --- run lifecycle -----------------------------------------------------

    def execute_run(self, plan: CollectionPlan, archive_root: Path) -> dict:
        run_id = self.clock.now().strftime("%Y%m%dT%H%M%SZ") + "-" + secrets.token_hex(3)
        run_dir = Path(archive_root) / run_id
        run_dir.mkdir(parents=True, exist_ok=False)
        plan_bytes = serialize_plan(plan).encode("utf-8")
        _atomic_write(run_dir / "plan.json", plan_bytes)
        manifest = RunManifest(
            run_id=run_id,
            plan_checksum=hashlib.sha256(plan_bytes).hexdigest(),
            started_at=format_ts(self.clock.now()),
        )
        return self._run(plan, run_dir, manifest)

    def resume_run(self, run_id: str, archive_root: Path) -> dict:
        run_dir = Path(archive_root) / run_id
        if not run_dir.is_dir() or not (run_dir / "manifest.json").exists():
            raise RunNotFound(run_id)
        manifest = RunManifest.from_doc(
            json.loads((run_dir / "manifest.json").read_text()))
        plan_bytes = (run_dir / "plan.json").read_bytes()
        if hashlib.sha256(plan_bytes).hexdigest() != manifest.doc["plan_checksum"]:
            raise PlanMismatch(f"plan.json checksum mismatch for run {run_id}")
        plan = parse_plan(plan_bytes.decode("utf-8"))
        manifest.doc["resume_audit"].append(
            {"resumed_at": format_ts(self.clock.now())})
        if manifest.status == "completed":
            self._write_manifest(run_dir, manifest)
            return manifest.doc
        return self._run(plan, run_dir, manifest)

    def _run(self, plan: CollectionPlan, run_dir: Path, manifest: RunManifest) -> dict:
        lock = run_dir / ".lock"
        if lock.exists():
            if self._lock_is_live(lock):
                raise RunLocked(str(lock))
            lock.unlink()  # stale lock left by a dead executor
        lock.write_text(f"{socket.gethostname()}:{os.getpid()}\n")
        manifest.doc["status"] = "running"
        self._write_manifest(run_dir, manifest)
        try:
            self._collect(plan, run_dir, manifest)
        except AuthRevoked as exc:
            self._record_error(manifest, "auth", str(exc), 1)
            self._finish(run_dir, manifest, "failed")
            raise
        except (RetriesExhausted, NonRetriable, NetworkUnreachable) as exc:
            self._record_error(manifest, "list_reviews", str(exc), 1)
            self._finish(run_dir, manifest, "failed")
            return manifest.doc
        finally:
            lock.unlink(missing_ok=True)
        return manifest.doc

    def _collect(self, plan: CollectionPlan, run_dir: Path,
                 manifest: RunManifest) -> None:
        cp = manifest.doc["checkpoints"]
        counters = manifest.doc["counters"]

        # phase 1: paginate the root listing
        if not cp["list_exhausted"]:
            base_req = adapters.list_reviews_request(plan, self.config.project)
            page = cp["list_pages_done"] + 1
            while True:
                query = base_req.query + (("page", str(page)),)
                status, headers, body, attempts = self.fetch_with_retry(
                    base_req.path, query, "list_reviews", run_dir)
                counters["requests_issued"] += attempts
                counters["retries"] += attempts - 1
                counters["pages_fetched"] += 1
                write_raw(run_dir, "reviews", f"page-{page:04d}", body)
                items = json.loads(body)
                key = "number" if plan.platform == "github" else "iid"
                numbers = [int(item[key]) for item in items]
                cp["review_numbers"].extend(
                    n for n in numbers if n not in cp["review_numbers"])
                counters["reviews_discovered"] = len(cp["review_numbers"])
                cursor = adapters.next_page(plan.platform, status, headers, items,
                                            adapters.PageCursor(page=page))
                cp["list_pages_done"] = page
                if cursor is None or not items:
                    cp["list_exhausted"] = True
                self._checkpoint(run_dir, manifest)
                if cp["list_exhausted"]:
                    break
                page = cursor.page

        # phase 2: per-review fan-outs, bounded parallel fetch, ordered persistence
        entity_of = {"review_commits": "commits", "review_comments": "comments",
                     "review_files": "files"}
        pending: list[tuple[int, str, list[adapters.EndpointRequest]]] = []
        for number in cp["review_numbers"]:
            requests_for_review = adapters.fanout_requests(
                plan, self.config.project, number)
            by_entity: dict[str, list[adapters.EndpointRequest]] = {}
            for req in requests_for_review:
                by_entity.setdefault(entity_of[req.endpoint_id], []).append(req)
            for entity, reqs in by_entity.items():
                if number not in cp["fanouts_done"][entity]:
                    pending.append((number, entity, reqs))

        def fetch_group(group):
            number, entity, reqs = group
            results = []
            for req in reqs:
                status, headers, body, attempts = self.fetch_with_retry(
                    req.path, req.query, req.endpoint_id, run_dir)
                results.append((req, body, attempts))
            return results

        failed = False
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            futures = [(group, pool.submit(fetch_group, group)) for group in pending]
            for (number, entity, reqs), future in futures:
                try:
                    results = future.result()
                except AuthRevoked:
                    raise
                except (RetriesExhausted, NonRetriable, NetworkUnreachable) as exc:
                    failed = True
                    self._record_error(manifest, reqs[0].endpoint_id, str(exc),
                                       self.policy.max_attempts)
                    continue
                for req, body, attempts in results:
                    counters["requests_issued"] += attempts
                    counters["retries"] += attempts - 1
                    counters["pages_fetched"] += 1
                    write_raw(run_dir, entity, req.archive_key, body)
                cp["fanouts_done"][entity].append(number)
                self._checkpoint(run_dir, manifest)

        self._finish(run_dir, manifest, "partial" if failed else "completed")

    @staticmethod
    def _lock_is_live(lock: Path) -> bool:
        try:
            host, pid = lock.read_text().strip().rsplit(":", 1)
            pid = int(pid)
        except (OSError, ValueError):
            return False
        if host != socket.gethostname():
            return True  # cannot probe a remote owner; assume live
        if pid == os.getpid():
            return True
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return False
        except PermissionError:
            return True
        return True

    # --- manifest plumbing -------------------------------------------------

    def _record_error(self, manifest: RunManifest, endpoint_id: str,
                      reason: str, attempt: int) -> None:
        manifest.doc["counters"]["errors"] += 1
        manifest.doc["error_log"].append({
            "timestamp": format_ts(self.clock.now()),
            "endpoint_id": endpoint_id,
            "status_or_reason": reason,
            "attempt": attempt,
        })

    def _checkpoint(self, run_dir: Path, manifest: RunManifest) -> None:
        self._write_manifest(run_dir, manifest)
        self.checkpoint_hook()

    def _write_manifest(self, run_dir: Path, manifest: RunManifest) -> None:
        _atomic_write(run_dir / "manifest.json",
                      (json.dumps(manifest.doc, sort_keys=True, indent=2) + "\n")
                      .encode("utf-8"))

    def _finish(self, run_dir: Path, manifest: RunManifest, status: str) -> None:
        manifest.doc["status"] = status
        manifest.doc["finished_at"] = format_ts(self.clock.now())
        self._write_manifest(run_dir, manifest)


def execute_run(plan: CollectionPlan, config: PlatformConfig, archive_root,
                policy: RetryPolicy | None = None, **kwargs) -> dict:
    return RunExecutor(config, policy, **kwargs).execute_run(plan, Path(archive_root))


def resume_run(run_id: str, archive_root, config: PlatformConfig,
               policy: RetryPolicy | None = None, **kwargs) -> dict:
    return RunExecutor(config, policy, **kwargs).resume_run(run_id, Path(archive_root))


def read_manifest(archive_root, run_id: str) -> dict:
    path = Path(archive_root) / run_id / "manifest.json"
    if not path.exists():
        raise RunNotFound(run_id)
    return json.loads(path.read_text())
