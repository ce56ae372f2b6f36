"""HTTP API: harvests run as pollable tasks, curation flows through JSON.

Request bodies are parsed by hand rather than through response models so
validation failures come back as 400s with field-level messages. Every
response carries the schema version header. Harvest tasks run on a small
pool (bounded concurrency); export and sync share a single worker so
they can never interleave store writes.
"""

from __future__ import annotations

import json
import logging
import math
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException
from starlette.staticfiles import StaticFiles

from .config import AppConfig
from .curation import (
    AffiliationGroup,
    CurationDecision,
    CurationError,
    apply_decision,
    group_works,
    suggest_matches,
)
from .exporter import TrackerClient, compute_stats, export_issues, sync_statuses
from .harvester import (
    HarvestError,
    HarvestQuery,
    InvalidQueryError,
    WorksClient,
    deduplicate_works,
)
from .matcher import EmptyRegistryError, MatchIndex, build_index
from .registry import RegistryError, load_ror_dump
from .store import CurationStore

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
SCHEMA_VERSION_HEADER = "X-Schema-Version"

TASK_QUEUED = "queued"
TASK_RUNNING = "running"
TASK_DONE = "done"
TASK_FAILED = "failed"


@dataclass
class TaskRecord:
    task_id: str
    kind: str
    state: str = TASK_QUEUED
    progress_done: int = 0
    progress_total: int | None = None
    result_ref: str | None = None
    error: str | None = None
    result: dict | None = None
    groups: list[AffiliationGroup] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "state": self.state,
            "progress": {"done": self.progress_done, "total": self.progress_total},
            "result_ref": self.result_ref,
            "error": self.error,
            "result": self.result,
        }


class TaskManager:
    """Owns task state and the worker pools behind the async endpoints."""

    def __init__(
        self,
        store: CurationStore,
        works_client: WorksClient,
        tracker_client: TrackerClient | None,
        *,
        index: MatchIndex | None = None,
        max_harvests: int = 2,
        queue_limit: int = 100,
    ) -> None:
        self.store = store
        self.works_client = works_client
        self.tracker_client = tracker_client
        self.index = index
        self.queue_limit = queue_limit
        self._tasks: dict[str, TaskRecord] = {}
        self._lock = threading.Lock()
        self._harvest_pool = ThreadPoolExecutor(
            max_workers=max_harvests, thread_name_prefix="harvest"
        )
        self._data_pool = ThreadPoolExecutor(max_workers=1, thread_name_prefix="dataops")

    def shutdown(self) -> None:
        self._harvest_pool.shutdown(wait=False, cancel_futures=True)
        self._data_pool.shutdown(wait=False, cancel_futures=True)

    def get(self, task_id: str) -> TaskRecord | None:
        with self._lock:
            return self._tasks.get(task_id)

    def _register(self, kind: str) -> TaskRecord:
        task = TaskRecord(task_id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._tasks[task.task_id] = task
        return task

    def queued_harvests(self) -> int:
        with self._lock:
            return sum(
                1 for t in self._tasks.values() if t.kind == "harvest" and t.state == TASK_QUEUED
            )

    def create_harvest(self, query: HarvestQuery) -> TaskRecord:
        task = self._register("harvest")
        self._harvest_pool.submit(self._run_harvest, task, query)
        return task

    def create_export(self) -> TaskRecord:
        task = self._register("export")
        self._data_pool.submit(self._run_export, task)
        return task

    def create_sync(self) -> TaskRecord:
        task = self._register("sync")
        self._data_pool.submit(self._run_sync, task)
        return task

    def _run_harvest(self, task: TaskRecord, query: HarvestQuery) -> None:
        with self._lock:
            task.state = TASK_RUNNING

        def progress(pages: int, total_count: int) -> None:
            with self._lock:
                task.progress_done = pages
                if total_count:
                    task.progress_total = math.ceil(total_count / self.works_client.per_page)

        try:
            works, _stats = self.works_client.fetch_all_works(query, progress=progress)
            works = deduplicate_works(works)
            groups = group_works(works)
            if self.index is not None:
                groups = [suggest_matches(g, self.index) for g in groups]
            with self._lock:
                task.groups = groups
                task.result = {"works": len(works), "groups": len(groups)}
                task.result_ref = f"/api/tasks/{task.task_id}/groups"
                task.state = TASK_DONE
        except HarvestError as exc:
            with self._lock:
                task.error = str(exc)
                task.state = TASK_FAILED
        except Exception as exc:  # a crashed worker must still surface
            logger.exception("harvest task %s crashed", task.task_id)
            with self._lock:
                task.error = f"internal error: {exc}"
                task.state = TASK_FAILED

    def _run_export(self, task: TaskRecord) -> None:
        with self._lock:
            task.state = TASK_RUNNING
        try:
            report = export_issues(self.store, self.tracker_client)
            with self._lock:
                task.result = report.to_dict()
                task.result_ref = "/api/stats"
                task.state = TASK_DONE
        except Exception as exc:
            logger.exception("export task %s failed", task.task_id)
            with self._lock:
                task.error = str(exc)
                task.state = TASK_FAILED

    def _run_sync(self, task: TaskRecord) -> None:
        with self._lock:
            task.state = TASK_RUNNING
        try:
            updated = sync_statuses(self.store, self.tracker_client)
            with self._lock:
                task.result = {"updated": updated}
                task.result_ref = "/api/stats"
                task.state = TASK_DONE
        except Exception as exc:
            logger.exception("sync task %s failed", task.task_id)
            with self._lock:
                task.error = str(exc)
                task.state = TASK_FAILED


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": message, **extra}, status_code=status)


def build_match_index(config: AppConfig) -> MatchIndex | None:
    """The matcher index for the configured registry copy, if one exists."""
    if not config.registry_path.exists():
        return None
    registry = load_ror_dump(config.registry_path)
    try:
        return build_index(registry)
    except EmptyRegistryError:
        return None


def create_app(
    config: AppConfig,
    *,
    store: CurationStore | None = None,
    works_client: WorksClient | None = None,
    tracker_client: TrackerClient | None = None,
    index: MatchIndex | None = None,
) -> FastAPI:
    """Wire the service together; test doubles slot in via the keywords."""
    store = store or CurationStore(config.requests_path)
    works_client = works_client or WorksClient(
        config.endpoint, mailto=config.mailto, harvest_cap=config.harvest_cap
    )
    if tracker_client is None and config.tracker_url:
        tracker_client = TrackerClient(config.tracker_url, token=config.tracker_token)
    if index is None:
        index = build_match_index(config)

    manager = TaskManager(
        store,
        works_client,
        tracker_client,
        index=index,
        max_harvests=config.max_harvests,
        queue_limit=config.queue_limit,
    )

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(
        title="affilmagnet",
        docs_url=None,
        redoc_url=None,
        openapi_url=None,
        lifespan=lifespan,
    )
    app.state.manager = manager
    app.state.store = store

    @app.middleware("http")
    async def add_schema_version(request: Request, call_next):
        response = await call_next(request)
        response.headers[SCHEMA_VERSION_HEADER] = SCHEMA_VERSION
        return response

    @app.exception_handler(StarletteHTTPException)
    async def http_error(request: Request, exc: StarletteHTTPException):
        return _error(exc.status_code, str(exc.detail))

    async def read_json(request: Request):
        try:
            return json.loads(await request.body() or b"null")
        except json.JSONDecodeError:
            return ...

    @app.post("/api/tasks", status_code=202)
    async def create_task(request: Request):
        body = await read_json(request)
        if body is ... or not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")
        value = body.get("value")
        if isinstance(value, list):
            value = tuple(value)
        try:
            query = HarvestQuery(
                mode=body.get("mode"),
                value=value,
                year_from=body.get("year_from"),
                year_to=body.get("year_to"),
            )
        except InvalidQueryError as exc:
            return _error(400, str(exc), field=exc.field)
        if manager.queued_harvests() >= manager.queue_limit:
            return _error(429, "harvest queue is full")
        task = manager.create_harvest(query)
        return JSONResponse({"task_id": task.task_id}, status_code=202)

    @app.get("/api/tasks/{task_id}")
    async def get_task(task_id: str):
        task = manager.get(task_id)
        if task is None:
            return _error(404, f"no task with id {task_id!r}")
        return JSONResponse(task.to_dict())

    @app.get("/api/tasks/{task_id}/groups")
    async def get_groups(task_id: str, request: Request):
        task = manager.get(task_id)
        if task is None:
            return _error(404, f"no task with id {task_id!r}")
        if task.kind != "harvest" or task.state != TASK_DONE:
            return _error(409, f"task {task_id} has no groups to page (state: {task.state})")
        params = request.query_params
        try:
            offset = int(params.get("offset", "0"))
            limit = int(params.get("limit", "50"))
        except ValueError:
            return _error(400, "offset and limit must be integers")
        if offset < 0 or limit < 0:
            return _error(400, "offset and limit must be non-negative")
        page = task.groups[offset : offset + limit]
        return JSONResponse(
            {
                "task_id": task_id,
                "total": len(task.groups),
                "offset": offset,
                "limit": limit,
                "groups": [g.to_dict() for g in page],
            }
        )

    @app.post("/api/tasks/{task_id}/decisions")
    async def post_decisions(task_id: str, request: Request):
        task = manager.get(task_id)
        if task is None:
            return _error(404, f"no task with id {task_id!r}")
        if task.kind != "harvest" or task.state != TASK_DONE:
            return _error(409, f"task {task_id} is not a finished harvest")
        body = await read_json(request)
        if body is ... or not isinstance(body, list):
            return _error(400, "request body must be a JSON array of decisions")
        by_group = {g.group_id: g for g in task.groups}
        decisions = []
        for position, entry in enumerate(body):
            if not isinstance(entry, dict):
                return _error(400, f"decision {position} is not an object")
            try:
                decisions.append(
                    CurationDecision(
                        group_id=str(entry.get("group_id") or ""),
                        added_ror_ids=tuple(entry.get("added_ror_ids") or ()),
                        removed_ror_ids=tuple(entry.get("removed_ror_ids") or ()),
                        contact_email=str(entry.get("contact_email") or ""),
                    )
                )
            except (ValueError, TypeError, RegistryError) as exc:
                return _error(400, f"decision {position} is malformed: {exc}")
        results = []
        for decision in decisions:
            group = by_group.get(decision.group_id)
            if group is None:
                results.append(
                    {"group_id": decision.group_id, "error": "unknown group for this task"}
                )
                continue
            try:
                created = apply_decision(store, group, decision)
                results.append({"group_id": decision.group_id, "request_id": created.request_id})
            except CurationError as exc:
                results.append({"group_id": decision.group_id, "error": str(exc)})
        return JSONResponse({"results": results})

    @app.post("/api/export", status_code=202)
    async def post_export(request: Request):
        if manager.tracker_client is None:
            return _error(400, "no tracker configured (set MAGNET_TRACKER_URL)")
        task = manager.create_export()
        return JSONResponse({"task_id": task.task_id}, status_code=202)

    @app.post("/api/sync", status_code=202)
    async def post_sync(request: Request):
        if manager.tracker_client is None:
            return _error(400, "no tracker configured (set MAGNET_TRACKER_URL)")
        task = manager.create_sync()
        return JSONResponse({"task_id": task.task_id}, status_code=202)

    @app.get("/api/stats")
    async def get_stats():
        return JSONResponse(compute_stats(store).to_dict())

    if config.webapp_dir and config.webapp_dir.is_dir():
        app.mount("/", StaticFiles(directory=config.webapp_dir, html=True), name="webapp")

    return app


def run_server(config: AppConfig, app: FastAPI | None = None) -> None:
    import uvicorn

    uvicorn.run(app or create_app(config), host=config.host, port=config.port, log_level="info")


__all__ = [
    "SCHEMA_VERSION",
    "SCHEMA_VERSION_HEADER",
    "TaskManager",
    "TaskRecord",
    "build_match_index",
    "create_app",
    "run_server",
]
