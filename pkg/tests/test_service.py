from __future__ import annotations

import time
from types import SimpleNamespace

import pytest
from fastapi.testclient import TestClient

from affilmagnet.config import AppConfig, ConfigError, load_config
from affilmagnet.exporter import TrackerClient
from affilmagnet.harvester import RateLimiter, WorksClient
from affilmagnet.service import SCHEMA_VERSION_HEADER, create_app
from affilmagnet.store import CurationStore

from .doubles import make_work
from .util import mint_ror_id

ROR_NEW = mint_ror_id("qqqqqq")
ROR_OLD = mint_ror_id("rrrrrr")


def build_service(tmp_path, works_server, tracker_server, index=None, **config_kw):
    config = AppConfig(
        endpoint=works_server.base_url,
        tracker_url=tracker_server.base_url if tracker_server else None,
        store_path=tmp_path / "data",
        **config_kw,
    )
    store = CurationStore(config.requests_path)
    works_client = WorksClient(
        works_server.base_url, rate_limiter=RateLimiter(10_000), backoff_base=0.001
    )
    tracker_client = (
        TrackerClient(tracker_server.base_url, backoff_base=0.001, sleep=lambda s: None)
        if tracker_server
        else None
    )
    app = create_app(
        config,
        store=store,
        works_client=works_client,
        tracker_client=tracker_client,
        index=index,
    )
    return app, store


@pytest.fixture
def svc(tmp_path, works_server, tracker_server):
    app, store = build_service(tmp_path, works_server, tracker_server)
    with TestClient(app) as client:
        yield SimpleNamespace(
            client=client, store=store, works=works_server, tracker=tracker_server
        )
    store.close()


def wait_task(client, task_id, timeout=15.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        response = client.get(f"/api/tasks/{task_id}")
        assert response.status_code == 200
        data = response.json()
        if data["state"] in ("done", "failed"):
            return data
        time.sleep(0.02)
    raise AssertionError(f"task {task_id} still {data['state']} after {timeout}s")


def harvest(svc, works, body=None) -> dict:
    svc.works.works = works
    response = svc.client.post(
        "/api/tasks", json=body or {"mode": "by_affiliation_search", "value": "lab"}
    )
    assert response.status_code == 202, response.text
    task_id = response.json()["task_id"]
    task = wait_task(svc.client, task_id)
    assert task["state"] == "done", task
    return task


class TestTaskLifecycle:
    def test_harvest_task_completes(self, svc):
        works = [make_work(n, affiliations=[("Lab Alpha", [])]) for n in range(5)]
        task = harvest(svc, works)
        assert task["result"] == {"works": 5, "groups": 1}
        assert task["result_ref"] == f"/api/tasks/{task['task_id']}/groups"
        assert task["progress"] == {"done": 1, "total": 1}

    def test_progress_counts_pages(self, svc):
        works = [make_work(n) for n in range(250)]
        task = harvest(svc, works)
        assert task["progress"] == {"done": 3, "total": 3}

    def test_failed_harvest_surfaces_error(self, svc):
        svc.works.works = [make_work(1)]
        svc.works.fail_plan = {1: 400}
        response = svc.client.post(
            "/api/tasks", json={"mode": "by_affiliation_search", "value": "lab"}
        )
        task = wait_task(svc.client, response.json()["task_id"])
        assert task["state"] == "failed"
        assert "400" in task["error"]

    def test_unknown_task_404(self, svc):
        response = svc.client.get("/api/tasks/doesnotexist")
        assert response.status_code == 404
        assert "error" in response.json()

    def test_invalid_mode_400_with_field(self, svc):
        response = svc.client.post("/api/tasks", json={"mode": "nope", "value": "x"})
        assert response.status_code == 400
        body = response.json()
        assert body["field"] == "mode"
        assert "error" in body

    def test_invalid_year_order_400(self, svc):
        response = svc.client.post(
            "/api/tasks",
            json={
                "mode": "by_affiliation_search",
                "value": "x",
                "year_from": 2022,
                "year_to": 2020,
            },
        )
        assert response.status_code == 400
        assert response.json()["field"] == "year_from"

    def test_non_json_body_400(self, svc):
        response = svc.client.post(
            "/api/tasks", content=b"{broken", headers={"Content-Type": "application/json"}
        )
        assert response.status_code == 400

    def test_non_object_body_400(self, svc):
        response = svc.client.post("/api/tasks", json=[1, 2])
        assert response.status_code == 400

    def test_doi_list_accepted_as_json_array(self, svc):
        svc.works.works = [make_work(1)]
        response = svc.client.post(
            "/api/tasks",
            json={"mode": "by_doi_list", "value": ["10.5555/w1", "10.5555/w2"]},
        )
        assert response.status_code == 202
        task = wait_task(svc.client, response.json()["task_id"])
        assert task["state"] == "done"
        params = svc.works.requests[0]["params"]
        assert params["filter"] == "doi:10.5555/w1|10.5555/w2"

    def test_queue_limit_enforced(self, tmp_path, works_server, tracker_server):
        app, store = build_service(tmp_path, works_server, tracker_server, queue_limit=0)
        with TestClient(app) as client:
            response = client.post(
                "/api/tasks", json={"mode": "by_affiliation_search", "value": "x"}
            )
            assert response.status_code == 429
        store.close()


class TestGroupsEndpoint:
    def seeded(self, svc):
        works = [
            make_work(1, affiliations=[("Lab Alpha", [ROR_OLD])]),
            make_work(2, affiliations=[("Lab Alpha", []), ("Lab Beta", [])]),
            make_work(3, affiliations=[("Lab Gamma", [])]),
        ]
        return harvest(svc, works)

    def test_paging(self, svc):
        task = self.seeded(svc)
        url = f"/api/tasks/{task['task_id']}/groups"
        full = svc.client.get(url, params={"offset": 0, "limit": 50}).json()
        assert full["total"] == 3
        assert [g["raw_string"] for g in full["groups"]] == ["Lab Alpha", "Lab Beta", "Lab Gamma"]
        assert full["groups"][0]["work_count"] == 2
        assert full["groups"][0]["current_ror_ids"] == [ROR_OLD]
        page = svc.client.get(url, params={"offset": 0, "limit": 2}).json()
        assert [g["raw_string"] for g in page["groups"]] == ["Lab Alpha", "Lab Beta"]
        beyond = svc.client.get(url, params={"offset": 10, "limit": 5}).json()
        assert beyond["groups"] == []

    def test_identical_calls_byte_identical(self, svc):
        task = self.seeded(svc)
        url = f"/api/tasks/{task['task_id']}/groups"
        one = svc.client.get(url, params={"offset": 0, "limit": 2})
        two = svc.client.get(url, params={"offset": 0, "limit": 2})
        assert one.content == two.content

    def test_unfinished_task_409(self, svc):
        svc.works.works = [make_work(1)]
        svc.works.fail_plan = {1: 400}
        response = svc.client.post(
            "/api/tasks", json={"mode": "by_affiliation_search", "value": "lab"}
        )
        task = wait_task(svc.client, response.json()["task_id"])
        groups = svc.client.get(f"/api/tasks/{task['task_id']}/groups")
        assert groups.status_code == 409

    def test_bad_paging_params_400(self, svc):
        task = self.seeded(svc)
        url = f"/api/tasks/{task['task_id']}/groups"
        assert svc.client.get(url, params={"offset": "x"}).status_code == 400
        assert svc.client.get(url, params={"offset": -1}).status_code == 400


class TestDecisionsEndpoint:
    def seeded(self, svc):
        works = [
            make_work(1, affiliations=[("Lab Alpha", [ROR_OLD])]),
            make_work(2, affiliations=[("Lab Beta", [])]),
        ]
        task = harvest(svc, works)
        groups = svc.client.get(f"/api/tasks/{task['task_id']}/groups").json()["groups"]
        return task, {g["raw_string"]: g for g in groups}

    def test_batch_with_inline_errors(self, svc):
        task, groups = self.seeded(svc)
        batch = [
            {
                "group_id": groups["Lab Alpha"]["group_id"],
                "added_ror_ids": [ROR_NEW],
                "removed_ror_ids": [ROR_OLD],
                "contact_email": "alice@uni.org",
            },
            {
                "group_id": groups["Lab Beta"]["group_id"],
                "added_ror_ids": [ROR_NEW],
                "removed_ror_ids": [],
                "contact_email": "alice@uni.org",
            },
            {
                "group_id": groups["Lab Beta"]["group_id"],
                "added_ror_ids": [],
                "removed_ror_ids": [ROR_NEW],  # not currently assigned: a no-op
                "contact_email": "alice@uni.org",
            },
        ]
        response = svc.client.post(f"/api/tasks/{task['task_id']}/decisions", json=batch)
        assert response.status_code == 200
        results = response.json()["results"]
        assert "request_id" in results[0]
        assert "request_id" in results[1]
        assert "error" in results[2]
        assert svc.store.count() == 2

    def test_replay_returns_same_ids(self, svc):
        task, groups = self.seeded(svc)
        batch = [
            {
                "group_id": groups["Lab Alpha"]["group_id"],
                "added_ror_ids": [ROR_NEW],
                "removed_ror_ids": [],
                "contact_email": "alice@uni.org",
            }
        ]
        url = f"/api/tasks/{task['task_id']}/decisions"
        first = svc.client.post(url, json=batch).json()["results"]
        second = svc.client.post(url, json=batch).json()["results"]
        assert first == second
        assert svc.store.count() == 1

    def test_unknown_group_inline_error(self, svc):
        task, _groups = self.seeded(svc)
        batch = [
            {
                "group_id": "f" * 16,
                "added_ror_ids": [ROR_NEW],
                "removed_ror_ids": [],
                "contact_email": "a@b.org",
            }
        ]
        results = svc.client.post(
            f"/api/tasks/{task['task_id']}/decisions", json=batch
        ).json()["results"]
        assert results[0]["error"]

    def test_malformed_decision_rejects_whole_request(self, svc):
        task, groups = self.seeded(svc)
        batch = [
            {
                "group_id": groups["Lab Alpha"]["group_id"],
                "added_ror_ids": ["not-a-ror"],
                "removed_ror_ids": [],
                "contact_email": "a@b.org",
            }
        ]
        response = svc.client.post(f"/api/tasks/{task['task_id']}/decisions", json=batch)
        assert response.status_code == 400
        assert svc.store.count() == 0

    def test_body_must_be_array(self, svc):
        task, _ = self.seeded(svc)
        response = svc.client.post(f"/api/tasks/{task['task_id']}/decisions", json={})
        assert response.status_code == 400

    def test_empty_batch_ok(self, svc):
        task, _ = self.seeded(svc)
        response = svc.client.post(f"/api/tasks/{task['task_id']}/decisions", json=[])
        assert response.status_code == 200
        assert response.json() == {"results": []}


class TestExportSyncStats:
    def decided(self, svc):
        task, groups = TestDecisionsEndpoint().seeded(svc)
        batch = [
            {
                "group_id": groups[name]["group_id"],
                "added_ror_ids": [ROR_NEW],
                "removed_ror_ids": [],
                "contact_email": "alice@uni.org",
            }
            for name in ("Lab Alpha", "Lab Beta")
        ]
        svc.client.post(f"/api/tasks/{task['task_id']}/decisions", json=batch)

    def test_export_then_sync(self, svc):
        self.decided(svc)
        response = svc.client.post("/api/export")
        assert response.status_code == 202
        task = wait_task(svc.client, response.json()["task_id"])
        assert task["state"] == "done"
        assert task["result"]["attempted"] == 2
        assert task["result"]["succeeded"] == 2
        assert len(svc.tracker.issues) == 2

        svc.tracker.close_issue(1, "2030-01-01T00:00:00Z")
        response = svc.client.post("/api/sync")
        task = wait_task(svc.client, response.json()["task_id"])
        assert task["result"] == {"updated": 1}

        stats = svc.client.get("/api/stats").json()
        assert stats["total"] == 2
        assert stats["open_count"] == 1
        assert stats["closed_count"] == 1

    def test_stats_empty_store(self, svc):
        stats = svc.client.get("/api/stats").json()
        assert stats["total"] == 0
        assert stats["top_domains"] == []

    def test_export_without_tracker_400(self, tmp_path, works_server):
        app, store = build_service(tmp_path, works_server, None)
        with TestClient(app) as client:
            assert client.post("/api/export").status_code == 400
            assert client.post("/api/sync").status_code == 400
        store.close()


class TestSchemaVersionHeader:
    def test_on_success_and_errors(self, svc):
        ok = svc.client.get("/api/stats")
        assert ok.headers[SCHEMA_VERSION_HEADER] == "1"
        missing = svc.client.get("/api/tasks/nope")
        assert missing.headers[SCHEMA_VERSION_HEADER] == "1"
        bad = svc.client.post("/api/tasks", json={"mode": "nope", "value": "x"})
        assert bad.headers[SCHEMA_VERSION_HEADER] == "1"


class TestStaticWebapp:
    def test_index_served_when_configured(self, tmp_path, works_server, tracker_server):
        webroot = tmp_path / "web"
        webroot.mkdir()
        (webroot / "index.html").write_text("<h1>console</h1>")
        app, store = build_service(
            tmp_path, works_server, tracker_server, webapp_dir=webroot
        )
        with TestClient(app) as client:
            page = client.get("/")
            assert page.status_code == 200
            assert "console" in page.text
            # API routes still win over the static mount
            assert client.get("/api/stats").status_code == 200
        store.close()


class TestConfig:
    def test_defaults(self):
        config = load_config(env={})
        assert config.endpoint == "https://api.openalex.org"
        assert config.port == 8840
        assert config.store_path.name == "magnet-data"
        assert config.tracker_url is None

    def test_env_overrides(self):
        config = load_config(
            env={
                "MAGNET_ENDPOINT": "http://works.test",
                "MAGNET_TRACKER_URL": "http://tracker.test",
                "MAGNET_TRACKER_TOKEN": "tok",
                "MAGNET_STORE_PATH": "/tmp/magnet",
                "MAGNET_PORT": "9000",
                "MAGNET_HARVEST_CAP": "500",
                "MAGNET_MAX_HARVESTS": "4",
                "MAGNET_QUEUE_LIMIT": "7",
                "MAGNET_MAILTO": "ops@x.org",
            }
        )
        assert config.endpoint == "http://works.test"
        assert config.tracker_url == "http://tracker.test"
        assert config.tracker_token == "tok"
        assert str(config.store_path) == "/tmp/magnet"
        assert config.port == 9000
        assert config.harvest_cap == 500
        assert config.max_harvests == 4
        assert config.queue_limit == 7
        assert config.mailto == "ops@x.org"
        assert config.registry_path == config.store_path / "registry.jsonl"
        assert config.requests_path == config.store_path / "requests"

    def test_bad_int_rejected(self):
        with pytest.raises(ConfigError):
            load_config(env={"MAGNET_PORT": "not-a-port"})
