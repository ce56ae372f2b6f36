"""Record contract fixtures from the real curation service.

Boots the actual FastAPI app with a tiny in-process works stub, runs a
harvest, submits a two-entry decision batch in the console's canonical
byte form, and snapshots every payload the UI depends on into
tests/fixtures/. Re-run after any wire-format change server-side; a
diff in the fixtures is the contract break showing itself.

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

REPO_ROOT = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from fastapi.testclient import TestClient  # noqa: E402

from affilmagnet.config import AppConfig  # noqa: E402
from affilmagnet.harvester import RateLimiter, WorksClient  # noqa: E402
from affilmagnet.matcher import build_index  # noqa: E402
from affilmagnet.registry import load_ror_dump  # noqa: E402
from affilmagnet.service import create_app  # noqa: E402
from affilmagnet.store import CurationStore  # noqa: E402

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
REGISTRY = REPO_ROOT / "tests" / "fixtures" / "ror_dump_200.jsonl"
CONTACT = "curator@library.edu"


def stub_works(registry) -> list[dict]:
    """Three works over two raw strings, one with a current assignment."""
    actives = sorted(
        (r for r in registry.records.values() if r.is_active),
        key=lambda r: r.ror_id,
    )
    name_a = actives[0].primary_name
    name_b = actives[1].primary_name
    current_b = actives[2].ror_id

    def work(n: int, raw: str, rors: list[str]) -> dict:
        return {
            "id": f"https://openalex.org/W{n:06d}",
            "doi": f"https://doi.org/10.5555/w{n}",
            "title": f"Work number {n}",
            "publication_year": 2021,
            "authorships": [
                {
                    "raw_affiliation_strings": [raw],
                    "institutions": [{"ror": f"https://ror.org/{r}"} for r in rors],
                }
            ],
        }

    return [
        work(1, name_a, []),
        work(2, name_a, []),
        work(3, name_b, [current_b]),
    ]


class StubHandler(BaseHTTPRequestHandler):
    works: list[dict] = []

    def log_message(self, *args) -> None:
        pass

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        if parsed.path != "/works":
            self.send_error(404)
            return
        params = parse_qs(parsed.query)
        per_page = int(params.get("per-page", ["100"])[0])
        cursor = params.get("cursor", ["*"])[0]
        offset = 0 if cursor == "*" else int(cursor)
        page = self.works[offset : offset + per_page]
        nxt = str(offset + per_page) if offset + per_page < len(self.works) else None
        body = json.dumps(
            {"meta": {"count": len(self.works), "next_cursor": nxt}, "results": page}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def canonical_entry(group_id: str, added: list[str], removed: list[str]) -> dict:
    # mirror of serializeDecisions in src/payload.ts: fixed key order,
    # sorted deduplicated lists
    return {
        "group_id": group_id,
        "added_ror_ids": sorted(set(added)),
        "removed_ror_ids": sorted(set(removed)),
        "contact_email": CONTACT,
    }


def to_wire(payload) -> str:
    # byte-compatible with JSON.stringify for this data
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


def save(name: str, text: str) -> None:
    path = FIXTURE_DIR / name
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path.relative_to(REPO_ROOT)} ({len(text)} bytes)")


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    registry = load_ror_dump(REGISTRY)
    StubHandler.works = stub_works(registry)
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    endpoint = f"http://127.0.0.1:{server.server_port}"

    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        config = AppConfig(endpoint=endpoint, store_path=Path(tmp))
        store = CurationStore(config.requests_path)
        works_client = WorksClient(
            endpoint, rate_limiter=RateLimiter(1000), backoff_base=0.01
        )
        app = create_app(
            config,
            store=store,
            works_client=works_client,
            index=build_index(registry),
        )
        client = TestClient(app)

        started = client.post(
            "/api/tasks", json={"mode": "by_affiliation_search", "value": "anything"}
        )
        started.raise_for_status()
        task_id = started.json()["task_id"]
        deadline = time.monotonic() + 30
        while time.monotonic() < deadline:
            task = client.get(f"/api/tasks/{task_id}")
            if task.json()["state"] in ("done", "failed"):
                break
            time.sleep(0.05)
        assert task.json()["state"] == "done", task.text
        save("task_done.json", task.text)

        groups_page = client.get(f"/api/tasks/{task_id}/groups?offset=0&limit=200")
        groups_page.raise_for_status()
        save("groups_page.json", groups_page.text)
        groups = groups_page.json()["groups"]
        assert len(groups) == 2, groups

        # entry 1: accept the top suggestion of the two-work group
        # entry 2: strike the current assignment of the other group
        accept = groups[0]
        strike = groups[1]
        assert accept["suggestions"], "expected a suggestion to accept"
        assert strike["current_ror_ids"], "expected a current ror to remove"
        batch = [
            canonical_entry(accept["group_id"], [accept["suggestions"][0]["ror_id"]], []),
            canonical_entry(strike["group_id"], [], [strike["current_ror_ids"][0]]),
        ]
        body = to_wire(batch)
        response = client.post(
            f"/api/tasks/{task_id}/decisions",
            content=body.encode("utf-8"),
            headers={"Content-Type": "application/json"},
        )
        response.raise_for_status()
        results = response.json()["results"]
        assert all("request_id" in r for r in results), results
        save("decision_batch.json", body)
        save("decision_results.json", response.text)

        stats = client.get("/api/stats")
        stats.raise_for_status()
        save("stats.json", stats.text)

        store.close()

    server.shutdown()


if __name__ == "__main__":
    main()
