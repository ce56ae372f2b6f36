from __future__ import annotations

import json
from datetime import datetime, timezone

from affilmagnet.curation import CorrectionRequest
from affilmagnet.exporter import parse_csv
from affilmagnet.reporting import write_report


class ListStore:
    def __init__(self, requests=()):
        self._requests = {r.request_id: r for r in requests}

    def all_requests(self):
        return [self._requests[k] for k in sorted(self._requests)]


def request(n, status, opened=None, closed=None, issue=None):
    return CorrectionRequest(
        request_id=f"{n:016x}",
        group_id=f"{n:016x}",
        raw_string=f"Lab {n}",
        previous_ror_ids=(),
        new_ror_ids=("02vjkv261",),
        works_examples=(f"W{n}",),
        contact_domain="example.org",
        status=status,
        date_opened=opened,
        date_closed=closed,
        issue_number=issue,
    )


def test_empty_store_report(tmp_path):
    paths = write_report(ListStore(), tmp_path / "report")
    assert [p.name for p in paths] == [
        "requests.csv",
        "stats.json",
        "status_breakdown.png",
        "activity_timeline.png",
    ]
    for path in paths:
        assert path.exists()
        assert path.stat().st_size > 0


def test_report_with_dated_activity(tmp_path):
    t1 = datetime(2024, 1, 1, tzinfo=timezone.utc)
    t2 = datetime(2024, 2, 1, tzinfo=timezone.utc)
    store = ListStore(
        [
            request(1, "pending"),
            request(2, "open", opened=t1, issue=1),
            request(3, "closed", opened=t1, closed=t2, issue=2),
        ]
    )
    out = tmp_path / "report"
    paths = write_report(store, out)
    stats = json.loads((out / "stats.json").read_text())
    assert stats["total"] == 3
    assert stats["open_count"] == 1
    recovered = parse_csv((out / "requests.csv").read_text())
    assert len(recovered) == 3
    for png in paths:
        if png.suffix == ".png":
            assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
