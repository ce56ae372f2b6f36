"""Static monitoring reports: figures rendered next to the CSV dump.

The report directory is self-contained: the full request table as CSV,
the stats as JSON, and two PNG charts (status breakdown, cumulative
opened/closed timeline). Matplotlib runs on the Agg backend so this
works headless.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .curation import ALL_STATUSES
from .exporter import compute_stats, export_csv

STATUS_COLORS = {
    "pending": "#9e9e9e",
    "exported": "#64b5f6",
    "open": "#ffb74d",
    "closed": "#81c784",
}


def _status_figure(stats, path: Path) -> None:
    counts = {
        "pending": stats.pending_count,
        "exported": stats.exported_count,
        "open": stats.open_count,
        "closed": stats.closed_count,
    }
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = list(ALL_STATUSES)
    values = [counts[s] for s in labels]
    bars = ax.bar(labels, values, color=[STATUS_COLORS[s] for s in labels])
    for bar, value in zip(bars, values):
        ax.annotate(
            str(value),
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
        )
    ax.set_ylabel("requests")
    ax.set_title("Correction requests by status")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _timeline_figure(requests, path: Path) -> None:
    opened = sorted(r.date_opened for r in requests if r.date_opened is not None)
    closed = sorted(r.date_closed for r in requests if r.date_closed is not None)
    fig, ax = plt.subplots(figsize=(7, 4))
    if opened:
        ax.step(opened, range(1, len(opened) + 1), where="post", label="opened")
    if closed:
        ax.step(closed, range(1, len(closed) + 1), where="post", label="closed")
    if opened or closed:
        ax.legend()
        ax.set_ylabel("cumulative requests")
        fig.autofmt_xdate()
    else:
        ax.text(0.5, 0.5, "no dated activity yet", ha="center", va="center", transform=ax.transAxes)
        ax.set_xticks([])
        ax.set_yticks([])
    ax.set_title("Correction request activity")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(store, out_dir: str | Path) -> list[Path]:
    """Render the report bundle into ``out_dir``; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = compute_stats(store)
    requests = store.all_requests()

    csv_path = out / "requests.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(export_csv(store))

    stats_path = out / "stats.json"
    stats_path.write_text(json.dumps(stats.to_dict(), indent=2) + "\n", encoding="utf-8")

    status_path = out / "status_breakdown.png"
    _status_figure(stats, status_path)

    timeline_path = out / "activity_timeline.png"
    _timeline_figure(requests, timeline_path)

    return [csv_path, stats_path, status_path, timeline_path]


__all__ = ["write_report"]
