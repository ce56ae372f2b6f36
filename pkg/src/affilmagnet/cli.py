"""Operator command line.

State lives in the directory named by MAGNET_STORE_PATH: a validated
copy of the registry dump, the most recent harvest result, and the
request store. Every subcommand exits 0 on success, 1 on operational
failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys

from .config import AppConfig, ConfigError, load_config
from .curation import (
    AffiliationGroup,
    CurationDecision,
    CurationError,
    apply_decision,
    group_works,
    suggest_matches,
)
from .exporter import (
    ExportError,
    TrackerClient,
    compute_stats,
    export_csv,
    export_issues,
    sync_statuses,
)
from .harvester import (
    MODE_BY_AFFILIATION,
    MODE_BY_DOI_LIST,
    MODE_BY_ROR,
    HarvestError,
    HarvestQuery,
    WorksClient,
    deduplicate_works,
)
from .matcher import EmptyRegistryError, build_index, match_affiliation
from .registry import RegistryError, load_ror_dump
from .store import CurationStore, StoreError


def _open_store(config: AppConfig) -> CurationStore:
    return CurationStore(config.requests_path)


def _load_registry(config: AppConfig):
    if not config.registry_path.exists():
        raise RegistryError(
            f"no registry loaded at {config.registry_path}; run 'load-ror <dump>' first"
        )
    return load_ror_dump(config.registry_path)


def _tracker(config: AppConfig) -> TrackerClient:
    if not config.tracker_url:
        raise ExportError("no tracker configured; set MAGNET_TRACKER_URL")
    return TrackerClient(config.tracker_url, token=config.tracker_token)


def cmd_load_ror(args, config: AppConfig) -> int:
    registry = load_ror_dump(args.path)
    active = sum(1 for r in registry.records.values() if r.is_active)
    config.store_path.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(args.path, config.registry_path)
    print(f"loaded {registry.record_count} records ({active} active) -> {config.registry_path}")
    return 0


def _build_query(args) -> HarvestQuery:
    if args.ror:
        return HarvestQuery(MODE_BY_ROR, args.ror, args.from_year, args.to_year)
    if args.affiliation:
        return HarvestQuery(MODE_BY_AFFILIATION, args.affiliation, args.from_year, args.to_year)
    with open(args.doi_file, encoding="utf-8") as handle:
        dois = tuple(line.strip() for line in handle if line.strip())
    return HarvestQuery(MODE_BY_DOI_LIST, dois, args.from_year, args.to_year)


def cmd_harvest(args, config: AppConfig) -> int:
    query = _build_query(args)
    endpoint = args.endpoint or config.endpoint
    client = WorksClient(endpoint, mailto=config.mailto, harvest_cap=config.harvest_cap)
    works, stats = client.fetch_all_works(query)
    works = deduplicate_works(works)
    groups = group_works(works)
    if config.registry_path.exists():
        try:
            index = build_index(load_ror_dump(config.registry_path))
            groups = [suggest_matches(g, index) for g in groups]
        except EmptyRegistryError:
            pass
    config.store_path.mkdir(parents=True, exist_ok=True)
    payload = {
        "query": {
            "mode": query.mode,
            "value": list(query.value) if isinstance(query.value, tuple) else query.value,
            "year_from": query.year_from,
            "year_to": query.year_to,
        },
        "works": len(works),
        "groups": [g.to_dict() for g in groups],
    }
    config.harvest_path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    print(
        f"harvested {len(works)} works over {stats.pages} pages "
        f"({stats.requests_made} requests, {stats.retries} retries); "
        f"{len(groups)} affiliation groups -> {config.harvest_path}"
    )
    return 0


def cmd_match(args, config: AppConfig) -> int:
    registry = _load_registry(config)
    index = build_index(registry)
    candidates = match_affiliation(index, args.text)
    if args.json:
        print(json.dumps([c.to_dict() for c in candidates], indent=2))
        return 0
    if not candidates:
        print("no candidates")
        return 0
    for rank, cand in enumerate(candidates, start=1):
        record = registry.records.get(cand.ror_id)
        name = record.primary_name if record else "?"
        flags = []
        if cand.evidence.exact_name:
            flags.append("exact")
        if cand.evidence.acronym_matched:
            flags.append("acronym")
        if not cand.evidence.country_consistent:
            flags.append("country-mismatch")
        marker = f" [{', '.join(flags)}]" if flags else ""
        print(f"{rank:2d}. {cand.ror_id}  {cand.score:8.4f}  {name}{marker}")
    return 0


def _load_harvest_groups(config: AppConfig) -> list[AffiliationGroup]:
    if not config.harvest_path.exists():
        raise CurationError(f"no harvest result at {config.harvest_path}; run 'harvest' first")
    payload = json.loads(config.harvest_path.read_text(encoding="utf-8"))
    return [AffiliationGroup.from_dict(d) for d in payload.get("groups", [])]


def cmd_decide(args, config: AppConfig) -> int:
    groups = _load_harvest_groups(config)
    store = _open_store(config)
    created = 0
    if args.group:
        by_id = {g.group_id: g for g in groups}
        group = by_id.get(args.group)
        if group is None:
            raise CurationError(f"group {args.group!r} not in the last harvest")
        decision = CurationDecision(
            group_id=group.group_id,
            added_ror_ids=tuple(args.add or ()),
            removed_ror_ids=tuple(args.remove or ()),
            contact_email=args.contact,
        )
        request = apply_decision(store, group, decision)
        print(f"recorded {request.request_id} for group {group.group_id}")
        created = 1
    else:
        for group in groups:
            if created >= args.auto_accept:
                break
            top = next(
                (c for c in group.suggestions if c.ror_id not in group.current_ror_ids), None
            )
            if top is None:
                continue
            decision = CurationDecision(
                group_id=group.group_id,
                added_ror_ids=(top.ror_id,),
                removed_ror_ids=(),
                contact_email=args.contact,
            )
            try:
                request = apply_decision(store, group, decision)
            except CurationError:
                continue
            print(f"accepted {group.group_id} -> {request.request_id} (+{top.ror_id})")
            created += 1
        if created < args.auto_accept:
            print(
                f"only {created} of {args.auto_accept} groups had usable suggestions",
                file=sys.stderr,
            )
    print(f"{created} decision(s) recorded; store now holds {store.count()} requests")
    return 0


def cmd_export(args, config: AppConfig) -> int:
    store = _open_store(config)
    if args.format == "csv":
        out = args.out or "corrections.csv"
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(export_csv(store))
        print(f"wrote {store.count()} requests -> {out}")
        return 0
    tracker = _tracker(config)
    report = export_issues(store, tracker)
    print(
        f"export: attempted={report.attempted} succeeded={report.succeeded} "
        f"failed={len(report.failed)} backlog={report.remaining_backlog}"
    )
    for request_id, reason in report.failed:
        print(f"  failed {request_id}: {reason}", file=sys.stderr)
    if report.attempted > 0 and report.succeeded == 0:
        return 1
    return 0


def cmd_sync(args, config: AppConfig) -> int:
    store = _open_store(config)
    tracker = _tracker(config)
    updated = sync_statuses(store, tracker)
    print(f"sync: {updated} request(s) moved to closed")
    return 0


def cmd_stats(args, config: AppConfig) -> int:
    store = _open_store(config)
    stats = compute_stats(store)
    if args.json:
        print(json.dumps(stats.to_dict(), indent=2))
        return 0
    print(f"total:    {stats.total}")
    print(f"pending:  {stats.pending_count}")
    print(f"exported: {stats.exported_count}")
    print(f"open:     {stats.open_count}")
    print(f"closed:   {stats.closed_count}")
    if stats.top_domains:
        print("top contact domains:")
        for domain, count in stats.top_domains[:10]:
            print(f"  {domain}: {count}")
    return 0


def cmd_report(args, config: AppConfig) -> int:
    # imported here so the other subcommands never pay the matplotlib start-up
    from .reporting import write_report

    store = _open_store(config)
    paths = write_report(store, args.out)
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_serve(args, config: AppConfig) -> int:
    from .service import create_app, run_server

    if args.port:
        config.port = args.port
    run_server(config, create_app(config))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affilmagnet",
        description="Curate raw affiliation strings against the ROR registry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load-ror", help="validate a registry dump and keep a local copy")
    p.add_argument("path", help="registry dump file (JSON array or JSONL)")
    p.set_defaults(func=cmd_load_ror)

    p = sub.add_parser("harvest", help="fetch works and group their raw affiliations")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--ror", help="harvest works affiliated with this ROR id")
    source.add_argument("--affiliation", help="harvest works whose raw strings match this search")
    source.add_argument("--doi-file", help="file with one DOI per line")
    p.add_argument("--from-year", type=int, default=None)
    p.add_argument("--to-year", type=int, default=None)
    p.add_argument("--endpoint", help="works API base URL (default: MAGNET_ENDPOINT)")
    p.set_defaults(func=cmd_harvest)

    p = sub.add_parser("match", help="rank registry candidates for one raw string")
    p.add_argument("text")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("decide", help="record curation decisions on the last harvest")
    p.add_argument("--contact", required=True, help="curator email (only the domain is stored)")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument(
        "--auto-accept",
        type=int,
        metavar="N",
        help="accept the top suggestion for the first N groups that have one",
    )
    mode.add_argument("--group", help="decide one group by id")
    p.add_argument("--add", action="append", help="ROR id to add (with --group)")
    p.add_argument("--remove", action="append", help="ROR id to remove (with --group)")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("export", help="publish requests as tracker issues or CSV")
    p.add_argument("--format", choices=("issues", "csv"), default="issues")
    p.add_argument("--out", help="output path for --format csv")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("sync", help="pull issue states and close finished requests")
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("stats", help="print store counts")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="render figures and CSV into a directory")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config()
        return args.func(args, config)
    except (
        RegistryError,
        HarvestError,
        CurationError,
        ExportError,
        StoreError,
        ConfigError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
