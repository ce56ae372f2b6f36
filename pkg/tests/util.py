"""Shared helpers for building small registries in tests."""

from __future__ import annotations

import json

from affilmagnet.registry import CROCKFORD_ALPHABET, load_ror_dump, validate_ror_id


def mint_ror_id(payload: str) -> str:
    """A well-formed identifier for a 6-char base32 payload.

    Brute-forces the two decimal check digits; the validator is verified
    against published identifiers elsewhere, so leaning on it here only
    constructs fixtures, it does not prove anything.
    """
    assert len(payload) == 6 and all(c in CROCKFORD_ALPHABET for c in payload)
    for check in range(100):
        candidate = f"0{payload}{check:02d}"
        if validate_ror_id(candidate):
            return candidate
    raise AssertionError(f"no check digits found for {payload!r}")


def make_record(
    ror_id: str,
    name: str,
    *,
    status: str = "active",
    aliases: list[str] | None = None,
    acronyms: list[str] | None = None,
    labels: list[dict] | None = None,
    country: str = "FR",
) -> dict:
    return {
        "id": ror_id,
        "status": status,
        "name": name,
        "aliases": aliases or [],
        "acronyms": acronyms or [],
        "labels": labels or [],
        "country": {"country_code": country},
    }


def registry_from(tmp_path, records):
    path = tmp_path / "mini_dump.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records), encoding="utf-8")
    return load_ror_dump(path)
