"""ROR registry loading, identifier validation, and organization text normalization.

The registry dump is a file of JSON record objects, either one object per
line or a single JSON array (auto-detected). Required fields per record:

    id                     URL form ("https://ror.org/0...") or bare 9-char id
    name                   primary display name
    aliases                list of strings
    acronyms               list of strings
    labels                 list of {"label": str, "iso639": str (optional)}
    country.country_code   ISO 3166-1 alpha-2
    status                 "active" | "inactive" | "withdrawn"

Identifiers are stored in the 9-character short form; the URL prefix is
stripped on ingest and re-added only when exporting.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

ROR_URL_PREFIX = "https://ror.org/"

# Crockford base32: digits plus lowercase letters without i, l, o, u.
CROCKFORD_ALPHABET = "0123456789abcdefghjkmnpqrstvwxyz"
_CROCKFORD_VALUE = {c: i for i, c in enumerate(CROCKFORD_ALPHABET)}
_DECIMAL = set("0123456789")

VALID_STATUSES = ("active", "inactive", "withdrawn")


class RegistryError(Exception):
    """Base class for registry loading and lookup failures."""


class MalformedRecordError(RegistryError):
    def __init__(self, ordinal: int, field_name: str, detail: str):
        self.ordinal = ordinal
        self.field_name = field_name
        super().__init__(f"record {ordinal}: field '{field_name}' {detail}")


class DuplicateRorIdError(RegistryError):
    def __init__(self, ror_id: str, ordinal: int):
        self.ror_id = ror_id
        super().__init__(f"record {ordinal}: duplicate ror_id '{ror_id}'")


class InvalidRorIdError(RegistryError):
    def __init__(self, value: str):
        super().__init__(f"not a valid ROR identifier: {value!r}")


@dataclass(frozen=True)
class RorRecord:
    ror_id: str
    primary_name: str
    aliases: tuple[str, ...]
    acronyms: tuple[str, ...]
    labels: tuple[tuple[str, str], ...]  # (language code, text)
    country_code: str
    status: str

    @property
    def is_active(self) -> bool:
        return self.status == "active"


@dataclass
class RegistryIndex:
    """Immutable after load; safe for concurrent readers."""

    records: dict[str, RorRecord] = field(default_factory=dict)
    # ror_id -> normalized name forms, in order: primary, aliases, labels.
    name_forms: dict[str, list[str]] = field(default_factory=dict)
    # normalized acronym -> ror_ids carrying it
    acronym_map: dict[str, set[str]] = field(default_factory=dict)
    record_count: int = 0


def validate_ror_id(identifier: object) -> bool:
    """True iff ``identifier`` is a well-formed ROR id with a valid checksum.

    Shape: 9 chars, leading '0', then 6 Crockford base32 chars, then 2
    decimal check digits. The check digits satisfy ISO 7064 MOD 97-10 over
    the base32-decoded value of the first 7 characters:
    ``98 - ((value * 100) mod 97)``, zero-padded to 2 digits.
    """
    if not isinstance(identifier, str) or len(identifier) != 9:
        return False
    if identifier[0] != "0":
        return False
    body, check = identifier[:7], identifier[7:]
    if check[0] not in _DECIMAL or check[1] not in _DECIMAL:
        return False
    value = 0
    for ch in body:
        if ch not in _CROCKFORD_VALUE:
            return False
        value = value * 32 + _CROCKFORD_VALUE[ch]
    return int(check) == 98 - (value * 100) % 97


_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def normalize_text(raw: str) -> str:
    """Canonical lowercase ASCII form of an organization string.

    Compatibility-decomposes, drops combining marks, lowercases, replaces
    every character outside [a-z0-9] with a space, then collapses and trims
    whitespace. Idempotent; output contains only [a-z0-9 ] with single
    spaces and no leading or trailing space.
    """
    decomposed = unicodedata.normalize("NFKD", raw)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(_NON_ALNUM.sub(" ", stripped.lower()).split())


def strip_ror_prefix(value: str) -> str:
    """Reduce a ROR id to its 9-character short form."""
    value = value.strip()
    for prefix in (ROR_URL_PREFIX, "http://ror.org/", "ror.org/"):
        if value.startswith(prefix):
            return value[len(prefix):]
    return value


def _require(obj: dict, key: str, ordinal: int):
    if key not in obj:
        raise MalformedRecordError(ordinal, key, "is missing")
    return obj[key]


def _string_list(value, ordinal: int, field_name: str) -> tuple[str, ...]:
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise MalformedRecordError(ordinal, field_name, "must be a list of strings")
    return tuple(value)


_COUNTRY_CODE = re.compile(r"^[A-Z]{2}$")


def _parse_record(obj, ordinal: int) -> RorRecord:
    if not isinstance(obj, dict):
        raise MalformedRecordError(ordinal, "<record>", "is not an object")
    ror_id = strip_ror_prefix(str(_require(obj, "id", ordinal)))
    if not validate_ror_id(ror_id):
        raise MalformedRecordError(ordinal, "id", f"fails validation: {ror_id!r}")
    status = _require(obj, "status", ordinal)
    if status not in VALID_STATUSES:
        raise MalformedRecordError(ordinal, "status", f"unknown value {status!r}")
    name = _require(obj, "name", ordinal)
    if not isinstance(name, str):
        raise MalformedRecordError(ordinal, "name", "must be a string")
    if status == "active" and not name.strip():
        raise MalformedRecordError(ordinal, "name", "empty for an active record")
    aliases = _string_list(_require(obj, "aliases", ordinal), ordinal, "aliases")
    acronyms = _string_list(_require(obj, "acronyms", ordinal), ordinal, "acronyms")
    raw_labels = _require(obj, "labels", ordinal)
    if not isinstance(raw_labels, list):
        raise MalformedRecordError(ordinal, "labels", "must be a list")
    labels = []
    for entry in raw_labels:
        if not isinstance(entry, dict) or not isinstance(entry.get("label"), str):
            raise MalformedRecordError(ordinal, "labels", "entries need a string 'label'")
        labels.append((str(entry.get("iso639", "") or ""), entry["label"]))
    country = _require(obj, "country", ordinal)
    if not isinstance(country, dict) or "country_code" not in country:
        raise MalformedRecordError(ordinal, "country", "needs 'country_code'")
    code = country["country_code"]
    if not isinstance(code, str) or not _COUNTRY_CODE.match(code):
        raise MalformedRecordError(
            ordinal, "country.country_code", "must be 2 uppercase ASCII letters"
        )
    return RorRecord(
        ror_id=ror_id,
        primary_name=name,
        aliases=aliases,
        acronyms=acronyms,
        labels=tuple(labels),
        country_code=code,
        status=status,
    )


def _iter_dump_objects(text: str):
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(1, "<file>", f"invalid JSON: {exc}") from exc
        if not isinstance(data, list):
            raise MalformedRecordError(1, "<file>", "top-level JSON is not an array")
        yield from enumerate(data, start=1)
        return
    ordinal = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        ordinal += 1
        try:
            yield ordinal, json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(ordinal, "<record>", f"invalid JSON: {exc}") from exc


def load_ror_dump(path: str | Path) -> RegistryIndex:
    """Load a registry dump file into an immutable in-memory index.

    Raises FileNotFoundError, MalformedRecordError (with the failing record
    ordinal and field), or DuplicateRorIdError (the whole load is rejected).
    Withdrawn records are kept, flagged by their status.
    """
    text = Path(path).read_text(encoding="utf-8")
    index = RegistryIndex()
    for ordinal, obj in _iter_dump_objects(text):
        record = _parse_record(obj, ordinal)
        if record.ror_id in index.records:
            raise DuplicateRorIdError(record.ror_id, ordinal)
        index.records[record.ror_id] = record
        forms = [normalize_text(record.primary_name)]
        forms.extend(normalize_text(a) for a in record.aliases)
        forms.extend(normalize_text(text_) for _lang, text_ in record.labels)
        index.name_forms[record.ror_id] = forms
        for acronym in record.acronyms:
            key = normalize_text(acronym)
            if key:
                index.acronym_map.setdefault(key, set()).add(record.ror_id)
    index.record_count = len(index.records)
    return index


def lookup_record(registry: RegistryIndex, ror_id: str) -> RorRecord | None:
    """Return the record for ``ror_id`` or None when absent.

    Raises InvalidRorIdError before lookup when the id is malformed.
    Never mutates the registry.
    """
    if not validate_ror_id(ror_id):
        raise InvalidRorIdError(ror_id)
    return registry.records.get(ror_id)
