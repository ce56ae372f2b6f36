"""Client for pulling works from an OpenAlex-style API.

Supports three query modes (institution ROR, affiliation-string search,
explicit DOI list), paginates with opaque cursors, retries transient
failures with exponential backoff, and keeps request pacing under a
configurable ceiling so a shared endpoint is never hammered. Work-level
parsing is tolerant: missing or null fields degrade to empty values.
Page-level structure is not: a page without meta/results is an error.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import requests

from .registry import strip_ror_prefix, validate_ror_id

MODE_BY_ROR = "by_ror"
MODE_BY_AFFILIATION = "by_affiliation_search"
MODE_BY_DOI_LIST = "by_doi_list"
ALL_MODES = (MODE_BY_ROR, MODE_BY_AFFILIATION, MODE_BY_DOI_LIST)

DEFAULT_PER_PAGE = 100
DEFAULT_HARVEST_CAP = 100_000
DEFAULT_MAX_ATTEMPTS = 5
DEFAULT_BACKOFF_BASE = 1.0
DEFAULT_MAX_PER_SECOND = 10.0

_WORK_ID_PREFIX = "https://openalex.org/"
_DOI_PREFIXES = ("https://doi.org/", "http://doi.org/", "doi.org/", "doi:")


class HarvestError(Exception):
    """A works request failed permanently (bad page, exhausted retries)."""


class InvalidQueryError(HarvestError):
    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class CapExceededError(HarvestError):
    def __init__(self, count: int, cap: int) -> None:
        super().__init__(f"query matches {count} works, which exceeds the harvest cap of {cap}")
        self.count = count
        self.cap = cap


def normalize_doi(doi: str | None) -> str | None:
    if not doi:
        return None
    cleaned = doi.strip().lower()
    for prefix in _DOI_PREFIXES:
        if cleaned.startswith(prefix):
            cleaned = cleaned[len(prefix) :]
            break
    return cleaned or None


@dataclass(frozen=True)
class HarvestQuery:
    """What to harvest: an institution, a search string, or a DOI list."""

    mode: str
    value: str | tuple[str, ...]
    year_from: int | None = None
    year_to: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ALL_MODES:
            raise InvalidQueryError("mode", f"must be one of {', '.join(ALL_MODES)}")
        if self.mode == MODE_BY_ROR:
            if not isinstance(self.value, str):
                raise InvalidQueryError("value", "by_ror takes a single ROR id string")
            bare = strip_ror_prefix(self.value)
            if not validate_ror_id(bare):
                raise InvalidQueryError("value", f"not a valid ROR id: {bare!r}")
            object.__setattr__(self, "value", bare)
        elif self.mode == MODE_BY_AFFILIATION:
            if not isinstance(self.value, str) or not self.value.strip():
                raise InvalidQueryError("value", "search string must be non-empty")
        else:
            if isinstance(self.value, str) or not self.value:
                raise InvalidQueryError("value", "by_doi_list takes a non-empty list of DOIs")
            dois = []
            for item in self.value:
                normalized = normalize_doi(item) if isinstance(item, str) else None
                if not normalized:
                    raise InvalidQueryError("value", f"not a usable DOI: {item!r}")
                dois.append(normalized)
            object.__setattr__(self, "value", tuple(dois))
        for name in ("year_from", "year_to"):
            year = getattr(self, name)
            if year is not None and (not isinstance(year, int) or not 1000 <= year <= 9999):
                raise InvalidQueryError(name, f"must be a 4-digit year, got {year!r}")
        if (
            self.year_from is not None
            and self.year_to is not None
            and self.year_from > self.year_to
        ):
            raise InvalidQueryError("year_from", f"{self.year_from} is after year_to {self.year_to}")


def build_filter(query: HarvestQuery) -> str:
    if query.mode == MODE_BY_ROR:
        parts = [f"institutions.ror:{query.value}"]
    elif query.mode == MODE_BY_AFFILIATION:
        parts = [f"raw_affiliation_strings.search:{query.value}"]
    else:
        parts = ["doi:" + "|".join(query.value)]
    if query.year_from is not None:
        parts.append(f"from_publication_date:{query.year_from}-01-01")
    if query.year_to is not None:
        parts.append(f"to_publication_date:{query.year_to}-12-31")
    return ",".join(parts)


@dataclass(frozen=True)
class Signature:
    """One raw affiliation string with the rors the source pinned to it."""

    raw_string: str
    current_ror_ids: tuple[str, ...]


@dataclass(frozen=True)
class Work:
    work_id: str
    doi: str | None
    title: str
    publication_year: int | None
    signatures: tuple[Signature, ...]


def parse_work(obj: dict) -> Work:
    """One API result object to a Work; authorship granularity preserved."""
    work_id = str(obj.get("id") or "")
    if work_id.startswith(_WORK_ID_PREFIX):
        work_id = work_id[len(_WORK_ID_PREFIX) :]
    signatures = []
    for auth in obj.get("authorships") or []:
        if not isinstance(auth, dict):
            continue
        rors = []
        for inst in auth.get("institutions") or []:
            if isinstance(inst, dict) and inst.get("ror"):
                rors.append(strip_ror_prefix(str(inst["ror"])))
        ror_ids = tuple(sorted(set(rors)))
        for raw in auth.get("raw_affiliation_strings") or []:
            if isinstance(raw, str):
                signatures.append(Signature(raw, ror_ids))
    year = obj.get("publication_year")
    return Work(
        work_id=work_id,
        doi=normalize_doi(obj.get("doi")),
        title=str(obj.get("title") or ""),
        publication_year=year if isinstance(year, int) else None,
        signatures=tuple(signatures),
    )


def extract_signatures(work: Work) -> list[Signature]:
    """Collapse a work's signatures to one per distinct raw string.

    Ror ids are unioned across the work's authorship entries, empty raw
    strings dropped, first-seen order kept.
    """
    order: list[str] = []
    merged: dict[str, set[str]] = {}
    for sig in work.signatures:
        if sig.raw_string == "":
            continue
        if sig.raw_string not in merged:
            order.append(sig.raw_string)
            merged[sig.raw_string] = set()
        merged[sig.raw_string].update(sig.current_ror_ids)
    return [Signature(raw, tuple(sorted(merged[raw]))) for raw in order]


def deduplicate_works(works: list[Work]) -> list[Work]:
    """Drop repeats, keyed by DOI when present, else work id.

    The first occurrence wins so upstream ordering is preserved.
    """
    seen: set[tuple[str, str]] = set()
    unique = []
    for work in works:
        key = ("doi", work.doi) if work.doi else ("id", work.work_id)
        if key in seen:
            continue
        seen.add(key)
        unique.append(work)
    return unique


@dataclass(frozen=True)
class AffiliationSignature:
    """One collapsed signature tagged with the work it came from."""

    raw_string: str
    ror_ids: tuple[str, ...]
    work_id: str


def iter_signatures(works: list[Work]) -> list[AffiliationSignature]:
    flattened = []
    for work in works:
        for sig in extract_signatures(work):
            flattened.append(AffiliationSignature(sig.raw_string, sig.current_ror_ids, work.work_id))
    return flattened


@dataclass
class FetchStats:
    requests_made: int = 0
    retries: int = 0
    pages: int = 0
    works_fetched: int = 0
    meta_count: int | None = None
    request_timestamps: list[float] = field(default_factory=list)


class RateLimiter:
    """Enforces a minimum spacing between calls, shared across threads."""

    def __init__(
        self,
        max_per_second: float = DEFAULT_MAX_PER_SECOND,
        *,
        clock=time.monotonic,
        sleep=time.sleep,
    ) -> None:
        if max_per_second <= 0:
            raise ValueError("max_per_second must be positive")
        self.interval = 1.0 / max_per_second
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None
        self._lock = threading.Lock()

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._last is not None:
                remaining = self._last + self.interval - now
                if remaining > 0:
                    self._sleep(remaining)
                    now = self._clock()
            self._last = now


class WorksClient:
    def __init__(
        self,
        endpoint: str,
        *,
        mailto: str | None = None,
        session: requests.Session | None = None,
        rate_limiter: RateLimiter | None = None,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff_base: float = DEFAULT_BACKOFF_BASE,
        per_page: int = DEFAULT_PER_PAGE,
        harvest_cap: int = DEFAULT_HARVEST_CAP,
        timeout: float = 30.0,
        sleep=time.sleep,
        clock=time.monotonic,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.mailto = mailto
        if session is None:
            session = requests.Session()
            session.trust_env = False
        self.session = session
        self.rate_limiter = rate_limiter or RateLimiter(clock=clock, sleep=sleep)
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.per_page = per_page
        self.harvest_cap = harvest_cap
        self.timeout = timeout
        self._sleep = sleep
        self._clock = clock

    def fetch_all_works(
        self, query: HarvestQuery, *, progress=None
    ) -> tuple[list[Work], FetchStats]:
        """Every work matching the query, in API order, unique by work id.

        ``progress``, when given, is called after each page with
        (pages_fetched, total_count). Raises CapExceededError as soon as
        the reported result count exceeds the harvest cap.
        """
        stats = FetchStats()
        works: list[Work] = []
        seen_ids: set[str] = set()
        cursor: str | None = "*"
        filter_expr = build_filter(query)
        while cursor:
            params = {"filter": filter_expr, "per-page": str(self.per_page), "cursor": cursor}
            if self.mailto:
                params["mailto"] = self.mailto
            payload = self._get_json(f"{self.endpoint}/works", params, stats)
            meta = payload.get("meta")
            results = payload.get("results")
            if not isinstance(meta, dict) or not isinstance(results, list):
                raise HarvestError("malformed page: missing meta or results")
            count = meta.get("count")
            if stats.meta_count is None and isinstance(count, int):
                stats.meta_count = count
                if count > self.harvest_cap:
                    raise CapExceededError(count, self.harvest_cap)
            stats.pages += 1
            for obj in results:
                work = parse_work(obj)
                if not work.work_id or work.work_id in seen_ids:
                    continue
                seen_ids.add(work.work_id)
                works.append(work)
            if progress is not None:
                progress(stats.pages, stats.meta_count or 0)
            cursor = meta.get("next_cursor") or None
            if not results:
                break
        stats.works_fetched = len(works)
        return works, stats

    def _get_json(self, url: str, params: dict, stats: FetchStats) -> dict:
        last_error = "no attempts made"
        for attempt in range(self.max_attempts):
            if attempt > 0:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
                stats.retries += 1
            self.rate_limiter.wait()
            stats.requests_made += 1
            stats.request_timestamps.append(self._clock())
            try:
                response = self.session.get(url, params=params, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = f"network error: {exc}"
                continue
            if response.status_code == 200:
                try:
                    body = response.json()
                except ValueError as exc:
                    raise HarvestError(f"works API returned unparseable JSON: {exc}") from exc
                if not isinstance(body, dict):
                    raise HarvestError("works API returned a non-object JSON body")
                return body
            last_error = f"HTTP {response.status_code}"
            if response.status_code != 429 and response.status_code < 500:
                raise HarvestError(f"works API request failed: {last_error}")
        raise HarvestError(
            f"works API request failed after {self.max_attempts} attempts: {last_error}"
        )


__all__ = [
    "ALL_MODES",
    "AffiliationSignature",
    "CapExceededError",
    "FetchStats",
    "HarvestError",
    "HarvestQuery",
    "InvalidQueryError",
    "MODE_BY_AFFILIATION",
    "MODE_BY_DOI_LIST",
    "MODE_BY_ROR",
    "RateLimiter",
    "Signature",
    "Work",
    "WorksClient",
    "build_filter",
    "deduplicate_works",
    "extract_signatures",
    "iter_signatures",
    "normalize_doi",
    "parse_work",
]
