"""Grouping of raw affiliation strings and the correction lifecycle.

Raw strings are grouped byte-exactly (no normalization) so curators see
affiliations precisely as publishers wrote them. Identifiers are content
hashes, which keeps them stable across runs and derivable from exported
rows. Contact addresses are reduced to their domain before anything is
persisted; full addresses never leave process memory.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from datetime import datetime, timezone

from .harvester import Work, extract_signatures
from .matcher import MatchIndex, ScoredCandidate, match_affiliation
from .registry import strip_ror_prefix, validate_ror_id

MAX_WORK_EXAMPLES = 10

STATUS_PENDING = "pending"
STATUS_EXPORTED = "exported"
STATUS_OPEN = "open"
STATUS_CLOSED = "closed"
ALL_STATUSES = (STATUS_PENDING, STATUS_EXPORTED, STATUS_OPEN, STATUS_CLOSED)

VALID_TRANSITIONS = frozenset(
    {
        (STATUS_PENDING, STATUS_EXPORTED),
        (STATUS_EXPORTED, STATUS_OPEN),
        (STATUS_OPEN, STATUS_CLOSED),
    }
)

_ID_SEPARATOR = "\x1f"


class CurationError(Exception):
    pass


class TransitionError(CurationError):
    def __init__(self, current: str, target: str, detail: str | None = None) -> None:
        message = f"illegal status transition: {current!r} -> {target!r}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.current = current
        self.target = target


class NoOpDecisionError(CurationError):
    pass


class UnknownGroupError(CurationError):
    pass


class UnknownRequestError(CurationError):
    pass


def group_id_for(raw_string: str) -> str:
    return hashlib.sha256(raw_string.encode("utf-8")).hexdigest()[:16]


def request_id_for(raw_string: str, contact_domain: str) -> str:
    payload = raw_string + _ID_SEPARATOR + contact_domain
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def email_to_domain(email: str) -> str:
    """The domain part of an address; the only piece of it we ever keep."""
    local, sep, domain = email.strip().partition("@")
    if not sep or not local or not domain or "@" in domain:
        raise ValueError(f"not a usable email address: {email!r}")
    return domain.lower()


@dataclass(frozen=True)
class AffiliationGroup:
    """All works sharing one exact raw affiliation string."""

    group_id: str
    raw_string: str
    work_ids: tuple[str, ...]
    work_count: int
    current_ror_ids: tuple[str, ...]
    suggestions: tuple[ScoredCandidate, ...] = ()

    def to_dict(self) -> dict:
        return {
            "group_id": self.group_id,
            "raw_string": self.raw_string,
            "work_ids": list(self.work_ids),
            "work_count": self.work_count,
            "current_ror_ids": list(self.current_ror_ids),
            "suggestions": [c.to_dict() for c in self.suggestions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AffiliationGroup":
        return cls(
            group_id=data["group_id"],
            raw_string=data["raw_string"],
            work_ids=tuple(data.get("work_ids") or ()),
            work_count=int(data.get("work_count") or 0),
            current_ror_ids=tuple(data.get("current_ror_ids") or ()),
            suggestions=tuple(
                ScoredCandidate.from_dict(c) for c in data.get("suggestions") or ()
            ),
        )


def group_works(works: list[Work]) -> list[AffiliationGroup]:
    """Collapse works into per-raw-string groups.

    Keying is byte-exact; "Univ A" and "univ a" stay separate on purpose.
    Output is sorted by work_count descending, then raw_string ascending,
    and every signature occurrence lands in exactly one group: the sum of
    work_count over groups equals the sum of per-work signature counts.
    """
    members: dict[str, list[str]] = {}
    rors: dict[str, set[str]] = {}
    for work in works:
        for sig in extract_signatures(work):
            raw = sig.raw_string
            if raw not in members:
                members[raw] = []
                rors[raw] = set()
            if work.work_id not in members[raw]:
                members[raw].append(work.work_id)
            rors[raw].update(sig.current_ror_ids)
    groups = [
        AffiliationGroup(
            group_id=group_id_for(raw),
            raw_string=raw,
            work_ids=tuple(work_ids),
            work_count=len(work_ids),
            current_ror_ids=tuple(sorted(rors[raw])),
        )
        for raw, work_ids in members.items()
    ]
    groups.sort(key=lambda g: (-g.work_count, g.raw_string))
    return groups


def suggest_matches(group: AffiliationGroup, index: MatchIndex) -> AffiliationGroup:
    return replace(group, suggestions=tuple(match_affiliation(index, group.raw_string)))


@dataclass(frozen=True)
class CurationDecision:
    """A curator's verdict on one group: rors to add, rors to drop."""

    group_id: str
    added_ror_ids: tuple[str, ...]
    removed_ror_ids: tuple[str, ...]
    contact_email: str

    def __post_init__(self) -> None:
        added = tuple(sorted({strip_ror_prefix(r) for r in self.added_ror_ids}))
        removed = tuple(sorted({strip_ror_prefix(r) for r in self.removed_ror_ids}))
        for ror in (*added, *removed):
            if not validate_ror_id(ror):
                raise ValueError(f"not a valid ROR id: {ror!r}")
        overlap = set(added) & set(removed)
        if overlap:
            raise ValueError(f"rors both added and removed: {', '.join(sorted(overlap))}")
        object.__setattr__(self, "added_ror_ids", added)
        object.__setattr__(self, "removed_ror_ids", removed)
        email_to_domain(self.contact_email)


@dataclass(frozen=True)
class CorrectionRequest:
    request_id: str
    group_id: str
    raw_string: str
    previous_ror_ids: tuple[str, ...]
    new_ror_ids: tuple[str, ...]
    works_examples: tuple[str, ...]
    contact_domain: str
    status: str = STATUS_PENDING
    date_opened: datetime | None = None
    date_closed: datetime | None = None
    issue_number: int | None = None

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "group_id": self.group_id,
            "raw_string": self.raw_string,
            "previous_ror_ids": list(self.previous_ror_ids),
            "new_ror_ids": list(self.new_ror_ids),
            "works_examples": list(self.works_examples),
            "contact_domain": self.contact_domain,
            "status": self.status,
            "date_opened": format_timestamp(self.date_opened),
            "date_closed": format_timestamp(self.date_closed),
            "issue_number": self.issue_number,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorrectionRequest":
        return cls(
            request_id=data["request_id"],
            group_id=data["group_id"],
            raw_string=data["raw_string"],
            previous_ror_ids=tuple(data.get("previous_ror_ids") or ()),
            new_ror_ids=tuple(data.get("new_ror_ids") or ()),
            works_examples=tuple(data.get("works_examples") or ()),
            contact_domain=data["contact_domain"],
            status=data.get("status", STATUS_PENDING),
            date_opened=parse_timestamp(data.get("date_opened")),
            date_closed=parse_timestamp(data.get("date_closed")),
            issue_number=data.get("issue_number"),
        )


def format_timestamp(moment: datetime | None) -> str | None:
    if moment is None:
        return None
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str | None) -> datetime | None:
    if not text:
        return None
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


def apply_decision(store, group: AffiliationGroup, decision: CurationDecision) -> CorrectionRequest:
    """Turn a decision into a pending request and persist it.

    new_ror_ids = (current ∪ added) \\ removed. A decision that changes
    nothing is rejected. Replaying an identical decision leaves the
    stored request exactly as it was (same id, same lifecycle position);
    a conflicting decision for the same raw string and contact domain
    overwrites and restarts from pending, which is the documented
    last-write-wins rule.
    """
    if decision.group_id != group.group_id:
        raise UnknownGroupError(
            f"decision targets group {decision.group_id!r}, not {group.group_id!r}"
        )
    previous = tuple(sorted(group.current_ror_ids))
    new = tuple(sorted((set(previous) | set(decision.added_ror_ids)) - set(decision.removed_ror_ids)))
    if new == previous:
        raise NoOpDecisionError(f"decision leaves group {group.group_id} rors unchanged")
    domain = email_to_domain(decision.contact_email)
    incoming = CorrectionRequest(
        request_id=request_id_for(group.raw_string, domain),
        group_id=group.group_id,
        raw_string=group.raw_string,
        previous_ror_ids=previous,
        new_ror_ids=new,
        works_examples=group.work_ids[:MAX_WORK_EXAMPLES],
        contact_domain=domain,
    )
    existing = store.get(incoming.request_id)
    if (
        existing is not None
        and existing.raw_string == incoming.raw_string
        and existing.previous_ror_ids == incoming.previous_ror_ids
        and existing.new_ror_ids == incoming.new_ror_ids
    ):
        return existing
    store.put(incoming)
    return incoming


def apply_transition(
    request: CorrectionRequest,
    target: str,
    *,
    when: datetime | None = None,
    issue_number: int | None = None,
) -> CorrectionRequest:
    if (request.status, target) not in VALID_TRANSITIONS:
        raise TransitionError(request.status, target)
    moment = when or datetime.now(timezone.utc)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    if target == STATUS_OPEN:
        if issue_number is None:
            raise TransitionError(request.status, target, "an issue number is required to open")
        return replace(request, status=target, date_opened=moment, issue_number=issue_number)
    if target == STATUS_CLOSED:
        if request.date_opened is not None and moment < request.date_opened:
            raise TransitionError(
                request.status, target, "close timestamp precedes the open timestamp"
            )
        return replace(request, status=target, date_closed=moment)
    return replace(request, status=target)


def transition_status(
    store,
    request_id: str,
    target: str,
    *,
    when: datetime | None = None,
    issue_number: int | None = None,
) -> CorrectionRequest:
    request = store.get(request_id)
    if request is None:
        raise UnknownRequestError(f"no correction request with id {request_id!r}")
    updated = apply_transition(request, target, when=when, issue_number=issue_number)
    store.put(updated)
    return updated


__all__ = [
    "ALL_STATUSES",
    "AffiliationGroup",
    "CorrectionRequest",
    "CurationDecision",
    "CurationError",
    "MAX_WORK_EXAMPLES",
    "NoOpDecisionError",
    "STATUS_CLOSED",
    "STATUS_EXPORTED",
    "STATUS_OPEN",
    "STATUS_PENDING",
    "TransitionError",
    "UnknownGroupError",
    "UnknownRequestError",
    "VALID_TRANSITIONS",
    "apply_decision",
    "apply_transition",
    "email_to_domain",
    "format_timestamp",
    "group_id_for",
    "group_works",
    "parse_timestamp",
    "request_id_for",
    "suggest_matches",
    "transition_status",
]
