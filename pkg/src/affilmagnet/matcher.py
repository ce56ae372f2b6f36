"""Rank registry candidates for a raw affiliation string.

Pipeline for a query string:

    normalize -> tokenize on spaces -> drop stopwords
    -> candidate generation: records sharing at least one token, plus
       acronym hits taken from the raw string before any lowercasing
    -> score: sum of rarity weights of the tokens shared with the
       candidate's best name form, doubled when the normalized query
       contains the full normalized primary name as a contiguous
       substring, plus half the candidate's self weight when one of its
       acronyms matched exactly
    -> keep candidates scoring at least half their own self weight
    -> drop candidates whose registered country differs from a country
       mentioned in the query
    -> order by (score desc, exact-name flag desc, ror_id asc), top 10

Token weight is ln(1 + total_forms / df(token)); a record's self weight is
the best weight sum any of its own name forms achieves. Only records with
status "active" are indexed, so inactive and withdrawn entries are never
proposed.

``match_affiliation`` answers from an inverted index. ``brute_force_match``
applies the identical rules by scanning every record with no index at all
and is kept as the ground-truth implementation; both sum weights over
tokens in sorted order so equal inputs produce bit-equal scores.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .countries import COUNTRY_LEXICON, detect_countries
from .registry import RegistryIndex, normalize_text

# Multilingual institutional boilerplate, kept short on purpose.
STOPWORDS = frozenset(
    ["of", "the", "and", "for", "de", "la", "le", "les", "du", "des",
     "der", "die", "das", "und", "di", "et", "e"]
)

# Maximal runs of 2+ uppercase ASCII letters in the raw (pre-lowercase) string.
_ACRONYM_RUN = re.compile(r"[A-Z]{2,}")

SCORE_THRESHOLD_RATIO = 0.5
ACRONYM_BONUS_RATIO = 0.5
EXACT_NAME_FACTOR = 2.0
MAX_CANDIDATES = 10


class MatcherError(Exception):
    pass


class EmptyRegistryError(MatcherError):
    pass


@dataclass(frozen=True)
class MatchEvidence:
    matched_tokens: tuple[str, ...]
    acronym_matched: bool
    country_consistent: bool
    exact_name: bool

    def to_dict(self) -> dict:
        return {
            "matched_tokens": list(self.matched_tokens),
            "acronym_matched": self.acronym_matched,
            "country_consistent": self.country_consistent,
            "exact_name": self.exact_name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatchEvidence":
        return cls(
            matched_tokens=tuple(data.get("matched_tokens") or ()),
            acronym_matched=bool(data.get("acronym_matched")),
            country_consistent=bool(data.get("country_consistent")),
            exact_name=bool(data.get("exact_name")),
        )


@dataclass(frozen=True)
class ScoredCandidate:
    ror_id: str
    score: float
    evidence: MatchEvidence

    def to_dict(self) -> dict:
        return {"ror_id": self.ror_id, "score": self.score, "evidence": self.evidence.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "ScoredCandidate":
        return cls(
            ror_id=data["ror_id"],
            score=float(data["score"]),
            evidence=MatchEvidence.from_dict(data.get("evidence") or {}),
        )


@dataclass
class MatchIndex:
    """Inverted token index over active registry records. Immutable after build."""

    # normalized token -> (ror_id, form ordinal) postings, sorted
    postings: dict[str, tuple[tuple[str, int], ...]] = field(default_factory=dict)
    # token -> number of name forms containing it
    token_df: dict[str, int] = field(default_factory=dict)
    total_forms: int = 0
    # ror_id -> best self score over the record's own forms
    self_weight: dict[str, float] = field(default_factory=dict)
    country_lexicon: dict[str, str] = field(default_factory=dict)
    # lookup data carried along so matching needs no registry handle
    acronym_map: dict[str, frozenset[str]] = field(default_factory=dict)
    primary_norm: dict[str, str] = field(default_factory=dict)
    record_country: dict[str, str] = field(default_factory=dict)

    def token_weight(self, token: str) -> float:
        return token_weight(self.total_forms, self.token_df[token])


def token_weight(total_forms: int, df: int) -> float:
    """Rarity weight ln(1 + total_forms / df)."""
    return math.log(1.0 + total_forms / df)


def form_tokens(form: str) -> frozenset[str]:
    """Distinct non-stopword tokens of an already-normalized name form."""
    return frozenset(t for t in form.split() if t not in STOPWORDS)


def query_acronyms(raw: str) -> frozenset[str]:
    """Normalized acronym tokens detected on the raw string before lowercasing."""
    found = {normalize_text(run) for run in _ACRONYM_RUN.findall(raw)}
    found.discard("")
    return frozenset(found)


def build_index(registry: RegistryIndex) -> MatchIndex:
    """Index every name form of every active record.

    Forms that are empty after stopword removal are skipped and do not
    count toward total_forms.
    """
    if registry.record_count == 0:
        raise EmptyRegistryError("registry holds no records")
    index = MatchIndex(country_lexicon=dict(COUNTRY_LEXICON))
    postings: dict[str, list[tuple[str, int]]] = {}
    tokens_by_form: dict[str, list[tuple[int, frozenset[str]]]] = {}
    for ror_id in sorted(registry.records):
        record = registry.records[ror_id]
        if not record.is_active:
            continue
        index.primary_norm[ror_id] = normalize_text(record.primary_name)
        index.record_country[ror_id] = record.country_code
        acrs = frozenset(
            a for a in (normalize_text(x) for x in record.acronyms) if a
        )
        for acr in acrs:
            existing = index.acronym_map.get(acr, frozenset())
            index.acronym_map[acr] = existing | {ror_id}
        kept: list[tuple[int, frozenset[str]]] = []
        for ordinal, form in enumerate(registry.name_forms[ror_id]):
            tokens = form_tokens(form)
            if not tokens:
                continue
            kept.append((ordinal, tokens))
            index.total_forms += 1
            for token in tokens:
                index.token_df[token] = index.token_df.get(token, 0) + 1
                postings.setdefault(token, []).append((ror_id, ordinal))
        tokens_by_form[ror_id] = kept
    # weights need the final df counts, so self weights come in a second pass
    for ror_id, forms in tokens_by_form.items():
        best = 0.0
        for _ordinal, tokens in forms:
            total = 0.0
            for token in sorted(tokens):
                total += index.token_weight(token)
            if total > best:
                best = total
        index.self_weight[ror_id] = best
    index.postings = {t: tuple(sorted(entries)) for t, entries in postings.items()}
    return index


def _rank(candidates: list[ScoredCandidate], limit: int) -> list[ScoredCandidate]:
    candidates.sort(key=lambda c: (-c.score, not c.evidence.exact_name, c.ror_id))
    return candidates[:limit]


def match_affiliation(index: MatchIndex, raw: str) -> list[ScoredCandidate]:
    """Ranked candidates for a raw affiliation string, at most 10.

    Pure and deterministic; an empty or all-stopword query yields [].
    """
    norm = normalize_text(raw)
    all_tokens = norm.split()
    query_tokens = frozenset(t for t in all_tokens if t not in STOPWORDS)
    acronyms = query_acronyms(raw)
    query_countries = detect_countries(all_tokens, index.country_lexicon)

    # shared tokens accumulated per candidate form
    shared: dict[str, dict[int, set[str]]] = {}
    for token in sorted(query_tokens):
        for ror_id, ordinal in index.postings.get(token, ()):
            shared.setdefault(ror_id, {}).setdefault(ordinal, set()).add(token)
    acronym_hits: set[str] = set()
    for acr in sorted(acronyms):
        acronym_hits.update(index.acronym_map.get(acr, frozenset()))

    results: list[ScoredCandidate] = []
    for ror_id in sorted(set(shared) | acronym_hits):
        base = 0.0
        best_tokens: tuple[str, ...] = ()
        for ordinal in sorted(shared.get(ror_id, {})):
            tokens = tuple(sorted(shared[ror_id][ordinal]))
            total = 0.0
            for token in tokens:
                total += index.token_weight(token)
            if total > base:
                base, best_tokens = total, tokens
        primary = index.primary_norm[ror_id]
        exact = bool(primary) and primary in norm
        score = base * EXACT_NAME_FACTOR if exact else base
        acronym_matched = ror_id in acronym_hits
        self_weight = index.self_weight.get(ror_id, 0.0)
        if acronym_matched:
            score += ACRONYM_BONUS_RATIO * self_weight
        if score <= 0.0:
            continue
        if score < SCORE_THRESHOLD_RATIO * self_weight:
            continue
        country = index.record_country[ror_id]
        if query_countries and country not in query_countries:
            continue
        evidence = MatchEvidence(
            matched_tokens=best_tokens,
            acronym_matched=acronym_matched,
            country_consistent=bool(query_countries) and country in query_countries,
            exact_name=exact,
        )
        results.append(ScoredCandidate(ror_id=ror_id, score=score, evidence=evidence))
    return _rank(results, MAX_CANDIDATES)


def brute_force_match(registry: RegistryIndex, raw: str) -> list[ScoredCandidate]:
    """Ground-truth matcher: same rules as match_affiliation, no index.

    Document frequencies, self weights, and scores are recomputed from the
    registry on every call by scanning all records.
    """
    total_forms = 0
    df: dict[str, int] = {}
    active: list[str] = []
    for ror_id in sorted(registry.records):
        record = registry.records[ror_id]
        if not record.is_active:
            continue
        active.append(ror_id)
        for form in registry.name_forms[ror_id]:
            tokens = form_tokens(form)
            if not tokens:
                continue
            total_forms += 1
            for token in tokens:
                df[token] = df.get(token, 0) + 1

    norm = normalize_text(raw)
    all_tokens = norm.split()
    query_tokens = frozenset(t for t in all_tokens if t not in STOPWORDS)
    acronyms = query_acronyms(raw)
    query_countries = detect_countries(all_tokens)

    results: list[ScoredCandidate] = []
    for ror_id in active:
        record = registry.records[ror_id]
        base = 0.0
        best_tokens: tuple[str, ...] = ()
        self_weight = 0.0
        for form in registry.name_forms[ror_id]:
            tokens = form_tokens(form)
            if not tokens:
                continue
            own = 0.0
            for token in sorted(tokens):
                own += token_weight(total_forms, df[token])
            if own > self_weight:
                self_weight = own
            inter = tuple(sorted(query_tokens & tokens))
            if not inter:
                continue
            total = 0.0
            for token in inter:
                total += token_weight(total_forms, df[token])
            if total > base:
                base, best_tokens = total, inter
        record_acronyms = {
            a for a in (normalize_text(x) for x in record.acronyms) if a
        }
        acronym_matched = bool(acronyms & record_acronyms)
        if base == 0.0 and not acronym_matched:
            continue
        primary = normalize_text(record.primary_name)
        exact = bool(primary) and primary in norm
        score = base * EXACT_NAME_FACTOR if exact else base
        if acronym_matched:
            score += ACRONYM_BONUS_RATIO * self_weight
        if score <= 0.0:
            continue
        if score < SCORE_THRESHOLD_RATIO * self_weight:
            continue
        if query_countries and record.country_code not in query_countries:
            continue
        evidence = MatchEvidence(
            matched_tokens=best_tokens,
            acronym_matched=acronym_matched,
            country_consistent=bool(query_countries)
            and record.country_code in query_countries,
            exact_name=exact,
        )
        results.append(ScoredCandidate(ror_id=ror_id, score=score, evidence=evidence))
    return _rank(results, MAX_CANDIDATES)
