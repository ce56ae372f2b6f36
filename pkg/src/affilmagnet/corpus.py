"""Deterministic benchmark corpora built from a loaded registry.

Two generators, both seeded so every run sees identical data:

* ``make_labeled_corpus`` produces (query, ror_id) pairs by perturbing
  primary names: random casing, stripped diacritics, an appended
  city + country tail, and one dropped word when the name is long enough.
  It backs the top-1 accuracy floor check.
* ``make_oracle_queries`` produces a mixed bag of query strings (clean
  names, acronyms, country conflicts, noise) used to compare the indexed
  matcher against the brute-force scan.
"""

from __future__ import annotations

import random
import unicodedata

from .countries import COUNTRY_DISPLAY
from .matcher import MatchIndex, form_tokens, match_affiliation
from .registry import RegistryIndex

DEFAULT_SEED = 20240816

# Filler localities appended to queries; deliberately disjoint from the
# vocabulary used in registry fixtures so they only add noise tokens.
_CITIES = [
    "Northbay", "Eastmoor", "Southbridge", "Westhollow", "Greyfield",
    "Lowmarsh", "Highcroft", "Redvale", "Bluewater", "Stonegate",
    "Fairhaven", "Millbrook", "Oakridge", "Ashford", "Larkspur",
]


def strip_diacritics(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(c for c in decomposed if not unicodedata.combining(c))


def _restyle(rng: random.Random, text: str) -> str:
    style = rng.choice(("lower", "upper", "title", "asis"))
    if style == "lower":
        return text.lower()
    if style == "upper":
        return text.upper()
    if style == "title":
        return text.title()
    return text


def _matchable_ids(registry: RegistryIndex) -> list[str]:
    ids = []
    for ror_id in sorted(registry.records):
        record = registry.records[ror_id]
        if not record.is_active:
            continue
        if any(form_tokens(f) for f in registry.name_forms[ror_id]):
            ids.append(ror_id)
    return ids


def perturb_name(rng: random.Random, name: str, country_code: str) -> str:
    """One noisy query variant of a primary name."""
    words = name.split()
    if len(words) >= 4:
        drop = rng.randrange(len(words))
        words = words[:drop] + words[drop + 1 :]
    text = _restyle(rng, strip_diacritics(" ".join(words)))
    city = rng.choice(_CITIES)
    country = COUNTRY_DISPLAY.get(country_code, "")
    tail = f", {city}, {country}" if country else f", {city}"
    return text + tail


def make_labeled_corpus(
    registry: RegistryIndex, *, size: int = 100, seed: int = DEFAULT_SEED
) -> list[tuple[str, str]]:
    """(query, expected ror_id) pairs for ``size`` sampled active records."""
    ids = _matchable_ids(registry)
    if len(ids) < size:
        raise ValueError(f"registry has only {len(ids)} matchable records, need {size}")
    rng = random.Random(seed)
    chosen = rng.sample(ids, size)
    corpus = []
    for ror_id in chosen:
        record = registry.records[ror_id]
        pair_rng = random.Random(f"{seed}:{ror_id}")
        corpus.append((perturb_name(pair_rng, record.primary_name, record.country_code), ror_id))
    return corpus


def top1_accuracy(index: MatchIndex, corpus: list[tuple[str, str]]) -> float:
    hits = 0
    for query, expected in corpus:
        ranked = match_affiliation(index, query)
        if ranked and ranked[0].ror_id == expected:
            hits += 1
    return hits / len(corpus) if corpus else 0.0


def make_oracle_queries(
    registry: RegistryIndex, *, size: int = 50, seed: int = DEFAULT_SEED
) -> list[str]:
    """Mixed query strings exercising every matcher code path."""
    ids = _matchable_ids(registry)
    rng = random.Random(seed)
    records = [registry.records[i] for i in ids]
    queries: list[str] = []

    def wrong_country(code: str) -> str:
        other = [c for c in sorted(COUNTRY_DISPLAY) if c != code]
        return COUNTRY_DISPLAY[rng.choice(other)]

    while len(queries) < size:
        kind = len(queries) % 10
        record = rng.choice(records)
        name = record.primary_name
        if kind in (0, 1, 2):
            queries.append(perturb_name(rng, name, record.country_code))
        elif kind in (3, 4):
            queries.append(name)
        elif kind == 5:
            forms = [name, *record.aliases, *[t for _l, t in record.labels]]
            queries.append(f"({rng.choice(forms)}), {rng.choice(_CITIES)}")
        elif kind == 6:
            acronym = rng.choice(record.acronyms) if record.acronyms else name.split()[0]
            queries.append(f"{acronym.upper()} unit {rng.randrange(100, 9999)}")
        elif kind == 7:
            queries.append(f"{name}, {wrong_country(record.country_code)}")
        elif kind == 8:
            other = rng.choice(records)
            queries.append(f"{name} and {other.primary_name}")
        else:
            queries.append(
                rng.choice(
                    ["of the and de la", "", "   ", "zzzqq xlyrp vmwrt", "12345 67890"]
                )
            )
    return queries[:size]


__all__ = [
    "DEFAULT_SEED",
    "make_labeled_corpus",
    "make_oracle_queries",
    "perturb_name",
    "strip_diacritics",
    "top1_accuracy",
]
