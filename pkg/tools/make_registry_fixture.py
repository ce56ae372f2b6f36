"""Generate the 200-record registry dump used by the test suite.

Four records are real organizations with hand-checked identifiers; the
rest are synthetic, built from a seeded RNG so the file is reproducible
byte-for-byte. Synthetic names embed a globally unique invented place
token so rarity weighting has something to bite on, and longer names
carry at least two distinctive tokens so a single dropped word cannot
erase the signal. Run from the repository root:

    python tools/make_registry_fixture.py
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from affilmagnet.countries import COUNTRY_DISPLAY  # noqa: E402
from affilmagnet.registry import load_ror_dump, validate_ror_id  # noqa: E402

SEED = 20240816
OUT_PATH = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "ror_dump_200.jsonl"

CROCKFORD = "0123456789abcdefghjkmnpqrstvwxyz"
CROCKFORD_VALUE = {c: i for i, c in enumerate(CROCKFORD)}

REAL_RECORDS = [
    {
        "id": "https://ror.org/02vjkv261",
        "status": "active",
        "name": "Institut National de la Santé et de la Recherche Médicale",
        "aliases": ["French National Institute of Health and Medical Research"],
        "acronyms": ["INSERM"],
        "labels": [{"label": "Institut National de la Santé et de la Recherche Médicale", "iso639": "fr"}],
        "country": {"country_code": "FR"},
    },
    {
        "id": "052gg0110",
        "status": "active",
        "name": "University of Oxford",
        "aliases": ["Oxford University"],
        "acronyms": [],
        "labels": [{"label": "Prifysgol Rhydychen", "iso639": "cy"}],
        "country": {"country_code": "GB"},
    },
    {
        "id": "https://ror.org/02feahw73",
        "status": "active",
        "name": "Centre National de la Recherche Scientifique",
        "aliases": ["French National Centre for Scientific Research"],
        "acronyms": ["CNRS"],
        "labels": [{"label": "Centre National de la Recherche Scientifique", "iso639": "fr"}],
        "country": {"country_code": "FR"},
    },
    {
        "id": "042nb2s44",
        "status": "active",
        "name": "Massachusetts Institute of Technology",
        "aliases": [],
        "acronyms": ["MIT"],
        "labels": [{"label": "Instituto de Tecnología de Massachusetts", "iso639": "es"}],
        "country": {"country_code": "US"},
    },
]

TYPES = [
    "University", "Institute", "Laboratory", "Academy", "Observatory",
    "Polytechnic", "College", "Foundation", "Center", "School",
]
ADJECTIVES = [
    "Quantum", "Marine", "Agrarian", "Computational", "Molecular",
    "Atmospheric", "Cognitive", "Structural", "Applied", "Theoretical",
    "Digital", "Experimental", "Cellular", "Planetary", "Linguistic",
    "Algebraic", "Clinical", "Ecological", "Seismic", "Photonic",
]
NOUNS = [
    "Hydrology", "Photonics", "Genomics", "Robotics", "Toxicology",
    "Archaeology", "Meteorology", "Oncology", "Cartography", "Metallurgy",
    "Virology", "Acoustics", "Demography", "Glaciology", "Enzymology",
    "Kinetics", "Optics", "Radiology", "Semiotics", "Volcanology",
]
FR_LABEL_FIELDS = [
    "Océanographie", "Génomique", "Métallurgie", "Photonique",
    "Toxicologie", "Hydrologie", "Géodésie", "Écologie",
]
SYL_A = [
    "Bral", "Dorn", "Fex", "Grim", "Hest", "Jyl", "Korv", "Lund", "Mer", "Nix",
    "Pra", "Quil", "Rosk", "Sil", "Tarn", "Ulv", "Vask", "Wyn", "Yor", "Zel",
]
SYL_B = [
    "ba", "den", "fir", "gol", "hiv", "jor", "kel", "lom", "mar", "nor",
    "pol", "qua", "rel", "sta", "tun", "vier", "wen", "xis", "yal", "zor",
]
SYL_C = [
    "berg", "dale", "ford", "grad", "holm", "keep", "mont", "ness", "port",
    "stad", "thorpe", "ville", "wick", "worth", "zance", "field", "gate",
    "haven", "march", "shore",
]
CONSONANTS = "BCDFGHJKLMNPQRSTVWXZ"

COUNTRY_WEIGHTS = [
    ("FR", 60), ("DE", 20), ("GB", 20), ("US", 24), ("IT", 14), ("ES", 12),
    ("NL", 8), ("CH", 8), ("BE", 6), ("SE", 6), ("PT", 4), ("AT", 4),
    ("DK", 3), ("NO", 3), ("FI", 2), ("PL", 2),
]


def make_ror_id(rng: random.Random, taken: set[str]) -> str:
    while True:
        body = "0" + "".join(rng.choice(CROCKFORD) for _ in range(6))
        value = 0
        for ch in body:
            value = value * 32 + CROCKFORD_VALUE[ch]
        check = 98 - (value * 100) % 97
        candidate = f"{body}{check:02d}"
        if candidate not in taken and validate_ror_id(candidate):
            taken.add(candidate)
            return candidate


def make_places(rng: random.Random, count: int) -> list[str]:
    combos = [a + b + c for a in SYL_A for b in SYL_B for c in SYL_C]
    return rng.sample(combos, count)


def make_acronym(rng: random.Random, taken: set[str]) -> str:
    while True:
        acronym = "".join(rng.choice(CONSONANTS) for _ in range(rng.randint(3, 5)))
        if acronym not in taken:
            taken.add(acronym)
            return acronym


def build_synthetic(rng: random.Random, count: int) -> list[dict]:
    places = make_places(rng, count)
    field_pairs = rng.sample([(a, n) for a in ADJECTIVES for n in NOUNS], count)
    country_pool = [code for code, weight in COUNTRY_WEIGHTS for _ in range(weight)]
    taken_ids = {r["id"].rsplit("/", 1)[-1] for r in REAL_RECORDS}
    taken_acronyms = {"INSERM", "CNRS", "MIT"}
    records = []
    for i in range(count):
        place = places[i]
        adj, noun = field_pairs[i]
        pattern = rng.randrange(100)
        if pattern < 30:
            name = f"University of {place}"
        elif pattern < 55:
            name = f"{place} Institute of {adj} {noun}"
        elif pattern < 70:
            name = f"{adj} {noun} Laboratory of {place}"
        elif pattern < 85:
            org_type = rng.choice(TYPES)
            name = f"National {org_type} for {adj} {noun}, {place}"
        else:
            org_type = rng.choice(TYPES)
            name = f"{place} {org_type}"
        country = rng.choice(country_pool)
        aliases = []
        if rng.random() < 0.4:
            aliases.append(f"{place} {noun} {rng.choice(TYPES)}")
        labels = []
        if country == "FR" and rng.random() < 0.5:
            labels.append(
                {"label": f"Institut de {rng.choice(FR_LABEL_FIELDS)} de {place}", "iso639": "fr"}
            )
        acronyms = []
        if rng.random() < 0.3:
            acronyms.append(make_acronym(rng, taken_acronyms))
        ror_id = make_ror_id(rng, taken_ids)
        if rng.random() < 0.25:
            dump_id = f"https://ror.org/{ror_id}"
        else:
            dump_id = ror_id
        records.append(
            {
                "id": dump_id,
                "status": "active",
                "name": name,
                "aliases": aliases,
                "acronyms": acronyms,
                "labels": labels,
                "country": {"country_code": country},
            }
        )
    # retire a handful so status filtering has something to chew on
    retired = rng.sample(range(count), 10)
    for j, idx in enumerate(retired):
        records[idx]["status"] = "inactive" if j < 6 else "withdrawn"
    return records


def main() -> int:
    rng = random.Random(SEED)
    records = REAL_RECORDS + build_synthetic(rng, 196)
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    text = "\n".join(lines) + "\n"

    registry = load_ror_dump_text(text)
    active = sum(1 for r in registry.records.values() if r.is_active)
    assert registry.record_count == 200, registry.record_count
    assert active == 190, active
    for code in {r["country"]["country_code"] for r in records}:
        assert code in COUNTRY_DISPLAY, f"no display name for {code}"

    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(text, encoding="utf-8")
    print(f"wrote {registry.record_count} records ({active} active) -> {OUT_PATH}")
    return 0


def load_ror_dump_text(text: str):
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".jsonl", delete=False, encoding="utf-8") as tmp:
        tmp.write(text)
        tmp_path = tmp.name
    try:
        return load_ror_dump(tmp_path)
    finally:
        Path(tmp_path).unlink()


if __name__ == "__main__":
    sys.exit(main())
