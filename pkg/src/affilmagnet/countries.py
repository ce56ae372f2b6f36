"""Static country lexicon: normalized English and French names to alpha-2 codes.

Affiliation strings routinely end with a country mention; the matcher uses
this table to drop candidates registered in a different country. The table
is deliberately small and editable rather than exhaustive.
"""

from __future__ import annotations

from .registry import normalize_text

# code, English names (first one is the display name), French names.
_TABLE: list[tuple[str, list[str], list[str]]] = [
    ("FR", ["France"], ["France"]),
    ("US", ["United States", "United States of America", "USA"], ["Etats-Unis", "États-Unis d'Amérique"]),
    ("GB", ["United Kingdom", "UK", "Great Britain"], ["Royaume-Uni", "Grande-Bretagne"]),
    ("DE", ["Germany"], ["Allemagne"]),
    ("IT", ["Italy"], ["Italie"]),
    ("ES", ["Spain"], ["Espagne"]),
    ("PT", ["Portugal"], ["Portugal"]),
    ("BE", ["Belgium"], ["Belgique"]),
    ("NL", ["Netherlands", "The Netherlands"], ["Pays-Bas"]),
    ("LU", ["Luxembourg"], ["Luxembourg"]),
    ("CH", ["Switzerland"], ["Suisse"]),
    ("AT", ["Austria"], ["Autriche"]),
    ("IE", ["Ireland"], ["Irlande"]),
    ("DK", ["Denmark"], ["Danemark"]),
    ("NO", ["Norway"], ["Norvège"]),
    ("SE", ["Sweden"], ["Suède"]),
    ("FI", ["Finland"], ["Finlande"]),
    ("IS", ["Iceland"], ["Islande"]),
    ("PL", ["Poland"], ["Pologne"]),
    ("CZ", ["Czech Republic", "Czechia"], ["République tchèque", "Tchéquie"]),
    ("SK", ["Slovakia"], ["Slovaquie"]),
    ("HU", ["Hungary"], ["Hongrie"]),
    ("RO", ["Romania"], ["Roumanie"]),
    ("BG", ["Bulgaria"], ["Bulgarie"]),
    ("GR", ["Greece"], ["Grèce"]),
    ("HR", ["Croatia"], ["Croatie"]),
    ("SI", ["Slovenia"], ["Slovénie"]),
    ("RS", ["Serbia"], ["Serbie"]),
    ("UA", ["Ukraine"], ["Ukraine"]),
    ("RU", ["Russia", "Russian Federation"], ["Russie"]),
    ("TR", ["Turkey", "Türkiye"], ["Turquie"]),
    ("CA", ["Canada"], ["Canada"]),
    ("MX", ["Mexico"], ["Mexique"]),
    ("BR", ["Brazil"], ["Brésil"]),
    ("AR", ["Argentina"], ["Argentine"]),
    ("CL", ["Chile"], ["Chili"]),
    ("CO", ["Colombia"], ["Colombie"]),
    ("PE", ["Peru"], ["Pérou"]),
    ("CN", ["China"], ["Chine"]),
    ("JP", ["Japan"], ["Japon"]),
    ("KR", ["South Korea", "Republic of Korea"], ["Corée du Sud"]),
    ("IN", ["India"], ["Inde"]),
    ("ID", ["Indonesia"], ["Indonésie"]),
    ("TH", ["Thailand"], ["Thaïlande"]),
    ("VN", ["Vietnam", "Viet Nam"], ["Viêt Nam"]),
    ("SG", ["Singapore"], ["Singapour"]),
    ("MY", ["Malaysia"], ["Malaisie"]),
    ("PH", ["Philippines"], ["Philippines"]),
    ("AU", ["Australia"], ["Australie"]),
    ("NZ", ["New Zealand"], ["Nouvelle-Zélande"]),
    ("ZA", ["South Africa"], ["Afrique du Sud"]),
    ("EG", ["Egypt"], ["Égypte"]),
    ("MA", ["Morocco"], ["Maroc"]),
    ("DZ", ["Algeria"], ["Algérie"]),
    ("TN", ["Tunisia"], ["Tunisie"]),
    ("SN", ["Senegal"], ["Sénégal"]),
    ("CI", ["Ivory Coast", "Côte d'Ivoire"], ["Côte d'Ivoire"]),
    ("CM", ["Cameroon"], ["Cameroun"]),
    ("NG", ["Nigeria"], ["Nigéria"]),
    ("KE", ["Kenya"], ["Kenya"]),
    ("ET", ["Ethiopia"], ["Éthiopie"]),
    ("IL", ["Israel"], ["Israël"]),
    ("SA", ["Saudi Arabia"], ["Arabie saoudite"]),
    ("AE", ["United Arab Emirates", "UAE"], ["Émirats arabes unis"]),
    ("QA", ["Qatar"], ["Qatar"]),
    ("IR", ["Iran"], ["Iran"]),
    ("PK", ["Pakistan"], ["Pakistan"]),
    ("BD", ["Bangladesh"], ["Bangladesh"]),
    ("LB", ["Lebanon"], ["Liban"]),
    ("JO", ["Jordan"], ["Jordanie"]),
    ("TW", ["Taiwan"], ["Taïwan"]),
    ("HK", ["Hong Kong"], ["Hong Kong"]),
]


def _build_lexicon() -> dict[str, str]:
    lexicon: dict[str, str] = {}
    for code, english, french in _TABLE:
        for name in english + french:
            key = normalize_text(name)
            if key:
                lexicon[key] = code
    return lexicon


# normalized name/alias -> alpha-2 code
COUNTRY_LEXICON: dict[str, str] = _build_lexicon()

# alpha-2 code -> English display name
COUNTRY_DISPLAY: dict[str, str] = {code: english[0] for code, english, _ in _TABLE}

# longest key, in tokens, so n-gram scans know when to stop
MAX_COUNTRY_TOKENS: int = max(len(k.split()) for k in COUNTRY_LEXICON)


def detect_countries(tokens: list[str], lexicon: dict[str, str] | None = None) -> frozenset[str]:
    """Alpha-2 codes of every lexicon entry appearing as a contiguous token run.

    ``tokens`` must already be normalized (output of normalize_text, split on
    spaces) and must include stopwords, since names like "united states of
    america" contain them.
    """
    if lexicon is None:
        lexicon = COUNTRY_LEXICON
    found: set[str] = set()
    n = len(tokens)
    for i in range(n):
        for width in range(1, min(MAX_COUNTRY_TOKENS, n - i) + 1):
            phrase = " ".join(tokens[i : i + width])
            code = lexicon.get(phrase)
            if code:
                found.add(code)
    return frozenset(found)
