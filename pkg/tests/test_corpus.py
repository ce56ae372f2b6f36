from __future__ import annotations

import random

from affilmagnet.corpus import (
    make_labeled_corpus,
    make_oracle_queries,
    perturb_name,
    strip_diacritics,
    top1_accuracy,
)


def test_strip_diacritics():
    assert strip_diacritics("Université Fédérale") == "Universite Federale"


def test_perturb_is_deterministic_per_seed():
    a = perturb_name(random.Random("x"), "Grand Institute of Applied Things", "FR")
    b = perturb_name(random.Random("x"), "Grand Institute of Applied Things", "FR")
    assert a == b and a


def test_labeled_corpus_reproducible(registry):
    one = make_labeled_corpus(registry, size=100, seed=123)
    two = make_labeled_corpus(registry, size=100, seed=123)
    other = make_labeled_corpus(registry, size=100, seed=124)
    assert one == two
    assert one != other
    assert len(one) == 100
    for query, ror_id in one:
        assert query.strip()
        assert ror_id in registry.records


def test_oracle_queries_reproducible(registry):
    one = make_oracle_queries(registry, size=50, seed=99)
    two = make_oracle_queries(registry, size=50, seed=99)
    assert one == two
    assert len(one) == 50


def test_accuracy_helper_counts_top_hits(registry, index):
    corpus = make_labeled_corpus(registry, size=20, seed=5)
    acc = top1_accuracy(index, corpus)
    assert 0.0 <= acc <= 1.0
    # exact names should be near-perfect; perturbation may cost a little
    assert acc >= 0.7
