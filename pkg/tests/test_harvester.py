from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affilmagnet.harvester import (
    CapExceededError,
    HarvestError,
    HarvestQuery,
    InvalidQueryError,
    RateLimiter,
    Signature,
    Work,
    WorksClient,
    build_filter,
    deduplicate_works,
    extract_signatures,
    iter_signatures,
    normalize_doi,
    parse_work,
)

from .doubles import make_work

ROR = "02vjkv261"


def client_for(server, **kw) -> WorksClient:
    kw.setdefault("backoff_base", 0.001)
    kw.setdefault("rate_limiter", RateLimiter(10_000))
    return WorksClient(server.base_url, **kw)


class TestNormalizeDoi:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("https://doi.org/10.5555/ABC", "10.5555/abc"),
            ("http://doi.org/10.5555/abc", "10.5555/abc"),
            ("doi:10.5555/abc", "10.5555/abc"),
            ("doi.org/10.5555/abc", "10.5555/abc"),
            ("  10.5555/AbC ", "10.5555/abc"),
            (None, None),
            ("", None),
            ("https://doi.org/", None),
        ],
    )
    def test_forms(self, raw, expected):
        assert normalize_doi(raw) == expected


class TestHarvestQuery:
    def test_by_ror_strips_url_prefix(self):
        q = HarvestQuery("by_ror", f"https://ror.org/{ROR}")
        assert q.value == ROR

    def test_by_ror_rejects_bad_id(self):
        with pytest.raises(InvalidQueryError) as err:
            HarvestQuery("by_ror", "junk")
        assert err.value.field == "value"

    def test_unknown_mode_rejected(self):
        with pytest.raises(InvalidQueryError) as err:
            HarvestQuery("by_magic", ROR)
        assert err.value.field == "mode"

    def test_affiliation_search_requires_text(self):
        with pytest.raises(InvalidQueryError):
            HarvestQuery("by_affiliation_search", "   ")

    def test_doi_list_normalized(self):
        q = HarvestQuery("by_doi_list", ("https://doi.org/10.1/A", "doi:10.2/B"))
        assert q.value == ("10.1/a", "10.2/b")

    def test_doi_list_rejects_empty_and_junk(self):
        with pytest.raises(InvalidQueryError):
            HarvestQuery("by_doi_list", ())
        with pytest.raises(InvalidQueryError):
            HarvestQuery("by_doi_list", ("",))

    @pytest.mark.parametrize("bad", [99, 12345, "2020", 2020.5])
    def test_years_must_be_4_digit_ints(self, bad):
        with pytest.raises(InvalidQueryError):
            HarvestQuery("by_ror", ROR, year_from=bad)

    def test_year_order_enforced(self):
        with pytest.raises(InvalidQueryError) as err:
            HarvestQuery("by_ror", ROR, year_from=2021, year_to=2019)
        assert err.value.field == "year_from"

    def test_year_bounds_accepted(self):
        q = HarvestQuery("by_ror", ROR, year_from=2019, year_to=2021)
        assert (q.year_from, q.year_to) == (2019, 2021)


class TestBuildFilter:
    def test_by_ror(self):
        assert build_filter(HarvestQuery("by_ror", ROR)) == f"institutions.ror:{ROR}"

    def test_by_ror_with_years(self):
        q = HarvestQuery("by_ror", ROR, year_from=2019, year_to=2021)
        assert build_filter(q) == (
            f"institutions.ror:{ROR},from_publication_date:2019-01-01,"
            "to_publication_date:2021-12-31"
        )

    def test_by_affiliation(self):
        q = HarvestQuery("by_affiliation_search", "orchid institute")
        assert build_filter(q) == "raw_affiliation_strings.search:orchid institute"

    def test_by_doi_list_pipe_joined(self):
        q = HarvestQuery("by_doi_list", ("10.1/a", "10.2/b"))
        assert build_filter(q) == "doi:10.1/a|10.2/b"

    def test_only_year_from(self):
        q = HarvestQuery("by_ror", ROR, year_from=2020)
        assert build_filter(q) == f"institutions.ror:{ROR},from_publication_date:2020-01-01"


class TestParseWork:
    def test_strips_prefixes_and_normalizes(self):
        obj = make_work(7, affiliations=[("Lab A", [ROR])])
        work = parse_work(obj)
        assert work.work_id == "W000007"
        assert work.doi == "10.5555/w7"
        assert work.signatures == (Signature("Lab A", (ROR,)),)

    def test_tolerates_missing_fields(self):
        work = parse_work({"id": "W1"})
        assert work.work_id == "W1"
        assert work.doi is None
        assert work.title == ""
        assert work.publication_year is None
        assert work.signatures == ()

    def test_multiple_raw_strings_share_institutions(self):
        obj = {
            "id": "W2",
            "authorships": [
                {
                    "raw_affiliation_strings": ["One", "Two"],
                    "institutions": [{"ror": f"https://ror.org/{ROR}"}],
                }
            ],
        }
        work = parse_work(obj)
        assert work.signatures == (Signature("One", (ROR,)), Signature("Two", (ROR,)))


class TestExtractSignatures:
    def test_merges_and_keeps_first_seen_order(self):
        work = Work(
            "W1",
            None,
            "t",
            2020,
            (
                Signature("Lab B", ("05aaa",)),
                Signature("Lab A", ()),
                Signature("Lab B", ("02bbb",)),
                Signature("", ("02bbb",)),
            ),
        )
        sigs = extract_signatures(work)
        assert sigs == [
            Signature("Lab B", ("02bbb", "05aaa")),
            Signature("Lab A", ()),
        ]

    def test_no_affiliations_yields_empty(self):
        assert extract_signatures(Work("W1", None, "t", None, ())) == []

    def test_iter_signatures_tags_work_ids(self):
        works = [
            Work("W1", None, "t", None, (Signature("Lab", ()),)),
            Work("W2", None, "t", None, (Signature("Lab", ()),)),
        ]
        tagged = iter_signatures(works)
        assert [(s.raw_string, s.work_id) for s in tagged] == [("Lab", "W1"), ("Lab", "W2")]


class TestDeduplicate:
    def make_ten(self):
        works = []
        for n in range(10):
            works.append(parse_work(make_work(n)))
        # three duplicate-DOI pairs: 7, 8, 9 repeat the dois of 0, 1, 2
        for dup, src in ((7, 0), (8, 1), (9, 2)):
            works[dup] = Work(
                works[dup].work_id,
                works[src].doi,
                works[dup].title,
                works[dup].publication_year,
                works[dup].signatures,
            )
        return works

    def test_ten_with_three_pairs_gives_seven(self):
        works = self.make_ten()
        unique = deduplicate_works(works)
        assert len(unique) == 7
        assert [w.work_id for w in unique] == [f"W{n:06d}" for n in range(7)]

    def test_idempotent(self):
        unique = deduplicate_works(self.make_ten())
        assert deduplicate_works(unique) == unique

    def test_missing_doi_falls_back_to_work_id(self):
        a = Work("W1", None, "t", None, ())
        b = Work("W1", None, "t", None, ())
        c = Work("W2", None, "t", None, ())
        assert deduplicate_works([a, b, c]) == [a, c]

    @given(
        st.lists(
            st.tuples(st.integers(0, 5), st.one_of(st.none(), st.integers(0, 5))),
            max_size=30,
        )
    )
    @settings(max_examples=100)
    def test_property_first_wins_and_stable(self, spec):
        works = [
            Work(f"W{wid}", f"10.1/{doi}" if doi is not None else None, "t", None, ())
            for wid, doi in spec
        ]
        unique = deduplicate_works(works)
        keys = [(w.doi or "", w.work_id if not w.doi else "") for w in unique]
        assert len(set(keys)) == len(keys)
        # order preserved: unique is a subsequence of works
        it = iter(works)
        assert all(any(w is x for x in it) for w in unique)


class TestFetchPagination:
    @pytest.mark.parametrize("total", [0, 1, 100, 101, 250])
    def test_work_id_multisets_match_ground_truth(self, works_server, total):
        works_server.works = [make_work(n) for n in range(total)]
        client = client_for(works_server)
        works, stats = client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert sorted(w.work_id for w in works) == sorted(
            f"W{n:06d}" for n in range(total)
        )
        expected_pages = max(1, -(-total // 100))
        assert stats.pages == expected_pages
        assert works_server.request_count == expected_pages
        assert stats.works_fetched == total
        assert stats.meta_count == total

    def test_first_request_uses_star_cursor(self, works_server):
        works_server.works = [make_work(1)]
        client_for(works_server).fetch_all_works(HarvestQuery("by_ror", ROR))
        first = works_server.requests[0]["params"]
        assert first["cursor"] == "*"
        assert first["per-page"] == "100"
        assert first["filter"] == f"institutions.ror:{ROR}"

    def test_mailto_forwarded(self, works_server):
        works_server.works = []
        client = client_for(works_server, mailto="ops@example.org")
        client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert works_server.requests[0]["params"]["mailto"] == "ops@example.org"

    def test_duplicate_ids_across_pages_dropped(self, works_server):
        repeated = make_work(1)
        works_server.works = [repeated] * 150
        client = client_for(works_server)
        works, _ = client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert [w.work_id for w in works] == ["W000001"]

    def test_progress_reported_per_page(self, works_server):
        works_server.works = [make_work(n) for n in range(250)]
        calls = []
        client = client_for(works_server)
        client.fetch_all_works(
            HarvestQuery("by_ror", ROR), progress=lambda pages, total: calls.append((pages, total))
        )
        assert calls == [(1, 250), (2, 250), (3, 250)]


class TestFetchFailures:
    def test_injected_429_and_500_are_retried(self, works_server):
        works_server.works = [make_work(n) for n in range(150)]
        works_server.fail_plan = {1: 429, 3: 500}
        client = client_for(works_server)
        works, stats = client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert len(works) == 150
        assert stats.retries == 2
        assert works_server.request_count == 4  # 2 pages + 2 retried failures

    def test_network_error_retried(self, works_server, monkeypatch):
        works_server.works = [make_work(1)]
        client = client_for(works_server)
        real_get = client.session.get
        state = {"first": True}

        def flaky(url, **kw):
            if state["first"]:
                state["first"] = False
                raise __import__("requests").ConnectionError("boom")
            return real_get(url, **kw)

        monkeypatch.setattr(client.session, "get", flaky)
        works, stats = client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert len(works) == 1
        assert stats.retries == 1

    def test_client_error_not_retried(self, works_server):
        works_server.works = [make_work(1)]
        works_server.fail_plan = {1: 400}
        client = client_for(works_server)
        with pytest.raises(HarvestError, match="400"):
            client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert works_server.request_count == 1

    def test_exhausted_retries_raise(self, works_server):
        works_server.works = [make_work(1)]
        works_server.fail_plan = {n: 500 for n in range(1, 6)}
        client = client_for(works_server)
        with pytest.raises(HarvestError, match="after 5 attempts"):
            client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert works_server.request_count == 5

    def test_unparseable_json_raises(self, works_server):
        works_server.works = [make_work(1)]
        works_server.malformed_at = 1
        client = client_for(works_server)
        with pytest.raises(HarvestError, match="JSON"):
            client.fetch_all_works(HarvestQuery("by_ror", ROR))

    def test_page_without_meta_raises(self, works_server):
        works_server.works = [make_work(1)]
        works_server.override_body = {1: {"results": []}}
        client = client_for(works_server)
        with pytest.raises(HarvestError, match="malformed page"):
            client.fetch_all_works(HarvestQuery("by_ror", ROR))

    def test_cap_exceeded_is_an_error(self, works_server):
        works_server.works = [make_work(n) for n in range(5)]
        client = client_for(works_server, harvest_cap=3)
        with pytest.raises(CapExceededError) as err:
            client.fetch_all_works(HarvestQuery("by_ror", ROR))
        assert err.value.count == 5
        assert err.value.cap == 3


class TestRateLimiter:
    def test_enforces_min_interval_with_fake_clock(self):
        now = [0.0]
        sleeps = []

        def clock():
            return now[0]

        def sleep(d):
            sleeps.append(d)
            now[0] += d

        rl = RateLimiter(10, clock=clock, sleep=sleep)
        rl.wait()
        assert sleeps == []
        rl.wait()
        assert sleeps == [pytest.approx(0.1)]
        now[0] += 0.5
        rl.wait()
        assert len(sleeps) == 1  # enough time passed, no extra sleep

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            RateLimiter(0)

    def test_live_rate_stays_within_tolerance(self, works_server):
        works_server.works = [make_work(n) for n in range(12)]
        client = WorksClient(works_server.base_url, per_page=1)
        client.fetch_all_works(HarvestQuery("by_ror", ROR))
        stamps = works_server.timestamps
        assert len(stamps) == 12
        elapsed = stamps[-1] - stamps[0]
        rate = (len(stamps) - 1) / elapsed
        assert rate <= 10.0 * 1.2
