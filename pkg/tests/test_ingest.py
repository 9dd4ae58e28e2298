import json
import string
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishclust.errors import DuplicateUrl, EnrichmentUnavailable, MissingRequiredField, ParseError
from phishclust.ingest import (
    FixtureEnrichmentClient,
    enrich,
    fixture_key,
    load_dataset,
    record_from_json_dict,
    record_to_json_dict,
    save_dataset,
    write_fixture,
)
from phishclust.records import EnrichedUrlRecord

from conftest import make_record, write_jsonl


def test_load_table1_line_populates_tokens(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl", [{
        "url": "s286.paypal-login.net",
        "ips": ["168.10.10.2"],
        "target": "Paypal",
        "submission_time": "2023-08-15T00:00:00Z",
    }])
    records = load_dataset(path)
    assert len(records) == 1
    assert records[0].url_tokens == ("s286", "paypal", "login", "net")
    assert records[0].ips == frozenset({"168.10.10.2"})


def test_load_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert load_dataset(path) == []


def test_load_duplicate_url_rejected(tmp_path):
    row = {"url": "x.com", "submission_time": "2023-08-15T00:00:00Z"}
    path = write_jsonl(tmp_path / "d.jsonl", [row, row])
    with pytest.raises(DuplicateUrl):
        load_dataset(path)


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('{"url": "a.com", "submission_time": "2023-08-15T00:00:00Z"}\nnot json\n')
    with pytest.raises(ParseError) as excinfo:
        load_dataset(path)
    assert excinfo.value.line_number == 2


def test_load_missing_required_fields(tmp_path):
    with pytest.raises(MissingRequiredField):
        load_dataset(write_jsonl(tmp_path / "a.jsonl",
                                 [{"submission_time": "2023-08-15T00:00:00Z"}]))
    with pytest.raises(MissingRequiredField):
        load_dataset(write_jsonl(tmp_path / "b.jsonl", [{"url": "x.com"}]))


def test_load_canonicalizes_ips(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl", [{
        "url": "x.com",
        "submission_time": "2023-08-15T00:00:00Z",
        "ips": ["010.001.1.1", "2001:DB8::1"],
    }])
    assert load_dataset(path)[0].ips == frozenset({"10.1.1.1", "2001:db8::1"})


def test_timestamp_offsets_normalized():
    record = record_from_json_dict(
        {"url": "x.com", "submission_time": "2023-08-15T10:00:00+10:00"}
    )
    assert record.submission_time == datetime(2023, 8, 15, 0, 0, 0, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# round-trip serialization
# ---------------------------------------------------------------------------

short = st.text(alphabet=string.ascii_lowercase + string.digits + ".-", min_size=1, max_size=12)
opt = st.none() | st.text(alphabet=string.ascii_letters + string.digits + " ._-", min_size=1, max_size=20)


@st.composite
def record_strategy(draw):
    url = draw(st.text(alphabet=string.ascii_lowercase + string.digits, min_size=1, max_size=8)) + ".com"
    ts = draw(st.datetimes(
        min_value=datetime(2020, 1, 1), max_value=datetime(2030, 1, 1)
    )).replace(microsecond=0, tzinfo=timezone.utc)
    return EnrichedUrlRecord(
        url=url,
        submission_time=ts,
        url_tokens=tuple(draw(st.lists(short, max_size=4))),
        ips=frozenset(
            f"10.{a}.{b}.{c}"
            for a, b, c in draw(
                st.sets(st.tuples(*[st.integers(0, 255)] * 3), max_size=3)
            )
        ),
        dns=draw(opt),
        reverse_dns=draw(opt),
        geoip=draw(opt),
        country_code=draw(st.none() | st.text(alphabet=string.ascii_uppercase, min_size=2, max_size=2)),
        target=draw(opt),
        html_text=draw(opt),
        ocr_text_own=draw(opt),
        ocr_text_pt=draw(opt),
        tag_counts=draw(st.dictionaries(short, st.integers(min_value=0, max_value=50), max_size=4)),
    )


@settings(max_examples=150)
@given(record_strategy())
def test_record_json_round_trip_lossless(record):
    assert record_from_json_dict(record_to_json_dict(record)) == record


def test_save_then_load_round_trip(tmp_path):
    records = [make_record("a.com", ips={"10.0.0.1"}), make_record("b.com", html_text="hello page")]
    path = tmp_path / "out.jsonl"
    save_dataset(records, path)
    assert load_dataset(path) == records


# ---------------------------------------------------------------------------
# enrichment
# ---------------------------------------------------------------------------

@pytest.fixture
def fixture_dir(tmp_path):
    root = tmp_path / "fixtures"
    write_fixture(root, "a.com", {"dns": "ns1.example.net", "target": "Paypal"})
    write_fixture(root, "b.com", {"dns": "ns2.example.net"})
    return root


def test_enrich_fills_absent_fields(fixture_dir):
    client = FixtureEnrichmentClient(fixture_dir)
    [record] = enrich([make_record("a.com")], client)
    assert record.dns == "ns1.example.net"
    assert record.target == "Paypal"


def test_enrich_never_overwrites(fixture_dir):
    client = FixtureEnrichmentClient(fixture_dir)
    [record] = enrich([make_record("a.com", dns="original.ns")], client)
    assert record.dns == "original.ns"
    assert record.target == "Paypal"


def test_enrich_counts_misses(fixture_dir):
    client = FixtureEnrichmentClient(fixture_dir)
    original = make_record("unknown.com")
    [record] = enrich([original], client)
    assert record == original
    assert client.misses == 1


def test_enrich_is_idempotent(fixture_dir):
    client = FixtureEnrichmentClient(fixture_dir)
    records = [make_record("a.com"), make_record("b.com", dns="keep.me"), make_record("c.com")]
    once = enrich(records, client)
    twice = enrich(once, client)
    assert once == twice


def test_missing_fixture_directory_is_unavailable(tmp_path):
    with pytest.raises(EnrichmentUnavailable):
        FixtureEnrichmentClient(tmp_path / "nope")


def test_unavailable_lookup_passes_record_through():
    class FlakyClient:
        capabilities = frozenset({"dns"})

        def lookup(self, url):
            raise EnrichmentUnavailable("offline")

    original = make_record("a.com")
    assert enrich([original], FlakyClient()) == [original]


def test_fixture_key_is_sha256_hex():
    key = fixture_key("a.com")
    assert len(key) == 64 and all(c in "0123456789abcdef" for c in key)


def test_enrich_respects_capabilities(fixture_dir):
    client = FixtureEnrichmentClient(fixture_dir, capabilities=frozenset({"target"}))
    [record] = enrich([make_record("a.com")], client)
    assert record.dns is None
    assert record.target == "Paypal"
