from datetime import datetime, timezone

import pytest

from flightrag import flight_store as fs
from flightrag.datagen import generate_flights


def test_csv_roundtrip(small_store):
    text = fs.to_csv(small_store)
    again = fs.ingest_csv_text(text)
    assert len(again) == len(small_store)
    assert fs.to_csv(again) == text


def test_missing_column_rejected():
    header = ",".join(n for n in fs.FIELD_NAMES if n != "ramp")
    with pytest.raises(fs.MissingColumn):
        fs.ingest_csv_text(header + "\n")


def test_duplicate_uid_rejected(small_store):
    records = small_store.records
    with pytest.raises(fs.DuplicateUid):
        fs.FlightStore(records + [records[0]])


def test_malformed_timestamp_rejected(small_store):
    text = fs.to_csv(small_store)
    bad = text.replace("2023-05-", "not-a-ts-", 1)
    with pytest.raises(fs.MalformedTimestamp):
        fs.ingest_csv_text(bad)


def test_flight_nr_pattern_enforced(small_store):
    text = fs.to_csv(small_store)
    nr = small_store.records[0].flight_nr
    with pytest.raises(fs.PatternViolation):
        fs.ingest_csv_text(text.replace(nr, "1234XX", 1))


def test_timestamp_canonical_roundtrip():
    dt = datetime(2023, 5, 14, 7, 45, 0, tzinfo=timezone.utc)
    assert fs.format_ts(dt) == "2023-05-14 07:45:00+0000"
    assert fs.parse_ts(fs.format_ts(dt)) == dt


def test_timestamps_are_timezone_aware(small_store):
    for record in small_store:
        assert record.scheduled_block.tzinfo is not None


def test_article_skips_empty_fields(small_store):
    record = next(r for r in small_store if not r.actual_take_off)
    article = fs.render_article(record)
    assert fs.FIELD_LABELS["actual_take_off"] not in article.text
    assert f"flight number: {record.flight_nr}" in article.text
    assert article.doc_id == record.flight_uid


def test_article_clause_order_follows_labels(small_store):
    article = fs.render_article(small_store.records[0])
    labels = [clause.split(": ")[0] for clause in article.text.split("; ")]
    order = list(fs.FIELD_LABELS.values())
    assert labels == [l for l in order if l in labels]


def test_lookup_code_fields_case_insensitive(small_store):
    record = small_store.records[0]
    found = fs.lookup(small_store, "ramp", record.ramp.lower())
    assert record in found


def test_lookup_unknown_field(small_store):
    with pytest.raises(fs.UnknownField):
        fs.lookup(small_store, "no_such_field", "x")


def test_by_flight_nr_case_insensitive(small_store):
    record = small_store.records[5]
    assert small_store.by_flight_nr(record.flight_nr.lower()) is record


def test_store_is_deterministic():
    a = generate_flights(25, seed=11)
    b = generate_flights(25, seed=11)
    assert fs.to_csv(a) == fs.to_csv(b)
