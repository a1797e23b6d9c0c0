"""Flight data model: CSV ingestion, validation, lookup, and article rendering.

The flight table is the single source of truth for every answering pipeline.
A store is immutable after ingestion; re-ingestion produces a new store.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, fields as dc_fields
from datetime import datetime, timezone
from typing import Iterable, Optional

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S%z"
FLIGHT_NR_RE = re.compile(r"^[A-Z]{1,3}\d{1,4}$")
RAMP_RE = re.compile(r"^[A-Z]\d{2}$")


class FlightStoreError(Exception):
    pass


class MissingColumn(FlightStoreError):
    def __init__(self, name: str):
        super().__init__(f"missing column: {name}")
        self.name = name


class DuplicateUid(FlightStoreError):
    def __init__(self, uid: str):
        super().__init__(f"duplicate flight_uid: {uid}")
        self.uid = uid


class MalformedTimestamp(FlightStoreError):
    def __init__(self, row: int, field: str):
        super().__init__(f"row {row}: malformed timestamp in {field}")
        self.row = row
        self.field = field


class PatternViolation(FlightStoreError):
    def __init__(self, row: int, field: str):
        super().__init__(f"row {row}: pattern violation in {field}")
        self.row = row
        self.field = field


class UnknownField(FlightStoreError):
    def __init__(self, name: str):
        super().__init__(f"unknown field: {name}")
        self.name = name


@dataclass(frozen=True)
class FlightRecord:
    flight_nr: str
    flight_uid: str
    aircraft_category: str
    bus_gate: str
    bus_service: str  # remote | none
    direction: str  # departure | arrival
    ramp: str
    pier: str
    main_ground_handler: str
    expected_on_ramp: datetime
    expected_off_ramp: datetime
    connecting_flight_nr: str
    connecting_flight_uid: str
    modified_at: datetime
    previous_ramp: str
    aircraft_registration: str
    flight_state: str
    mtt_minutes: int
    mtt_single_leg_minutes: int
    eu_indicator: bool
    safe_town_airport: str  # J | P
    scheduled_block: datetime
    best_block: datetime
    expected_block: datetime
    expected_tow_in: Optional[datetime]
    expected_tow_off: Optional[datetime]
    actual_final_approach: Optional[datetime]
    actual_block: Optional[datetime]
    actual_take_off: Optional[datetime]
    actual_boarding: Optional[datetime]
    actual_tow_in_request: Optional[datetime]
    actual_tow_off: Optional[datetime]
    actual_on_ramp: Optional[datetime]
    actual_off_ramp: Optional[datetime]
    flight_nature: str
    push_back: bool
    airline_name: str


# Column kinds drive CSV parsing, rendering, SQL schema, and graph properties.
# kinds: str, code (case-insensitive comparisons), ts, ts_opt, int, bool
FIELD_KINDS: dict[str, str] = {
    "flight_nr": "code",
    "flight_uid": "code",
    "aircraft_category": "str",
    "bus_gate": "code",
    "bus_service": "code",
    "direction": "code",
    "ramp": "code",
    "pier": "code",
    "main_ground_handler": "str",
    "expected_on_ramp": "ts",
    "expected_off_ramp": "ts",
    "connecting_flight_nr": "code",
    "connecting_flight_uid": "code",
    "modified_at": "ts",
    "previous_ramp": "code",
    "aircraft_registration": "code",
    "flight_state": "code",
    "mtt_minutes": "int",
    "mtt_single_leg_minutes": "int",
    "eu_indicator": "bool",
    "safe_town_airport": "code",
    "scheduled_block": "ts",
    "best_block": "ts",
    "expected_block": "ts",
    "expected_tow_in": "ts_opt",
    "expected_tow_off": "ts_opt",
    "actual_final_approach": "ts_opt",
    "actual_block": "ts_opt",
    "actual_take_off": "ts_opt",
    "actual_boarding": "ts_opt",
    "actual_tow_in_request": "ts_opt",
    "actual_tow_off": "ts_opt",
    "actual_on_ramp": "ts_opt",
    "actual_off_ramp": "ts_opt",
    "flight_nature": "str",
    "push_back": "bool",
    "airline_name": "str",
}

FIELD_NAMES: list[str] = list(FIELD_KINDS)

# Article clause labels, chosen to match question vocabulary ("ramp",
# "expected on-ramp time", ...). Rendering order is the map order.
FIELD_LABELS: dict[str, str] = {
    "flight_nr": "flight number",
    "flight_uid": "flight uid",
    "airline_name": "airline name",
    "aircraft_category": "aircraft category",
    "direction": "direction",
    "ramp": "ramp",
    "pier": "pier",
    "bus_gate": "bus gate",
    "bus_service": "bus service",
    "main_ground_handler": "main ground handler",
    "expected_on_ramp": "expected on-ramp time",
    "expected_off_ramp": "expected off-ramp time",
    "connecting_flight_nr": "connecting flight number",
    "connecting_flight_uid": "connecting flight uid",
    "scheduled_block": "scheduled block time",
    "best_block": "best block time",
    "expected_block": "expected block time",
    "expected_tow_in": "expected tow-in time",
    "expected_tow_off": "expected tow-off time",
    "actual_final_approach": "actual final approach time",
    "actual_block": "actual block time",
    "actual_take_off": "actual take-off time",
    "actual_boarding": "actual boarding time",
    "actual_tow_in_request": "actual tow-in request time",
    "actual_tow_off": "actual tow-off time",
    "actual_on_ramp": "actual on-ramp time",
    "actual_off_ramp": "actual off-ramp time",
    "previous_ramp": "previous ramp",
    "aircraft_registration": "aircraft registration",
    "flight_state": "flight state",
    "mtt_minutes": "minimum transfer time minutes",
    "mtt_single_leg_minutes": "mtt single leg minutes",
    "eu_indicator": "eu indicator",
    "safe_town_airport": "safe town airport",
    "flight_nature": "flight nature",
    "push_back": "push back",
    "modified_at": "modified at",
}

# Short glossary injected into answer-generation prompts so models interpret
# the more cryptic columns correctly.
FIELD_GLOSSARY: dict[str, str] = {
    "ramp": "the stand (gate position) where the aircraft parks, letter plus two digits",
    "bus_gate": "remote boarding gate used when passengers are bussed to the aircraft",
    "pier": "the terminal finger; the letter part of the ramp code",
    "expected_on_ramp": "when the aircraft is expected to arrive at its stand",
    "expected_off_ramp": "when the aircraft is expected to leave its stand",
    "connecting_flight_nr": "the airline-declared next flight of the same aircraft rotation",
    "mtt_minutes": "minimum transfer time in minutes",
    "scheduled_block": "scheduled block time of the flight",
    "safe_town_airport": "safe town airport indicator, J or P",
}


def format_ts(value: Optional[datetime]) -> str:
    """Render a timestamp in the canonical `YYYY-MM-DD HH:MM:SS+0000` form."""
    if value is None:
        return ""
    return value.astimezone(timezone.utc).strftime("%Y-%m-%d %H:%M:%S+0000")


def parse_ts(text: str) -> datetime:
    return datetime.strptime(text, TIMESTAMP_FORMAT)


def field_to_str(record: FlightRecord, field: str) -> str:
    """Canonical string form of one field, as used in CSV and articles."""
    kind = FIELD_KINDS[field]
    value = getattr(record, field)
    if kind in ("ts", "ts_opt"):
        return format_ts(value)
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


@dataclass(frozen=True)
class Article:
    doc_id: str
    text: str
    source_uid: str


class FlightStore:
    """Immutable, validated collection of flight records."""

    def __init__(self, records: Iterable[FlightRecord]):
        self._records: list[FlightRecord] = list(records)
        self._by_uid: dict[str, FlightRecord] = {}
        for r in self._records:
            key = r.flight_uid.upper()
            if key in self._by_uid:
                raise DuplicateUid(r.flight_uid)
            self._by_uid[key] = r

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    @property
    def records(self) -> list[FlightRecord]:
        return list(self._records)

    def by_uid(self, uid: str) -> Optional[FlightRecord]:
        return self._by_uid.get(uid.upper())

    def by_flight_nr(self, flight_nr: str) -> Optional[FlightRecord]:
        for r in self._records:
            if r.flight_nr.upper() == flight_nr.upper():
                return r
        return None

    def flight_numbers(self) -> set[str]:
        return {r.flight_nr for r in self._records}

    def gate_codes(self) -> set[str]:
        codes = set()
        for r in self._records:
            if r.ramp:
                codes.add(r.ramp)
            if r.bus_gate:
                codes.add(r.bus_gate)
        return codes


def _parse_row(row: dict[str, str], row_nr: int) -> FlightRecord:
    values: dict[str, object] = {}
    for name, kind in FIELD_KINDS.items():
        raw = (row.get(name) or "").strip()
        if kind == "ts":
            try:
                values[name] = parse_ts(raw)
            except ValueError:
                raise MalformedTimestamp(row_nr, name)
        elif kind == "ts_opt":
            if raw == "":
                values[name] = None
            else:
                try:
                    values[name] = parse_ts(raw)
                except ValueError:
                    raise MalformedTimestamp(row_nr, name)
        elif kind == "int":
            try:
                values[name] = int(raw)
            except ValueError:
                raise PatternViolation(row_nr, name)
            if values[name] < 0:
                raise PatternViolation(row_nr, name)
        elif kind == "bool":
            if raw.lower() not in ("true", "false"):
                raise PatternViolation(row_nr, name)
            values[name] = raw.lower() == "true"
        else:
            values[name] = raw
    record = FlightRecord(**values)  # type: ignore[arg-type]
    if not FLIGHT_NR_RE.match(record.flight_nr):
        raise PatternViolation(row_nr, "flight_nr")
    if record.ramp and not RAMP_RE.match(record.ramp):
        raise PatternViolation(row_nr, "ramp")
    if record.bus_service not in ("remote", "none"):
        raise PatternViolation(row_nr, "bus_service")
    if record.direction not in ("departure", "arrival"):
        raise PatternViolation(row_nr, "direction")
    if record.safe_town_airport not in ("J", "P"):
        raise PatternViolation(row_nr, "safe_town_airport")
    if record.expected_on_ramp >= record.expected_off_ramp:
        raise PatternViolation(row_nr, "expected_on_ramp")
    return record


def ingest_csv(path: str) -> FlightStore:
    """Load and validate a flight CSV (UTF-8, RFC-4180, header required)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return ingest_csv_text(fh.read())


def ingest_csv_text(text: str) -> FlightStore:
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for name in FIELD_NAMES:
        if name not in header:
            raise MissingColumn(name)
    records = []
    for i, row in enumerate(reader, start=2):  # header is line 1
        records.append(_parse_row(row, i))
    return FlightStore(records)


def to_csv(store: FlightStore) -> str:
    """Serialize a store back to the canonical CSV form."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FIELD_NAMES)
    for r in store:
        writer.writerow([field_to_str(r, f) for f in FIELD_NAMES])
    return out.getvalue()


def render_article(record: FlightRecord) -> Article:
    """Render one record as a retrievable text document.

    Deterministic, one clause per non-empty field; empty optionals are
    omitted entirely so they do not pollute keyword statistics.
    """
    clauses = []
    for field, label in FIELD_LABELS.items():
        text = field_to_str(record, field)
        if text == "":
            continue
        clauses.append(f"{label}: {text}")
    return Article(doc_id=record.flight_uid, text="; ".join(clauses), source_uid=record.flight_uid)


def render_articles(store: FlightStore) -> list[Article]:
    return [render_article(r) for r in store]


def lookup(store: FlightStore, field: str, value: str) -> list[FlightRecord]:
    """All records whose field equals value; case-insensitive for code fields."""
    if field not in FIELD_KINDS:
        raise UnknownField(field)
    kind = FIELD_KINDS[field]
    matches = []
    for r in store:
        stored = field_to_str(r, field)
        if kind == "code":
            if stored.upper() == value.upper():
                matches.append(r)
        elif stored == value:
            matches.append(r)
    return matches


def record_from_strings(values: dict[str, str]) -> FlightRecord:
    """Build a record from canonical string values (used by the generator)."""
    return _parse_row(values, 0)


assert [f.name for f in dc_fields(FlightRecord)] == FIELD_NAMES
