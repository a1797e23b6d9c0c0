"""Synthetic flight table and ground-truth QA dataset generation.

Everything here is a pure function of (inputs, seed): the same seed always
yields byte-identical stores and QA lists, which keeps retrieval and
pipeline tests reproducible offline.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, asdict
from datetime import datetime, timedelta, timezone

from .flight_store import (
    FlightRecord,
    FlightStore,
    format_ts,
    record_from_strings,
)

# (prefix, full name, colloquial short name)
AIRLINES: list[tuple[str, str, str]] = [
    ("KL", "KLM Royal Dutch Airlines", "KLM"),
    ("DL", "Delta Air Lines", "Delta"),
    ("HV", "Transavia Airlines", "Transavia"),
    ("LH", "Lufthansa", "Lufthansa"),
    ("AF", "Air France", "Air France"),
    ("BA", "British Airways", "British Airways"),
    ("VY", "Vueling Airlines", "Vueling"),
    ("IB", "Iberia", "Iberia"),
]

AIRLINE_PREFIXES = {prefix for prefix, _, _ in AIRLINES}
AIRLINE_NAME_BY_PREFIX = {prefix: name for prefix, name, _ in AIRLINES}

PIER_LETTERS = "ABCDEFGH"
RAMP_NUMBERS = range(1, 26)

AIRCRAFT_CATEGORIES = ["narrow-body", "wide-body", "regional jet", "turboprop"]
GROUND_HANDLERS = ["Aviapartner", "Swissport", "Menzies", "dnata"]
FLIGHT_STATES = ["scheduled", "boarding", "departed", "arrived", "delayed"]
FLIGHT_NATURES = ["passenger", "cargo", "charter"]

_BASE_TIME = datetime(2023, 5, 14, 0, 0, 0, tzinfo=timezone.utc)


class EmptyStore(Exception):
    pass


class NoConnectingFlights(Exception):
    pass


@dataclass(frozen=True)
class QaPair:
    question: str
    answer: str
    category: str  # TAQ/BGQ/NFQ/TWAQ/BQA/AFQ or "straightforward"
    grounding_uid: str
    template_id: str
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def qa_to_jsonl(pairs: list[QaPair]) -> str:
    return "".join(p.to_json() + "\n" for p in pairs)


def qa_from_jsonl(text: str) -> list[QaPair]:
    pairs = []
    for line in text.splitlines():
        if not line.strip():
            continue
        pairs.append(QaPair(**json.loads(line)))
    return pairs


def _registration(rng: random.Random) -> str:
    return "PH-" + "".join(rng.choice("ABCDEFGHJKLMNPRSTUVWXYZ") for _ in range(3))


def generate_flights(n: int, seed: int, connect_fraction: float = 0.3) -> FlightStore:
    """Generate ``n`` synthetic flights; deterministic for a fixed seed.

    Flight digit blocks are unique across the whole store (so a bare
    "0164" identifies exactly one flight), ramps come from a pier-letter
    plus two-digit grid, and a configurable fraction of flights receive a
    connecting flight of the same airline departing later. Roughly a tenth
    of ramp codes are additionally reused as a bus gate of a different
    flight to create genuine gate/ramp ambiguity.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = random.Random(seed)
    if n == 0:
        return FlightStore([])
    numbers = rng.sample(range(100, 10000), n)

    rows: list[dict[str, str]] = []
    for num in numbers:
        prefix, airline_name, _short = AIRLINES[rng.randrange(len(AIRLINES))]
        digits = f"{num:04d}"
        pier = PIER_LETTERS[rng.randrange(len(PIER_LETTERS))]
        ramp = f"{pier}{rng.choice(list(RAMP_NUMBERS)):02d}"
        scheduled = _BASE_TIME + timedelta(minutes=rng.randrange(0, 3 * 24 * 60))
        on_ramp = scheduled - timedelta(minutes=45)
        off_ramp = scheduled + timedelta(minutes=30)
        remote = rng.random() < 0.2
        row = {
            "flight_nr": prefix + digits,
            "flight_uid": "UID-" + digits,
            "aircraft_category": rng.choice(AIRCRAFT_CATEGORIES),
            "bus_gate": "",
            "bus_service": "remote" if remote else "none",
            "direction": rng.choice(["departure", "arrival"]),
            "ramp": ramp,
            "pier": pier,
            "main_ground_handler": rng.choice(GROUND_HANDLERS),
            "expected_on_ramp": format_ts(on_ramp),
            "expected_off_ramp": format_ts(off_ramp),
            "connecting_flight_nr": "",
            "connecting_flight_uid": "",
            "modified_at": format_ts(scheduled - timedelta(hours=24)),
            "previous_ramp": f"{pier}{rng.choice(list(RAMP_NUMBERS)):02d}" if rng.random() < 0.3 else "",
            "aircraft_registration": _registration(rng),
            "flight_state": rng.choice(FLIGHT_STATES),
            "mtt_minutes": str(rng.randrange(30, 91)),
            "mtt_single_leg_minutes": str(rng.randrange(20, 61)),
            "eu_indicator": "true" if rng.random() < 0.6 else "false",
            "safe_town_airport": rng.choice(["J", "P"]),
            "scheduled_block": format_ts(scheduled),
            "best_block": format_ts(scheduled),
            "expected_block": format_ts(scheduled + timedelta(minutes=rng.randrange(0, 10))),
            "expected_tow_in": "",
            "expected_tow_off": "",
            "actual_final_approach": "",
            "actual_block": "",
            "actual_take_off": "",
            "actual_boarding": "",
            "actual_tow_in_request": "",
            "actual_tow_off": "",
            "actual_on_ramp": "",
            "actual_off_ramp": "",
            "flight_nature": rng.choice(FLIGHT_NATURES),
            "push_back": "true" if rng.random() < 0.5 else "false",
            "airline_name": airline_name,
        }
        if remote:
            row["bus_gate"] = f"{pier}{rng.choice(list(RAMP_NUMBERS)):02d}"
        if row["flight_state"] in ("departed", "arrived"):
            row["actual_on_ramp"] = format_ts(on_ramp + timedelta(minutes=rng.randrange(-5, 15)))
            row["actual_block"] = format_ts(scheduled + timedelta(minutes=rng.randrange(-5, 20)))
        rows.append(row)

    # Reuse ~10% of ramp codes as the bus gate of a different flight so a
    # bare gate token can mean either a ramp or a bus gate.
    ramp_codes = sorted({row["ramp"] for row in rows})
    reused = rng.sample(ramp_codes, max(1, len(ramp_codes) // 10)) if len(rows) > 1 else []
    remote_rows = [row for row in rows if row["bus_service"] == "remote"]
    for code, row in zip(reused, remote_rows):
        if row["ramp"] != code:
            row["bus_gate"] = code

    # Same-airline rotations: connect each chosen flight to the next later
    # departure of its airline.
    by_airline: dict[str, list[dict[str, str]]] = {}
    for row in rows:
        by_airline.setdefault(row["flight_nr"][:2], []).append(row)
    for airline_rows in by_airline.values():
        airline_rows.sort(key=lambda row: (row["scheduled_block"], row["flight_uid"]))
        for earlier, later in zip(airline_rows, airline_rows[1:]):
            if rng.random() < connect_fraction:
                earlier["connecting_flight_nr"] = later["flight_nr"]
                earlier["connecting_flight_uid"] = later["flight_uid"]

    return FlightStore([record_from_strings(row) for row in rows])


# --- straightforward questions -------------------------------------------

# template_id -> (question format, answered field)
STRAIGHTFORWARD_TEMPLATES: dict[str, tuple[str, str]] = {
    "sf_category": ("What category of aircraft is designated for flight {flight_nr}?", "aircraft_category"),
    "sf_ramp": ("Which ramp is assigned for flight {flight_nr}?", "ramp"),
    "sf_on_ramp": ("What time is the expected on-ramp for flight {flight_nr}?", "expected_on_ramp"),
    "sf_off_ramp": ("What is the expected off-ramp time for flight {flight_nr}?", "expected_off_ramp"),
    "sf_airline": ("Which airline operates flight {flight_nr}?", "airline_name"),
    "sf_handler": ("Who is the main ground handler for flight {flight_nr}?", "main_ground_handler"),
    "sf_pier": ("At which pier is flight {flight_nr}?", "pier"),
    "sf_direction": ("Is flight {flight_nr} a departure or an arrival?", "direction"),
    "sf_registration": ("What is the aircraft registration for flight {flight_nr}?", "aircraft_registration"),
    "sf_scheduled": ("What is the scheduled block time for flight {flight_nr}?", "scheduled_block"),
}

CLARIFICATION_ANSWER = "clarification-required"


def straightforward_answer(store: FlightStore, template_id: str, record: FlightRecord) -> str:
    from .flight_store import field_to_str

    field = STRAIGHTFORWARD_TEMPLATES[template_id][1]
    return field_to_str(record, field)


def generate_straightforward(store: FlightStore, n: int, seed: int) -> list[QaPair]:
    """Fill straightforward templates with real values from the store."""
    if len(store) == 0:
        raise EmptyStore()
    rng = random.Random(seed)
    template_ids = list(STRAIGHTFORWARD_TEMPLATES)
    records = store.records
    pairs = []
    for i in range(n):
        template_id = template_ids[i % len(template_ids)]
        record = records[rng.randrange(len(records))]
        fmt, _field = STRAIGHTFORWARD_TEMPLATES[template_id]
        pairs.append(
            QaPair(
                question=fmt.format(flight_nr=record.flight_nr),
                answer=straightforward_answer(store, template_id, record),
                category="straightforward",
                grounding_uid=record.flight_uid,
                template_id=template_id,
                seed=seed,
            )
        )
    return pairs


# --- ambiguous questions --------------------------------------------------


def flights_at_gate(store: FlightStore, gate: str) -> list[FlightRecord]:
    gate = gate.upper()
    return [r for r in store if r.ramp.upper() == gate or r.bus_gate.upper() == gate]


def _gate_answer(store: FlightStore, gate: str) -> str:
    nrs = sorted(r.flight_nr for r in flights_at_gate(store, gate))
    return ", ".join(nrs)


# Each entry: (template_id, category, question builder, answer builder).
# "Confusable" variants deliberately carry a marker of the sibling category
# (a time word on a gate question, "when" on an airline question); a rules
# classifier lands in the paired category, which the evaluation tolerates.
def _ambiguous_templates():
    def taq_q(r):
        ts = format_ts(r.scheduled_block - timedelta(hours=1))
        gate = r.bus_gate or r.ramp
        return f"It is now {ts}. Which flight is at gate {gate}?"

    def taq2_q(r):
        gate = r.bus_gate or r.ramp
        return f"Which flight is currently at gate {gate}?"

    def bgq_q(r):
        gate = r.bus_gate or r.ramp
        return f"What's at {gate}?"

    def bgq2_q(r):
        gate = r.bus_gate or r.ramp
        return f"Which flights are at {gate}?"

    def bgq_conf_q(r):  # time word on a gate question -> rules say TAQ
        gate = r.bus_gate or r.ramp
        return f"Which flights are at {gate} right now?"

    def nfq_q(r):
        return f"What is {r.flight_nr}'s next flight from the same ramp?"

    def nfq2_q(r):
        return f"What is the connecting flight of {r.flight_nr}?"

    def short(r):
        return next(s for p, _n, s in AIRLINES if p == r.flight_nr[:2])

    def twaq_q(r):
        return f"When is {short(r)} landing?"

    def twaq2_q(r):
        return f"Is {short(r)} departing soon?"

    def bqa_q(r):
        return f"Where is the {short(r)}?"

    def bqa2_q(r):
        return f"{short(r)}, any information?"

    def bqa_conf_q(r):  # "when" on an airline question -> rules say TWAQ
        return f"{short(r)}, any information on when it boards?"

    def afq_q(r):
        return f"Which gate is assigned to the {r.flight_nr[2:]} flight?"

    def afq2_q(r):
        return f"At what gate is the {r.flight_nr[2:]}?"

    def gate_flights(store, r):
        return _gate_answer(store, r.bus_gate or r.ramp)

    def taq_answer(store, r):
        return r.flight_nr

    def clarif(store, r):
        return CLARIFICATION_ANSWER

    def nfq_ramp_answer(store, r):
        nxt = next_flight_same_ramp(store, r)
        return nxt.flight_nr if nxt else "none"

    def nfq_conn_answer(store, r):
        return r.connecting_flight_nr or "none"

    return [
        ("taq_timed", "TAQ", taq_q, taq_answer),
        ("taq_now", "TAQ", taq2_q, gate_flights),
        ("bgq_short", "BGQ", bgq_q, gate_flights),
        ("bgq_flights", "BGQ", bgq2_q, gate_flights),
        ("bgq_confusable", "BGQ", bgq_conf_q, gate_flights),
        ("nfq_ramp", "NFQ", nfq_q, nfq_ramp_answer),
        ("nfq_connecting", "NFQ", nfq2_q, nfq_conn_answer),
        ("twaq_landing", "TWAQ", twaq_q, clarif),
        ("twaq_soon", "TWAQ", twaq2_q, clarif),
        ("bqa_where", "BQA", bqa_q, clarif),
        ("bqa_info", "BQA", bqa2_q, clarif),
        ("bqa_confusable", "BQA", bqa_conf_q, clarif),
        ("afq_gate", "AFQ", afq_q, clarif),
        ("afq_short", "AFQ", afq2_q, clarif),
    ]


AMBIGUOUS_CATEGORIES = ["TAQ", "BGQ", "NFQ", "TWAQ", "BQA", "AFQ"]

# Share of confusable variants within their category's draw; tuned so the
# rules classifier stays above 90% on the classification set.
_CONFUSABLE_SHARE = 0.25


def generate_ambiguous(store: FlightStore, n: int, seed: int) -> list[QaPair]:
    """Emit labeled questions across all six ambiguity categories."""
    if len(store) == 0:
        raise EmptyStore()
    rng = random.Random(seed)
    templates = _ambiguous_templates()
    by_category: dict[str, list] = {}
    for entry in templates:
        by_category.setdefault(entry[1], []).append(entry)
    records = store.records
    pairs = []
    for i in range(n):
        category = AMBIGUOUS_CATEGORIES[i % len(AMBIGUOUS_CATEGORIES)]
        options = by_category[category]
        plain = [t for t in options if not t[0].endswith("confusable")]
        confusable = [t for t in options if t[0].endswith("confusable")]
        if confusable and rng.random() < _CONFUSABLE_SHARE:
            template_id, _cat, q_fn, a_fn = confusable[0]
        else:
            template_id, _cat, q_fn, a_fn = plain[rng.randrange(len(plain))]
        record = records[rng.randrange(len(records))]
        pairs.append(
            QaPair(
                question=q_fn(record),
                answer=a_fn(store, record),
                category=category,
                grounding_uid=record.flight_uid,
                template_id=template_id,
                seed=seed,
            )
        )
    return pairs


# --- reasoning questions --------------------------------------------------


def next_flight_same_ramp(store: FlightStore, record: FlightRecord):
    """Brute-force next flight at the same ramp: minimal strictly-later
    expected on-ramp time, ties broken by flight_uid."""
    candidates = [
        r
        for r in store
        if r.ramp.upper() == record.ramp.upper()
        and r.expected_on_ramp > record.expected_on_ramp
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda r: (r.expected_on_ramp, r.flight_uid))


def generate_reasoning(store: FlightStore, n: int = 30, seed: int = 0) -> list[QaPair]:
    """Two reasoning families: connecting-flight hop and next-at-ramp scan."""
    rng = random.Random(seed)
    connected = [r for r in store if r.connecting_flight_nr]
    if not connected:
        raise NoConnectingFlights()
    with_next = [r for r in store if next_flight_same_ramp(store, r) is not None]
    pairs = []
    for i in range(n):
        if i % 2 == 0:
            record = connected[rng.randrange(len(connected))]
            target = store.by_flight_nr(record.connecting_flight_nr)
            assert target is not None
            pairs.append(
                QaPair(
                    question=f"What is the expected on-ramp time for the connecting flight of {record.flight_nr}?",
                    answer=format_ts(target.expected_on_ramp),
                    category="NFQ",
                    grounding_uid=record.flight_uid,
                    template_id="reason_connecting_onramp",
                    seed=seed,
                )
            )
        else:
            record = with_next[rng.randrange(len(with_next))]
            nxt = next_flight_same_ramp(store, record)
            assert nxt is not None
            pairs.append(
                QaPair(
                    question=f"What is {record.flight_nr}'s next flight from the same ramp?",
                    answer=nxt.flight_nr,
                    category="NFQ",
                    grounding_uid=record.flight_uid,
                    template_id="reason_next_at_ramp",
                    seed=seed,
                )
            )
    return pairs


# --- classification few-shot / eval sets ---------------------------------


def generate_fewshot_classification(store: FlightStore, n: int = 60, seed: int = 1) -> list[QaPair]:
    """Clean (non-confusable) labeled examples for few-shot classification."""
    pairs = generate_ambiguous(store, n * 2, seed)
    clean = [p for p in pairs if not p.template_id.endswith("confusable")]
    return clean[:n]


def generate_classification_set(store: FlightStore, n: int = 220, seed: int = 2) -> list[QaPair]:
    return generate_ambiguous(store, n, seed)
