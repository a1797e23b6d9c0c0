"""Scripted-LLM fixture construction from generated QA datasets.

Builds deterministic fixture rules so every pipeline can run fully
offline: gold SQL / graph queries are derived from each question's
template, and classification responses replay the rules classifier so
scripted and rules-based classification agree by construction.

A slice of the query responses are deliberate near-misses (swapped OR
operands, renamed query variables) that execute to the same result but
normalize differently, so exact-match and execution-match metrics stay
distinguishable under the scripted provider.
"""

from __future__ import annotations

import zlib

from .datagen import CLARIFICATION_ANSWER, STRAIGHTFORWARD_TEMPLATES, QaPair
from .flight_store import FlightStore
from .llm import FixtureRule
from .router import CATEGORY_BY_NAME, classify_rules


class UnknownTemplate(Exception):
    def __init__(self, template_id: str):
        super().__init__(f"no gold query for template: {template_id}")


def _variant(question: str, share_pct: int) -> bool:
    """Deterministic pseudo-coin: True for roughly share_pct% of questions."""
    return zlib.crc32(question.encode("utf-8")) % 100 < share_pct


def _record(store: FlightStore, pair: QaPair):
    record = store.by_uid(pair.grounding_uid)
    if record is None:
        raise UnknownTemplate(pair.template_id)
    return record


def gold_sql_for(pair: QaPair, store: FlightStore) -> str:
    """Reference SQL answering the pair's question, derived from its template."""
    tid = pair.template_id
    record = _record(store, pair)
    nr = record.flight_nr
    gate = record.bus_gate or record.ramp
    if tid in STRAIGHTFORWARD_TEMPLATES:
        column = STRAIGHTFORWARD_TEMPLATES[tid][1]
        return f"SELECT {column} FROM flights WHERE flight_nr = '{nr}'"
    if tid == "taq_timed":
        from .flight_store import format_ts

        ts = format_ts(record.scheduled_block)
        return (
            f"SELECT flight_nr FROM flights WHERE (ramp = '{gate}' "
            f"OR bus_gate = '{gate}') AND scheduled_block = '{ts}'"
        )
    if tid in ("taq_now", "bgq_short", "bgq_flights", "bgq_confusable"):
        return f"SELECT flight_nr FROM flights WHERE ramp = '{gate}' OR bus_gate = '{gate}'"
    if tid == "nfq_connecting":
        return f"SELECT connecting_flight_nr FROM flights WHERE flight_nr = '{nr}'"
    if tid in ("nfq_ramp", "reason_next_at_ramp"):
        return (
            "SELECT b.flight_nr FROM flights AS a JOIN flights AS b ON a.ramp = b.ramp "
            f"WHERE a.flight_nr = '{nr}' AND b.expected_on_ramp > a.expected_on_ramp "
            "ORDER BY b.expected_on_ramp ASC LIMIT 1"
        )
    if tid == "reason_connecting_onramp":
        return (
            "SELECT b.expected_on_ramp FROM flights AS a JOIN flights AS b "
            f"ON a.connecting_flight_nr = b.flight_nr WHERE a.flight_nr = '{nr}'"
        )
    raise UnknownTemplate(tid)


def gold_graph_for(pair: QaPair, store: FlightStore) -> str:
    """Reference graph query answering the pair's question."""
    tid = pair.template_id
    record = _record(store, pair)
    nr = record.flight_nr
    gate = record.bus_gate or record.ramp
    anchor = f"(f:Flight {{flight_nr: '{nr}'}})"
    if tid == "sf_ramp":
        return f"MATCH {anchor}-[:AT_RAMP]->(r:Ramp) RETURN r.code"
    if tid == "sf_pier":
        return f"MATCH {anchor}-[:AT_PIER]->(p:Pier) RETURN p.code"
    if tid == "sf_airline":
        return f"MATCH {anchor}-[:OPERATED_BY]->(a:Airline) RETURN a.name"
    if tid in STRAIGHTFORWARD_TEMPLATES:
        prop = STRAIGHTFORWARD_TEMPLATES[tid][1]
        return f"MATCH {anchor} RETURN f.{prop}"
    if tid in ("taq_timed", "taq_now", "bgq_short", "bgq_flights", "bgq_confusable"):
        return (
            f"MATCH (f:Flight)-[:AT_RAMP]->(r:Ramp {{code: '{gate}'}}) RETURN f.flight_nr"
        )
    if tid == "nfq_connecting":
        return f"MATCH {anchor}-[:CONNECTS_TO]->(g:Flight) RETURN g.flight_nr"
    if tid in ("nfq_ramp", "reason_next_at_ramp"):
        return f"MATCH {anchor}-[:NEXT_AT_RAMP]->(g:Flight) RETURN g.flight_nr"
    if tid == "reason_connecting_onramp":
        return f"MATCH {anchor}-[:CONNECTS_TO]->(g:Flight) RETURN g.expected_on_ramp"
    raise UnknownTemplate(tid)


GATE_TEMPLATES = ("taq_timed", "taq_now", "bgq_short", "bgq_flights", "bgq_confusable")


def gold_graph_queries_for(pair: QaPair, store: FlightStore) -> list[str]:
    """All graph queries needed to answer the pair.

    A bare gate code can name a ramp or a bus gate, so gate questions need
    one query per relation; everything else is a single query.
    """
    if pair.template_id in GATE_TEMPLATES:
        record = _record(store, pair)
        gate = record.bus_gate or record.ramp
        return [
            f"MATCH (f:Flight)-[:AT_RAMP]->(r:Ramp {{code: '{gate}'}}) RETURN f.flight_nr",
            f"MATCH (f:Flight)-[:AT_BUS_GATE]->(b:BusGate {{code: '{gate}'}}) RETURN f.flight_nr",
        ]
    return [gold_graph_for(pair, store)]


def _swap_or(sql: str) -> str:
    """Swap the two operands of the single OR in a gate query (same result set)."""
    if " OR " not in sql or "(" in sql.partition(" WHERE ")[2]:
        return sql
    head, _, tail = sql.partition(" WHERE ")
    cond, _, rest = tail.partition(" OR ")
    return f"{head} WHERE {rest} OR {cond}"


def _rename_vars(query: str) -> str:
    out = query
    for old, new in (("(f:", "(x:"), ("f.", "x."), ("(g:", "(y:"), ("g.", "y."),
                     ("(r:", "(z:"), ("r.", "z.")):
        out = out.replace(old, new)
    return out


def classification_rules(pairs: list[QaPair]) -> list[FixtureRule]:
    rules = []
    seen: set[str] = set()
    for pair in pairs:
        if pair.question in seen:
            continue
        seen.add(pair.question)
        digit = int(classify_rules(pair.question))
        rules.append(
            FixtureRule(
                match=(f"Question to classify: {pair.question}\nCategory:",),
                response=f"['{digit}']",
            )
        )
    return rules


def sql_rules(pairs: list[QaPair], store: FlightStore, style: str = "odp",
              miss_pct: int = 20) -> list[FixtureRule]:
    rules = []
    for pair in pairs:
        if pair.answer == CLARIFICATION_ANSWER:
            continue
        gold = gold_sql_for(pair, store)
        if _variant(pair.question, miss_pct):
            if " OR " in gold:
                gold = _swap_or(gold)
            else:
                gold = gold.replace(
                    "FROM flights WHERE flight_nr", "FROM flights AS f WHERE f.flight_nr"
                )
        marker = (
            f"### SQL question: {pair.question}\n"
            if style == "odp"
            else f"/* SQL question: {pair.question} */"
        )
        rules.append(FixtureRule(match=(marker,), response=gold))
    return rules


def graph_rules(pairs: list[QaPair], store: FlightStore,
                rename_pct: int = 80) -> list[FixtureRule]:
    rules = []
    for pair in pairs:
        if pair.answer == CLARIFICATION_ANSWER:
            continue
        gold = gold_graph_for(pair, store)
        if _variant(pair.question, rename_pct):
            gold = _rename_vars(gold)
        rules.append(
            FixtureRule(match=(f"Graph question: {pair.question}\nQuery:",), response=gold)
        )
    return rules


def answer_rules(pairs: list[QaPair], store: FlightStore) -> list[FixtureRule]:
    """Grounded natural-language responses for the retrieve-then-generate path."""
    rules = []
    for pair in pairs:
        if pair.answer == CLARIFICATION_ANSWER:
            continue
        record = _record(store, pair)
        if pair.template_id in STRAIGHTFORWARD_TEMPLATES:
            text = f"For flight {record.flight_nr}, the answer is {pair.answer}."
        elif pair.answer in ("", "none"):
            text = "No matching flight information was found in the articles."
        else:
            text = f"The flight data lists: {pair.answer}."
        rules.append(
            FixtureRule(match=(f"Question to answer: {pair.question}\nAnswer:",), response=text)
        )
    return rules


def build_engine_rules(
    store: FlightStore,
    classification_pairs: list[QaPair],
    query_pairs: list[QaPair],
    sql_style: str = "odp",
) -> list[FixtureRule]:
    """Everything one scripted engine run needs, in one first-match-wins list.

    classification_pairs feed the router; query_pairs (straightforward,
    gate, and reasoning questions) feed translation and answer generation.
    """
    rules: list[FixtureRule] = []
    rules += classification_rules(classification_pairs)
    rules += classification_rules(
        [p for p in query_pairs if p.question not in {c.question for c in classification_pairs}]
    )
    rules += sql_rules(query_pairs, store, style=sql_style)
    rules += graph_rules(query_pairs, store)
    rules += answer_rules(query_pairs, store)
    return rules
