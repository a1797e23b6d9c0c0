"""Traditional retrieve-then-generate pipeline with a grounding guard.

The guard does entity-membership checking, not semantic fact checking:
any flight number, gate/ramp code, airline name, or timestamp in the
answer that appears in neither the retrieved evidence nor the flight
store is treated as fabricated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import llm as llm_mod
from . import prompting
from .flight_store import Article, FlightStore, parse_ts
from .retrieval import IndexBundle, search
from .router import AIRLINE_LEXICON


@dataclass(frozen=True)
class EntityFlag:
    entity: str
    kind: str  # flight_nr | gate | airline | timestamp


@dataclass(frozen=True)
class RagAnswer:
    text: str
    evidence_doc_ids: list[str]
    pipeline: str  # traditional | sql | graph
    flags: list[EntityFlag] = field(default_factory=list)
    needs_clarification: bool = False
    category: str = ""
    query_text: str = ""

    @property
    def flagged_hallucination(self) -> bool:
        return bool(self.flags)


_FLIGHT_NR_RE = re.compile(r"\b[A-Z]{2,3}\d{3,4}\b")
_GATE_RE = re.compile(r"\b[A-Z]\d{2}\b")
_TIMESTAMP_RE = re.compile(r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2}\+\d{4}")


def _extract_entities(text: str) -> list[EntityFlag]:
    entities = []
    seen = set()
    for m in _FLIGHT_NR_RE.finditer(text):
        if m.group(0) not in seen:
            seen.add(m.group(0))
            entities.append(EntityFlag(m.group(0), "flight_nr"))
    for m in _GATE_RE.finditer(text):
        if m.group(0) not in seen:
            seen.add(m.group(0))
            entities.append(EntityFlag(m.group(0), "gate"))
    for name in AIRLINE_LEXICON:
        if re.search(rf"\b{re.escape(name)}\b", text) and name not in seen:
            seen.add(name)
            entities.append(EntityFlag(name, "airline"))
    for m in _TIMESTAMP_RE.finditer(text):
        if m.group(0) not in seen:
            seen.add(m.group(0))
            entities.append(EntityFlag(m.group(0), "timestamp"))
    return entities


def _timestamp_known(value: str, evidence_text: str, store: FlightStore) -> bool:
    try:
        instant = parse_ts(value)
    except ValueError:
        return False
    for m in _TIMESTAMP_RE.finditer(evidence_text):
        try:
            if parse_ts(m.group(0)) == instant:
                return True
        except ValueError:
            continue
    from .flight_store import FIELD_KINDS

    for record in store:
        for name, kind in FIELD_KINDS.items():
            if kind in ("ts", "ts_opt"):
                stored = getattr(record, name)
                if stored is not None and stored == instant:
                    return True
    return False


def guard_hallucination(
    answer_text: str,
    evidence: list[Article],
    store: FlightStore,
) -> tuple[list[EntityFlag], str]:
    """Flag answer entities absent from both evidence and store.

    Returns (flags, sanitized_text); when flagged, the sanitized text is a
    refusal enumerating only verified evidence entities.
    """
    evidence_text = "\n".join(a.text for a in evidence)
    evidence_upper = evidence_text.upper()
    flight_nrs = {nr.upper() for nr in store.flight_numbers()}
    gate_codes = {g.upper() for g in store.gate_codes()} | {
        r.pier.upper() for r in store if r.pier
    }
    airline_names = {r.airline_name for r in store}

    flags = []
    verified = []
    for entity in _extract_entities(answer_text):
        token_upper = entity.entity.upper()
        in_evidence = token_upper in evidence_upper
        if entity.kind == "flight_nr":
            known = in_evidence or token_upper in flight_nrs
        elif entity.kind == "gate":
            known = in_evidence or token_upper in gate_codes
        elif entity.kind == "airline":
            known = (
                in_evidence
                or entity.entity in airline_names
                or any(entity.entity.lower() in name.lower() for name in airline_names)
            )
        else:
            known = _timestamp_known(entity.entity, evidence_text, store)
        if known:
            verified.append(entity.entity)
        else:
            flags.append(entity)

    if not flags:
        return [], answer_text
    flagged_list = ", ".join(f.entity for f in flags)
    verified_list = ", ".join(verified) if verified else "none"
    sanitized = (
        f"I cannot confirm the following from the flight data: {flagged_list}. "
        f"Verified information in the retrieved evidence: {verified_list}. "
        "Please verify with the flight information system before acting on this."
    )
    return flags, sanitized


def answer_traditional(
    question: str,
    index: IndexBundle,
    store: FlightStore,
    llm: Optional[llm_mod.LlmHandle],
    k: int = 10,
    method: str = "bm25",
    guard: bool = True,
    fewshot: list[tuple[str, str]] | None = None,
) -> RagAnswer:
    """Retrieve top-k articles, generate an answer, apply the guard."""
    ranked = search(index, method, question, k)
    evidence = [
        Article(doc_id=d, text=index.texts[d], source_uid=d) for d in ranked.doc_ids
    ]
    articles_block = "\n".join(f"- {a.text}" for a in evidence) or "(no articles retrieved)"
    prompt = prompting.render(
        prompting.TEMPLATES["answer_gen"],
        {
            "glossary": prompting.glossary_text(),
            "articles": articles_block,
            "question": question,
        },
        fewshot=fewshot or [],
    )
    if llm is None:
        raise llm_mod.LlmUnavailable("no llm configured for traditional pipeline")
    text = llm_mod.complete(llm, "You answer airport flight questions.", prompt)
    flags: list[EntityFlag] = []
    if guard:
        flags, text = guard_hallucination(text, evidence, store)
    return RagAnswer(
        text=text,
        evidence_doc_ids=ranked.doc_ids,
        pipeline="traditional",
        flags=flags,
    )
