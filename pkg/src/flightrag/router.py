"""Question classification, slot extraction, and routing decisions.

Six ambiguity categories plus straightforward. The LLM classifier parses a
bracketed digit response; anything unparseable falls back to the
deterministic rules classifier so routing is total.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

from . import llm as llm_mod
from . import prompting
from .datagen import AIRLINES, AIRLINE_PREFIXES, QaPair


class QuestionCategory(IntEnum):
    STRAIGHTFORWARD = 0
    TAQ = 1  # time ambiguous
    BGQ = 2  # board gate
    NFQ = 3  # next flight
    TWAQ = 4  # time with airline
    BQA = 5  # board question of aircraft
    AFQ = 6  # ambiguous flight number


CATEGORY_NAMES = {c: c.name for c in QuestionCategory}
CATEGORY_BY_NAME = {c.name: c for c in QuestionCategory}
CATEGORY_BY_NAME["straightforward"] = QuestionCategory.STRAIGHTFORWARD


@dataclass(frozen=True)
class ExtractionResult:
    gate: Optional[str] = None
    airline: Optional[str] = None
    partial_number: Optional[str] = None
    flight_nr: Optional[str] = None

    @property
    def sentinel_zero(self) -> bool:
        return (
            self.gate is None
            and self.airline is None
            and self.partial_number is None
            and self.flight_nr is None
        )


@dataclass(frozen=True)
class RouteDecision:
    category: QuestionCategory
    action: str  # direct_answer | gate_retrieval | next_flight | clarify | partial_number_clarify
    extraction: ExtractionResult
    clarification_text: str = ""


TIME_WORDS = [
    "currently",
    "at this moment",
    "right now",
    "now",
    "when",
    "last hour",
    "next hour",
    "later",
    "soon",
    "a while",
    "one hour ago",
]
_TIMESTAMP_RE = re.compile(r"\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}:\d{2}(?:\+\d{4})?")
_FULL_FLIGHT_RE = re.compile(r"\b([A-Z]{1,3})(\d{1,4})\b")
_PARTIAL_NUMBER_RE = re.compile(r"\b(\d{3,4})\b")
_GATE_RE = re.compile(r"\b([A-Za-z])(\d{1,2})\b")
_NEXT_WORDS_RE = re.compile(r"\b(next|connecting|connection)\b", re.IGNORECASE)

AIRLINE_LEXICON = sorted(
    {name for _p, name, _s in AIRLINES}
    | {short for _p, _n, short in AIRLINES}
    | {"EasyJet", "KLM Royal Dutch Airlines"}
)


def _strip_timestamps(question: str) -> str:
    return _TIMESTAMP_RE.sub(" ", question)


def _has_time_reference(question: str) -> bool:
    if _TIMESTAMP_RE.search(question):
        return True
    lowered = question.lower()
    return any(re.search(rf"\b{re.escape(w)}\b", lowered) for w in TIME_WORDS)


def find_full_flight_nr(question: str) -> Optional[str]:
    for m in _FULL_FLIGHT_RE.finditer(_strip_timestamps(question)):
        if m.group(1) in AIRLINE_PREFIXES:
            return m.group(0)
    return None


def find_airline(question: str) -> Optional[str]:
    lowered = question.lower()
    for name in AIRLINE_LEXICON:
        if name.lower() in lowered:
            return name
    return None


def find_gate_code(question: str) -> Optional[str]:
    for m in _GATE_RE.finditer(_strip_timestamps(question)):
        letter = m.group(1).upper()
        code = letter + m.group(2)
        if code.upper() in AIRLINE_PREFIXES:
            continue
        return letter + m.group(2).zfill(2)
    return None


def find_partial_number(question: str) -> Optional[str]:
    m = _PARTIAL_NUMBER_RE.search(_strip_timestamps(question))
    return m.group(1) if m else None


def classify_rules(question: str) -> QuestionCategory:
    """Deterministic category from lexical patterns; always returns a value."""
    has_time = _has_time_reference(question)
    full_nr = find_full_flight_nr(question)
    if full_nr:
        if _NEXT_WORDS_RE.search(question):
            return QuestionCategory.NFQ
        return QuestionCategory.STRAIGHTFORWARD
    if find_partial_number(question):
        return QuestionCategory.AFQ
    if find_airline(question):
        return QuestionCategory.TWAQ if has_time else QuestionCategory.BQA
    if find_gate_code(question):
        return QuestionCategory.TAQ if has_time else QuestionCategory.BGQ
    if _NEXT_WORDS_RE.search(question):
        return QuestionCategory.NFQ
    if has_time:
        return QuestionCategory.TAQ
    return QuestionCategory.STRAIGHTFORWARD


_BRACKET_DIGIT_RE = re.compile(r"\[\s*'?([0-6])'?\s*\]")


def classify(
    question: str,
    llm: Optional[llm_mod.LlmHandle],
    fewshot: list[QaPair] | None = None,
    allow_fallback: bool = True,
) -> QuestionCategory:
    """Few-shot LLM classification with a rules fallback."""
    if llm is None:
        return classify_rules(question)
    examples = [
        (p.question, str(int(CATEGORY_BY_NAME[p.category]))) for p in (fewshot or [])
    ]
    prompt = prompting.render(
        prompting.TEMPLATES["classification"], {"question": question}, fewshot=examples
    )
    try:
        response = llm_mod.complete(llm, "You classify airport questions.", prompt)
    except llm_mod.LlmError:
        if allow_fallback:
            return classify_rules(question)
        raise
    m = _BRACKET_DIGIT_RE.search(response)
    if not m:
        if allow_fallback:
            return classify_rules(question)
        raise llm_mod.LlmUnavailable("unparseable classification response")
    return QuestionCategory(int(m.group(1)))


_GATE_SLOT_RE = re.compile(r"\[\s*'ramp'\s*:\s*'([A-Za-z]\d{1,2})'\s*\]")


def extract_gate(question: str, llm: Optional[llm_mod.LlmHandle] = None) -> ExtractionResult:
    """Gate slot extraction; failure is data (sentinel), never an error."""
    gate: Optional[str] = None
    if llm is not None:
        prompt = prompting.render(prompting.TEMPLATES["gate_extraction"], {"question": question})
        try:
            response = llm_mod.complete(llm, "You extract gate codes.", prompt)
            m = _GATE_SLOT_RE.search(response)
            if m:
                raw = m.group(1)
                gate = raw[0].upper() + raw[1:].zfill(2)
        except llm_mod.LlmError:
            gate = None
    if gate is None:
        gate = find_gate_code(question)
    return ExtractionResult(gate=gate)


def clarification_for(category: QuestionCategory, question: str) -> str:
    if category == QuestionCategory.AFQ:
        return prompting.render(prompting.TEMPLATES["partial_number_clarification"], {})
    subject = find_airline(question) or "requested"
    return prompting.render(prompting.TEMPLATES["clarification"], {"subject": subject})


def route(
    question: str,
    llm: Optional[llm_mod.LlmHandle] = None,
    fewshot: list[QaPair] | None = None,
) -> RouteDecision:
    """Category -> pipeline action. Total: every string yields a decision."""
    category = classify(question, llm, fewshot)
    if category in (QuestionCategory.TAQ, QuestionCategory.BGQ):
        extraction = extract_gate(question, llm=None)
        if extraction.sentinel_zero:
            return RouteDecision(
                category=category,
                action="clarify",
                extraction=extraction,
                clarification_text=clarification_for(category, question),
            )
        return RouteDecision(category=category, action="gate_retrieval", extraction=extraction)
    if category == QuestionCategory.NFQ:
        return RouteDecision(
            category=category,
            action="next_flight",
            extraction=ExtractionResult(flight_nr=find_full_flight_nr(question)),
        )
    if category in (QuestionCategory.TWAQ, QuestionCategory.BQA):
        return RouteDecision(
            category=category,
            action="clarify",
            extraction=ExtractionResult(airline=find_airline(question)),
            clarification_text=clarification_for(category, question),
        )
    if category == QuestionCategory.AFQ:
        return RouteDecision(
            category=category,
            action="partial_number_clarify",
            extraction=ExtractionResult(partial_number=find_partial_number(question)),
            clarification_text=clarification_for(category, question),
        )
    return RouteDecision(
        category=QuestionCategory.STRAIGHTFORWARD,
        action="direct_answer",
        extraction=ExtractionResult(flight_nr=find_full_flight_nr(question)),
    )


def merge_clarification(original: str, followup: str) -> str:
    """Two-turn protocol: fold the follow-up into the stored question."""
    return f"Original question: {original} Additional information: {followup}"
