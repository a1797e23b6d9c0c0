"""Central catalogue of prompt templates with few-shot assembly.

Templates are pure data; rendering is deterministic. When a rendered
prompt would exceed the configured budget, few-shot examples are dropped
from the tail first -- the schema block and the question always survive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class MissingVariable(Exception):
    def __init__(self, name: str):
        super().__init__(f"missing template variable: {name}")
        self.name = name


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    style: str  # classification | clarification | answer_gen | sql_odp | sql_crp | graph_schema | paraphrase
    body: str
    required_vars: frozenset[str] = field(default_factory=frozenset)
    fewshot_format: str = ""  # per-example block; keys question/response


_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


CLASSIFICATION_BODY = """You classify airport questions into numbered categories and answer with the bracketed number only.

Categories:
['1'] Time ambiguous question: mentions a specific time or a current-moment word such as 'currently', 'at this moment', 'right now', 'now', 'when', 'last hour', 'next hour', usually together with a gate, but no airline name.
['2'] Board gate question: a brief question naming a gate code such as B24, A74 or C07, with no time reference.
['3'] Next flight question: asks about a flight number and its next or connecting flight.
['4'] Time with airline question: combines a time reference ('right now', 'later', 'soon', 'a while', 'one hour ago', 'when', an exact moment) with an airline name such as KLM, Delta, Transavia or EasyJet, without a flight number.
['5'] Board question of aircraft: names an airline such as KLM, Delta, Transavia or EasyJet, with no time reference and no flight number.
['6'] Ambiguous flight number question: refers to a flight by an incomplete number with the airline prefix missing, for example 'the 0164 flight'.
['0'] None of the above: a complete, unambiguous question.

Answer with exactly one of ['0'], ['1'], ['2'], ['3'], ['4'], ['5'], ['6'].

{fewshot}Question to classify: {question}
Category:"""


GATE_EXTRACTION_BODY = """Extract the gate or ramp code from the question. A code is one letter followed by one or two digits; zero-pad single digits (C5 becomes C05). Reply exactly ['ramp': '<CODE>'] or ['0'] when there is no code.

Question: {question}
Answer:"""


CLARIFICATION_BODY = """I cannot determine the specific location of the {subject} flight with the information provided. Please provide additional information like: - Flight UID (Unique Identifier) - Flight Number (Flight_NR) - Aircraft Registration - Connecting Flight UID (The UID of any connected flight provided by the airline) - Connecting Flight Number (The number of any connected flight provided by the airline). If you do not have this information, I can still attempt to process your query but it might require additional search time. In this case, please let me know if you are looking for information about the Ramp (Gate), Bus Gate, or Pier."""


PARTIAL_NUMBER_BODY = """We could not find more information about the flight number you mentioned, could you please provide us with more information?"""


ANSWER_GEN_BODY = """You are an airport flight-information assistant. Answer the question using only the flight articles below. If the articles do not contain the answer, say that no matching flight information was found. Never invent flight numbers, gates, airlines or times.

Field glossary:
{glossary}

Flight articles:
{articles}

{fewshot}Question to answer: {question}
Answer:"""


SQL_ODP_BODY = """### Complete sqlite SQL query only and with no explanation.
### SQLite SQL tables, with their properties:
#
# {table_listing}
#
### Include only valid SQL syntax, without additional formatting or explanation.

{fewshot}### SQL question: {question}
SELECT"""


SQL_CRP_BODY = """/* Given the following database schema: */
{create_table}

/* Answer the following question with a single valid SQL query, without additional formatting or explanation. */

{fewshot}/* SQL question: {question} */
"""


GRAPH_SCHEMA_BODY = """Task: generate a graph query to answer the question.
Instructions:
- Use only the node labels, relationship types and properties that appear in the schema below.
- Return only the query, with no explanation or formatting.
- Match flights by their flight_nr property; gate codes live on the code property of Ramp and BusGate nodes.

Schema:
{schema_json}

{fewshot}Graph question: {question}
Query:"""


PARAPHRASE_BODY = """For each example question, please generate new, unique questions similar to the examples given. Do not repeat any specific flight numbers or questions from the examples. Use '[flight number]' as a placeholder for the flight number. Return only the question text.

Examples:
{examples}"""


TEMPLATES: dict[str, PromptTemplate] = {
    t.id: t
    for t in [
        PromptTemplate(
            id="classification",
            style="classification",
            body=CLASSIFICATION_BODY,
            required_vars=frozenset({"question"}),
            fewshot_format="Example question: {question}\nCategory: ['{response}']\n\n",
        ),
        PromptTemplate(
            id="gate_extraction",
            style="classification",
            body=GATE_EXTRACTION_BODY,
            required_vars=frozenset({"question"}),
        ),
        PromptTemplate(
            id="clarification",
            style="clarification",
            body=CLARIFICATION_BODY,
            required_vars=frozenset({"subject"}),
        ),
        PromptTemplate(
            id="partial_number_clarification",
            style="clarification",
            body=PARTIAL_NUMBER_BODY,
        ),
        PromptTemplate(
            id="answer_gen",
            style="answer_gen",
            body=ANSWER_GEN_BODY,
            required_vars=frozenset({"glossary", "articles", "question"}),
            fewshot_format="Example question: {question}\nAnswer: {response}\n\n",
        ),
        PromptTemplate(
            id="sql_odp",
            style="sql_odp",
            body=SQL_ODP_BODY,
            required_vars=frozenset({"table_listing", "question"}),
            fewshot_format="### Example question: {question}\n{response}\n\n",
        ),
        PromptTemplate(
            id="sql_crp",
            style="sql_crp",
            body=SQL_CRP_BODY,
            required_vars=frozenset({"create_table", "question"}),
            fewshot_format="/* Example question: {question} */\n{response}\n\n",
        ),
        PromptTemplate(
            id="graph_schema",
            style="graph_schema",
            body=GRAPH_SCHEMA_BODY,
            required_vars=frozenset({"schema_json", "question"}),
            fewshot_format="Example question: {question}\nQuery: {response}\n\n",
        ),
        PromptTemplate(
            id="paraphrase",
            style="paraphrase",
            body=PARAPHRASE_BODY,
            required_vars=frozenset({"examples"}),
        ),
        # Catalogued for completeness; not wired into any pipeline.
        PromptTemplate(id="sql_bsp", style="sql_odp", body="{table_listing}\n{question}",
                       required_vars=frozenset({"table_listing", "question"})),
        PromptTemplate(id="sql_trp", style="sql_odp",
                       body="Translate the question into SQL.\n{table_listing}\n{question}",
                       required_vars=frozenset({"table_listing", "question"})),
        PromptTemplate(id="sql_asp", style="sql_odp",
                       body="### Instruction\nWrite SQL.\n### Schema\n{table_listing}\n### Question\n{question}",
                       required_vars=frozenset({"table_listing", "question"})),
    ]
}


def render(
    template: PromptTemplate,
    variables: dict[str, str],
    fewshot: list[tuple[str, str]] | None = None,
    max_prompt_chars: int = 200_000,
) -> str:
    """Interpolate variables and append few-shot (question, response) pairs.

    Overflow truncates few-shot examples from the tail, never the schema
    or the question.
    """
    missing = template.required_vars - set(variables)
    if missing:
        raise MissingVariable(sorted(missing)[0])

    fewshot = fewshot or []

    def build(n_examples: int) -> str:
        block = ""
        if template.fewshot_format:
            for question, response in fewshot[:n_examples]:
                block += template.fewshot_format.format(question=question, response=response)
        merged = dict(variables)
        merged.setdefault("fewshot", block)
        out = template.body
        for name, value in merged.items():
            out = out.replace("{" + name + "}", value)
        return out

    n = len(fewshot)
    text = build(n)
    while n > 0 and len(text) > max_prompt_chars:
        n -= 1
        text = build(n)
    leftover = _PLACEHOLDER_RE.search(text)
    if leftover:
        raise MissingVariable(leftover.group(1))
    return text


def glossary_text() -> str:
    from .flight_store import FIELD_GLOSSARY, FIELD_LABELS

    lines = []
    for fieldname, meaning in FIELD_GLOSSARY.items():
        lines.append(f"- {FIELD_LABELS[fieldname]}: {meaning}")
    return "\n".join(lines)


def build_schema_vars(kind: str, schema) -> dict[str, str]:
    """Serialize an introspected schema for prompt interpolation.

    kind "sql" expects a SqlSchema (sqlrag), kind "graph" a
    SchemaDescription (graphrag); both serialize deterministically.
    """
    if kind == "sql":
        return {
            "table_listing": schema.table_listing(),
            "create_table": schema.create_table(),
        }
    if kind == "graph":
        return {"schema_json": schema.to_text()}
    raise ValueError(f"unknown schema kind: {kind}")
