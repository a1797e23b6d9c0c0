"""End-to-end question answering: route a question, run one of three
pipelines (traditional retrieve-then-generate, text-to-SQL, text-to-graph),
return a uniform answer envelope.

Clarification is data, not control flow: ambiguous questions come back
with needs_clarification set and the clarification text as the answer.
The caller (service session layer) owns the two-turn merge protocol.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from . import llm as llm_mod
from .datagen import QaPair
from .flight_store import FlightStore, render_article, render_articles
from .graphrag import (
    GraphError,
    PropertyGraph,
    SchemaDescription,
    build_graph,
    execute_graph,
    introspect_schema,
    parse_graph_query,
    text_to_graph_query,
)
from .retrieval import IndexBundle, build_index
from .router import RouteDecision, merge_clarification, route
from .sqlrag import (
    SqlError,
    SqlQuery,
    SqlSchema,
    execute_sql,
    text_to_sql,
    verbalize_rows,
)
from .traditional import RagAnswer, answer_traditional, guard_hallucination

PIPELINES = ("traditional", "sql", "graph")


class UnknownPipeline(Exception):
    def __init__(self, name: str):
        super().__init__(f"unknown pipeline: {name!r} (expected one of {PIPELINES})")


class Engine:
    """Shared state (store, index, graph, schemas, LLM, few-shot banks)
    plus one `ask` entry point per question."""

    def __init__(
        self,
        store: FlightStore,
        llm: Optional[llm_mod.LlmHandle] = None,
        search_method: str = "bm25",
        k: int = 10,
        sql_style: str = "odp",
        classification_fewshot: Optional[list[QaPair]] = None,
        sql_fewshot: Optional[list[tuple[str, str]]] = None,
        graph_fewshot: Optional[list[tuple[str, str]]] = None,
        answer_fewshot: Optional[list[tuple[str, str]]] = None,
    ):
        self.store = store
        self.llm = llm
        self.search_method = search_method
        self.k = k
        self.sql_style = sql_style
        self.classification_fewshot = classification_fewshot or []
        self.sql_fewshot = sql_fewshot or []
        self.graph_fewshot = graph_fewshot or []
        self.answer_fewshot = answer_fewshot or []
        self.articles = render_articles(store)
        self.index: IndexBundle = build_index(self.articles)
        self.graph: PropertyGraph = build_graph(store, strict_connections=False)
        self.sql_schema = SqlSchema()
        self.graph_schema: SchemaDescription = introspect_schema(self.graph)

    # -- public entry points ------------------------------------------------

    def ask(self, question: str, pipeline: str = "traditional") -> RagAnswer:
        if pipeline not in PIPELINES:
            raise UnknownPipeline(pipeline)
        decision = route(question, llm=self.llm, fewshot=self.classification_fewshot)
        category = decision.category.name
        if decision.action in ("clarify", "partial_number_clarify"):
            return RagAnswer(
                text=decision.clarification_text,
                evidence_doc_ids=[],
                pipeline=pipeline,
                needs_clarification=True,
                category=category,
            )
        if decision.action == "gate_retrieval":
            return self._gate_answer(question, decision, pipeline)
        if pipeline == "traditional":
            return self._traditional(question, decision)
        if pipeline == "sql":
            return self._sql(question, decision)
        return self._graph(question, decision)

    def ask_with_clarification(self, original: str, followup: str, pipeline: str) -> RagAnswer:
        return self.ask(merge_clarification(original, followup), pipeline)

    # -- pipeline bodies ----------------------------------------------------

    def _traditional(self, question: str, decision: RouteDecision) -> RagAnswer:
        if self.llm is None:
            return self._lookup_fallback(question, decision, "traditional")
        answer = answer_traditional(
            question,
            self.index,
            self.store,
            self.llm,
            k=self.k,
            method=self.search_method,
            fewshot=self.answer_fewshot,
        )
        return replace(answer, category=decision.category.name)

    def _sql(self, question: str, decision: RouteDecision) -> RagAnswer:
        if self.llm is None:
            return self._lookup_fallback(question, decision, "sql")
        try:
            query = text_to_sql(
                question, self.sql_style, self.llm,
                fewshot=self.sql_fewshot, schema=self.sql_schema,
            )
            result = execute_sql(self.store, query)
        except (llm_mod.LlmError, SqlError) as exc:
            return self._failure(question, decision, "sql", str(exc))
        return RagAnswer(
            text=verbalize_rows(result),
            evidence_doc_ids=self._uids_in_result(result),
            pipeline="sql",
            category=decision.category.name,
            query_text=query.text,
        )

    def _graph(self, question: str, decision: RouteDecision) -> RagAnswer:
        if self.llm is None:
            return self._lookup_fallback(question, decision, "graph")
        try:
            query = text_to_graph_query(
                question, self.llm, self.graph_schema, fewshot=self.graph_fewshot
            )
            result = execute_graph(self.graph, query)
        except (llm_mod.LlmError, GraphError) as exc:
            return self._failure(question, decision, "graph", str(exc))
        return RagAnswer(
            text=verbalize_rows(result),
            evidence_doc_ids=self._uids_in_result(result),
            pipeline="graph",
            category=decision.category.name,
            query_text=query.text,
        )

    def _gate_answer(self, question: str, decision: RouteDecision, pipeline: str) -> RagAnswer:
        gate = decision.extraction.gate
        assert gate is not None
        if pipeline == "traditional":
            return self._traditional(question, decision)
        if pipeline == "sql":
            sql = f"SELECT flight_nr FROM flights WHERE ramp = '{gate}' OR bus_gate = '{gate}'"
            result = execute_sql(self.store, SqlQuery(sql))
            return RagAnswer(
                text=verbalize_rows(result),
                evidence_doc_ids=self._uids_in_result(result),
                pipeline="sql",
                category=decision.category.name,
                query_text=sql,
            )
        ramp_q = f"MATCH (f:Flight)-[:AT_RAMP]->(r:Ramp {{code: '{gate}'}}) RETURN f.flight_nr"
        bus_q = f"MATCH (f:Flight)-[:AT_BUS_GATE]->(b:BusGate {{code: '{gate}'}}) RETURN f.flight_nr"
        numbers: set[str] = set()
        for text in (ramp_q, bus_q):
            result = execute_graph(self.graph, parse_graph_query(text))
            numbers.update(str(v) for (v,) in result.rows if v is not None)
        ordered = sorted(numbers)
        answer_text = (
            "flight_nr: " + ", flight_nr: ".join(ordered) + "."
            if ordered
            else "No matching flights found."
        )
        return RagAnswer(
            text=answer_text,
            evidence_doc_ids=self._gate_uids(gate),
            pipeline="graph",
            category=decision.category.name,
            query_text=f"{ramp_q} ; {bus_q}",
        )

    # -- helpers ------------------------------------------------------------

    def _uids_in_result(self, result) -> list[str]:
        uids = {r.flight_uid for r in self.store}
        found = []
        for row in result.rows:
            for value in row:
                if isinstance(value, str) and value in uids and value not in found:
                    found.append(value)
        return found

    def _gate_uids(self, gate: str) -> list[str]:
        gate = gate.upper()
        return [
            r.flight_uid
            for r in self.store
            if r.ramp.upper() == gate or r.bus_gate.upper() == gate
        ]

    def _lookup_fallback(self, question: str, decision: RouteDecision, pipeline: str) -> RagAnswer:
        """LLM-free degradation: verbalize the grounding record directly."""
        nr = decision.extraction.flight_nr
        record = self.store.by_flight_nr(nr) if nr else None
        if record is None:
            return self._failure(question, decision, pipeline, "no flight reference found")
        article = render_article(record)
        flags, text = guard_hallucination(article.text, [article], self.store)
        return RagAnswer(
            text=text,
            evidence_doc_ids=[record.flight_uid],
            pipeline=pipeline,
            flags=flags,
            category=decision.category.name,
        )

    def _failure(self, question: str, decision: RouteDecision, pipeline: str, detail: str) -> RagAnswer:
        return RagAnswer(
            text=f"I could not answer that question from the flight data ({detail}).",
            evidence_doc_ids=[],
            pipeline=pipeline,
            category=decision.category.name,
        )
