"""Property-graph pipeline: graph construction from the flight table,
schema introspection, a Cypher-like query subset, and reasoning helpers.

Pattern matching is homomorphic (variables may bind the same node) with
distinct edges per relationship atom inside one MATCH.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from . import llm as llm_mod
from . import prompting
from .flight_store import FIELD_KINDS, FlightRecord, FlightStore, field_to_str
from .sqlrag import QueryResult, strip_fences

NODE_LABELS = ("Flight", "Ramp", "BusGate", "Pier", "Airline")
EDGE_TYPES = (
    "AT_RAMP",
    "AT_BUS_GATE",
    "AT_PIER",
    "OPERATED_BY",
    "CONNECTS_TO",
    "NEXT_AT_RAMP",
)


class GraphError(Exception):
    pass


class GraphParseError(GraphError):
    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at {position}: {message}")
        self.position = position
        self.message = message


class UnknownLabel(GraphError):
    pass


class UnknownRelType(GraphError):
    pass


class UnknownProperty(GraphError):
    pass


class DanglingConnection(GraphError):
    def __init__(self, flight_nr: str, target: str):
        super().__init__(f"{flight_nr} connects to unknown flight {target}")
        self.flight_nr = flight_nr
        self.target = target


class UnknownFlight(GraphError):
    pass


class UnparseableAfterRetry(GraphError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    labels: frozenset[str]
    properties: dict

    def __hash__(self):
        return hash(self.id)


@dataclass(frozen=True)
class Edge:
    id: str
    type: str
    src: str
    dst: str
    properties: dict

    def __hash__(self):
        return hash(self.id)


class PropertyGraph:
    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self.label_index: dict[str, set[str]] = {}
        self._out: dict[str, list[str]] = {}
        self._in: dict[str, list[str]] = {}

    def add_node(self, node_id: str, labels: set[str], properties: dict) -> None:
        if node_id in self.nodes:
            return
        node = Node(id=node_id, labels=frozenset(labels), properties=properties)
        self.nodes[node_id] = node
        for label in labels:
            self.label_index.setdefault(label, set()).add(node_id)
        self._out[node_id] = []
        self._in[node_id] = []

    def add_edge(self, edge_type: str, src: str, dst: str, properties: dict | None = None) -> None:
        edge_id = f"{edge_type}:{src}->{dst}"
        if edge_id in self.edges:
            return
        edge = Edge(id=edge_id, type=edge_type, src=src, dst=dst, properties=properties or {})
        self.edges[edge_id] = edge
        self._out[src].append(edge_id)
        self._in[dst].append(edge_id)

    def out_edges(self, node_id: str, edge_type: Optional[str] = None) -> list[Edge]:
        edges = [self.edges[e] for e in self._out.get(node_id, [])]
        if edge_type:
            edges = [e for e in edges if e.type == edge_type]
        return edges

    def in_edges(self, node_id: str, edge_type: Optional[str] = None) -> list[Edge]:
        edges = [self.edges[e] for e in self._in.get(node_id, [])]
        if edge_type:
            edges = [e for e in edges if e.type == edge_type]
        return edges

    def nodes_with_label(self, label: str) -> list[Node]:
        return [self.nodes[n] for n in sorted(self.label_index.get(label, ()))]

    def to_jsonl(self) -> str:
        lines = []
        for node_id in sorted(self.nodes):
            n = self.nodes[node_id]
            lines.append(json.dumps(
                {"kind": "node", "id": n.id, "labels": sorted(n.labels), "properties": n.properties},
                sort_keys=True,
            ))
        for edge_id in sorted(self.edges):
            e = self.edges[edge_id]
            lines.append(json.dumps(
                {"kind": "edge", "id": e.id, "type": e.type, "from": e.src, "to": e.dst},
                sort_keys=True,
            ))
        return "\n".join(lines) + "\n"


def _flight_properties(record: FlightRecord) -> dict:
    props: dict = {}
    for name, kind in FIELD_KINDS.items():
        if kind == "int":
            props[name] = getattr(record, name)
        elif kind == "bool":
            props[name] = getattr(record, name)
        else:
            text = field_to_str(record, name)
            if text != "":
                props[name] = text
    return props


def build_graph(store: FlightStore, strict_connections: bool = True) -> PropertyGraph:
    """One Flight node per record plus deduplicated Ramp/BusGate/Pier/Airline
    nodes; NEXT_AT_RAMP is materialized at build time from on-ramp times."""
    graph = PropertyGraph()
    records = sorted(store.records, key=lambda r: r.flight_uid)
    for r in records:
        graph.add_node(f"flight:{r.flight_uid}", {"Flight"}, _flight_properties(r))
    for r in records:
        fid = f"flight:{r.flight_uid}"
        if r.ramp:
            rid = f"ramp:{r.ramp}"
            graph.add_node(rid, {"Ramp"}, {"code": r.ramp})
            graph.add_edge("AT_RAMP", fid, rid)
        if r.bus_gate:
            bid = f"busgate:{r.bus_gate}"
            graph.add_node(bid, {"BusGate"}, {"code": r.bus_gate})
            graph.add_edge("AT_BUS_GATE", fid, bid)
        if r.pier:
            pid = f"pier:{r.pier}"
            graph.add_node(pid, {"Pier"}, {"code": r.pier})
            graph.add_edge("AT_PIER", fid, pid)
        if r.airline_name:
            aid = f"airline:{r.airline_name}"
            graph.add_node(aid, {"Airline"}, {"name": r.airline_name, "code": r.flight_nr[:2]})
            graph.add_edge("OPERATED_BY", fid, aid)
    for r in records:
        if not r.connecting_flight_nr:
            continue
        target = store.by_flight_nr(r.connecting_flight_nr)
        if target is None:
            if strict_connections:
                raise DanglingConnection(r.flight_nr, r.connecting_flight_nr)
            continue
        graph.add_edge("CONNECTS_TO", f"flight:{r.flight_uid}", f"flight:{target.flight_uid}")

    # Next flight at the same ramp: smallest strictly-later expected
    # on-ramp time, ties broken by flight_uid.
    by_ramp: dict[str, list[FlightRecord]] = {}
    for r in records:
        if r.ramp:
            by_ramp.setdefault(r.ramp.upper(), []).append(r)
    for ramp_records in by_ramp.values():
        for r in ramp_records:
            later = [c for c in ramp_records if c.expected_on_ramp > r.expected_on_ramp]
            if later:
                nxt = min(later, key=lambda c: (c.expected_on_ramp, c.flight_uid))
                graph.add_edge("NEXT_AT_RAMP", f"flight:{r.flight_uid}", f"flight:{nxt.flight_uid}")
    return graph


def next_flight_oracle(store: FlightStore, flight_nr: str, mode: str) -> Optional[str]:
    """Brute-force reasoning oracle; also the test oracle for NEXT_AT_RAMP."""
    record = store.by_flight_nr(flight_nr)
    if record is None:
        raise UnknownFlight(flight_nr)
    if mode == "same_airline":
        return record.connecting_flight_nr or None
    if mode == "same_ramp":
        from .datagen import next_flight_same_ramp

        nxt = next_flight_same_ramp(store, record)
        return nxt.flight_nr if nxt else None
    raise ValueError(f"unknown mode: {mode}")


# --- schema introspection -------------------------------------------------


@dataclass(frozen=True)
class SchemaDescription:
    labels: dict  # label -> {"count": int, "properties": {name: type}}
    relationships: dict  # type -> {"count": int, "from": label, "to": label}

    def to_text(self) -> str:
        return json.dumps(
            {"labels": self.labels, "relationships": self.relationships},
            sort_keys=True,
            indent=2,
        )


def _prop_type(value) -> str:
    if isinstance(value, bool):
        return "BOOLEAN"
    if isinstance(value, int):
        return "INTEGER"
    return "STRING"


def introspect_schema(graph: PropertyGraph) -> SchemaDescription:
    labels: dict = {}
    for label in sorted(graph.label_index):
        nodes = graph.nodes_with_label(label)
        properties: dict[str, str] = {}
        for node in nodes:
            for name, value in node.properties.items():
                properties.setdefault(name, _prop_type(value))
        labels[label] = {
            "count": len(nodes),
            "properties": {k: properties[k] for k in sorted(properties)},
        }
    relationships: dict = {}
    for edge in graph.edges.values():
        src_label = sorted(graph.nodes[edge.src].labels)[0]
        dst_label = sorted(graph.nodes[edge.dst].labels)[0]
        entry = relationships.setdefault(
            edge.type, {"count": 0, "from": src_label, "to": dst_label}
        )
        entry["count"] += 1
    return SchemaDescription(
        labels=labels, relationships={k: relationships[k] for k in sorted(relationships)}
    )


# --- query language -------------------------------------------------------


@dataclass(frozen=True)
class NodePattern:
    var: Optional[str]
    label: Optional[str]
    properties: tuple  # ((name, value), ...)


@dataclass(frozen=True)
class EdgePattern:
    var: Optional[str]
    type: Optional[str]
    direction: str  # "->" (left to right) or "<-"


@dataclass(frozen=True)
class PathPattern:
    nodes: tuple  # NodePattern tuple, len = edges + 1
    edges: tuple  # EdgePattern tuple


@dataclass(frozen=True)
class Condition:
    var: str
    prop: str
    op: str  # = <> < <= > >= STARTS_WITH CONTAINS
    value: object


@dataclass(frozen=True)
class ReturnItem:
    var: str
    prop: Optional[str]

    def __str__(self) -> str:
        return f"{self.var}.{self.prop}" if self.prop else self.var


@dataclass(frozen=True)
class GraphQueryAst:
    patterns: tuple  # PathPattern tuple
    where: tuple  # Condition tuple (conjunction)
    returns: tuple  # ReturnItem tuple
    order_by: Optional[tuple[ReturnItem, bool]]
    limit: Optional[int]

    def to_text(self) -> str:
        parts = []
        pattern_texts = []
        for pattern in self.patterns:
            text = _node_text(pattern.nodes[0])
            for edge, node in zip(pattern.edges, pattern.nodes[1:]):
                if edge.direction == "->":
                    text += f"-[:{edge.type}]->" if edge.type else "-[]->"
                else:
                    text += f"<-[:{edge.type}]-" if edge.type else "<-[]-"
                text += _node_text(node)
            pattern_texts.append(text)
        parts.append("MATCH " + ", ".join(pattern_texts))
        if self.where:
            conds = []
            for c in self.where:
                op = {"STARTS_WITH": "STARTS WITH", "CONTAINS": "CONTAINS"}.get(c.op, c.op)
                conds.append(f"{c.var}.{c.prop} {op} {_value_text(c.value)}")
            parts.append("WHERE " + " AND ".join(conds))
        parts.append("RETURN " + ", ".join(str(r) for r in self.returns))
        if self.order_by:
            item, ascending = self.order_by
            parts.append(f"ORDER BY {item}" + ("" if ascending else " DESC"))
        if self.limit is not None:
            parts.append(f"LIMIT {self.limit}")
        return " ".join(parts)


def _node_text(node: NodePattern) -> str:
    inner = node.var or ""
    if node.label:
        inner += f":{node.label}"
    if node.properties:
        props = ", ".join(f"{k}: {_value_text(v)}" for k, v in node.properties)
        inner += " {" + props + "}"
    return f"({inner})"


def _value_text(value) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "\\'") + "'"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


@dataclass(frozen=True)
class GraphQuery:
    text: str
    ast: GraphQueryAst

    @property
    def normalized(self) -> str:
        return " ".join(self.text.split()).rstrip(";").lower()


_GQL_TOKEN = re.compile(
    r"""\s*(?:
        (?P<string>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
      | (?P<number>\d+(?:\.\d+)?)
      | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<sym><=|>=|<>|!=|->|<-|=|<|>|\(|\)|\[|\]|\{|\}|:|,|\.|-|;)
    )""",
    re.VERBOSE,
)

_GQL_KEYWORDS = {"match", "where", "return", "order", "by", "asc", "desc", "limit",
                 "and", "starts", "with", "contains", "true", "false"}


class _GqlParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.i = 0

    @staticmethod
    def _tokenize(text: str):
        tokens = []
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            m = _GQL_TOKEN.match(text, pos)
            if not m:
                raise GraphParseError(pos, f"unexpected character {text[pos]!r}")
            if m.group("string") is not None:
                raw = m.group("string")
                tokens.append(("string", raw[1:-1].replace("\\'", "'").replace('\\"', '"'), pos))
            elif m.group("number") is not None:
                tokens.append(("number", m.group("number"), pos))
            elif m.group("word") is not None:
                tokens.append(("word", m.group("word"), pos))
            else:
                tokens.append(("sym", m.group("sym"), pos))
            pos = m.end()
        return tokens

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise GraphParseError(len(self.text), "unexpected end of query")
        self.i += 1
        return tok

    def accept_word(self, word: str) -> bool:
        tok = self.peek()
        if tok and tok[0] == "word" and tok[1].lower() == word:
            self.i += 1
            return True
        return False

    def expect_word(self, word: str):
        tok = self.next()
        if tok[0] != "word" or tok[1].lower() != word:
            raise GraphParseError(tok[2], f"expected {word.upper()}")

    def accept_sym(self, sym: str) -> bool:
        tok = self.peek()
        if tok and tok[0] == "sym" and tok[1] == sym:
            self.i += 1
            return True
        return False

    def expect_sym(self, sym: str):
        tok = self.next()
        if tok[0] != "sym" or tok[1] != sym:
            raise GraphParseError(tok[2], f"expected {sym!r}")

    def parse(self) -> GraphQueryAst:
        self.expect_word("match")
        patterns = [self._path()]
        while self.accept_sym(","):
            patterns.append(self._path())
        where: list[Condition] = []
        if self.accept_word("where"):
            where.append(self._condition())
            while self.accept_word("and"):
                where.append(self._condition())
        self.expect_word("return")
        returns = [self._return_item()]
        while self.accept_sym(","):
            returns.append(self._return_item())
        order_by = None
        if self.accept_word("order"):
            self.expect_word("by")
            item = self._return_item()
            ascending = True
            if self.accept_word("desc"):
                ascending = False
            else:
                self.accept_word("asc")
            order_by = (item, ascending)
        limit = None
        if self.accept_word("limit"):
            tok = self.next()
            if tok[0] != "number":
                raise GraphParseError(tok[2], "LIMIT requires a number")
            limit = int(tok[1])
        self.accept_sym(";")
        if self.peek() is not None:
            tok = self.peek()
            raise GraphParseError(tok[2], f"unexpected token {tok[1]!r}")
        return GraphQueryAst(
            patterns=tuple(patterns),
            where=tuple(where),
            returns=tuple(returns),
            order_by=order_by,
            limit=limit,
        )

    def _path(self) -> PathPattern:
        nodes = [self._node()]
        edges = []
        while True:
            tok = self.peek()
            if tok and tok[0] == "sym" and tok[1] in ("-", "<-"):
                edges.append(self._edge())
                nodes.append(self._node())
                if len(edges) > 3:
                    raise GraphParseError(tok[2], "paths longer than 3 edges are not supported")
            else:
                break
        return PathPattern(nodes=tuple(nodes), edges=tuple(edges))

    def _node(self) -> NodePattern:
        self.expect_sym("(")
        var = None
        label = None
        properties: list[tuple] = []
        tok = self.peek()
        if tok and tok[0] == "word":
            var = self.next()[1]
        if self.accept_sym(":"):
            label_tok = self.next()
            if label_tok[0] != "word":
                raise GraphParseError(label_tok[2], "expected label name")
            label = label_tok[1]
        if self.accept_sym("{"):
            while True:
                key_tok = self.next()
                if key_tok[0] != "word":
                    raise GraphParseError(key_tok[2], "expected property name")
                self.expect_sym(":")
                properties.append((key_tok[1], self._literal()))
                if not self.accept_sym(","):
                    break
            self.expect_sym("}")
        self.expect_sym(")")
        return NodePattern(var=var, label=label, properties=tuple(properties))

    def _edge(self) -> EdgePattern:
        # forms: -[:T]-> | <-[:T]- | -[v:T]-> | -[]->
        if self.accept_sym("<-"):
            direction = "<-"
        else:
            self.expect_sym("-")
            direction = "->"
        var = None
        edge_type = None
        if self.accept_sym("["):
            tok = self.peek()
            if tok and tok[0] == "word":
                var = self.next()[1]
            if self.accept_sym(":"):
                type_tok = self.next()
                if type_tok[0] != "word":
                    raise GraphParseError(type_tok[2], "expected relationship type")
                edge_type = type_tok[1]
            self.expect_sym("]")
        if direction == "->":
            tok = self.next()
            if tok[0] != "sym" or tok[1] not in ("->", "-"):
                raise GraphParseError(tok[2], "expected -> or -")
            if tok[1] == "-":
                direction = "--"  # undirected not supported; treat as ->
                raise GraphParseError(tok[2], "undirected relationships are not supported")
        else:
            self.expect_sym("-")
        return EdgePattern(var=var, type=edge_type, direction=direction)

    def _condition(self) -> Condition:
        var_tok = self.next()
        if var_tok[0] != "word":
            raise GraphParseError(var_tok[2], "expected variable")
        self.expect_sym(".")
        prop_tok = self.next()
        if prop_tok[0] != "word":
            raise GraphParseError(prop_tok[2], "expected property name")
        tok = self.next()
        if tok[0] == "word" and tok[1].lower() == "starts":
            self.expect_word("with")
            op = "STARTS_WITH"
        elif tok[0] == "word" and tok[1].lower() == "contains":
            op = "CONTAINS"
        elif tok[0] == "sym" and tok[1] in ("=", "<>", "!=", "<", "<=", ">", ">="):
            op = "<>" if tok[1] == "!=" else tok[1]
        else:
            raise GraphParseError(tok[2], f"expected operator, got {tok[1]!r}")
        return Condition(var=var_tok[1], prop=prop_tok[1], op=op, value=self._literal())

    def _return_item(self) -> ReturnItem:
        var_tok = self.next()
        if var_tok[0] != "word":
            raise GraphParseError(var_tok[2], "expected variable")
        if self.accept_sym("."):
            prop_tok = self.next()
            if prop_tok[0] != "word":
                raise GraphParseError(prop_tok[2], "expected property name")
            return ReturnItem(var=var_tok[1], prop=prop_tok[1])
        return ReturnItem(var=var_tok[1], prop=None)

    def _literal(self):
        tok = self.next()
        if tok[0] == "string":
            return tok[1]
        if tok[0] == "number":
            return float(tok[1]) if "." in tok[1] else int(tok[1])
        if tok[0] == "word" and tok[1].lower() in ("true", "false"):
            return tok[1].lower() == "true"
        raise GraphParseError(tok[2], "expected literal value")


def parse_graph_query(text: str) -> GraphQuery:
    return GraphQuery(text=text, ast=_GqlParser(text).parse())


# --- executor -------------------------------------------------------------


def _validate(graph: PropertyGraph, ast: GraphQueryAst) -> None:
    schema = introspect_schema(graph)
    var_labels: dict[str, str] = {}
    for pattern in ast.patterns:
        for node in pattern.nodes:
            if node.label is not None and node.label not in NODE_LABELS:
                raise UnknownLabel(node.label)
            if node.var and node.label:
                var_labels[node.var] = node.label
        for edge in pattern.edges:
            if edge.type is not None and edge.type not in EDGE_TYPES:
                raise UnknownRelType(edge.type)
    for cond in ast.where:
        label = var_labels.get(cond.var)
        if label and label in schema.labels:
            props = schema.labels[label]["properties"]
            if props and cond.prop not in props:
                raise UnknownProperty(f"{cond.var}.{cond.prop}")


def _match_node(node: Node, pattern: NodePattern) -> bool:
    if pattern.label and pattern.label not in node.labels:
        return False
    for name, value in pattern.properties:
        stored = node.properties.get(name)
        if isinstance(stored, str) and isinstance(value, str):
            if stored.upper() != value.upper():
                return False
        elif stored != value:
            return False
    return True


def _candidate_nodes(graph: PropertyGraph, pattern: NodePattern) -> list[Node]:
    if pattern.label:
        nodes = graph.nodes_with_label(pattern.label)
    else:
        nodes = [graph.nodes[n] for n in sorted(graph.nodes)]
    return [n for n in nodes if _match_node(n, pattern)]


def _eval_condition(binding: dict[str, Node], cond: Condition) -> bool:
    node = binding.get(cond.var)
    if node is None:
        return False
    stored = node.properties.get(cond.prop)
    if stored is None:
        return False
    value = cond.value
    if cond.op == "STARTS_WITH":
        return str(stored).startswith(str(value))
    if cond.op == "CONTAINS":
        return str(value) in str(stored)
    if isinstance(stored, bool) or isinstance(value, bool):
        left, right = stored, value
    elif isinstance(stored, (int, float)) and isinstance(value, (int, float)):
        left, right = stored, value
    elif isinstance(stored, (int, float)) != isinstance(value, (int, float)):
        # numeric property vs string literal (or vice versa): compare as strings
        left, right = str(stored), str(value)
    else:
        left, right = str(stored), str(value)
    if cond.op == "=":
        if isinstance(left, str) and isinstance(right, str):
            return left.upper() == right.upper()
        return left == right
    if cond.op == "<>":
        if isinstance(left, str) and isinstance(right, str):
            return left.upper() != right.upper()
        return left != right
    try:
        if cond.op == "<":
            return left < right
        if cond.op == "<=":
            return left <= right
        if cond.op == ">":
            return left > right
        if cond.op == ">=":
            return left >= right
    except TypeError:
        return False
    raise ValueError(f"unknown operator {cond.op}")


def execute_graph(graph: PropertyGraph, query: GraphQuery) -> QueryResult:
    ast = query.ast
    _validate(graph, ast)

    bindings: list[tuple[dict[str, Node], frozenset[str]]] = [({}, frozenset())]
    for pattern in ast.patterns:
        new_bindings = []
        for binding, used_edges in bindings:
            new_bindings.extend(_match_path(graph, pattern, binding, used_edges))
        bindings = new_bindings

    if ast.where:
        bindings = [
            (b, used) for b, used in bindings
            if all(_eval_condition(b, c) for c in ast.where)
        ]

    # Deduplicate rows produced by anonymous-variable multiplicity.
    seen = set()
    rows = []
    for binding, _used in bindings:
        row = tuple(_return_value(binding, item) for item in ast.returns)
        key = (row, tuple(sorted((v, n.id) for v, n in binding.items())))
        if key in seen:
            continue
        seen.add(key)
        rows.append(row)

    if ast.order_by:
        item, ascending = ast.order_by
        idx = [str(r) for r in ast.returns].index(str(item)) if str(item) in [str(r) for r in ast.returns] else None
        if idx is None:
            raise GraphParseError(0, "ORDER BY item must appear in RETURN")
        rows.sort(key=lambda row: (row[idx] is None, str(row[idx])), reverse=not ascending)
    else:
        rows.sort(key=lambda row: tuple(str(v) for v in row))

    if ast.limit is not None:
        rows = rows[: ast.limit]
    return QueryResult(columns=[str(r) for r in ast.returns], rows=rows)


def _return_value(binding: dict[str, Node], item: ReturnItem):
    node = binding.get(item.var)
    if node is None:
        return None
    if item.prop is None:
        return node.id
    return node.properties.get(item.prop)


def _match_path(graph, pattern: PathPattern, binding: dict, used_edges: frozenset):
    """Backtracking match of one linear path, honoring existing bindings and
    edge distinctness within the whole MATCH."""
    results = []

    def bind_node(var, node, current):
        if var is None:
            return current
        if var in current and current[var].id != node.id:
            return None
        new = dict(current)
        new[var] = node
        return new

    first = pattern.nodes[0]
    if first.var and first.var in binding:
        candidates = [binding[first.var]] if _match_node(binding[first.var], first) else []
    else:
        candidates = _candidate_nodes(graph, first)

    def extend(node, depth, current, used):
        if depth == len(pattern.edges):
            results.append((current, used))
            return
        edge_pat = pattern.edges[depth]
        next_pat = pattern.nodes[depth + 1]
        if edge_pat.direction == "->":
            edges = graph.out_edges(node.id, edge_pat.type)
            get_other = lambda e: graph.nodes[e.dst]
        else:
            edges = graph.in_edges(node.id, edge_pat.type)
            get_other = lambda e: graph.nodes[e.src]
        for edge in sorted(edges, key=lambda e: e.id):
            if edge.id in used:
                continue
            other = get_other(edge)
            if not _match_node(other, next_pat):
                continue
            if next_pat.var and next_pat.var in current and current[next_pat.var].id != other.id:
                continue
            new_binding = bind_node(next_pat.var, other, current)
            if new_binding is None:
                continue
            extend(other, depth + 1, new_binding, used | {edge.id})

    for node in candidates:
        start = bind_node(first.var, node, binding)
        if start is None:
            continue
        extend(node, 0, start, used_edges)
    return results


# --- text-to-graph-query --------------------------------------------------


def text_to_graph_query(
    question: str,
    llm: llm_mod.LlmHandle,
    schema: SchemaDescription,
    fewshot: list[tuple[str, str]] | None = None,
) -> GraphQuery:
    """Prompt the LLM for a graph query; retry once with error feedback."""
    variables = prompting.build_schema_vars("graph", schema)
    variables["question"] = question
    prompt = prompting.render(prompting.TEMPLATES["graph_schema"], variables, fewshot=fewshot or [])
    last_error = None
    for _attempt in range(2):
        response = llm_mod.complete(llm, "You translate questions into graph queries.", prompt)
        text = strip_fences(response)
        try:
            return parse_graph_query(text)
        except GraphError as exc:
            last_error = exc
            prompt = prompt + f"\nThe previous attempt failed with: {exc}. Return a corrected query."
    raise UnparseableAfterRetry(str(last_error))
