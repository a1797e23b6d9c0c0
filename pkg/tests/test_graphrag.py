import pytest

from flightrag import graphrag as gr
from flightrag.datagen import generate_flights
from flightrag.flight_store import FlightStore

from oracles import graph_count_oracle


@pytest.fixture(scope="module")
def store():
    return generate_flights(80, seed=12)


@pytest.fixture(scope="module")
def graph(store):
    return gr.build_graph(store)


def test_node_counts_match_oracle(store, graph):
    expected = graph_count_oracle(store)
    assert len(graph.nodes) == expected["nodes"]
    for label in gr.NODE_LABELS:
        assert len(graph.nodes_with_label(label)) == expected[label]


def test_edge_counts_match_oracle(store, graph):
    expected = graph_count_oracle(store)
    by_type = {}
    for edge in graph.edges.values():
        by_type[edge.type] = by_type.get(edge.type, 0) + 1
    for edge_type in gr.EDGE_TYPES:
        assert by_type.get(edge_type, 0) == expected[edge_type], edge_type


def test_next_at_ramp_edges_match_oracle(store, graph):
    for edge in graph.edges.values():
        if edge.type != "NEXT_AT_RAMP":
            continue
        src = graph.nodes[edge.src].properties["flight_nr"]
        dst = graph.nodes[edge.dst].properties["flight_nr"]
        assert gr.next_flight_oracle(store, src, "same_ramp") == dst


def test_connects_to_matches_oracle(store, graph):
    linked = {}
    for edge in graph.edges.values():
        if edge.type == "CONNECTS_TO":
            linked[graph.nodes[edge.src].properties["flight_nr"]] = (
                graph.nodes[edge.dst].properties["flight_nr"]
            )
    for r in store:
        expected = gr.next_flight_oracle(store, r.flight_nr, "same_airline")
        assert linked.get(r.flight_nr) == expected


def test_dangling_connection_strict(store):
    records = [r for r in store if r.connecting_flight_nr][:1]
    orphan = FlightStore(records)
    with pytest.raises(gr.DanglingConnection):
        gr.build_graph(orphan)
    lenient = gr.build_graph(orphan, strict_connections=False)
    assert not [e for e in lenient.edges.values() if e.type == "CONNECTS_TO"]


def test_graph_jsonl_is_deterministic(store):
    assert gr.build_graph(store).to_jsonl() == gr.build_graph(store).to_jsonl()


def test_schema_introspection(graph):
    schema = gr.introspect_schema(graph)
    assert set(schema.labels) == set(gr.NODE_LABELS)
    assert schema.labels["Flight"]["properties"]["mtt_minutes"] == "INTEGER"
    assert schema.relationships["AT_RAMP"]["from"] == "Flight"
    assert schema.relationships["AT_RAMP"]["to"] == "Ramp"


def test_parse_round_trip():
    text = (
        "MATCH (f:Flight {flight_nr: 'KL1234'})-[:AT_RAMP]->(r:Ramp) "
        "WHERE r.code STARTS WITH 'B' RETURN f.flight_nr, r.code LIMIT 5"
    )
    query = gr.parse_graph_query(text)
    assert gr.parse_graph_query(query.ast.to_text()).ast == query.ast


def test_parse_rejects_long_paths():
    text = (
        "MATCH (a)-[:CONNECTS_TO]->(b)-[:CONNECTS_TO]->(c)"
        "-[:CONNECTS_TO]->(d)-[:CONNECTS_TO]->(e) RETURN a"
    )
    with pytest.raises(gr.GraphParseError):
        gr.parse_graph_query(text)


def test_execute_simple_lookup(store, graph):
    record = store.records[0]
    query = gr.parse_graph_query(
        f"MATCH (f:Flight {{flight_nr: '{record.flight_nr}'}})-[:AT_RAMP]->(r:Ramp) RETURN r.code"
    )
    result = gr.execute_graph(graph, query)
    assert result.rows == [(record.ramp,)]


def test_execute_validates_against_schema(graph):
    with pytest.raises(gr.UnknownLabel):
        gr.execute_graph(graph, gr.parse_graph_query("MATCH (x:Spaceship) RETURN x"))
    with pytest.raises(gr.UnknownRelType):
        gr.execute_graph(graph, gr.parse_graph_query("MATCH (f:Flight)-[:TELEPORTS]->(r:Ramp) RETURN f"))
    with pytest.raises(gr.UnknownProperty):
        gr.execute_graph(graph, gr.parse_graph_query("MATCH (f:Flight) WHERE f.wings = 2 RETURN f"))


def test_shared_variables_join_paths(store, graph):
    record = next(r for r in store if r.connecting_flight_nr)
    query = gr.parse_graph_query(
        f"MATCH (f:Flight {{flight_nr: '{record.flight_nr}'}})-[:CONNECTS_TO]->(g:Flight), "
        "(g)-[:AT_RAMP]->(r:Ramp) RETURN r.code"
    )
    result = gr.execute_graph(graph, query)
    target = store.by_flight_nr(record.connecting_flight_nr)
    assert result.rows == [(target.ramp,)]


def test_string_equality_case_insensitive(store, graph):
    record = store.records[0]
    query = gr.parse_graph_query(
        f"MATCH (f:Flight)-[:AT_RAMP]->(r:Ramp) WHERE r.code = '{record.ramp.lower()}' "
        "RETURN f.flight_nr"
    )
    result = gr.execute_graph(graph, query)
    expected = sorted(r.flight_nr for r in store if r.ramp == record.ramp)
    assert sorted(v for (v,) in result.rows) == expected


def test_rows_sorted_and_limited(store, graph):
    query = gr.parse_graph_query("MATCH (r:Ramp) RETURN r.code LIMIT 4")
    result = gr.execute_graph(graph, query)
    codes = [v for (v,) in result.rows]
    assert codes == sorted(codes)
    assert len(codes) == 4


def test_order_by_must_be_returned(graph):
    query = gr.parse_graph_query("MATCH (r:Ramp) RETURN r.code ORDER BY r.nope")
    with pytest.raises(gr.GraphParseError):
        gr.execute_graph(graph, query)


def test_text_to_graph_query_retries():
    import flightrag.llm as llm_mod

    llm = llm_mod.scripted_handle(
        [
            (llm_mod.FixtureRule(match=("previous attempt failed",), response="MATCH (r:Ramp) RETURN r.code")),
            (llm_mod.FixtureRule(match=("Graph question:",), response="not a query")),
        ],
        strict=False,
        default_response="",
    )
    schema = gr.SchemaDescription(labels={}, relationships={})
    query = gr.text_to_graph_query("q", llm, schema)
    assert query.ast.returns[0].prop == "code"
