"""Independent reference implementations used as test oracles.

These deliberately avoid reusing the package's scoring/execution code:
BM25 and TF-IDF are written out directly from their formulas, the SQL
oracle is a naive full-scan interpreter, and the graph counting oracles
count over the raw store.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from collections import Counter

import numpy as np

from flightrag.flight_store import FIELD_KINDS, FIELD_NAMES, field_to_str, parse_ts, format_ts
from flightrag.retrieval import tokenize
from flightrag.sqlrag import (
    And,
    ColumnRef,
    Comparison,
    InPredicate,
    IsNullPredicate,
    LikePredicate,
    Or,
    Select,
    parse_sql,
)

# --- retrieval scoring oracles -------------------------------------------


def bm25_scores_oracle(doc_texts: list[str], query: str, k1=1.2, b=0.75) -> list[float]:
    """Literal BM25 formula, recomputed from the raw texts."""
    docs = [tokenize(t) for t in doc_texts]
    n = len(docs)
    avgdl = sum(len(d) for d in docs) / n
    df = Counter()
    for d in docs:
        for term in set(d):
            df[term] += 1
    scores = []
    for d in docs:
        tf = Counter(d)
        s = 0.0
        for term in tokenize(query):
            f = tf[term]
            if f == 0:
                continue
            idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
            s += idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * len(d) / avgdl))
        scores.append(s)
    return scores


def _tfidf_vectors(doc_texts: list[str], query: str):
    docs = [tokenize(t) for t in doc_texts]
    n = len(docs)
    df = Counter()
    for d in docs:
        for term in set(d):
            df[term] += 1
    vocab = sorted(df)
    index = {t: i for i, t in enumerate(vocab)}
    idf = {t: math.log((1.0 + n) / (1.0 + df[t])) + 1.0 for t in vocab}
    mat = np.zeros((n, len(vocab)))
    for i, d in enumerate(docs):
        for term, count in Counter(d).items():
            mat[i, index[term]] = count * idf[term]
    q = np.zeros(len(vocab))
    for term, count in Counter(tokenize(query)).items():
        if term in index:
            q[index[term]] = count * idf[term]
    return mat, q


def tfidf_cosine_oracle(doc_texts: list[str], query: str) -> list[float]:
    mat, q = _tfidf_vectors(doc_texts, query)
    qn = np.linalg.norm(q)
    out = []
    for row in mat:
        rn = np.linalg.norm(row)
        out.append(0.0 if rn == 0 or qn == 0 else float(row @ q / (rn * qn)))
    return out


def tfidf_euclidean_similarity_oracle(doc_texts: list[str], query: str) -> list[float]:
    mat, q = _tfidf_vectors(doc_texts, query)
    return [1.0 / (1.0 + float(np.linalg.norm(row - q))) for row in mat]


def hashing_embed_oracle(text: str, dim: int = 256) -> np.ndarray:
    vec = np.zeros(dim)
    for token in tokenize(text):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest[:4], "big") % dim] += 1.0 if digest[4] % 2 == 0 else -1.0
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0 else vec


def vector_scores_oracle(doc_texts: list[str], query: str, dim: int = 256) -> list[float]:
    q = hashing_embed_oracle(query, dim)
    return [float(hashing_embed_oracle(t, dim) @ q) for t in doc_texts]


def rrf_oracle(lists: list[tuple[float, list[str]]], rrf_k: int) -> dict[str, float]:
    """Hand-computed weighted reciprocal-rank fusion over plain id lists."""
    scores: dict[str, float] = {}
    for weight, ids in lists:
        for rank, doc_id in enumerate(ids, start=1):
            scores[doc_id] = scores.get(doc_id, 0.0) + weight / (rrf_k + rank)
    return scores


# --- naive SQL interpreter -------------------------------------------------

_CODE_FIELDS = {name for name, kind in FIELD_KINDS.items() if kind == "code"}


def _naive_cell(record, name):
    if FIELD_KINDS[name] == "int":
        return getattr(record, name)
    text = field_to_str(record, name)
    return text if text != "" else None


def _naive_typed(name, left, right) -> tuple:
    kind = FIELD_KINDS[name]
    if kind == "int":
        return left, int(right) if not isinstance(right, (int, float)) else right
    if kind in ("ts", "ts_opt"):
        try:
            right = format_ts(parse_ts(str(right)))
        except ValueError:
            right = str(right)
        return left, right
    if kind == "code":
        return str(left).upper(), str(right).upper()
    return str(left), str(right)


def _naive_compare(name, left, op, right) -> bool:
    if left is None:
        return False
    left, right = _naive_typed(name, left, right)
    return {
        "=": left == right,
        "<>": left != right,
        "<": left < right,
        "<=": left <= right,
        ">": left > right,
        ">=": left >= right,
    }[op]


def _naive_where(env, expr) -> bool:
    if isinstance(expr, And):
        return all(_naive_where(env, p) for p in expr.parts)
    if isinstance(expr, Or):
        return any(_naive_where(env, p) for p in expr.parts)
    if isinstance(expr, Comparison):
        left = _naive_cell(_naive_resolve(env, expr.column), expr.column.name)
        value = expr.value
        if isinstance(value, ColumnRef):
            value = _naive_cell(_naive_resolve(env, value), value.name)
            if value is None:
                return False
        return _naive_compare(expr.column.name, left, expr.op, value)
    if isinstance(expr, LikePredicate):
        left = _naive_cell(_naive_resolve(env, expr.column), expr.column.name)
        if left is None:
            return False
        regex = "".join(
            ".*" if ch == "%" else "." if ch == "_" else re.escape(ch)
            for ch in expr.pattern
        )
        flags = re.IGNORECASE if expr.column.name in _CODE_FIELDS else 0
        return re.fullmatch(regex, str(left), flags) is not None
    if isinstance(expr, InPredicate):
        left = _naive_cell(_naive_resolve(env, expr.column), expr.column.name)
        return any(_naive_compare(expr.column.name, left, "=", v) for v in expr.values)
    if isinstance(expr, IsNullPredicate):
        left = _naive_cell(_naive_resolve(env, expr.column), expr.column.name)
        return (left is None) != expr.negated
    raise AssertionError(f"unknown node {expr!r}")


def _naive_resolve(env, col: ColumnRef):
    if col.table is None:
        return next(iter(env.values()))
    return env[col.table]


def naive_execute(store, sql_text: str):
    """Full-scan interpreter over the parsed AST; returns (columns, rows)."""
    select: Select = parse_sql(sql_text)
    base = select.table_alias or "flights"
    envs = []
    if select.join is None:
        envs = [{base: r} for r in store]
    else:
        for r1 in store:
            for r2 in store:
                env = {base: r1, select.join.alias: r2}
                lv = _naive_cell(_naive_resolve(env, select.join.left), select.join.left.name)
                rv = _naive_cell(_naive_resolve(env, select.join.right), select.join.right.name)
                if lv is None or rv is None:
                    continue
                if _naive_compare(select.join.left.name, lv, "=", rv):
                    envs.append(env)
    if select.where is not None:
        envs = [e for e in envs if _naive_where(e, select.where)]
    if select.order_by is not None:
        col, ascending = select.order_by
        envs.sort(
            key=lambda e: (
                _naive_cell(_naive_resolve(e, col), col.name) is None,
                _naive_cell(_naive_resolve(e, col), col.name),
            ),
            reverse=not ascending,
        )
    if select.limit is not None:
        envs = envs[: select.limit]
    if select.columns == ("count",):
        return ["count"], [(len(envs),)]
    if select.columns == ("*",):
        if select.join is None:
            cols = list(FIELD_NAMES)
            rows = [tuple(_naive_cell(e[base], f) for f in FIELD_NAMES) for e in envs]
        else:
            aliases = [base, select.join.alias]
            cols = [f"{a}.{f}" for a in aliases for f in FIELD_NAMES]
            rows = [
                tuple(_naive_cell(e[a], f) for a in aliases for f in FIELD_NAMES)
                for e in envs
            ]
        return cols, rows
    cols = [str(c) for c in select.columns]
    rows = [
        tuple(_naive_cell(_naive_resolve(e, c), c.name) for c in select.columns)
        for e in envs
    ]
    return cols, rows


# --- random SQL query generator -------------------------------------------

_GEN_COLUMNS = [
    "flight_nr", "flight_uid", "ramp", "bus_gate", "pier", "airline_name",
    "aircraft_category", "main_ground_handler", "direction", "flight_state",
    "mtt_minutes", "eu_indicator", "scheduled_block", "expected_on_ramp",
    "connecting_flight_nr", "actual_on_ramp",
]


def _sample_value(rng: random.Random, store, column: str) -> str:
    records = store.records
    r = records[rng.randrange(len(records))]
    value = field_to_str(r, column)
    if value == "" or rng.random() < 0.2:
        # sometimes a value matching nothing
        return {"mtt_minutes": "999"}.get(column, "ZZ-NOPE")
    if FIELD_KINDS[column] == "code" and rng.random() < 0.5:
        return value.lower()
    return value


def _random_predicate(rng: random.Random, store, alias_pool: list[str]) -> str:
    column = _GEN_COLUMNS[rng.randrange(len(_GEN_COLUMNS))]
    qual = rng.choice(alias_pool)
    ref = f"{qual}.{column}" if qual else column
    roll = rng.random()
    if roll < 0.45:
        op = rng.choice(["=", "<>", "<", "<=", ">", ">="])
        value = _sample_value(rng, store, column)
        if FIELD_KINDS[column] == "int":
            return f"{ref} {op} {value}"
        return f"{ref} {op} '{value}'"
    if roll < 0.6:
        value = _sample_value(rng, store, column)
        pattern = value[: max(1, len(value) // 2)] + "%"
        return f"{ref} LIKE '{pattern}'"
    if roll < 0.75:
        values = ", ".join(
            f"'{_sample_value(rng, store, column)}'" for _ in range(rng.randrange(1, 4))
        )
        return f"{ref} IN ({values})"
    negated = " NOT" if rng.random() < 0.5 else ""
    return f"{ref} IS{negated} NULL"


def random_query(rng: random.Random, store) -> str:
    """One random query inside the supported grammar subset."""
    join = rng.random() < 0.3
    if join:
        alias_pool = ["a", "b"]
        join_col = rng.choice(["ramp", "pier", "connecting_flight_nr"])
        right_col = "flight_nr" if join_col == "connecting_flight_nr" else join_col
        from_clause = f"FROM flights AS a JOIN flights AS b ON a.{join_col} = b.{right_col}"
    else:
        alias_pool = [""]
        from_clause = "FROM flights"

    roll = rng.random()
    if roll < 0.2:
        select_clause = "SELECT COUNT(*)"
    elif roll < 0.4:
        select_clause = "SELECT *"
    else:
        n_cols = rng.randrange(1, 4)
        cols = []
        for _ in range(n_cols):
            column = _GEN_COLUMNS[rng.randrange(len(_GEN_COLUMNS))]
            qual = rng.choice(alias_pool)
            cols.append(f"{qual}.{column}" if qual else column)
        select_clause = "SELECT " + ", ".join(cols)

    predicates = [_random_predicate(rng, store, alias_pool) for _ in range(rng.randrange(0, 4))]
    where = ""
    if predicates:
        glue = [rng.choice([" AND ", " OR "]) for _ in predicates[1:]]
        expr = predicates[0]
        for g, p in zip(glue, predicates[1:]):
            expr = f"({expr}){g}{p}" if rng.random() < 0.3 else f"{expr}{g}{p}"
        where = " WHERE " + expr

    # LIMIT requires a total order to be comparable; restrict it to the
    # single-table case ordered by the unique key.
    tail = ""
    if not join and rng.random() < 0.25:
        tail = f" ORDER BY flight_uid {'ASC' if rng.random() < 0.5 else 'DESC'}"
        if rng.random() < 0.5:
            tail += f" LIMIT {rng.randrange(1, 8)}"
    elif rng.random() < 0.2:
        order_col = rng.choice(_GEN_COLUMNS)
        qual = rng.choice(alias_pool)
        ref = f"{qual}.{order_col}" if qual else order_col
        tail = f" ORDER BY {ref}"

    return f"{select_clause} {from_clause}{where}{tail}"


# --- graph counting oracles ------------------------------------------------


def graph_count_oracle(store) -> dict[str, int]:
    """Expected node and edge counts, computed straight from the records."""
    ramps = {r.ramp for r in store if r.ramp}
    bus_gates = {r.bus_gate for r in store if r.bus_gate}
    piers = {r.pier for r in store if r.pier}
    airlines = {r.airline_name for r in store if r.airline_name}
    connects = sum(
        1 for r in store
        if r.connecting_flight_nr and store.by_flight_nr(r.connecting_flight_nr)
    )
    next_at_ramp = 0
    for r in store:
        if not r.ramp:
            continue
        later = [
            c for c in store
            if c.ramp and c.ramp.upper() == r.ramp.upper()
            and c.expected_on_ramp > r.expected_on_ramp
        ]
        if later:
            next_at_ramp += 1
    return {
        "nodes": len(store) + len(ramps) + len(bus_gates) + len(piers) + len(airlines),
        "Flight": len(store),
        "Ramp": len(ramps),
        "BusGate": len(bus_gates),
        "Pier": len(piers),
        "Airline": len(airlines),
        "AT_RAMP": sum(1 for r in store if r.ramp),
        "AT_BUS_GATE": sum(1 for r in store if r.bus_gate),
        "AT_PIER": sum(1 for r in store if r.pier),
        "OPERATED_BY": sum(1 for r in store if r.airline_name),
        "CONNECTS_TO": connects,
        "NEXT_AT_RAMP": next_at_ramp,
    }
