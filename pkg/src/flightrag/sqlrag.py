"""SQL answering pipeline: a read-only executor over the flight table,
text-to-SQL via prompted LLMs, query sanitization, and EM/EX metrics.

The executor supports the subset needed by the question templates:
SELECT over the flights table with an optional self-join, WHERE
conjunctions/disjunctions of comparison, LIKE, IN, and IS NULL
predicates, ORDER BY, LIMIT, and COUNT(*).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from . import llm as llm_mod
from . import prompting
from .flight_store import FIELD_KINDS, FIELD_NAMES, FlightRecord, FlightStore, field_to_str, parse_ts


class SqlError(Exception):
    pass


class ParseError(SqlError):
    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at {position}: {message}")
        self.position = position
        self.message = message


class UnknownColumn(SqlError):
    def __init__(self, name: str):
        super().__init__(f"unknown column: {name}")
        self.name = name


class UnknownTable(SqlError):
    def __init__(self, name: str):
        super().__init__(f"unknown table: {name}")
        self.name = name


class ForbiddenStatement(SqlError):
    def __init__(self, kind: str):
        super().__init__(f"forbidden statement: {kind}")
        self.kind = kind


class MultipleStatements(SqlError):
    def __init__(self):
        super().__init__("multiple statements are not allowed")


class UnparseableAfterRetry(SqlError):
    pass


# --- query value objects --------------------------------------------------


def normalize_sql(text: str) -> str:
    """Lowercase outside string literals, collapse whitespace, strip ';'."""
    out = []
    i = 0
    in_string = False
    while i < len(text):
        ch = text[i]
        if in_string:
            out.append(ch)
            if ch == "'":
                if i + 1 < len(text) and text[i + 1] == "'":
                    out.append("'")
                    i += 1
                else:
                    in_string = False
        else:
            if ch == "'":
                in_string = True
                out.append(ch)
            else:
                out.append(ch.lower())
        i += 1
    collapsed = " ".join("".join(out).split())
    return collapsed.rstrip(";").strip()


@dataclass(frozen=True)
class SqlQuery:
    text: str

    @property
    def normalized(self) -> str:
        return normalize_sql(self.text)


@dataclass(frozen=True)
class QueryResult:
    columns: list[str]
    rows: list[tuple]

    def row_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]


# --- AST ------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnRef:
    table: Optional[str]  # alias or None
    name: str

    def __str__(self) -> str:
        return f"{self.table}.{self.name}" if self.table else self.name


@dataclass(frozen=True)
class Comparison:
    column: ColumnRef
    op: str  # = <> < <= > >=
    value: Union[str, int, float]


@dataclass(frozen=True)
class LikePredicate:
    column: ColumnRef
    pattern: str


@dataclass(frozen=True)
class InPredicate:
    column: ColumnRef
    values: tuple


@dataclass(frozen=True)
class IsNullPredicate:
    column: ColumnRef
    negated: bool


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class JoinSpec:
    alias: str
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class Select:
    columns: tuple  # ColumnRef tuple, or ("*",), or ("count",)
    table_alias: Optional[str]
    join: Optional[JoinSpec]
    where: Optional[object]
    order_by: Optional[tuple[ColumnRef, bool]]  # (column, ascending)
    limit: Optional[int]


# --- tokenizer / parser ---------------------------------------------------

_TOKEN_SPEC = re.compile(
    r"""\s*(?:
        (?P<string>'(?:[^']|'')*')
      | (?P<number>\d+(?:\.\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op><=|>=|<>|!=|=|<|>|\(|\)|,|\*|;|\.)
    )""",
    re.VERBOSE,
)

KEYWORDS = {
    "select", "from", "where", "and", "or", "like", "in", "is", "not", "null",
    "order", "by", "asc", "desc", "limit", "join", "on", "as", "count",
}


@dataclass
class _Token:
    kind: str  # string | number | ident | op | keyword
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_SPEC.match(text, pos)
        if not m:
            raise ParseError(pos, f"unexpected character {text[pos]!r}")
        if m.group("string") is not None:
            tokens.append(_Token("string", m.group("string")[1:-1].replace("''", "'"), pos))
        elif m.group("number") is not None:
            tokens.append(_Token("number", m.group("number"), pos))
        elif m.group("ident") is not None:
            word = m.group("ident")
            kind = "keyword" if word.lower() in KEYWORDS else "ident"
            tokens.append(_Token(kind, word, pos))
        else:
            tokens.append(_Token("op", m.group("op"), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(len(self.text), "unexpected end of query")
        self.i += 1
        return tok

    def expect_keyword(self, word: str) -> _Token:
        tok = self.next()
        if tok.kind != "keyword" or tok.value.lower() != word:
            raise ParseError(tok.pos, f"expected {word.upper()}")
        return tok

    def accept_keyword(self, word: str) -> bool:
        tok = self.peek()
        if tok and tok.kind == "keyword" and tok.value.lower() == word:
            self.i += 1
            return True
        return False

    def accept_op(self, op: str) -> bool:
        tok = self.peek()
        if tok and tok.kind == "op" and tok.value == op:
            self.i += 1
            return True
        return False

    # grammar ------------------------------------------------------------

    def parse(self) -> Select:
        self.expect_keyword("select")
        columns = self._columns()
        self.expect_keyword("from")
        table_alias = self._table()
        join = None
        if self.accept_keyword("join"):
            join_alias = self._table()
            self.expect_keyword("on")
            left = self._column_ref()
            tok = self.next()
            if tok.value != "=":
                raise ParseError(tok.pos, "JOIN condition must use =")
            right = self._column_ref()
            join = JoinSpec(alias=join_alias or "flights_2", left=left, right=right)
        where = None
        if self.accept_keyword("where"):
            where = self._or_expr()
        order_by = None
        if self.accept_keyword("order"):
            self.expect_keyword("by")
            col = self._column_ref()
            ascending = True
            if self.accept_keyword("desc"):
                ascending = False
            else:
                self.accept_keyword("asc")
            order_by = (col, ascending)
        limit = None
        if self.accept_keyword("limit"):
            tok = self.next()
            if tok.kind != "number":
                raise ParseError(tok.pos, "LIMIT requires a number")
            limit = int(tok.value)
        self.accept_op(";")
        leftover = self.peek()
        if leftover is not None:
            raise ParseError(leftover.pos, f"unexpected token {leftover.value!r}")
        return Select(
            columns=columns,
            table_alias=table_alias,
            join=join,
            where=where,
            order_by=order_by,
            limit=limit,
        )

    def _columns(self):
        if self.accept_op("*"):
            return ("*",)
        if self.accept_keyword("count"):
            tok = self.next()
            if tok.value != "(":
                raise ParseError(tok.pos, "expected ( after COUNT")
            if not self.accept_op("*"):
                raise ParseError(tok.pos, "only COUNT(*) is supported")
            tok = self.next()
            if tok.value != ")":
                raise ParseError(tok.pos, "expected ) after COUNT(*")
            return ("count",)
        cols = [self._column_ref()]
        while self.accept_op(","):
            cols.append(self._column_ref())
        return tuple(cols)

    def _table(self) -> Optional[str]:
        tok = self.next()
        if tok.kind != "ident" or tok.value.lower() != "flights":
            raise UnknownTable(tok.value)
        alias = None
        if self.accept_keyword("as"):
            alias_tok = self.next()
            alias = alias_tok.value
        else:
            nxt = self.peek()
            if nxt and nxt.kind == "ident":
                alias = self.next().value
        return alias

    def _column_ref(self) -> ColumnRef:
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(tok.pos, "expected column name")
        if self.accept_op("."):
            name_tok = self.next()
            if name_tok.kind != "ident":
                raise ParseError(name_tok.pos, "expected column name after '.'")
            return ColumnRef(table=tok.value, name=name_tok.value.lower())
        return ColumnRef(table=None, name=tok.value.lower())

    def _or_expr(self):
        parts = [self._and_expr()]
        while self.accept_keyword("or"):
            parts.append(self._and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and_expr(self):
        parts = [self._primary()]
        while self.accept_keyword("and"):
            parts.append(self._primary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _primary(self):
        if self.accept_op("("):
            expr = self._or_expr()
            tok = self.next()
            if tok.value != ")":
                raise ParseError(tok.pos, "expected )")
            return expr
        col = self._column_ref()
        tok = self.peek()
        if tok and tok.kind == "keyword" and tok.value.lower() == "like":
            self.next()
            pat = self.next()
            if pat.kind != "string":
                raise ParseError(pat.pos, "LIKE requires a string pattern")
            return LikePredicate(col, pat.value)
        if tok and tok.kind == "keyword" and tok.value.lower() == "in":
            self.next()
            open_tok = self.next()
            if open_tok.value != "(":
                raise ParseError(open_tok.pos, "IN requires a value list")
            values = [self._literal()]
            while self.accept_op(","):
                values.append(self._literal())
            close_tok = self.next()
            if close_tok.value != ")":
                raise ParseError(close_tok.pos, "expected ) after IN list")
            return InPredicate(col, tuple(values))
        if tok and tok.kind == "keyword" and tok.value.lower() == "is":
            self.next()
            negated = self.accept_keyword("not")
            self.expect_keyword("null")
            return IsNullPredicate(col, negated)
        op_tok = self.next()
        if op_tok.kind != "op" or op_tok.value not in ("=", "<>", "!=", "<", "<=", ">", ">="):
            raise ParseError(op_tok.pos, f"expected comparison operator, got {op_tok.value!r}")
        op = "<>" if op_tok.value == "!=" else op_tok.value
        nxt = self.peek()
        if nxt is not None and nxt.kind == "ident":
            return Comparison(col, op, self._column_ref())
        return Comparison(col, op, self._literal())

    def _literal(self):
        tok = self.next()
        if tok.kind == "string":
            return tok.value
        if tok.kind == "number":
            return float(tok.value) if "." in tok.value else int(tok.value)
        raise ParseError(tok.pos, "expected literal value")


def parse_sql(text: str) -> Select:
    return _Parser(text).parse()


# --- sanitizer ------------------------------------------------------------

_FORBIDDEN_FIRST_WORDS = {
    "insert", "update", "delete", "drop", "alter", "create", "attach",
    "pragma", "replace", "truncate", "grant", "revoke", "vacuum", "begin",
    "commit", "detach", "reindex", "with",
}


def _strip_strings(text: str) -> str:
    return re.sub(r"'(?:[^']|'')*'", "''", text)


def sanitize_sql(query: SqlQuery) -> SqlQuery:
    """Accept only a single SELECT statement; everything else is rejected."""
    stripped = _strip_strings(query.text)
    statements = [s for s in stripped.split(";") if s.strip()]
    if len(statements) > 1:
        raise MultipleStatements()
    if not statements:
        raise ForbiddenStatement("EMPTY")
    first_word = statements[0].split()[0].lower()
    if first_word != "select":
        raise ForbiddenStatement(first_word.upper())
    return query


# --- executor -------------------------------------------------------------

_CODE_FIELDS = {name for name, kind in FIELD_KINDS.items() if kind == "code"}


def _cell_value(record: FlightRecord, name: str):
    """Normalized cell value: timestamps and booleans as canonical strings."""
    kind = FIELD_KINDS[name]
    if kind == "int":
        return getattr(record, name)
    text = field_to_str(record, name)
    return text if text != "" else None


def _resolve(env: dict[str, FlightRecord], col: ColumnRef) -> FlightRecord:
    if col.name not in FIELD_KINDS:
        raise UnknownColumn(str(col))
    if col.table is None:
        return next(iter(env.values()))
    if col.table not in env:
        raise UnknownTable(col.table)
    return env[col.table]


def _compare(name: str, stored, op: str, literal) -> bool:
    kind = FIELD_KINDS[name]
    if stored is None:
        return False
    if kind == "int":
        try:
            lit = int(literal) if not isinstance(literal, (int, float)) else literal
        except ValueError:
            return False
        left, right = stored, lit
    elif kind in ("ts", "ts_opt"):
        # Canonical timestamp strings are fixed width: lexicographic order
        # equals chronological order. Accept any parseable literal form.
        try:
            from .flight_store import format_ts
            right = format_ts(parse_ts(str(literal)))
        except ValueError:
            right = str(literal)
        left = stored
    elif kind in ("code",):
        left, right = str(stored).upper(), str(literal).upper()
    else:
        left, right = str(stored), str(literal)
    if op == "=":
        return left == right
    if op == "<>":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown operator {op}")


def _like(name: str, stored, pattern: str) -> bool:
    if stored is None:
        return False
    regex = "".join(
        ".*" if ch == "%" else "." if ch == "_" else re.escape(ch) for ch in pattern
    )
    flags = re.IGNORECASE if name in _CODE_FIELDS else 0
    return re.fullmatch(regex, str(stored), flags) is not None


def _eval_where(env: dict[str, FlightRecord], expr) -> bool:
    if isinstance(expr, And):
        return all(_eval_where(env, p) for p in expr.parts)
    if isinstance(expr, Or):
        return any(_eval_where(env, p) for p in expr.parts)
    if isinstance(expr, Comparison):
        record = _resolve(env, expr.column)
        value = expr.value
        if isinstance(value, ColumnRef):
            other = _resolve(env, value)
            value = _cell_value(other, value.name)
            if value is None:
                return False
        return _compare(expr.column.name, _cell_value(record, expr.column.name), expr.op, value)
    if isinstance(expr, LikePredicate):
        record = _resolve(env, expr.column)
        return _like(expr.column.name, _cell_value(record, expr.column.name), expr.pattern)
    if isinstance(expr, InPredicate):
        record = _resolve(env, expr.column)
        return any(
            _compare(expr.column.name, _cell_value(record, expr.column.name), "=", v)
            for v in expr.values
        )
    if isinstance(expr, IsNullPredicate):
        record = _resolve(env, expr.column)
        is_null = _cell_value(record, expr.column.name) is None
        return is_null != expr.negated
    raise ValueError(f"unknown expression node: {expr!r}")


def execute_select(store: FlightStore, select: Select) -> QueryResult:
    base_alias = select.table_alias or "flights"
    envs: list[dict[str, FlightRecord]] = []
    if select.join is None:
        for r in store:
            envs.append({base_alias: r})
    else:
        join = select.join
        for r1 in store:
            for r2 in store:
                env = {base_alias: r1, join.alias: r2}
                lrec = _resolve(env, join.left)
                lval = _cell_value(lrec, join.left.name)
                rrec = _resolve(env, join.right)
                rval = _cell_value(rrec, join.right.name)
                if lval is None or rval is None:
                    continue
                if _compare(join.left.name, lval, "=", rval):
                    envs.append(env)

    if select.where is not None:
        envs = [env for env in envs if _eval_where(env, select.where)]

    if select.order_by is not None:
        col, ascending = select.order_by
        for env in envs:
            _resolve(env, col)  # validate

        def key(env):
            value = _cell_value(_resolve(env, col), col.name)
            return (value is None, value)

        envs.sort(key=key, reverse=not ascending)

    if select.limit is not None:
        envs = envs[: select.limit]

    if select.columns == ("count",):
        return QueryResult(columns=["count"], rows=[(len(envs),)])

    if select.columns == ("*",):
        if select.join is None:
            columns = list(FIELD_NAMES)
            rows = [tuple(_cell_value(env[base_alias], f) for f in FIELD_NAMES) for env in envs]
        else:
            aliases = [base_alias, select.join.alias]
            columns = [f"{a}.{f}" for a in aliases for f in FIELD_NAMES]
            rows = [
                tuple(_cell_value(env[a], f) for a in aliases for f in FIELD_NAMES)
                for env in envs
            ]
        return QueryResult(columns=columns, rows=rows)

    columns = [str(c) for c in select.columns]
    rows = []
    for env in envs:
        rows.append(tuple(_cell_value(_resolve(env, c), c.name) for c in select.columns))
    return QueryResult(columns=columns, rows=rows)


def execute_sql(store: FlightStore, query: SqlQuery) -> QueryResult:
    sanitize_sql(query)
    return execute_select(store, parse_sql(query.text))


# --- metrics --------------------------------------------------------------


def exact_match(predicted: SqlQuery, gold: SqlQuery) -> bool:
    return predicted.normalized == gold.normalized


def _comparable(result: QueryResult):
    order = sorted(range(len(result.columns)), key=lambda i: result.columns[i])
    names = tuple(result.columns[i] for i in order)
    rows = sorted(tuple(str(row[i]) for i in order) for row in result.rows)
    return names, rows


def execution_match(store: FlightStore, predicted: SqlQuery, gold: SqlQuery) -> bool:
    """Column-order-insensitive comparison of execution results.

    Execution errors on either side count as a mismatch. When column names
    differ but arity matches, rows are compared with values sorted within
    each row (query languages name columns differently for the same data).
    """
    try:
        p = execute_sql(store, predicted)
        g = execute_sql(store, gold)
    except SqlError:
        return False
    p_names, p_rows = _comparable(p)
    g_names, g_rows = _comparable(g)
    if p_names == g_names:
        return p_rows == g_rows
    if len(p_names) != len(g_names):
        return False
    p_loose = sorted(tuple(sorted(row)) for row in p_rows)
    g_loose = sorted(tuple(sorted(row)) for row in g_rows)
    return p_loose == g_loose


# --- schema + text-to-SQL -------------------------------------------------

_SQL_TYPE_BY_KIND = {
    "code": "TEXT",
    "str": "TEXT",
    "ts": "TIMESTAMP",
    "ts_opt": "TIMESTAMP",
    "int": "INTEGER",
    "bool": "BOOLEAN",
}


class SqlSchema:
    """Schema introspection derived from the flight record field map."""

    table = "flights"
    primary_key = "flight_uid"
    foreign_keys = [("connecting_flight_nr", "flights", "flight_nr")]

    def table_listing(self) -> str:
        return f"{self.table}({', '.join(FIELD_NAMES)})"

    def create_table(self) -> str:
        lines = [f"CREATE TABLE {self.table} ("]
        for name in FIELD_NAMES:
            lines.append(f"    {name} {_SQL_TYPE_BY_KIND[FIELD_KINDS[name]]},")
        lines.append(f"    PRIMARY KEY ({self.primary_key}),")
        for col, ref_table, ref_col in self.foreign_keys:
            lines.append(f"    FOREIGN KEY ({col}) REFERENCES {ref_table}({ref_col}),")
        lines[-1] = lines[-1].rstrip(",")
        lines.append(");")
        return "\n".join(lines)


_FENCE_RE = re.compile(r"```(?:sql|cypher)?\s*(.*?)```", re.DOTALL)


def strip_fences(text: str) -> str:
    m = _FENCE_RE.search(text)
    return (m.group(1) if m else text).strip()


def text_to_sql(
    question: str,
    style: str,
    llm: llm_mod.LlmHandle,
    fewshot: list[tuple[str, str]] | None = None,
    schema: SqlSchema | None = None,
) -> SqlQuery:
    """Prompt the LLM for a SQL query; retry once with error feedback."""
    schema = schema or SqlSchema()
    template = prompting.TEMPLATES["sql_odp" if style == "odp" else "sql_crp"]
    variables = prompting.build_schema_vars("sql", schema)
    variables["question"] = question
    prompt = prompting.render(template, variables, fewshot=fewshot or [])
    last_error = None
    for attempt in range(2):
        response = llm_mod.complete(llm, "You translate questions into SQL.", prompt)
        text = strip_fences(response)
        if not text.lower().lstrip().startswith("select"):
            if re.match(r"^\s*(ramp|flight_nr|\*|[a-z_]+)\b.*\bfrom\b", text, re.IGNORECASE | re.DOTALL):
                text = "SELECT " + text
        try:
            query = SqlQuery(text)
            sanitize_sql(query)
            parse_sql(query.text)
            return query
        except SqlError as exc:
            last_error = exc
            prompt = prompt + f"\nThe previous attempt failed with: {exc}. Return a corrected query."
    raise UnparseableAfterRetry(str(last_error))


def answer_from_rows(
    question: str,
    result: QueryResult,
    llm: Optional[llm_mod.LlmHandle] = None,
) -> str:
    """Verbalize rows; empty results never become a guess."""
    if llm is not None:
        rows_text = "\n".join(
            ", ".join(f"{c}={v}" for c, v in zip(result.columns, row)) for row in result.rows
        )
        user = (
            f"Question: {question}\nQuery result rows:\n{rows_text or '(no rows)'}\n"
            "Answer the question using only these rows."
        )
        try:
            return llm_mod.complete(llm, "You verbalize query results.", user)
        except llm_mod.LlmError:
            pass
    return verbalize_rows(result)


def verbalize_rows(result: QueryResult) -> str:
    if not result.rows:
        return "No matching flights found."
    parts = []
    for row in result.rows:
        parts.append(", ".join(f"{c}: {v}" for c, v in zip(result.columns, row)))
    return "; ".join(parts) + "."
