"""Deterministic executor for the closed SQL dialect.

Semantics, fixed here and mirrored by the documentation:

- Values are float, str, bool, or NULL (None). Numeric contexts coerce
  numeric-looking text (thousands separators, trailing percent) to numbers;
  any other coercion is a type error.
- NULL propagates through arithmetic and comparisons; WHERE keeps only rows
  whose condition is exactly true. AND/OR/NOT use three-valued logic.
- Division by zero yields NULL.
- ROUND(x, d) rounds half away from zero: sign(x) * floor(|x| * 10^d + 0.5) / 10^d.
- Aggregates skip NULLs; COUNT(*) counts rows. SUM/AVG/MIN/MAX of an empty
  input are NULL; COUNT is 0. MIN/MAX work on all-numeric or all-text input.
- An aggregate without GROUP BY aggregates the whole filtered input as one
  group, even when it is empty.
- With GROUP BY, every non-aggregate select or order expression must be one
  of the grouping expressions.
- ORDER BY sorts with a total order over types (NULL < bool < number < text)
  and is stable: tied rows keep first-encountered order, ascending or not.
- UNION deduplicates exact values (no cross-type merging) keeping first
  occurrence; UNION ALL concatenates. Column names come from the first core.
- LIMIT applies last, after set operations and ordering.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from ..core.csvio import format_number, parse_number
from ..core.types import Cell, StructuredTable
from .ast import (
    Aggregate,
    Binary,
    ColumnRef,
    Expr,
    FuncCall,
    Literal,
    SelectCore,
    SelectItem,
    Statement,
    Unary,
    contains_aggregate,
    render_expr,
    walk,
)
from .parser import parse_sql

Value = Union[float, str, bool, None]


class SqlExecutionError(Exception):
    """Statement is semantically invalid or failed at run time."""


class SqlTypeError(SqlExecutionError):
    """Operand types do not fit the operator."""


@dataclass(frozen=True)
class QueryResult:
    """Rows a statement produced; unlike table cells, values may be boolean."""

    columns: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]

    @property
    def is_scalar(self) -> bool:
        return len(self.rows) == 1 and len(self.columns) == 1

    @property
    def scalar(self) -> Value:
        if not self.is_scalar:
            raise SqlExecutionError(
                f"expected a single value, got {len(self.rows)}x{len(self.columns)}"
            )
        return self.rows[0][0]


def _coerce_number(value: Value, context: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool):
        raise SqlTypeError(f"{context}: boolean is not numeric")
    if isinstance(value, float):
        return value
    number = parse_number(value)
    if number is None:
        raise SqlTypeError(f"{context}: not a number: {value!r}")
    return number


def _coerce_bool(value: Value, context: str) -> bool | None:
    if value is None or isinstance(value, bool):
        return value
    raise SqlTypeError(f"{context}: expected a boolean, got {value!r}")


def _like_text(value: Value) -> str | None:
    if value is None:
        return None
    if isinstance(value, bool):
        raise SqlTypeError("LIKE: boolean operand")
    if isinstance(value, float):
        return format_number(value)
    return value


def _like_match(text: str, pattern: str) -> bool:
    # % matches any run of characters; everything else is literal, case-sensitive
    regex = "".join(".*" if ch == "%" else re.escape(ch) for ch in pattern)
    return re.fullmatch(regex, text, flags=re.DOTALL) is not None


def _compare(op: str, left: Value, right: Value) -> bool | None:
    if left is None or right is None:
        return None
    if isinstance(left, bool) or isinstance(right, bool):
        if not (isinstance(left, bool) and isinstance(right, bool)):
            raise SqlTypeError(f"{op}: cannot compare boolean with non-boolean")
        if op not in ("=", "!="):
            raise SqlTypeError(f"{op}: booleans only support = and !=")
        return left == right if op == "=" else left != right
    if isinstance(left, float) or isinstance(right, float):
        l = _coerce_number(left, op)
        r = _coerce_number(right, op)
    elif isinstance(left, str) and isinstance(right, str):
        l, r = left, right  # type: ignore[assignment]
    else:  # pragma: no cover - value domain is closed
        raise SqlTypeError(f"{op}: unsupported operand types")
    if op == "=":
        return l == r
    if op == "!=":
        return l != r
    if op == "<":
        return l < r
    if op == "<=":
        return l <= r
    if op == ">":
        return l > r
    if op == ">=":
        return l >= r
    raise SqlExecutionError(f"unknown comparison {op}")  # pragma: no cover


def round_half_away(x: float, digits: int = 0) -> float:
    scale = 10.0 ** digits
    return math.copysign(math.floor(abs(x) * scale + 0.5) / scale, x) + 0.0


Row = dict[str, Cell]


class _RowCtx:
    __slots__ = ("row",)

    def __init__(self, row: Row):
        self.row = row


class _GroupCtx:
    __slots__ = ("rows", "group_exprs", "rep")

    def __init__(self, rows: list[Row], group_exprs: tuple[Expr, ...]):
        self.rows = rows
        self.group_exprs = group_exprs
        self.rep = rows[0] if rows else None


def _eval_row(expr: Expr, row: Row) -> Value:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, ColumnRef):
        if expr.name not in row:
            raise SqlExecutionError(f"unknown column {expr.name!r}")
        return row[expr.name]
    if isinstance(expr, Unary):
        if expr.op == "NOT":
            value = _coerce_bool(_eval_row(expr.operand, row), "NOT")
            return None if value is None else not value
        value = _coerce_number(_eval_row(expr.operand, row), "unary -")
        return None if value is None else -value
    if isinstance(expr, Binary):
        return _eval_binary(expr, lambda e: _eval_row(e, row))
    if isinstance(expr, FuncCall):
        return _eval_func(expr, lambda e: _eval_row(e, row))
    if isinstance(expr, Aggregate):
        raise SqlExecutionError("aggregate outside of an aggregation context")
    raise TypeError(f"not an expression: {expr!r}")  # pragma: no cover


def _eval_binary(expr: Binary, ev) -> Value:
    op = expr.op
    if op in ("AND", "OR"):
        left = _coerce_bool(ev(expr.left), op)
        right = _coerce_bool(ev(expr.right), op)
        if op == "AND":
            if left is False or right is False:
                return False
            if left is None or right is None:
                return None
            return True
        if left is True or right is True:
            return True
        if left is None or right is None:
            return None
        return False
    if op == "LIKE":
        text = _like_text(ev(expr.left))
        pattern = ev(expr.right)
        if pattern is None or text is None:
            return None
        if not isinstance(pattern, str):
            raise SqlTypeError("LIKE pattern must be text")
        return _like_match(text, pattern)
    if op in ("=", "!=", "<", "<=", ">", ">="):
        return _compare(op, ev(expr.left), ev(expr.right))
    # arithmetic
    left = _coerce_number(ev(expr.left), op)
    right = _coerce_number(ev(expr.right), op)
    if left is None or right is None:
        return None
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        return None if right == 0 else left / right
    raise SqlExecutionError(f"unknown operator {op}")  # pragma: no cover


def _eval_func(expr: FuncCall, ev) -> Value:
    if expr.name == "ABS":
        value = _coerce_number(ev(expr.args[0]), "ABS")
        return None if value is None else abs(value)
    if expr.name == "ROUND":
        value = _coerce_number(ev(expr.args[0]), "ROUND")
        digits = 0.0
        if len(expr.args) == 2:
            d = _coerce_number(ev(expr.args[1]), "ROUND digits")
            if d is None or d != int(d):
                raise SqlTypeError("ROUND digits must be an integer")
            digits = d
        return None if value is None else round_half_away(value, int(digits))
    raise SqlExecutionError(f"unknown function {expr.name}")  # pragma: no cover


def _eval_aggregate(agg: Aggregate, rows: list[Row]) -> Value:
    if agg.is_count_star:
        return float(len(rows))
    values = [v for row in rows if (v := _eval_row(agg.arg, row)) is not None]
    if agg.func == "COUNT":
        return float(len(values))
    if not values:
        return None
    if agg.func in ("SUM", "AVG"):
        numbers = [_coerce_number(v, agg.func) for v in values]
        total = math.fsum(numbers)  # type: ignore[arg-type]
        return total if agg.func == "SUM" else total / len(numbers)
    # MIN / MAX
    if any(isinstance(v, bool) for v in values):
        raise SqlTypeError(f"{agg.func}: boolean input")
    if all(isinstance(v, str) for v in values):
        ordered = sorted(values)  # type: ignore[type-var]
    else:
        ordered = sorted(_coerce_number(v, agg.func) for v in values)  # type: ignore[misc]
    return ordered[0] if agg.func == "MIN" else ordered[-1]


def _eval_grouped(expr: Expr, ctx: _GroupCtx) -> Value:
    for g in ctx.group_exprs:
        if expr == g:
            # grouping expressions are constant within the group
            return _eval_row(expr, ctx.rep) if ctx.rep is not None else None
    if isinstance(expr, Aggregate):
        return _eval_aggregate(expr, ctx.rows)
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, ColumnRef):
        raise SqlExecutionError(
            f"column {expr.name!r} must appear in GROUP BY or inside an aggregate"
        )
    if isinstance(expr, Unary):
        if expr.op == "NOT":
            value = _coerce_bool(_eval_grouped(expr.operand, ctx), "NOT")
            return None if value is None else not value
        value = _coerce_number(_eval_grouped(expr.operand, ctx), "unary -")
        return None if value is None else -value
    if isinstance(expr, Binary):
        return _eval_binary(expr, lambda e: _eval_grouped(e, ctx))
    if isinstance(expr, FuncCall):
        return _eval_func(expr, lambda e: _eval_grouped(e, ctx))
    raise TypeError(f"not an expression: {expr!r}")  # pragma: no cover


def _validate_grouped_expr(expr: Expr, group_by: tuple[Expr, ...], where: str) -> None:
    if any(expr == g for g in group_by):
        return
    if isinstance(expr, Aggregate):
        if expr.arg is not None and contains_aggregate(expr.arg):
            raise SqlExecutionError("nested aggregates are not allowed")
        return
    if isinstance(expr, Literal):
        return
    if isinstance(expr, ColumnRef):
        raise SqlExecutionError(
            f"{where}: column {expr.name!r} must appear in GROUP BY or inside an aggregate"
        )
    if isinstance(expr, Unary):
        _validate_grouped_expr(expr.operand, group_by, where)
        return
    if isinstance(expr, Binary):
        _validate_grouped_expr(expr.left, group_by, where)
        _validate_grouped_expr(expr.right, group_by, where)
        return
    if isinstance(expr, FuncCall):
        for a in expr.args:
            _validate_grouped_expr(a, group_by, where)
        return
    raise TypeError(f"not an expression: {expr!r}")  # pragma: no cover


def _key_of(value: Value) -> tuple[str, Value]:
    # type-tagged so 1.0, True and "1" never collide in group/distinct keys
    if value is None:
        return ("null", None)
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, float):
        return ("num", value)
    return ("str", value)


_TYPE_RANK = {"null": 0, "bool": 1, "num": 2, "str": 3}


def _compare_for_order(a: Value, b: Value) -> int:
    ka, kb = _key_of(a), _key_of(b)
    ra, rb = _TYPE_RANK[ka[0]], _TYPE_RANK[kb[0]]
    if ra != rb:
        return -1 if ra < rb else 1
    if ka[1] == kb[1]:
        return 0
    return -1 if ka[1] < kb[1] else 1  # type: ignore[operator]


def _item_name(item: SelectItem) -> str:
    if item.alias:
        return item.alias
    if isinstance(item.expr, ColumnRef):
        return item.expr.name
    return render_expr(item.expr)


def _execute_core(core: SelectCore, tables: Mapping[str, StructuredTable]):
    if core.table not in tables:
        raise SqlExecutionError(f"unknown table {core.table!r}")
    table = tables[core.table]
    columns = set(table.columns)

    items = core.items
    if core.star:
        if core.group_by:
            raise SqlExecutionError("SELECT * cannot be combined with GROUP BY")
        items = tuple(SelectItem(ColumnRef(c)) for c in table.columns)

    aliases = {item.alias for item in items if item.alias}
    for expr in [i.expr for i in items] + ([core.where] if core.where else []) + list(core.group_by):
        for node in walk(expr):
            if isinstance(node, ColumnRef) and node.name not in columns:
                raise SqlExecutionError(f"unknown column {node.name!r}")
            if isinstance(node, Aggregate) and node.arg is not None and contains_aggregate(node.arg):
                raise SqlExecutionError("nested aggregates are not allowed")
    if core.where is not None and contains_aggregate(core.where):
        raise SqlExecutionError("aggregates are not allowed in WHERE")
    for g in core.group_by:
        if contains_aggregate(g):
            raise SqlExecutionError("aggregates are not allowed in GROUP BY")

    rows: list[Row] = [dict(zip(table.columns, r)) for r in table.rows]
    if core.where is not None:
        rows = [r for r in rows if _eval_row(core.where, r) is True]

    grouped = bool(core.group_by) or any(contains_aggregate(i.expr) for i in items)
    names = tuple(_item_name(i) for i in items)

    if not grouped:
        out = [tuple(_eval_row(i.expr, r) for i in items) for r in rows]
        return names, out, rows, items, aliases

    for item in items:
        _validate_grouped_expr(item.expr, core.group_by, "select list")

    if core.group_by:
        groups: dict[tuple, list[Row]] = {}
        for r in rows:
            key = tuple(_key_of(_eval_row(g, r)) for g in core.group_by)
            groups.setdefault(key, []).append(r)
        group_rows = list(groups.values())
    else:
        group_rows = [rows]  # one group, possibly empty

    out = []
    contexts = []
    for g_rows in group_rows:
        ctx = _GroupCtx(g_rows, core.group_by)
        out.append(tuple(_eval_grouped(i.expr, ctx) for i in items))
        contexts.append(ctx)
    return names, out, contexts, items, aliases


def execute_statement(
    stmt: Statement, tables: Mapping[str, StructuredTable]
) -> QueryResult:
    names: tuple[str, ...] = ()
    combined: list[tuple[Value, ...]] = []
    core_state = None
    for i, core in enumerate(stmt.cores):
        core_names, core_rows, row_sources, items, aliases = _execute_core(core, tables)
        if i == 0:
            names = core_names
            combined = list(core_rows)
            core_state = (core, row_sources, items, aliases)
        else:
            if len(core_names) != len(names):
                raise SqlExecutionError(
                    f"UNION arity mismatch: {len(names)} vs {len(core_names)} columns"
                )
            if stmt.set_ops[i - 1] == "UNION ALL":
                combined.extend(core_rows)
            else:
                seen = {tuple(_key_of(v) for v in row) for row in combined}
                for row in core_rows:
                    key = tuple(_key_of(v) for v in row)
                    if key not in seen:
                        seen.add(key)
                        combined.append(row)
            core_state = None  # source-row ordering only meaningful for one core

    if stmt.order_by:
        single_core = len(stmt.cores) == 1
        core, row_sources, items, aliases = core_state if core_state else (None,) * 4
        by_name = {n: idx for idx, n in enumerate(names)}

        def order_values(position: int, row: tuple[Value, ...]) -> list[Value]:
            values = []
            for o in stmt.order_by:
                expr = o.expr
                if isinstance(expr, ColumnRef) and expr.name in by_name:
                    values.append(row[by_name[expr.name]])
                    continue
                if not single_core:
                    raise SqlExecutionError(
                        "ORDER BY over a UNION must name result columns"
                    )
                source = row_sources[position]
                if isinstance(source, _GroupCtx):
                    _validate_grouped_expr(expr, core.group_by, "ORDER BY")
                    values.append(_eval_grouped(expr, source))
                else:
                    values.append(_eval_row(expr, source))
            return values

        keyed = [
            (order_values(pos, row), row) for pos, row in enumerate(combined)
        ]

        def cmp(a, b) -> int:
            for o, va, vb in zip(stmt.order_by, a[0], b[0]):
                c = _compare_for_order(va, vb)
                if c:
                    return -c if o.descending else c
            return 0  # stable: ties keep first-encountered order

        keyed.sort(key=functools.cmp_to_key(cmp))
        combined = [row for _, row in keyed]

    if stmt.limit is not None:
        combined = combined[: stmt.limit]
    return QueryResult(names, tuple(combined))


def execute_sql(program: str | Statement, table: StructuredTable) -> QueryResult:
    """Run a single-table program. The FROM name is cosmetic here: every core
    binds to the one table provided."""
    stmt = parse_sql(program) if isinstance(program, str) else program
    tables = {core.table: table for core in stmt.cores}
    return execute_statement(stmt, tables)


def execute_equijoin(
    left: StructuredTable,
    right: StructuredTable,
    left_key: str,
    right_key: str | None = None,
) -> StructuredTable:
    """Inner equijoin on one key column; the engine-side oracle for column
    aggregation. Key cells match when equal modulo numeric formatting; NULL
    keys never match; duplicate keys cross-match. Colliding right-side column
    names get a "_2" suffix."""
    right_key = right_key if right_key is not None else left_key
    li = left.column_index(left_key)
    ri = right.column_index(right_key)
    out_columns = list(left.columns)
    keep = [i for i in range(right.width) if i != ri]
    for i in keep:
        name = right.columns[i]
        out_columns.append(name + "_2" if name in out_columns else name)
    rows: list[tuple[Cell, ...]] = []
    from ..core.csvio import cells_equal

    for lrow in left.rows:
        key = lrow[li]
        if key is None:
            continue
        for rrow in right.rows:
            if rrow[ri] is not None and cells_equal(key, rrow[ri]):
                rows.append(tuple(lrow) + tuple(rrow[i] for i in keep))
    return StructuredTable(tuple(out_columns), tuple(rows))
