"""Reference evaluator for the closed SQL dialect, used as a cross-check
oracle in randomized tests.

Independent of the package executor by construction: dispatch tables keyed
on node type instead of isinstance chains, exact rational aggregation via
fractions/statistics instead of float summation, a hand-rolled LIKE matcher
instead of regexes, and multi-pass stable sorting instead of a comparator.
Only the AST node classes are shared; they are the dialect's data contract.

Raises BruteError wherever the dialect defines an error. Callers assert
that the package executor and this evaluator either agree on the result or
both raise.
"""

from __future__ import annotations

import math
import statistics
from fractions import Fraction
from typing import Callable

from tablequest.analyzer.ast import (
    Aggregate,
    Binary,
    ColumnRef,
    Expr,
    FuncCall,
    Literal,
    SelectCore,
    SelectItem,
    Statement,
    contains_aggregate,
    render_expr,
)
from tablequest.core.types import Cell, StructuredTable

Value = Cell  # float | str | bool | None


class BruteError(Exception):
    pass


# ---- scalar kernel ----------------------------------------------------------


def _to_number(value: Value) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool):
        raise BruteError("boolean is not numeric")
    if isinstance(value, float):
        return value
    text = value.strip()
    if text.endswith("%"):
        text = text[:-1].strip()
    text = text.replace(",", "")
    if not text or "_" in text:
        raise BruteError(f"not a number: {value!r}")
    try:
        number = float(text)
    except ValueError:
        raise BruteError(f"not a number: {value!r}") from None
    if not math.isfinite(number):
        raise BruteError(f"not a number: {value!r}")
    return number


def _to_bool(value: Value) -> bool | None:
    if value is None or isinstance(value, bool):
        return value
    raise BruteError(f"expected a boolean, got {value!r}")


def _render_number(value: float) -> str:
    text = "%.12g" % value
    return "0" if text == "-0" else text


def _like(text: str, pattern: str) -> bool:
    # recursive descent: '%' matches any run, all else literal
    if not pattern:
        return not text
    if pattern[0] == "%":
        return any(_like(text[i:], pattern[1:]) for i in range(len(text) + 1))
    return bool(text) and text[0] == pattern[0] and _like(text[1:], pattern[1:])


def _round_half_away(x: float, digits: int) -> float:
    # the documented contract: sign(x) * floor(|x| * 10^d + 0.5) / 10^d
    scale = 10.0 ** digits
    return math.copysign(math.floor(abs(x) * scale + 0.5) / scale, x) + 0.0


_TAGS = ((bool, "bool"), (float, "num"), (str, "str"))


def _tag(value: Value) -> tuple[str, Value]:
    for kind, name in _TAGS:
        if isinstance(value, kind):
            return (name, value)
    return ("null", None)


_ORDER_RANK = {"null": 0, "bool": 1, "num": 2, "str": 3}


def _numeric_pair(left: Value, right: Value) -> tuple[float | None, float | None]:
    return _to_number(left), _to_number(right)


def _cmp_values(op: str, left: Value, right: Value) -> bool | None:
    if left is None or right is None:
        return None
    left_bool = isinstance(left, bool)
    right_bool = isinstance(right, bool)
    if left_bool or right_bool:
        if not (left_bool and right_bool):
            raise BruteError("cannot compare boolean with non-boolean")
        if op not in ("=", "!="):
            raise BruteError("booleans only support = and !=")
        return (left is right) if op == "=" else (left is not right)
    if isinstance(left, str) and isinstance(right, str):
        a, b = left, right
    else:
        a, b = _numeric_pair(left, right)
    table: dict[str, Callable[[object, object], bool]] = {
        "=": lambda x, y: x == y,
        "!=": lambda x, y: x != y,
        "<": lambda x, y: x < y,
        "<=": lambda x, y: x <= y,
        ">": lambda x, y: x > y,
        ">=": lambda x, y: x >= y,
    }
    return table[op](a, b)


def _arith(op: str, left: Value, right: Value) -> Value:
    a, b = _numeric_pair(left, right)
    if a is None or b is None:
        return None
    if op == "/" and b == 0:
        return None
    table: dict[str, Callable[[float, float], float]] = {
        "+": lambda x, y: x + y,
        "-": lambda x, y: x - y,
        "*": lambda x, y: x * y,
        "/": lambda x, y: x / y,
    }
    return table[op](a, b)


def _logic(op: str, left: bool | None, right: bool | None) -> bool | None:
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


# ---- expression evaluation ---------------------------------------------------

Env = Callable[[str], Value]  # column name -> value


def _eval(expr: Expr, env: Env, agg_rows: list[dict] | None) -> Value:
    handler = _DISPATCH[type(expr)]
    return handler(expr, env, agg_rows)


def _eval_literal(expr: Literal, env: Env, agg_rows) -> Value:
    return expr.value


def _eval_column(expr: ColumnRef, env: Env, agg_rows) -> Value:
    return env(expr.name)


def _eval_unary(expr, env: Env, agg_rows) -> Value:
    if expr.op == "NOT":
        inner = _to_bool(_eval(expr.operand, env, agg_rows))
        return None if inner is None else not inner
    inner = _to_number(_eval(expr.operand, env, agg_rows))
    return None if inner is None else -inner


def _eval_binary(expr: Binary, env: Env, agg_rows) -> Value:
    op = expr.op
    if op in ("AND", "OR"):
        return _logic(
            op,
            _to_bool(_eval(expr.left, env, agg_rows)),
            _to_bool(_eval(expr.right, env, agg_rows)),
        )
    if op == "LIKE":
        subject = _eval(expr.left, env, agg_rows)
        pattern = _eval(expr.right, env, agg_rows)
        if subject is None or pattern is None:
            return None
        if isinstance(subject, bool):
            raise BruteError("LIKE: boolean operand")
        if not isinstance(pattern, str):
            raise BruteError("LIKE pattern must be text")
        text = _render_number(subject) if isinstance(subject, float) else subject
        return _like(text, pattern)
    if op in ("=", "!=", "<", "<=", ">", ">="):
        return _cmp_values(
            op, _eval(expr.left, env, agg_rows), _eval(expr.right, env, agg_rows)
        )
    return _arith(
        op, _eval(expr.left, env, agg_rows), _eval(expr.right, env, agg_rows)
    )


def _eval_func(expr: FuncCall, env: Env, agg_rows) -> Value:
    if expr.name == "ABS":
        value = _to_number(_eval(expr.args[0], env, agg_rows))
        return None if value is None else abs(value)
    value = _to_number(_eval(expr.args[0], env, agg_rows))
    digits = 0
    if len(expr.args) == 2:
        raw = _to_number(_eval(expr.args[1], env, agg_rows))
        if raw is None or raw != int(raw):
            raise BruteError("ROUND digits must be an integer")
        digits = int(raw)
    return None if value is None else _round_half_away(value, digits)


def _eval_aggregate(expr: Aggregate, env: Env, agg_rows) -> Value:
    if agg_rows is None:
        raise BruteError("aggregate outside an aggregation context")
    if expr.is_count_star:
        return float(len(agg_rows))
    collected: list[Value] = []
    for row in agg_rows:
        value = _eval(expr.arg, lambda name: _cell(row, name), None)
        if value is not None:
            collected.append(value)
    if expr.func == "COUNT":
        return float(len(collected))
    if not collected:
        return None
    if expr.func in ("SUM", "AVG"):
        exact = [Fraction(_to_number(v)) for v in collected]
        if expr.func == "SUM":
            return float(sum(exact))
        return float(statistics.mean(exact))
    if any(isinstance(v, bool) for v in collected):
        raise BruteError(f"{expr.func}: boolean input")
    if all(isinstance(v, str) for v in collected):
        pool: list = list(collected)
    else:
        pool = [_to_number(v) for v in collected]
    return min(pool) if expr.func == "MIN" else max(pool)


_DISPATCH: dict[type, Callable] = {
    Literal: _eval_literal,
    ColumnRef: _eval_column,
    Binary: _eval_binary,
    FuncCall: _eval_func,
    Aggregate: _eval_aggregate,
}
# Unary lacks a public name clash risk; resolve it via the module to keep
# the dispatch table total.
from tablequest.analyzer.ast import Unary as _Unary  # noqa: E402

_DISPATCH[_Unary] = _eval_unary


def _cell(row: dict, name: str) -> Value:
    if name not in row:
        raise BruteError(f"unknown column {name!r}")
    return row[name]


# ---- grouped evaluation -------------------------------------------------------


def _eval_grouped(
    expr: Expr, group_by: tuple[Expr, ...], rows: list[dict], rep: dict | None
) -> Value:
    if any(expr == g for g in group_by):
        if rep is None:
            return None
        return _eval(expr, lambda name: _cell(rep, name), None)
    if isinstance(expr, Aggregate):
        if expr.arg is not None and contains_aggregate(expr.arg):
            raise BruteError("nested aggregates are not allowed")
        return _eval_aggregate(expr, lambda name: None, rows)
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, ColumnRef):
        raise BruteError(f"column {expr.name!r} must appear in GROUP BY or an aggregate")
    if isinstance(expr, _Unary):
        inner = _eval_grouped(expr.operand, group_by, rows, rep)
        if expr.op == "NOT":
            flag = _to_bool(inner)
            return None if flag is None else not flag
        number = _to_number(inner)
        return None if number is None else -number
    if isinstance(expr, Binary):
        if expr.op in ("AND", "OR"):
            return _logic(
                expr.op,
                _to_bool(_eval_grouped(expr.left, group_by, rows, rep)),
                _to_bool(_eval_grouped(expr.right, group_by, rows, rep)),
            )
        if expr.op == "LIKE":
            subject = _eval_grouped(expr.left, group_by, rows, rep)
            pattern = _eval_grouped(expr.right, group_by, rows, rep)
            if subject is None or pattern is None:
                return None
            if isinstance(subject, bool):
                raise BruteError("LIKE: boolean operand")
            if not isinstance(pattern, str):
                raise BruteError("LIKE pattern must be text")
            text = _render_number(subject) if isinstance(subject, float) else subject
            return _like(text, pattern)
        if expr.op in ("=", "!=", "<", "<=", ">", ">="):
            return _cmp_values(
                expr.op,
                _eval_grouped(expr.left, group_by, rows, rep),
                _eval_grouped(expr.right, group_by, rows, rep),
            )
        return _arith(
            expr.op,
            _eval_grouped(expr.left, group_by, rows, rep),
            _eval_grouped(expr.right, group_by, rows, rep),
        )
    if isinstance(expr, FuncCall):
        values = [_eval_grouped(a, group_by, rows, rep) for a in expr.args]
        if expr.name == "ABS":
            number = _to_number(values[0])
            return None if number is None else abs(number)
        number = _to_number(values[0])
        digits = 0
        if len(values) == 2:
            raw = _to_number(values[1])
            if raw is None or raw != int(raw):
                raise BruteError("ROUND digits must be an integer")
            digits = int(raw)
        return None if number is None else _round_half_away(number, digits)
    raise BruteError(f"not an expression: {expr!r}")


def _check_grouped(expr: Expr, group_by: tuple[Expr, ...]) -> None:
    """Static mirror of the grouped-expression restriction."""
    if any(expr == g for g in group_by):
        return
    if isinstance(expr, Aggregate):
        if expr.arg is not None and contains_aggregate(expr.arg):
            raise BruteError("nested aggregates are not allowed")
        return
    if isinstance(expr, Literal):
        return
    if isinstance(expr, ColumnRef):
        raise BruteError(f"column {expr.name!r} must appear in GROUP BY or an aggregate")
    if isinstance(expr, _Unary):
        _check_grouped(expr.operand, group_by)
        return
    if isinstance(expr, Binary):
        _check_grouped(expr.left, group_by)
        _check_grouped(expr.right, group_by)
        return
    if isinstance(expr, FuncCall):
        for arg in expr.args:
            _check_grouped(arg, group_by)
        return
    raise BruteError(f"not an expression: {expr!r}")


# ---- statement execution -------------------------------------------------------


def _item_name(item: SelectItem) -> str:
    if item.alias:
        return item.alias
    if isinstance(item.expr, ColumnRef):
        return item.expr.name
    return render_expr(item.expr)


def _walk(expr: Expr):
    yield expr
    for child in (
        getattr(expr, "left", None),
        getattr(expr, "right", None),
        getattr(expr, "operand", None),
        getattr(expr, "arg", None),
    ):
        if child is not None:
            yield from _walk(child)
    for child in getattr(expr, "args", ()):
        yield from _walk(child)


def _run_core(core: SelectCore, table: StructuredTable):
    columns = set(table.columns)
    items = core.items
    if core.star:
        if core.group_by:
            raise BruteError("SELECT * cannot be combined with GROUP BY")
        items = tuple(SelectItem(ColumnRef(c)) for c in table.columns)

    scoped = [i.expr for i in items] + list(core.group_by)
    if core.where is not None:
        scoped.append(core.where)
    for expr in scoped:
        for node in _walk(expr):
            if isinstance(node, ColumnRef) and node.name not in columns:
                raise BruteError(f"unknown column {node.name!r}")
            if (
                isinstance(node, Aggregate)
                and node.arg is not None
                and contains_aggregate(node.arg)
            ):
                raise BruteError("nested aggregates are not allowed")
    if core.where is not None and contains_aggregate(core.where):
        raise BruteError("aggregates are not allowed in WHERE")
    if any(contains_aggregate(g) for g in core.group_by):
        raise BruteError("aggregates are not allowed in GROUP BY")

    rows = [dict(zip(table.columns, r)) for r in table.rows]
    if core.where is not None:
        rows = [
            r for r in rows
            if _eval(core.where, lambda name, _r=r: _cell(_r, name), None) is True
        ]

    names = tuple(_item_name(i) for i in items)
    grouped = bool(core.group_by) or any(contains_aggregate(i.expr) for i in items)

    if not grouped:
        produced = [
            tuple(_eval(i.expr, lambda name, _r=r: _cell(_r, name), None) for i in items)
            for r in rows
        ]
        return names, produced, rows, False

    for item in items:
        _check_grouped(item.expr, core.group_by)

    if core.group_by:
        buckets: dict[tuple, list[dict]] = {}
        for r in rows:
            key = tuple(
                _tag(_eval(g, lambda name, _r=r: _cell(_r, name), None))
                for g in core.group_by
            )
            buckets.setdefault(key, []).append(r)
        groups = list(buckets.values())
    else:
        groups = [rows]

    produced = [
        tuple(
            _eval_grouped(i.expr, core.group_by, g, g[0] if g else None)
            for i in items
        )
        for g in groups
    ]
    return names, produced, groups, True


def run_statement(stmt: Statement, table: StructuredTable):
    """Execute, returning (column names, rows). Raises BruteError on any
    dialect-defined error."""
    names: tuple[str, ...] = ()
    combined: list[tuple[Value, ...]] = []
    sources: list = []
    grouped = False
    single_core = len(stmt.cores) == 1

    for i, core in enumerate(stmt.cores):
        core_names, produced, core_sources, core_grouped = _run_core(core, table)
        if i == 0:
            names = core_names
            combined = list(produced)
            sources = list(core_sources)
            grouped = core_grouped
        else:
            if len(core_names) != len(names):
                raise BruteError("UNION arity mismatch")
            if stmt.set_ops[i - 1] == "UNION ALL":
                combined.extend(produced)
            else:
                seen = {tuple(_tag(v) for v in row) for row in combined}
                for row in produced:
                    key = tuple(_tag(v) for v in row)
                    if key not in seen:
                        seen.add(key)
                        combined.append(row)

    if stmt.order_by:
        by_name = {n: idx for idx, n in enumerate(names)}

        def key_for(order_expr: Expr, position: int, row: tuple) -> tuple:
            if isinstance(order_expr, ColumnRef) and order_expr.name in by_name:
                value = row[by_name[order_expr.name]]
            elif not single_core:
                raise BruteError("ORDER BY over a UNION must name result columns")
            elif grouped:
                _check_grouped(order_expr, stmt.cores[0].group_by)
                g = sources[position]
                value = _eval_grouped(
                    order_expr, stmt.cores[0].group_by, g, g[0] if g else None
                )
            else:
                source = sources[position]
                value = _eval(
                    order_expr, lambda name: _cell(source, name), None
                )
            tag, raw = _tag(value)
            return (_ORDER_RANK[tag], raw)

        # precompute keys, then stable multi-pass sort, last key first
        decorated = [
            (
                [key_for(o.expr, pos, row) for o in stmt.order_by],
                row,
            )
            for pos, row in enumerate(combined)
        ]
        indexed = list(range(len(decorated)))
        for which in range(len(stmt.order_by) - 1, -1, -1):
            indexed.sort(
                key=lambda pos: decorated[pos][0][which],
                reverse=stmt.order_by[which].descending,
            )
        combined = [decorated[pos][1] for pos in indexed]

    if stmt.limit is not None:
        combined = combined[: stmt.limit]
    return names, combined
