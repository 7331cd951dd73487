"""AST for the closed SQL dialect, plus a canonical renderer.

The dialect covers single-table analytics: a SELECT list with arithmetic,
aggregates, and boolean comparisons; WHERE with AND/OR/NOT and LIKE;
GROUP BY; ORDER BY with stable ties; LIMIT; and UNION / UNION ALL between
select cores. There are no joins and no subqueries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

AGGREGATE_FUNCS = ("COUNT", "SUM", "AVG", "MIN", "MAX")
SCALAR_FUNCS = ("ROUND", "ABS")

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
ARITHMETIC_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True, slots=True)
class ColumnRef:
    name: str


@dataclass(frozen=True, slots=True)
class Literal:
    value: float | str | bool | None


@dataclass(frozen=True, slots=True)
class Unary:
    op: str  # "-" or "NOT"
    operand: Expr


@dataclass(frozen=True, slots=True)
class Binary:
    op: str  # arithmetic, comparison, LIKE, AND, OR
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class FuncCall:
    name: str  # ROUND, ABS
    args: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Aggregate:
    func: str  # COUNT, SUM, AVG, MIN, MAX
    arg: Expr | None  # None only for COUNT(*)

    @property
    def is_count_star(self) -> bool:
        return self.arg is None


Expr = Union[ColumnRef, Literal, Unary, Binary, FuncCall, Aggregate]


@dataclass(frozen=True, slots=True)
class SelectItem:
    expr: Expr
    alias: str | None = None


@dataclass(frozen=True, slots=True)
class OrderItem:
    expr: Expr
    descending: bool = False


@dataclass(frozen=True, slots=True)
class SelectCore:
    items: tuple[SelectItem, ...]  # empty together with star=True
    table: str
    where: Expr | None = None
    group_by: tuple[Expr, ...] = ()
    star: bool = False


@dataclass(frozen=True, slots=True)
class Statement:
    cores: tuple[SelectCore, ...]
    set_ops: tuple[str, ...] = ()  # "UNION" | "UNION ALL", len == len(cores) - 1
    order_by: tuple[OrderItem, ...] = ()
    limit: int | None = None


def walk(expr: Expr) -> Iterator[Expr]:
    yield expr
    if isinstance(expr, Unary):
        yield from walk(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, FuncCall):
        for a in expr.args:
            yield from walk(a)
    elif isinstance(expr, Aggregate) and expr.arg is not None:
        yield from walk(expr.arg)


def contains_aggregate(expr: Expr) -> bool:
    return any(isinstance(e, Aggregate) for e in walk(expr))


def statement_expressions(stmt: Statement) -> Iterator[Expr]:
    for core in stmt.cores:
        for item in core.items:
            yield item.expr
        if core.where is not None:
            yield core.where
        yield from core.group_by
    for item in stmt.order_by:
        yield item.expr


def referenced_columns(stmt: Statement) -> set[str]:
    """Column names the statement touches; select aliases are not columns."""
    aliases = {
        item.alias for core in stmt.cores for item in core.items if item.alias
    }
    names: set[str] = set()
    for expr in statement_expressions(stmt):
        for node in walk(expr):
            if isinstance(node, ColumnRef) and node.name not in aliases:
                names.add(node.name)
    return names


def is_boolean_expr(expr: Expr) -> bool:
    """Structurally boolean: a comparison, LIKE, or logic over such."""
    if isinstance(expr, Binary):
        if expr.op in COMPARISON_OPS or expr.op == "LIKE":
            return True
        if expr.op in ("AND", "OR"):
            return is_boolean_expr(expr.left) and is_boolean_expr(expr.right)
        return False
    if isinstance(expr, Unary) and expr.op == "NOT":
        return is_boolean_expr(expr.operand)
    if isinstance(expr, Literal):
        return isinstance(expr.value, bool)
    return False


_BARE_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT",
    "UNION", "ALL", "AND", "OR", "NOT", "LIKE", "AS", "NULL", "TRUE", "FALSE",
    *AGGREGATE_FUNCS, *SCALAR_FUNCS,
}


def render_identifier(name: str) -> str:
    if _BARE_IDENT_RE.match(name) and name.upper() not in _KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _render_number(value: float) -> str:
    out = "%.12g" % value
    return "0" if out == "-0" else out


# Binding strength, loosest first; used to parenthesize only where needed.
_PRECEDENCE = {
    "OR": 1,
    "AND": 2,
    "NOT": 3,
    "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4, "LIKE": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6,
    "neg": 7,
}


def _expr_precedence(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, Unary):
        return _PRECEDENCE["NOT" if expr.op == "NOT" else "neg"]
    return 9


def render_expr(expr: Expr) -> str:
    if isinstance(expr, ColumnRef):
        return render_identifier(expr.name)
    if isinstance(expr, Literal):
        v = expr.value
        if v is None:
            return "NULL"
        if isinstance(v, bool):
            return "TRUE" if v else "FALSE"
        if isinstance(v, float):
            return _render_number(v)
        return "'" + v.replace("'", "''") + "'"
    if isinstance(expr, Unary):
        inner = render_expr(expr.operand)
        if _expr_precedence(expr.operand) < _expr_precedence(expr):
            inner = f"({inner})"
        return f"NOT {inner}" if expr.op == "NOT" else f"-{inner}"
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        left = render_expr(expr.left)
        right = render_expr(expr.right)
        # left-associative chains keep the left side unparenthesized at equal depth
        if _expr_precedence(expr.left) < prec:
            left = f"({left})"
        if _expr_precedence(expr.right) <= prec:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    if isinstance(expr, FuncCall):
        return f"{expr.name}({', '.join(render_expr(a) for a in expr.args)})"
    if isinstance(expr, Aggregate):
        if expr.is_count_star:
            return "COUNT(*)"
        return f"{expr.func}({render_expr(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


def render_statement(stmt: Statement) -> str:
    parts: list[str] = []
    for i, core in enumerate(stmt.cores):
        if i:
            parts.append(stmt.set_ops[i - 1])
        if core.star:
            select = "*"
        else:
            rendered = []
            for item in core.items:
                text = render_expr(item.expr)
                if item.alias:
                    text += f" AS {render_identifier(item.alias)}"
                rendered.append(text)
            select = ", ".join(rendered)
        piece = f"SELECT {select} FROM {render_identifier(core.table)}"
        if core.where is not None:
            piece += f" WHERE {render_expr(core.where)}"
        if core.group_by:
            piece += " GROUP BY " + ", ".join(render_expr(e) for e in core.group_by)
        parts.append(piece)
    text = " ".join(parts)
    if stmt.order_by:
        keys = [
            render_expr(o.expr) + (" DESC" if o.descending else " ASC")
            for o in stmt.order_by
        ]
        text += " ORDER BY " + ", ".join(keys)
    if stmt.limit is not None:
        text += f" LIMIT {stmt.limit}"
    return text
