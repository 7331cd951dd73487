"""Canonicalization of analytic programs for similarity scoring.

Three stages: parse to an AST (the SQL dialect, or a small Python
assignment/expression grammar for fixtures), expand polynomial arithmetic to
a canonical sum of monomials, then rename user identifiers to var_0, var_1,
... in first-occurrence order of the final rendering. Built-in names
(SQL keywords/functions, Python builtins) survive renaming. The output is
grammatical in its own front-end, and normalizing it again is a no-op.

Division, function calls, aggregates, comparisons, and logic are expansion
boundaries: their operands are normalized independently and the node itself
is treated as an opaque atom by the surrounding polynomial.
"""

from __future__ import annotations

import ast as pyast
import builtins
import re

import sympy

from ..analyzer import ast as sql
from ..analyzer.parser import SqlParseError, parse_sql
from ..core.csvio import format_number


class CodeParseError(ValueError):
    """Program text outside both supported grammars."""


_SELECT_RE = re.compile(r"^\s*SELECT\b", re.IGNORECASE)
_PY_BUILTINS = frozenset(dir(builtins))


_MAX_PASSES = 8


def _one_pass(text: str) -> str:
    if _SELECT_RE.match(text):
        return _normalize_sql(text)
    return _normalize_python(text)


def normalize_code(text: str) -> str:
    """Canonical form, defined as the fixed point of the rewrite pass.

    Renaming to first-occurrence order can itself change term order on the
    next pass, so the pass is iterated until the text stops moving; one extra
    pass is the common case. The fixed-point construction makes idempotence
    unconditional: normalizing a canonical form re-runs a pass that, by the
    exit condition, returns its input unchanged.
    """
    stripped = text.strip()
    if not stripped:
        raise CodeParseError("empty program")
    current = _one_pass(stripped)
    for _ in range(_MAX_PASSES):
        following = _one_pass(current)
        if following == current:
            return current
        current = following
    raise CodeParseError("normalization did not converge")


def try_normalize(text: str) -> tuple[str, bool]:
    """(canonical text, True) or (raw text, False) when it does not parse."""
    try:
        return normalize_code(text), True
    except CodeParseError:
        return text, False


# ---- polynomial expansion core ----------------------------------------------------


class _Adapter:
    """Target-AST factory the sympy rebuild drives; one per front-end."""

    def num(self, value: float):
        raise NotImplementedError

    def add(self, left, right):
        raise NotImplementedError

    def sub(self, left, right):
        raise NotImplementedError

    def mul(self, left, right):
        raise NotImplementedError

    def neg(self, operand):
        raise NotImplementedError

    def pow(self, base, exponent: int):
        raise NotImplementedError


def _coeff_value(coeff) -> float:
    return float(format_number(float(coeff)))


def _rebuild_factor(factor, atoms: dict, make: _Adapter):
    if factor in atoms:
        return atoms[factor]
    if isinstance(factor, sympy.Symbol):
        return atoms[factor]  # every symbol was registered; missing = bug
    if isinstance(factor, sympy.Pow):
        base, exp = factor.args
        if not (exp.is_Integer and int(exp) >= 2):
            raise CodeParseError(f"non-polynomial power survived expansion: {factor}")
        return make.pow(_rebuild_factor(base, atoms, make), int(exp))
    if factor.is_Number:
        return make.num(_coeff_value(factor))
    raise CodeParseError(f"unexpected factor after expansion: {factor!r}")


def _rebuild_monomial(term, atoms: dict, make: _Adapter):
    coeff, rest = term.as_coeff_Mul()
    if rest == 1:
        return make.num(_coeff_value(coeff))
    factors = (
        list(rest.as_ordered_factors()) if isinstance(rest, sympy.Mul) else [rest]
    )
    # fold left so products render as flat chains without parentheses
    built = None if coeff in (1, -1) else make.num(_coeff_value(coeff))
    for factor in factors:
        piece = _rebuild_factor(factor, atoms, make)
        built = piece if built is None else make.mul(built, piece)
    return make.neg(built) if coeff == -1 else built


def _rebuild_polynomial(expr, atoms: dict, make: _Adapter):
    terms = expr.as_ordered_terms() if isinstance(expr, sympy.Add) else [expr]
    built = None
    for term in terms:
        negative = term.could_extract_minus_sign()
        piece = _rebuild_monomial(-term if negative else term, atoms, make)
        if built is None:
            built = make.neg(piece) if negative else piece
        elif negative:
            built = make.sub(built, piece)
        else:
            built = make.add(built, piece)
    return built


class _Expander:
    """Shared machinery: front-ends register atoms, sympy does the algebra."""

    def __init__(self, make: _Adapter):
        self.make = make
        self.atoms: dict[sympy.Symbol, object] = {}
        self._symbols: dict[str, sympy.Symbol] = {}

    def symbol(self, name: str, node) -> sympy.Symbol:
        found = self._symbols.get(name)
        if found is None:
            found = sympy.Dummy(name)
            self._symbols[name] = found
            self.atoms[found] = node
        return found

    def atom(self, node) -> sympy.Symbol:
        dummy = sympy.Dummy("atom")
        self.atoms[dummy] = node
        return dummy

    def finish(self, expr) -> object:
        return _rebuild_polynomial(sympy.expand(expr), self.atoms, self.make)


# ---- SQL front-end ----------------------------------------------------------------


class _SqlAdapter(_Adapter):
    def num(self, value: float):
        return sql.Literal(value)

    def add(self, left, right):
        return sql.Binary("+", left, right)

    def sub(self, left, right):
        return sql.Binary("-", left, right)

    def mul(self, left, right):
        return sql.Binary("*", left, right)

    def neg(self, operand):
        return sql.Unary("-", operand)

    def pow(self, base, exponent: int):
        # the dialect has no power operator; powers render as repeated product
        built = base
        for _ in range(exponent - 1):
            built = sql.Binary("*", built, base)
        return built


def _expand_sql_expr(expr: sql.Expr) -> sql.Expr:
    ex = _Expander(_SqlAdapter())

    def to_sympy(node: sql.Expr):
        if isinstance(node, sql.ColumnRef):
            return ex.symbol(node.name, node)
        if isinstance(node, sql.Literal):
            if isinstance(node.value, float) and not isinstance(node.value, bool):
                v = node.value
                return sympy.Integer(int(v)) if v == int(v) else sympy.Float(v)
            return ex.atom(node)
        if isinstance(node, sql.Unary):
            if node.op == "-":
                return -to_sympy(node.operand)
            return ex.atom(sql.Unary(node.op, _expand_sql_expr(node.operand)))
        if isinstance(node, sql.Binary):
            if node.op in ("+", "-", "*"):
                left, right = to_sympy(node.left), to_sympy(node.right)
                return {
                    "+": left + right,
                    "-": left - right,
                    "*": left * right,
                }[node.op]
            return ex.atom(
                sql.Binary(
                    node.op, _expand_sql_expr(node.left), _expand_sql_expr(node.right)
                )
            )
        if isinstance(node, sql.FuncCall):
            return ex.atom(
                sql.FuncCall(node.name, tuple(_expand_sql_expr(a) for a in node.args))
            )
        if isinstance(node, sql.Aggregate):
            arg = None if node.arg is None else _expand_sql_expr(node.arg)
            return ex.atom(sql.Aggregate(node.func, arg))
        raise CodeParseError(f"unknown SQL node: {node!r}")

    return ex.finish(to_sympy(expr))


def _map_statement(stmt: sql.Statement, fn) -> sql.Statement:
    cores = tuple(
        sql.SelectCore(
            items=tuple(sql.SelectItem(fn(i.expr), i.alias) for i in c.items),
            table=c.table,
            where=None if c.where is None else fn(c.where),
            group_by=tuple(fn(e) for e in c.group_by),
            star=c.star,
        )
        for c in stmt.cores
    )
    order = tuple(sql.OrderItem(fn(o.expr), o.descending) for o in stmt.order_by)
    return sql.Statement(cores, stmt.set_ops, order, stmt.limit)


def _sql_identifiers_in_render_order(stmt: sql.Statement) -> list[str]:
    seen: list[str] = []

    def visit(expr: sql.Expr) -> None:
        for node in sql.walk(expr):
            if isinstance(node, sql.ColumnRef) and node.name not in seen:
                seen.append(node.name)

    for core in stmt.cores:
        for item in core.items:
            visit(item.expr)
            if item.alias and item.alias not in seen:
                seen.append(item.alias)
        if core.table not in seen:
            seen.append(core.table)
        if core.where is not None:
            visit(core.where)
        for e in core.group_by:
            visit(e)
    for o in stmt.order_by:
        visit(o.expr)
    return seen


def _normalize_sql(text: str) -> str:
    try:
        stmt = parse_sql(text)
    except SqlParseError as e:
        raise CodeParseError(f"not dialect SQL: {e}") from e
    expanded = _map_statement(stmt, _expand_sql_expr)
    names = _sql_identifiers_in_render_order(expanded)
    mapping = {name: f"var_{i}" for i, name in enumerate(names)}

    def rename(expr: sql.Expr) -> sql.Expr:
        if isinstance(expr, sql.ColumnRef):
            return sql.ColumnRef(mapping[expr.name])
        if isinstance(expr, sql.Literal):
            return expr
        if isinstance(expr, sql.Unary):
            return sql.Unary(expr.op, rename(expr.operand))
        if isinstance(expr, sql.Binary):
            return sql.Binary(expr.op, rename(expr.left), rename(expr.right))
        if isinstance(expr, sql.FuncCall):
            return sql.FuncCall(expr.name, tuple(rename(a) for a in expr.args))
        if isinstance(expr, sql.Aggregate):
            return sql.Aggregate(
                expr.func, None if expr.arg is None else rename(expr.arg)
            )
        raise CodeParseError(f"unknown SQL node: {expr!r}")

    renamed = _map_statement(expanded, rename)
    renamed = sql.Statement(
        tuple(
            sql.SelectCore(
                items=tuple(
                    sql.SelectItem(i.expr, mapping.get(i.alias, i.alias) if i.alias else None)
                    for i in c.items
                ),
                table=mapping[c.table],
                where=c.where,
                group_by=c.group_by,
                star=c.star,
            )
            for c in renamed.cores
        ),
        renamed.set_ops,
        renamed.order_by,
        renamed.limit,
    )
    return sql.render_statement(renamed)


# ---- Python front-end --------------------------------------------------------------


class _PyAdapter(_Adapter):
    def num(self, value: float):
        return pyast.Constant(int(value) if value == int(value) else value)

    def add(self, left, right):
        return pyast.BinOp(left, pyast.Add(), right)

    def sub(self, left, right):
        return pyast.BinOp(left, pyast.Sub(), right)

    def mul(self, left, right):
        return pyast.BinOp(left, pyast.Mult(), right)

    def neg(self, operand):
        return pyast.UnaryOp(pyast.USub(), operand)

    def pow(self, base, exponent: int):
        return pyast.BinOp(base, pyast.Pow(), pyast.Constant(exponent))


def _expand_py_expr(node: pyast.expr) -> pyast.expr:
    ex = _Expander(_PyAdapter())

    def to_sympy(e: pyast.expr):
        if isinstance(e, pyast.Name):
            return ex.symbol(e.id, pyast.Name(e.id, pyast.Load()))
        if isinstance(e, pyast.Constant):
            v = e.value
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                return ex.atom(pyast.Constant(v))
            return sympy.Integer(int(v)) if v == int(v) else sympy.Float(v)
        if isinstance(e, pyast.UnaryOp):
            if isinstance(e.op, pyast.USub):
                return -to_sympy(e.operand)
            if isinstance(e.op, pyast.UAdd):
                return to_sympy(e.operand)
            return ex.atom(pyast.UnaryOp(e.op, _expand_py_expr(e.operand)))
        if isinstance(e, pyast.BinOp):
            if isinstance(e.op, (pyast.Add, pyast.Sub, pyast.Mult)):
                left, right = to_sympy(e.left), to_sympy(e.right)
                if isinstance(e.op, pyast.Add):
                    return left + right
                if isinstance(e.op, pyast.Sub):
                    return left - right
                return left * right
            if isinstance(e.op, pyast.Pow):
                exponent = e.right
                if (
                    isinstance(exponent, pyast.Constant)
                    and isinstance(exponent.value, int)
                    and not isinstance(exponent.value, bool)
                    and exponent.value >= 0
                ):
                    return to_sympy(e.left) ** exponent.value
            return ex.atom(
                pyast.BinOp(_expand_py_expr(e.left), e.op, _expand_py_expr(e.right))
            )
        if isinstance(e, pyast.Call):
            if not isinstance(e.func, pyast.Name) or e.keywords:
                raise CodeParseError("only plain positional calls are supported")
            return ex.atom(
                pyast.Call(
                    pyast.Name(e.func.id, pyast.Load()),
                    [_expand_py_expr(a) for a in e.args],
                    [],
                )
            )
        if isinstance(e, pyast.Compare):
            return ex.atom(
                pyast.Compare(
                    _expand_py_expr(e.left),
                    e.ops,
                    [_expand_py_expr(c) for c in e.comparators],
                )
            )
        if isinstance(e, pyast.BoolOp):
            return ex.atom(
                pyast.BoolOp(e.op, [_expand_py_expr(v) for v in e.values])
            )
        raise CodeParseError(f"unsupported syntax: {type(e).__name__}")

    return ex.finish(to_sympy(node))


def _py_identifiers_in_order(statements: list[pyast.stmt]) -> list[str]:
    seen: list[str] = []

    def visit(node: pyast.AST) -> None:
        if isinstance(node, pyast.Name):
            if node.id not in _PY_BUILTINS and node.id not in seen:
                seen.append(node.id)
            return
        # field order mirrors source order for this grammar subset
        for child in pyast.iter_child_nodes(node):
            visit(child)

    for stmt in statements:
        visit(stmt)
    return seen


def _rename_py(node: pyast.AST, mapping: dict[str, str]) -> None:
    for child in pyast.walk(node):
        if isinstance(child, pyast.Name) and child.id in mapping:
            child.id = mapping[child.id]


def _normalize_python(text: str) -> str:
    try:
        module = pyast.parse(text, mode="exec")
    except SyntaxError as e:
        raise CodeParseError(f"not a supported expression program: {e}") from e
    out_statements: list[pyast.stmt] = []
    for stmt in module.body:
        if isinstance(stmt, pyast.Assign):
            if len(stmt.targets) != 1 or not isinstance(stmt.targets[0], pyast.Name):
                raise CodeParseError("assignments must bind a single name")
            out_statements.append(
                pyast.Assign(
                    [pyast.Name(stmt.targets[0].id, pyast.Store())],
                    _expand_py_expr(stmt.value),
                )
            )
        elif isinstance(stmt, pyast.Expr):
            out_statements.append(pyast.Expr(_expand_py_expr(stmt.value)))
        else:
            raise CodeParseError(
                f"unsupported statement: {type(stmt).__name__}"
            )
    names = _py_identifiers_in_order(out_statements)
    mapping = {name: f"var_{i}" for i, name in enumerate(names)}
    rendered: list[str] = []
    for stmt in out_statements:
        _rename_py(stmt, mapping)
        rendered.append(pyast.unparse(pyast.fix_missing_locations(pyast.Module([stmt], []))))
    return "\n".join(rendered)
