"""Tokenizer and recursive-descent parser for the closed SQL dialect."""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    AGGREGATE_FUNCS,
    SCALAR_FUNCS,
    Aggregate,
    Binary,
    ColumnRef,
    Expr,
    FuncCall,
    Literal,
    OrderItem,
    SelectCore,
    SelectItem,
    Statement,
    Unary,
)


class SqlParseError(ValueError):
    def __init__(self, message: str, position: int = -1):
        super().__init__(f"{message} (at offset {position})" if position >= 0 else message)
        self.position = position


_KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "ASC", "DESC", "LIMIT",
    "UNION", "ALL", "AND", "OR", "NOT", "LIKE", "AS", "NULL", "TRUE", "FALSE",
    *AGGREGATE_FUNCS, *SCALAR_FUNCS,
}

_PUNCT = ("<=", ">=", "!=", "<>", "=", "<", ">", "(", ")", ",", ";", "*", "+", "-", "/")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # KEYWORD, IDENT, NUMBER, STRING, PUNCT, EOF
    value: str
    position: int


def tokenize(sql: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(sql)
    while i < n:
        ch = sql[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "'":
            j = i + 1
            chunks: list[str] = []
            while True:
                if j >= n:
                    raise SqlParseError("unterminated string literal", i)
                if sql[j] == "'":
                    if j + 1 < n and sql[j + 1] == "'":  # '' escapes a quote
                        chunks.append("'")
                        j += 2
                        continue
                    break
                chunks.append(sql[j])
                j += 1
            tokens.append(Token("STRING", "".join(chunks), i))
            i = j + 1
            continue
        if ch == '"':
            j = i + 1
            chunks = []
            while True:
                if j >= n:
                    raise SqlParseError("unterminated quoted identifier", i)
                if sql[j] == '"':
                    if j + 1 < n and sql[j + 1] == '"':
                        chunks.append('"')
                        j += 2
                        continue
                    break
                chunks.append(sql[j])
                j += 1
            name = "".join(chunks)
            if not name.strip():
                raise SqlParseError("empty quoted identifier", i)
            tokens.append(Token("IDENT", name, i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and sql[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (sql[j].isdigit() or (sql[j] == "." and not seen_dot)):
                seen_dot = seen_dot or sql[j] == "."
                j += 1
            if j < n and sql[j] in "eE":
                k = j + 1
                if k < n and sql[k] in "+-":
                    k += 1
                if k < n and sql[k].isdigit():
                    j = k
                    while j < n and sql[j].isdigit():
                        j += 1
            tokens.append(Token("NUMBER", sql[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (sql[j].isalnum() or sql[j] == "_"):
                j += 1
            word = sql[i:j]
            upper = word.upper()
            if upper in _KEYWORDS:
                tokens.append(Token("KEYWORD", upper, i))
            else:
                tokens.append(Token("IDENT", word, i))
            i = j
            continue
        for punct in _PUNCT:
            if sql.startswith(punct, i):
                value = "!=" if punct == "<>" else punct
                tokens.append(Token("PUNCT", value, i))
                i += len(punct)
                break
        else:
            raise SqlParseError(f"unexpected character {ch!r}", i)
    tokens.append(Token("EOF", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str) -> SqlParseError:
        tok = self.peek()
        shown = tok.value or "end of input"
        return SqlParseError(f"{message}, found {shown!r}", tok.position)

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.value in words

    def at_punct(self, *values: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.value in values

    def expect_keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word}")
        return self.advance()

    def expect_punct(self, value: str) -> Token:
        if not self.at_punct(value):
            raise self.error(f"expected {value!r}")
        return self.advance()

    def expect_identifier(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error(f"expected {what}")
        return self.advance().value

    # expression grammar, loosest binding first
    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at_keyword("OR"):
            self.advance()
            left = Binary("OR", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at_keyword("AND"):
            self.advance()
            left = Binary("AND", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.at_keyword("NOT"):
            self.advance()
            return Unary("NOT", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        if self.at_punct("=", "!=", "<", "<=", ">", ">="):
            op = self.advance().value
            return Binary(op, left, self.parse_additive())
        if self.at_keyword("LIKE"):
            self.advance()
            return Binary("LIKE", left, self.parse_additive())
        if self.at_keyword("NOT") and self.tokens[self.pos + 1].value == "LIKE":
            self.advance()
            self.advance()
            return Unary("NOT", Binary("LIKE", left, self.parse_additive()))
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.at_punct("+", "-"):
            op = self.advance().value
            left = Binary(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.at_punct("*", "/"):
            op = self.advance().value
            left = Binary(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.at_punct("-"):
            self.advance()
            return Unary("-", self.parse_unary())
        if self.at_punct("+"):
            self.advance()
            return self.parse_unary()
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return Literal(float(tok.value))
        if tok.kind == "STRING":
            self.advance()
            return Literal(tok.value)
        if tok.kind == "KEYWORD":
            if tok.value == "NULL":
                self.advance()
                return Literal(None)
            if tok.value in ("TRUE", "FALSE"):
                self.advance()
                return Literal(tok.value == "TRUE")
            if tok.value in AGGREGATE_FUNCS:
                return self.parse_aggregate()
            if tok.value in SCALAR_FUNCS:
                return self.parse_scalar_call()
            raise self.error("expected an expression")
        if tok.kind == "IDENT":
            self.advance()
            return ColumnRef(tok.value)
        if self.at_punct("("):
            self.advance()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        raise self.error("expected an expression")

    def parse_aggregate(self) -> Expr:
        func = self.advance().value
        self.expect_punct("(")
        if func == "COUNT" and self.at_punct("*"):
            self.advance()
            self.expect_punct(")")
            return Aggregate("COUNT", None)
        arg = self.parse_expr()
        self.expect_punct(")")
        return Aggregate(func, arg)

    def parse_scalar_call(self) -> Expr:
        name = self.advance().value
        self.expect_punct("(")
        args = [self.parse_expr()]
        while self.at_punct(","):
            self.advance()
            args.append(self.parse_expr())
        self.expect_punct(")")
        arity = {"ROUND": (1, 2), "ABS": (1, 1)}[name]
        if not arity[0] <= len(args) <= arity[1]:
            raise SqlParseError(f"{name} takes {arity[0]}-{arity[1]} arguments, got {len(args)}")
        return FuncCall(name, tuple(args))

    def parse_select_core(self) -> SelectCore:
        self.expect_keyword("SELECT")
        star = False
        items: list[SelectItem] = []
        if self.at_punct("*"):
            self.advance()
            star = True
        else:
            while True:
                expr = self.parse_expr()
                alias: str | None = None
                if self.at_keyword("AS"):
                    self.advance()
                    alias = self.expect_identifier("alias after AS")
                items.append(SelectItem(expr, alias))
                if not self.at_punct(","):
                    break
                self.advance()
        self.expect_keyword("FROM")
        table = self.expect_identifier("table name after FROM")
        where: Expr | None = None
        if self.at_keyword("WHERE"):
            self.advance()
            where = self.parse_expr()
        group_by: list[Expr] = []
        if self.at_keyword("GROUP"):
            self.advance()
            self.expect_keyword("BY")
            group_by.append(self.parse_expr())
            while self.at_punct(","):
                self.advance()
                group_by.append(self.parse_expr())
        return SelectCore(tuple(items), table, where, tuple(group_by), star)

    def parse_statement(self) -> Statement:
        cores = [self.parse_select_core()]
        set_ops: list[str] = []
        while self.at_keyword("UNION"):
            self.advance()
            if self.at_keyword("ALL"):
                self.advance()
                set_ops.append("UNION ALL")
            else:
                set_ops.append("UNION")
            cores.append(self.parse_select_core())
        order_by: list[OrderItem] = []
        if self.at_keyword("ORDER"):
            self.advance()
            self.expect_keyword("BY")
            while True:
                expr = self.parse_expr()
                descending = False
                if self.at_keyword("ASC"):
                    self.advance()
                elif self.at_keyword("DESC"):
                    self.advance()
                    descending = True
                order_by.append(OrderItem(expr, descending))
                if not self.at_punct(","):
                    break
                self.advance()
        limit: int | None = None
        if self.at_keyword("LIMIT"):
            self.advance()
            tok = self.peek()
            if tok.kind != "NUMBER" or not tok.value.isdigit():
                raise self.error("LIMIT expects a non-negative integer")
            self.advance()
            limit = int(tok.value)
        if self.at_punct(";"):
            self.advance()
        if self.peek().kind != "EOF":
            raise self.error("exactly one statement allowed; unexpected trailing input")
        return Statement(tuple(cores), tuple(set_ops), tuple(order_by), limit)


def parse_sql(sql: str) -> Statement:
    """Parse one dialect statement; raises SqlParseError with a position."""
    if not sql or not sql.strip():
        raise SqlParseError("empty program")
    return _Parser(tokenize(sql)).parse_statement()
