"""Read-only SQL guard: tokenizer, statement classifier, validator.

The agent may run arbitrary SQL, so nothing reaches the engine unless this
module has positively classified it as a single SELECT (or WITH ... SELECT)
statement. Classification works on a real token stream: string literals,
quoted identifiers and comments never influence the decision, so
``SELECT * FROM jobs -- DROP TABLE jobs`` is accepted and
``SELECT 'x'; DELETE FROM jobs`` is not.

Classification semantics (shared with the independent test oracle):

1. Tokenize, dropping comments and whitespace.
2. No tokens -> ``empty``. Two or more non-empty statements separated by a
   top-level semicolon -> ``multiple``.
3. A statement whose first word is SELECT or WITH is first scanned for
   write/DDL keyword tokens anywhere in the statement (writable CTEs,
   keywords smuggled into subqueries); the first such token decides:
   write keyword -> ``write``, DDL keyword -> ``ddl``. Otherwise SELECT ->
   ``select`` and WITH classifies by its terminal statement keyword at
   paren depth 0 (SELECT -> ``with_select``, else ``other``).
4. Any other first word: INSERT/UPDATE/DELETE/REPLACE/MERGE -> ``write``;
   CREATE/ALTER/DROP/TRUNCATE/REINDEX -> ``ddl``;
   BEGIN/COMMIT/END/ROLLBACK/SAVEPOINT/RELEASE -> ``transaction``;
   anything else -> ``other``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator

from .errors import GuardError

__all__ = [
    "Token",
    "tokenize_sql",
    "classify_statement",
    "validate_readonly",
    "ValidatedQuery",
    "WRITE_KEYWORDS",
    "DDL_KEYWORDS",
    "TRANSACTION_KEYWORDS",
    "ENGINE_CONTROL_KEYWORDS",
]

WRITE_KEYWORDS = frozenset({"INSERT", "UPDATE", "DELETE", "REPLACE", "MERGE", "UPSERT"})
DDL_KEYWORDS = frozenset({"CREATE", "ALTER", "DROP", "TRUNCATE", "REINDEX"})
TRANSACTION_KEYWORDS = frozenset({"BEGIN", "COMMIT", "END", "ROLLBACK", "SAVEPOINT", "RELEASE"})
ENGINE_CONTROL_KEYWORDS = frozenset({"ATTACH", "DETACH", "PRAGMA", "VACUUM", "ANALYZE"})
_TERMINAL_KEYWORDS = frozenset({"SELECT", "VALUES"}) | WRITE_KEYWORDS

_WORD_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_BODY = _WORD_START | frozenset("0123456789$")


@dataclass(frozen=True)
class Token:
    kind: str  # word | string | qident | number | punct
    text: str
    offset: int

    def word(self) -> str:
        """Uppercased text for keyword comparison; only valid for words."""
        return self.text.upper()


def tokenize_sql(sql: str) -> list[Token]:
    """Lex a statement into tokens, discarding whitespace and comments.

    Unterminated strings/comments are tolerated (consumed to end of input):
    the guard must classify any input, valid SQL or not.
    """
    tokens: list[Token] = []
    i = 0
    n = len(sql)
    while i < n:
        ch = sql[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "-" and sql.startswith("--", i):
            end = sql.find("\n", i)
            i = n if end == -1 else end + 1
            continue
        if ch == "/" and sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            i = n if end == -1 else end + 2
            continue
        if ch == "'":
            i = _consume_quoted(sql, i, "'", tokens, "string")
            continue
        if ch == '"':
            i = _consume_quoted(sql, i, '"', tokens, "qident")
            continue
        if ch == "`":
            i = _consume_quoted(sql, i, "`", tokens, "qident")
            continue
        if ch == "[":
            end = sql.find("]", i + 1)
            stop = n if end == -1 else end + 1
            tokens.append(Token("qident", sql[i:stop], i))
            i = stop
            continue
        if ch in _WORD_START:
            j = i + 1
            while j < n and sql[j] in _WORD_BODY:
                j += 1
            tokens.append(Token("word", sql[i:j], i))
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (sql[j].isdigit() or sql[j] in ".eExX+-" and sql[j - 1] in "eE"):
                j += 1
            while j < n and (sql[j].isdigit() or sql[j] in ".xXabcdefABCDEF"):
                j += 1
            tokens.append(Token("number", sql[i:j], i))
            i = j
            continue
        tokens.append(Token("punct", ch, i))
        i += 1
    return tokens


def _consume_quoted(sql: str, start: int, quote: str, tokens: list[Token], kind: str) -> int:
    """Consume a quoted region where the quote is escaped by doubling."""
    i = start + 1
    n = len(sql)
    while i < n:
        if sql[i] == quote:
            if i + 1 < n and sql[i + 1] == quote:
                i += 2
                continue
            i += 1
            break
        i += 1
    else:
        i = n
    tokens.append(Token(kind, sql[start:i], start))
    return i


def _split_statements(tokens: list[Token]) -> list[list[Token]]:
    statements: list[list[Token]] = []
    current: list[Token] = []
    depth = 0
    for token in tokens:
        if token.kind == "punct":
            if token.text == "(":
                depth += 1
            elif token.text == ")":
                depth = max(0, depth - 1)
            elif token.text == ";" and depth == 0:
                if current:
                    statements.append(current)
                current = []
                continue
        current.append(token)
    if current:
        statements.append(current)
    return statements


def _with_terminal_kind(tokens: list[Token]) -> str:
    """Kind of an uncontaminated WITH chain, by its terminal keyword."""
    depth = 0
    for token in tokens[1:]:
        if token.kind == "punct":
            if token.text == "(":
                depth += 1
            elif token.text == ")":
                depth = max(0, depth - 1)
            continue
        if depth == 0 and token.kind == "word" and token.word() in _TERMINAL_KEYWORDS:
            return "with_select" if token.word() == "SELECT" else "other"
    return "other"


def _iter_words(tokens: list[Token]) -> Iterator[Token]:
    for token in tokens:
        if token.kind == "word":
            yield token


def _contamination(tokens: list[Token]) -> str | None:
    for token in _iter_words(tokens):
        word = token.word()
        if word in WRITE_KEYWORDS:
            return "write"
        if word in DDL_KEYWORDS:
            return "ddl"
    return None


def classify_statement(sql: str) -> str:
    """Total classification of a statement into one of
    select | with_select | write | ddl | transaction | multiple | other | empty."""
    tokens = tokenize_sql(sql)
    if not tokens:
        return "empty"
    statements = _split_statements(tokens)
    if not statements:
        return "empty"
    if len(statements) > 1:
        return "multiple"
    stmt = statements[0]
    first = stmt[0]
    if first.kind != "word":
        return "other"
    word = first.word()
    if word in ("SELECT", "WITH"):
        contaminated = _contamination(stmt)
        if contaminated is not None:
            return contaminated
        return "select" if word == "SELECT" else _with_terminal_kind(stmt)
    if word in WRITE_KEYWORDS:
        return "write"
    if word in DDL_KEYWORDS:
        return "ddl"
    if word in TRANSACTION_KEYWORDS:
        return "transaction"
    return "other"


@dataclass(frozen=True)
class ValidatedQuery:
    """A statement that passed the guard, byte-identical to the input.

    Constructible only through :func:`validate_readonly`; the datastore
    refuses anything else.
    """

    sql: str
    statement_kind: str

    def __post_init__(self):
        if self.statement_kind != "select":
            raise ValueError("statement_kind must be 'select'")
        if getattr(_guard_gate, "open", False) is not True:
            raise TypeError("ValidatedQuery must be built via validate_readonly()")


# Thread-local so concurrent validations cannot open the gate for each other.
_guard_gate = threading.local()


def _first_offender(tokens: list[Token], keyword_sets: tuple[frozenset, ...]) -> Token:
    merged = frozenset().union(*keyword_sets)
    for token in _iter_words(tokens):
        if token.word() in merged:
            return token
    return tokens[0]


def validate_readonly(sql: str) -> ValidatedQuery:
    """Admit only single read-only SELECT / WITH ... SELECT statements.

    Also rejects ``SELECT ... INTO`` and engine-control tokens
    (ATTACH/DETACH/PRAGMA/VACUUM/ANALYZE) outside string literals. Accepted
    queries pass through byte-identical.
    """
    tokens = tokenize_sql(sql)
    statements = _split_statements(tokens)
    if not statements:
        raise GuardError("empty", "empty query")
    if len(statements) > 1:
        raise GuardError(
            "multiple_statements",
            f"multiple statements are not allowed ({len(statements)} found)",
            token=";",
            offset=statements[0][-1].offset,
        )
    stmt = statements[0]

    for token in _iter_words(stmt):
        if token.word() in ENGINE_CONTROL_KEYWORDS:
            raise GuardError(
                "engine_control",
                f"engine-control token {token.text!r} at offset {token.offset}",
                token=token.text,
                offset=token.offset,
            )

    kind = classify_statement(sql)
    if kind in ("select", "with_select"):
        for token in _iter_words(stmt):
            if token.word() == "INTO":
                raise GuardError(
                    "write_statement",
                    f"SELECT ... INTO writes a table (offset {token.offset})",
                    token=token.text,
                    offset=token.offset,
                )
        _guard_gate.open = True
        try:
            return ValidatedQuery(sql=sql, statement_kind="select")
        finally:
            _guard_gate.open = False

    if kind in ("write", "ddl"):
        offender = _first_offender(stmt, (WRITE_KEYWORDS, DDL_KEYWORDS))
        raise GuardError(
            "write_statement",
            f"write statement rejected: {offender.text!r} at offset {offender.offset}",
            token=offender.text,
            offset=offender.offset,
        )
    if kind == "transaction":
        raise GuardError(
            "unsupported",
            f"transaction control is not allowed: {stmt[0].text!r}",
            token=stmt[0].text,
            offset=stmt[0].offset,
        )
    raise GuardError(
        "unsupported",
        f"only SELECT statements are allowed, got {stmt[0].text!r}",
        token=stmt[0].text,
        offset=stmt[0].offset,
    )
