"""SELECT queries over basic graph patterns: parsing, join planning, evaluation and result formats.

Supported grammar (keywords are case-insensitive)::

    query    := prefix* 'SELECT' 'DISTINCT'? ('*' | var+) 'WHERE'? group
    prefix   := 'PREFIX' PNAME_NS IRIREF
    group    := '{' (pattern ('.' pattern)* '.'?)? filter* '}'
    pattern  := term term term
    filter   := 'FILTER' '(' var ('=' | '!=') const ')'
    term     := var | IRIREF | PNAME | 'a' | literal

Filters may sit anywhere between patterns. DISTINCT is implied: results
always have set semantics, and rows come back sorted by the N-Triples form
of their terms so that output is byte-stable for a given store.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .ntriples import DEFAULT_PREFIXES
from .rdf import RDF, XSD, IRI, Literal, Term, TermError, TriplePattern, Variable

RDF_TYPE = IRI(RDF + "type")


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, text: str = "", position: int = 0):
        self.message = message
        self.position = position
        self.line = text.count("\n", 0, position) + 1
        self.column = position - (text.rfind("\n", 0, position) + 1) + 1
        super().__init__(f"{message} (line {self.line}, column {self.column})")


@dataclass(frozen=True)
class Filter:
    var: str
    op: str  # "=" or "!="
    value: Term

    def test(self, term: Term) -> bool:
        return (term == self.value) if self.op == "=" else (term != self.value)


@dataclass
class Query:
    select_vars: Optional[List[str]]  # None means SELECT *
    bgp: List[TriplePattern]
    filters: List[Filter] = field(default_factory=list)
    distinct: bool = False
    prefixes: Dict[str, str] = field(default_factory=dict)

    @property
    def select_all(self) -> bool:
        return self.select_vars is None

    def bgp_vars(self) -> List[str]:
        out: List[str] = []
        for pat in self.bgp:
            for v in pat.variables():
                if v not in out:
                    out.append(v)
        return out

    def projection(self) -> List[str]:
        return self.bgp_vars() if self.select_vars is None else list(self.select_vars)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n\r]|\\.)*")
  | (?P<dtype>\^\^)
  | (?P<lang>@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*)
  | (?P<number>[+-]?(?:\d+\.\d+|\d+))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_](?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)?)
  | (?P<blank>_:[A-Za-z0-9_]+)
  | (?P<word>[A-Za-z]+)
  | (?P<op>!=|=)
  | (?P<punct>[{}().*])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            e = body[i + 1]
            if e in _ESCAPES:
                out.append(_ESCAPES[e])
                i += 2
                continue
            if e in "uU":
                width = 4 if e == "u" else 8
                out.append(chr(int(body[i + 2:i + 2 + width], 16)))
                i += 2 + width
                continue
            raise ValueError(f"bad escape \\{e}")
        out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, text: str, prefixes: Mapping[str, str]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes = dict(prefixes)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        return QuerySyntaxError(msg, self.text, (tok or self.tok).pos)

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def is_word(self, word: str) -> bool:
        return self.tok.kind == "word" and self.tok.text.upper() == word

    def expect_punct(self, p: str):
        if not (self.tok.kind == "punct" and self.tok.text == p):
            raise self.error(f"expected {p!r}, found {self.tok.text or 'end of input'!r}")
        self.next()

    def expand(self, tok: _Tok) -> str:
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            raise self.error(f"undeclared prefix {prefix + ':'!r}", tok)
        return self.prefixes[prefix] + local

    def iri(self, tok: _Tok) -> Term:
        try:
            if tok.kind == "iri":
                return IRI(tok.text[1:-1])
            return IRI(self.expand(tok))
        except TermError as e:
            raise self.error(str(e), tok) from None

    def constant(self) -> Term:
        tok = self.next()
        if tok.kind in ("iri", "pname"):
            return self.iri(tok)
        if tok.kind == "word" and tok.text == "a":
            return RDF_TYPE
        if tok.kind == "word" and tok.text in ("true", "false"):
            return Literal(tok.text, XSD + "boolean")
        if tok.kind == "number":
            return Literal(tok.text, XSD + ("decimal" if "." in tok.text else "integer"))
        if tok.kind == "string":
            try:
                lexical = _unescape(tok.text[1:-1])
            except ValueError as e:
                raise self.error(str(e), tok) from None
            if self.tok.kind == "dtype":
                self.next()
                dt = self.next()
                if dt.kind not in ("iri", "pname"):
                    raise self.error("expected datatype IRI after '^^'", dt)
                return Literal(lexical, datatype=self.iri(dt).value)
            if self.tok.kind == "lang":
                return Literal(lexical, lang=self.next().text[1:])
            return Literal(lexical)
        if tok.kind == "blank":
            raise self.error("blank nodes are not supported in query patterns", tok)
        raise self.error(f"expected an RDF term, found {tok.text or 'end of input'!r}", tok)

    def slot(self):
        if self.tok.kind == "var":
            return Variable(self.next().text[1:])
        return self.constant()

    def prologue(self):
        while self.is_word("PREFIX"):
            self.next()
            ns = self.next()
            if ns.kind != "pname" or not ns.text.endswith(":"):
                raise self.error("expected a prefix name like 'ex:'", ns)
            iri = self.next()
            if iri.kind != "iri":
                raise self.error("expected an IRI for the prefix", iri)
            self.prefixes[ns.text[:-1]] = iri.text[1:-1]

    def group(self) -> Tuple[List[TriplePattern], List[Filter]]:
        self.expect_punct("{")
        patterns: List[TriplePattern] = []
        filters: List[Filter] = []
        need_dot = False
        while not (self.tok.kind == "punct" and self.tok.text == "}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated group, expected '}'")
            if self.is_word("FILTER"):
                filters.append(self.filter())
                need_dot = False
                continue
            if self.tok.kind == "punct" and self.tok.text == ".":
                if not need_dot:
                    raise self.error("unexpected '.'")
                self.next()
                need_dot = False
                continue
            if need_dot:
                raise self.error("expected '.' between triple patterns")
            start = self.tok
            s, p, o = self.slot(), self.slot(), self.slot()
            if isinstance(s, Term) and s.is_literal:
                raise self.error("literal in subject position", start)
            if isinstance(p, Term) and not p.is_iri:
                raise self.error("predicate must be an IRI or a variable", start)
            patterns.append(TriplePattern(s, p, o))
            need_dot = True
        self.next()
        return patterns, filters

    def filter(self) -> Filter:
        self.next()
        self.expect_punct("(")
        var = self.next()
        if var.kind != "var":
            raise self.error("FILTER must compare a variable with a constant", var)
        op = self.next()
        if op.kind != "op":
            raise self.error(f"unknown filter operator {op.text!r}", op)
        value = self.constant()
        self.expect_punct(")")
        return Filter(var.text[1:], op.text, value)

    def query(self) -> Query:
        self.prologue()
        if not self.is_word("SELECT"):
            raise self.error("expected SELECT")
        self.next()
        distinct = False
        if self.is_word("DISTINCT"):
            self.next()
            distinct = True
        select: Optional[List[str]]
        var_toks: List[_Tok] = []
        if self.tok.kind == "punct" and self.tok.text == "*":
            self.next()
            select = None
        else:
            while self.tok.kind == "var":
                var_toks.append(self.next())
            if not var_toks:
                raise self.error("expected '*' or a variable list after SELECT")
            select = []
            for t in var_toks:
                if t.text[1:] not in select:
                    select.append(t.text[1:])
        if self.is_word("WHERE"):
            self.next()
        group_tok = self.tok
        bgp, filters = self.group()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected trailing input {self.tok.text!r}")
        if not bgp:
            raise self.error("empty basic graph pattern", group_tok)
        q = Query(select, bgp, filters, distinct, self.prefixes)
        in_bgp = set(q.bgp_vars())
        for t in var_toks:
            if t.text[1:] not in in_bgp:
                raise self.error(f"selected variable {t.text} does not occur in the pattern", t)
        for f in filters:
            if f.var not in in_bgp:
                raise self.error(f"filter variable ?{f.var} does not occur in the pattern")
        return q


def parse_query(text: str, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> Query:
    """Parse a query. ``prefixes`` seeds the prefix table; PREFIX lines extend it."""
    return _Parser(text, prefixes).query()


def parse_bgp(text: str, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> List[TriplePattern]:
    """Parse a bare pattern group, braces optional: ``?s ex:p ?o . ?o ex:q ?z``."""
    body = text.strip()
    if not body.startswith("{"):
        body = "{" + body + "}"
    p = _Parser(body, prefixes)
    patterns, filters = p.group()
    if filters:
        raise QuerySyntaxError("FILTER is not allowed here", body, 0)
    if p.tok.kind != "eof":
        raise p.error(f"unexpected trailing input {p.tok.text!r}")
    return patterns


def plan(query) -> List[TriplePattern]:
    """Order the BGP for nested-loop evaluation.

    Greedy: take the pattern with the most constant slots first, then always
    a pattern sharing a variable with what is already bound (preferring more
    bound slots); fall back to a cross product only when nothing connects.
    Ties go to textual order.
    """
    patterns = list(query.bgp if isinstance(query, Query) else query)
    remaining = list(range(len(patterns)))
    bound: set = set()
    order: List[TriplePattern] = []

    def boundness(idx):
        pat = patterns[idx]
        return sum(1 for s in pat if isinstance(s, Term) or (isinstance(s, Variable) and s.name in bound))

    while remaining:
        connected = [i for i in remaining if bound & set(patterns[i].variables())]
        pool = connected or remaining
        best = max(pool, key=lambda i: (boundness(i), -i))
        remaining.remove(best)
        order.append(patterns[best])
        bound.update(patterns[best].variables())
    return order


def _unify(pattern: TriplePattern, triple, binding: Dict[str, Term]) -> Optional[Dict[str, Term]]:
    out = binding
    for slot, term in zip(pattern, triple):
        if isinstance(slot, Variable):
            have = out.get(slot.name)
            if have is None:
                if out is binding:
                    out = dict(binding)
                out[slot.name] = term
            elif have != term:
                return None
        elif slot is not None and slot != term:
            return None
    return out


def solve(patterns: Sequence[TriplePattern], source, filters: Sequence[Filter] = ()) -> Iterator[Dict[str, Term]]:
    """All bindings satisfying every pattern and filter, by index nested-loop join in the given order."""
    by_var: Dict[str, List[Filter]] = {}
    for f in filters:
        by_var.setdefault(f.var, []).append(f)

    def step(k: int, binding: Dict[str, Term]):
        if k == len(patterns):
            yield binding
            return
        pat = patterns[k]
        probe = [
            binding.get(s.name) if isinstance(s, Variable) else s
            for s in pat
        ]
        for t in source.match(*probe):
            b = _unify(pat, t, binding)
            if b is None:
                continue
            if b is not binding and not all(
                f.test(b[f.var]) for name in b.keys() - binding.keys() for f in by_var.get(name, ())
            ):
                continue
            yield from step(k + 1, b)

    yield from step(0, {})


def row_key(row: Sequence[Term]) -> Tuple[str, ...]:
    return tuple(t.n3() for t in row)


@dataclass
class ResultSet:
    vars: List[str]
    rows: List[Tuple[Term, ...]]

    def __len__(self):
        return len(self.rows)

    def solutions(self) -> List[Dict[str, Term]]:
        return [dict(zip(self.vars, row)) for row in self.rows]

    def column(self, var: str) -> List[Term]:
        i = self.vars.index(var)
        return [row[i] for row in self.rows]

    def project(self, names: Sequence[str]) -> "ResultSet":
        idx = [self.vars.index(n) for n in names]
        rows = {tuple(row[i] for i in idx) for row in self.rows}
        return ResultSet(list(names), sorted(rows, key=row_key))


def evaluate(query: Query, source, use_plan: bool = True) -> ResultSet:
    """Evaluate ``query`` against any object with ``match(s, p, o)``.

    Rows are distinct and sorted by their N-Triples serialization.
    """
    patterns = plan(query) if use_plan else list(query.bgp)
    names = query.projection()
    rows = {tuple(b[n] for n in names) for b in solve(patterns, source, query.filters)}
    return ResultSet(names, sorted(rows, key=row_key))


def _csv_value(t: Term) -> str:
    if t.is_blank:
        return "_:" + t.value
    return t.value


def _json_value(t: Term) -> Dict[str, str]:
    if t.is_iri:
        return {"type": "uri", "value": t.value}
    if t.is_blank:
        return {"type": "bnode", "value": t.value}
    out = {"type": "literal", "value": t.value}
    if t.lang is not None:
        out["xml:lang"] = t.lang
    elif t.datatype is not None:
        out["datatype"] = t.datatype
    return out


RESULT_FORMATS = ("csv", "sparql-json")


def results_json(rs: ResultSet) -> dict:
    return {
        "head": {"vars": list(rs.vars)},
        "results": {
            "bindings": [
                {v: _json_value(t) for v, t in zip(rs.vars, row)} for row in rs.rows
            ]
        },
    }


def serialize_results(rs: ResultSet, format: str = "sparql-json") -> str:
    """Render results as SPARQL 1.1 CSV (CRLF rows) or SPARQL 1.1 Results JSON."""
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(rs.vars)
        for row in rs.rows:
            w.writerow([_csv_value(t) for t in row])
        return buf.getvalue()
    if format == "sparql-json":
        return json.dumps(results_json(rs), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    raise ValueError(f"unsupported result format {format!r}; expected one of {RESULT_FORMATS}")
