"""Line-oriented N-Triples reader/writer plus a fixed-table prefix expander."""

from __future__ import annotations

import re
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .rdf import OWL, RDF, RDFS, XSD, BNode, Graph, IRI, Literal, Term, TermError, Triple

FIXTURE_NS = "http://example.org/arabidopsis#"

DEFAULT_PREFIXES: Dict[str, str] = {
    "rdf": RDF,
    "rdfs": RDFS,
    "owl": OWL,
    "xsd": XSD,
    "": FIXTURE_NS,
}


class NTriplesError(ValueError):
    def __init__(self, message: str, line: int, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")


_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_LANG = re.compile(r"[a-zA-Z]+(-[a-zA-Z0-9]+)*")
_BLANK = re.compile(r"[A-Za-z0-9_]+")
_HEX = re.compile(r"[0-9A-Fa-f]+")


class _LineScanner:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, msg: str, pos: Optional[int] = None):
        return NTriplesError(msg, self.lineno, (self.pos if pos is None else pos) + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text) or self.text[self.pos] == "#"

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def uchar(self) -> str:
        # positioned on 'u' or 'U' after a backslash
        width = 4 if self.text[self.pos] == "u" else 8
        digits = self.text[self.pos + 1:self.pos + 1 + width]
        if len(digits) != width or not _HEX.fullmatch(digits):
            raise self.error("bad unicode escape")
        self.pos += 1 + width
        return chr(int(digits, 16))

    def iri(self) -> str:
        start = self.pos
        self.pos += 1
        out = []
        while True:
            c = self.peek()
            if c == "":
                raise self.error("unterminated IRI", start)
            if c == ">":
                self.pos += 1
                return "".join(out)
            if c == "\\":
                self.pos += 1
                if self.peek() not in ("u", "U"):
                    raise self.error("only \\u and \\U escapes are allowed in IRIs")
                out.append(self.uchar())
                continue
            out.append(c)
            self.pos += 1

    def literal_body(self) -> str:
        start = self.pos
        self.pos += 1
        out = []
        while True:
            c = self.peek()
            if c == "":
                raise self.error("unterminated literal", start)
            if c == '"':
                self.pos += 1
                return "".join(out)
            if c == "\\":
                self.pos += 1
                e = self.peek()
                if e in ("u", "U"):
                    out.append(self.uchar())
                elif e in _ECHAR:
                    out.append(_ECHAR[e])
                    self.pos += 1
                else:
                    raise self.error(f"bad escape \\{e}")
                continue
            out.append(c)
            self.pos += 1

    def term(self) -> Tuple[Term, int]:
        self.skip_ws()
        start = self.pos
        c = self.peek()
        try:
            if c == "<":
                return IRI(self.iri()), start
            if c == "_":
                if self.text[self.pos:self.pos + 2] != "_:":
                    raise self.error("expected '_:' blank node label")
                self.pos += 2
                m = _BLANK.match(self.text, self.pos)
                if not m:
                    raise self.error("empty blank node label")
                self.pos = m.end()
                return BNode(m.group()), start
            if c == '"':
                lexical = self.literal_body()
                if self.text.startswith("^^", self.pos):
                    self.pos += 2
                    if self.peek() != "<":
                        raise self.error("expected datatype IRI after '^^'")
                    return Literal(lexical, datatype=self.iri()), start
                if self.peek() == "@":
                    self.pos += 1
                    m = _LANG.match(self.text, self.pos)
                    if not m:
                        raise self.error("bad language tag")
                    self.pos = m.end()
                    return Literal(lexical, lang=m.group()), start
                return Literal(lexical), start
        except TermError as e:
            raise self.error(str(e), start) from None
        if c == "":
            raise self.error("unexpected end of line")
        raise self.error(f"unexpected character {c!r}")


def parse_ntriples(text: str) -> List[Triple]:
    """Parse an N-Triples document into triples, in document order.

    Duplicate statements are kept; deduplication happens on insert.
    Raises NTriplesError carrying the 1-based line (and column).
    """
    out: List[Triple] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        sc = _LineScanner(line, lineno)
        if sc.at_end():
            continue
        s, spos = sc.term()
        if s.is_literal:
            raise NTriplesError("literal in subject position", lineno, spos + 1)
        p, ppos = sc.term()
        if not p.is_iri:
            raise NTriplesError(f"{p.kind} in predicate position", lineno, ppos + 1)
        o, _ = sc.term()
        sc.skip_ws()
        if sc.peek() != ".":
            raise sc.error("expected '.' at end of statement")
        sc.pos += 1
        if not sc.at_end():
            raise sc.error("trailing content after '.'")
        out.append(Triple(s, p, o))
    return out


def load_graph(text: str, graph_id: str, prefixes: Optional[Mapping[str, str]] = None) -> Graph:
    """Parse ``text`` into a new graph; with ``prefixes`` set, expand prefixed names first."""
    if prefixes is not None:
        text = expand_prefixes(text, prefixes)
    return Graph(graph_id, parse_ntriples(text))


def serialize_lines(triples: Iterable[Triple]) -> List[str]:
    return sorted({t.n3() for t in triples}, key=lambda line: line.encode("utf-8"))


def canonical_serialize(graph: Iterable[Triple]) -> str:
    """N-Triples with lines sorted bytewise (UTF-8) and LF endings; '' for an empty graph."""
    lines = serialize_lines(graph)
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


_PNAME = re.compile(r"([A-Za-z][A-Za-z0-9_\-]*)?:([A-Za-z0-9_\-]*(?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)")


def expand_prefixes(text: str, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> str:
    """Rewrite ``prefix:local`` names to ``<iri>`` outside IRIs, literals and comments.

    This is a preprocessing pass for hand-written fixtures; the prefix table is
    fixed by the caller (there is no ``@prefix`` directive).
    """
    out_lines = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        out = []
        i = 0
        n = len(line)
        while i < n:
            c = line[i]
            if c == "<":
                j = line.find(">", i)
                if j < 0:
                    raise NTriplesError("unterminated IRI", lineno, i + 1)
                out.append(line[i:j + 1])
                i = j + 1
            elif c == '"':
                j = i + 1
                while j < n and line[j] != '"':
                    j += 2 if line[j] == "\\" else 1
                if j >= n:
                    raise NTriplesError("unterminated literal", lineno, i + 1)
                out.append(line[i:j + 1])
                i = j + 1
                if line.startswith("^^", i):
                    out.append("^^")
                    i += 2
                elif i < n and line[i] == "@":
                    m = _LANG.match(line, i + 1)
                    end = m.end() if m else i + 1
                    out.append(line[i:end])
                    i = end
            elif c == "#":
                out.append(line[i:])
                break
            elif c == "_" and line.startswith("_:", i):
                m = _BLANK.match(line, i + 2)
                end = m.end() if m else i + 2
                out.append(line[i:end])
                i = end
            else:
                m = _PNAME.match(line, i)
                if m and (i == 0 or not (line[i - 1].isalnum() or line[i - 1] in "_-")):
                    prefix = m.group(1) or ""
                    if prefix not in prefixes:
                        raise NTriplesError(f"undeclared prefix {prefix + ':'!r}", lineno, i + 1)
                    out.append(f"<{prefixes[prefix]}{m.group(2)}>")
                    i = m.end()
                else:
                    out.append(c)
                    i += 1
        out_lines.append("".join(out))
    return "\n".join(out_lines)
