"""RDF terms, triples and indexed named graphs."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"

XSD_STRING = XSD + "string"

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_BLANK_LABEL = re.compile(r"^[A-Za-z0-9_]+$")
_LANG_TAG = re.compile(r"^[a-zA-Z]+(-[a-zA-Z0-9]+)*$")


class TermError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    """A single RDF atom.

    ``value`` holds the IRI, the literal's lexical form, or the blank label,
    depending on ``kind``. Equality is plain field equality, so literals
    compare bytewise on (lexical, datatype, language).
    """

    kind: str
    value: str
    datatype: Optional[str] = None
    lang: Optional[str] = None

    def __post_init__(self):
        if self.kind == "iri":
            check_iri(self.value)
            if self.datatype is not None or self.lang is not None:
                raise TermError("IRI terms carry no datatype or language")
        elif self.kind == "literal":
            if self.datatype is not None and self.lang is not None:
                raise TermError("literal has both a datatype and a language tag")
            if self.datatype is not None:
                check_iri(self.datatype)
            if self.lang is not None and not _LANG_TAG.match(self.lang):
                raise TermError(f"bad language tag {self.lang!r}")
        elif self.kind == "blank":
            if not _BLANK_LABEL.match(self.value):
                raise TermError(f"bad blank node label {self.value!r}")
            if self.datatype is not None or self.lang is not None:
                raise TermError("blank nodes carry no datatype or language")
        else:
            raise TermError(f"unknown term kind {self.kind!r}")

    @property
    def is_iri(self) -> bool:
        return self.kind == "iri"

    @property
    def is_literal(self) -> bool:
        return self.kind == "literal"

    @property
    def is_blank(self) -> bool:
        return self.kind == "blank"

    def n3(self) -> str:
        """N-Triples form of the term."""
        if self.kind == "iri":
            return f"<{self.value}>"
        if self.kind == "blank":
            return f"_:{self.value}"
        out = '"' + escape_literal(self.value) + '"'
        if self.lang is not None:
            out += "@" + self.lang
        elif self.datatype is not None:
            out += f"^^<{self.datatype}>"
        return out

    def __str__(self):
        return self.n3()


def check_iri(value: str) -> None:
    if not value:
        raise TermError("empty IRI")
    if _IRI_FORBIDDEN.search(value):
        raise TermError(f"IRI contains forbidden characters: {value!r}")
    if not _SCHEME.match(value):
        raise TermError(f"IRI is not absolute: {value!r}")


def escape_literal(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def IRI(value: str) -> Term:
    return Term("iri", value)


def Literal(lexical: str, datatype: Optional[str] = None, lang: Optional[str] = None) -> Term:
    # xsd:string is the implicit datatype of plain literals; keep one spelling
    if datatype == XSD_STRING:
        datatype = None
    if lang is not None:
        lang = lang.lower()
    return Term("literal", lexical, datatype, lang)


def BNode(label: str) -> Term:
    return Term("blank", label)


class TripleError(ValueError):
    pass


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if self.subject.is_literal:
            raise TripleError("literal in subject position")
        if not self.predicate.is_iri:
            raise TripleError(f"{self.predicate.kind} in predicate position")

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return "?" + self.name


Slot = Union[Term, Variable, None]


@dataclass(frozen=True)
class TriplePattern:
    """Three slots, each a concrete Term, a named Variable, or None (anonymous wildcard)."""

    subject: Slot
    predicate: Slot
    object: Slot

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> List[str]:
        seen: List[str] = []
        for slot in self:
            if isinstance(slot, Variable) and slot.name not in seen:
                seen.append(slot.name)
        return seen

    def bound(self) -> Tuple[Optional[Term], Optional[Term], Optional[Term]]:
        """Concrete slots, with variables and wildcards mapped to None."""
        return tuple(s if isinstance(s, Term) else None for s in self)  # type: ignore[return-value]

    def __str__(self):
        return " ".join("[]" if s is None else str(s) for s in self) + " ."


class GraphFrozenError(RuntimeError):
    pass


class Graph:
    """A named set of triples with SPO, POS and OSP permutation indexes."""

    def __init__(self, graph_id: str = "default", triples: Iterable[Triple] = ()):
        self.graph_id = graph_id
        self._triples: Set[Triple] = set()
        self._spo: Dict[Term, Dict[Term, Set[Term]]] = {}
        self._pos: Dict[Term, Dict[Term, Set[Term]]] = {}
        self._osp: Dict[Term, Dict[Term, Set[Term]]] = {}
        self._frozen = False
        for t in triples:
            self.insert(t)

    def __len__(self):
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __repr__(self):
        return f"<Graph {self.graph_id!r} ({len(self)} triples)>"

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "Graph":
        self._frozen = True
        return self

    def copy(self, graph_id: Optional[str] = None) -> "Graph":
        return Graph(self.graph_id if graph_id is None else graph_id, self._triples)

    def triples(self) -> Set[Triple]:
        return set(self._triples)

    def insert(self, t: Triple) -> bool:
        if self._frozen:
            raise GraphFrozenError(f"graph {self.graph_id!r} is read-only")
        if t in self._triples:
            return False
        self._triples.add(t)
        s, p, o = t
        self._spo.setdefault(s, {}).setdefault(p, set()).add(o)
        self._pos.setdefault(p, {}).setdefault(o, set()).add(s)
        self._osp.setdefault(o, {}).setdefault(s, set()).add(p)
        return True

    def remove(self, t: Triple) -> bool:
        if self._frozen:
            raise GraphFrozenError(f"graph {self.graph_id!r} is read-only")
        if t not in self._triples:
            return False
        self._triples.discard(t)
        s, p, o = t
        _unindex(self._spo, s, p, o)
        _unindex(self._pos, p, o, s)
        _unindex(self._osp, o, s, p)
        return True

    def match(self, s: Optional[Term] = None, p: Optional[Term] = None, o: Optional[Term] = None) -> Iterator[Triple]:
        """Yield triples agreeing with every non-None slot.

        The probe goes through whichever permutation index has the longest
        prefix of bound slots.
        """
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                    return
                for obj in objs:
                    yield Triple(s, p, obj)
                return
            if o is not None:
                # (o, s) is a full OSP prefix
                for pred in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, pred, o)
                return
            for pred, objs in by_p.items():
                for obj in objs:
                    yield Triple(s, pred, obj)
            return
        if p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            if o is not None:
                for subj in by_o.get(o, ()):
                    yield Triple(subj, p, o)
                return
            for obj, subjs in by_o.items():
                for subj in subjs:
                    yield Triple(subj, p, obj)
            return
        if o is not None:
            for subj, preds in self._osp.get(o, {}).items():
                for pred in preds:
                    yield Triple(subj, pred, o)
            return
        yield from self._triples

    def index_entries(self, name: str) -> Set[Triple]:
        """Reconstruct the triple set held by one index ("spo", "pos" or "osp")."""
        index = {"spo": self._spo, "pos": self._pos, "osp": self._osp}[name]
        out = set()
        for a, inner in index.items():
            for b, cs in inner.items():
                for c in cs:
                    if name == "spo":
                        out.add(Triple(a, b, c))
                    elif name == "pos":
                        out.add(Triple(c, a, b))
                    else:
                        out.add(Triple(b, c, a))
        return out


def _unindex(index, a, b, c):
    inner = index[a]
    leaf = inner[b]
    leaf.discard(c)
    if not leaf:
        del inner[b]
        if not inner:
            del index[a]


def insert(graph: Graph, t: Triple) -> bool:
    return graph.insert(t)


def remove(graph: Graph, t: Triple) -> bool:
    return graph.remove(t)


class UnknownGraphError(KeyError):
    pass


def match_pattern(store: Mapping[str, Graph], graph_ids: Sequence[str], pattern: TriplePattern) -> List[Triple]:
    """Triples from the union of the named graphs that match the concrete slots of ``pattern``.

    Variables and wildcards match anything here; repeated-variable
    consistency is the evaluator's job. A triple present in several graphs
    is reported once.
    """
    graphs = []
    for gid in graph_ids:
        if gid not in store:
            raise UnknownGraphError(gid)
        graphs.append(store[gid])
    s, p, o = pattern.bound()
    if len(graphs) == 1:
        return list(graphs[0].match(s, p, o))
    seen: Set[Triple] = set()
    out: List[Triple] = []
    for g in graphs:
        for t in g.match(s, p, o):
            if t not in seen:
                seen.add(t)
                out.append(t)
    return out


class UnionSource:
    """Read-only triple source over the union of several graphs."""

    def __init__(self, graphs: Iterable[Graph]):
        self.graphs = list(graphs)

    def match(self, s=None, p=None, o=None) -> Iterator[Triple]:
        if len(self.graphs) == 1:
            yield from self.graphs[0].match(s, p, o)
            return
        seen: Set[Triple] = set()
        for g in self.graphs:
            for t in g.match(s, p, o):
                if t not in seen:
                    seen.add(t)
                    yield t

    def __iter__(self):
        return self.match()
