"""View catalog: CONSTRUCT-style view definitions and their materialized subgraphs.

Refresh is lazy and total: a write to a source graph only flags dependent
views stale, and the next snapshot request re-materializes the view from
scratch.

Catalog file format (JSON)::

    {
      "prefixes": {"ex": "http://example.org/"},        # optional, added to the defaults
      "views": [
        {
          "id": "subclass-edges",
          "name": "Subclass hierarchy",
          "sources": ["arabidopsis"],
          "construct": "?c rdfs:subClassOf ?d",
          "where": "?c rdfs:subClassOf ?d . ?c a owl:Class"
        }
      ]
    }

``construct`` and ``where`` use the triple-pattern syntax of query groups
(braces optional, no FILTER).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .ntriples import DEFAULT_PREFIXES, canonical_serialize
from .query import parse_bgp, plan, solve
from .rdf import Graph, Term, Triple, TriplePattern, TripleError, UnionSource, Variable


class ViewError(ValueError):
    pass


class UnknownViewError(KeyError):
    pass


@dataclass(frozen=True)
class ViewDefinition:
    view_id: str
    name: str
    source_graph_ids: Tuple[str, ...]
    construct_template: Tuple[TriplePattern, ...]
    where_bgp: Tuple[TriplePattern, ...]

    def __post_init__(self):
        object.__setattr__(self, "source_graph_ids", tuple(self.source_graph_ids))
        object.__setattr__(self, "construct_template", tuple(self.construct_template))
        object.__setattr__(self, "where_bgp", tuple(self.where_bgp))

    def template_vars(self) -> Set[str]:
        return {v for pat in self.construct_template for v in pat.variables()}

    def bgp_vars(self) -> Set[str]:
        return {v for pat in self.where_bgp for v in pat.variables()}


def fingerprint(graph: Iterable[Triple]) -> str:
    return hashlib.sha256(canonical_serialize(graph).encode("utf-8")).hexdigest()


@dataclass
class MaterializedView:
    view_id: str
    triples: Graph
    version: int
    fingerprint: str
    stale: bool = False
    skipped: int = 0  # template instantiations dropped for being ill-formed

    def __len__(self):
        return len(self.triples)


@dataclass(frozen=True)
class ViewSnapshot:
    """Read-only copy handed to readers; the graph is frozen."""

    view_id: str
    triples: Graph
    version: int
    fingerprint: str


@dataclass
class Materialization:
    graph: Graph
    skipped: int


def _instantiate(pat: TriplePattern, binding: Mapping[str, Term]) -> Optional[Triple]:
    terms = []
    for slot in pat:
        if isinstance(slot, Variable):
            slot = binding.get(slot.name)
        if slot is None:
            return None
        terms.append(slot)
    try:
        return Triple(*terms)
    except TripleError:
        return None


def materialize(definition: ViewDefinition, store: Mapping[str, Graph]) -> Materialization:
    """Evaluate the WHERE pattern over the union of sources and instantiate the template per solution."""
    for gid in definition.source_graph_ids:
        if gid not in store:
            raise ViewError(f"view {definition.view_id!r}: unknown source graph {gid!r}")
    source = UnionSource(store[gid] for gid in definition.source_graph_ids)
    out = Graph(definition.view_id)
    skipped = 0
    for binding in solve(plan(definition.where_bgp), source):
        for pat in definition.construct_template:
            t = _instantiate(pat, binding)
            if t is None:
                skipped += 1
            else:
                out.insert(t)
    return Materialization(out, skipped)


class ViewCatalog:
    def __init__(self, store: Mapping[str, Graph]):
        self.store = store
        self.definitions: Dict[str, ViewDefinition] = {}
        self.views: Dict[str, MaterializedView] = {}
        self.dependents: Dict[str, Set[str]] = {}

    def __contains__(self, view_id: str) -> bool:
        return view_id in self.definitions

    def __len__(self):
        return len(self.definitions)

    def view_ids(self) -> List[str]:
        return sorted(self.definitions)

    def define_view(self, definition: ViewDefinition) -> str:
        self.validate(definition)
        vid = definition.view_id
        self.definitions[vid] = definition
        for gid in definition.source_graph_ids:
            self.dependents.setdefault(gid, set()).add(vid)
        self._refresh(vid, version=1)
        return vid

    def validate(self, definition: ViewDefinition) -> None:
        vid = definition.view_id
        if not vid or any(c.isspace() for c in vid):
            raise ViewError(f"bad view id {vid!r}")
        if vid in self.definitions:
            raise ViewError(f"view id {vid!r} already defined")
        if not definition.where_bgp:
            raise ViewError(f"view {vid!r}: empty WHERE pattern")
        for gid in definition.source_graph_ids:
            if gid not in self.store:
                raise ViewError(f"view {vid!r}: unknown source graph {gid!r}")
        unbound = definition.template_vars() - definition.bgp_vars()
        if unbound:
            raise ViewError(f"view {vid!r}: template variables not bound by WHERE: {', '.join(sorted(unbound))}")

    def _refresh(self, vid: str, version: int) -> MaterializedView:
        m = materialize(self.definitions[vid], self.store)
        m.graph.freeze()
        view = MaterializedView(vid, m.graph, version, fingerprint(m.graph), False, m.skipped)
        self.views[vid] = view
        return view

    def refresh(self, vid: str) -> MaterializedView:
        """Re-materialize if stale; a fresh view is left alone."""
        view = self._get(vid)
        if view.stale:
            view = self._refresh(vid, view.version + 1)
        return view

    def mark_stale(self, graph_id: str) -> List[str]:
        affected = sorted(self.dependents.get(graph_id, ()))
        for vid in affected:
            self.views[vid].stale = True
        return affected

    def get_view_snapshot(self, vid: str) -> ViewSnapshot:
        view = self.refresh(vid)
        return ViewSnapshot(vid, view.triples, view.version, view.fingerprint)

    def _get(self, vid: str) -> MaterializedView:
        if vid not in self.views:
            raise UnknownViewError(vid)
        return self.views[vid]

    def rebuild_dependents(self) -> Dict[str, Set[str]]:
        out: Dict[str, Set[str]] = {}
        for vid, d in self.definitions.items():
            for gid in d.source_graph_ids:
                out.setdefault(gid, set()).add(vid)
        return out

    def metadata(self) -> List[Dict[str, str]]:
        return [{"id": vid, "name": self.definitions[vid].name} for vid in self.view_ids()]


def define_view(catalog: ViewCatalog, definition: ViewDefinition) -> str:
    return catalog.define_view(definition)


def mark_stale(catalog: ViewCatalog, graph_id: str) -> List[str]:
    return catalog.mark_stale(graph_id)


def get_view_snapshot(catalog: ViewCatalog, view_id: str) -> ViewSnapshot:
    return catalog.get_view_snapshot(view_id)


def parse_catalog(doc: str, prefixes: Mapping[str, str] = DEFAULT_PREFIXES) -> List[ViewDefinition]:
    """Read view definitions from a catalog JSON document."""
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as e:
        raise ViewError(f"catalog is not valid JSON: {e}") from None
    table = dict(prefixes)
    table.update(data.get("prefixes", {}))
    out = []
    for i, rec in enumerate(data.get("views", [])):
        try:
            vid = rec["id"]
            out.append(ViewDefinition(
                view_id=vid,
                name=rec.get("name", vid),
                source_graph_ids=tuple(rec["sources"]),
                construct_template=tuple(parse_bgp(rec["construct"], table)),
                where_bgp=tuple(parse_bgp(rec["where"], table)),
            ))
        except KeyError as e:
            raise ViewError(f"catalog record {i}: missing field {e}") from None
        except ValueError as e:
            raise ViewError(f"catalog record {i} ({rec.get('id')!r}): {e}") from None
    return out


def _pattern_text(pat: TriplePattern) -> str:
    return " ".join(str(s) if s is not None else "?_" for s in pat)


def catalog_record(d: ViewDefinition) -> dict:
    return {
        "id": d.view_id,
        "name": d.name,
        "sources": list(d.source_graph_ids),
        "construct": " . ".join(_pattern_text(p) for p in d.construct_template),
        "where": " . ".join(_pattern_text(p) for p in d.where_bgp),
    }


def dump_catalog(definitions: Sequence[ViewDefinition]) -> str:
    """Catalog JSON with full IRIs, so it reloads without a prefix table."""
    return json.dumps({"views": [catalog_record(d) for d in definitions]}, indent=2, ensure_ascii=False) + "\n"
