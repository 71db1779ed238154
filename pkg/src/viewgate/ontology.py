"""Class taxonomy, property schema and ontology lint checks.

Findings and what they stand for:

========================  ========  ==========================================
code                      severity  meaning
========================  ========  ==========================================
CYCLE                     error     incompatible (cyclic) subclass relationships
REDUNDANT_EDGE            warning   subclass edge already implied transitively
DUPLICATE_LABEL           warning   two classes share a label (ambiguity)
ORPHAN_CLASS              warning   class with no path up to owl:Thing
NAMING                    warning   class not CamelCase / property not lowerCamelCase
DOMAIN_VIOLATION          error     subject's types miss the declared domain
RANGE_VIOLATION           error     object's types miss the declared range
========================  ========  ==========================================

Conciseness is read as the absence of REDUNDANT_EDGE and DUPLICATE_LABEL
findings. Domain/range findings on untyped subjects or objects, or against
a domain/range class the taxonomy does not know, are warnings.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .rdf import OWL, RDF, RDFS, XSD, XSD_STRING, Graph, IRI, Term

OWL_THING = OWL + "Thing"
OWL_CLASS = IRI(OWL + "Class")
RDF_TYPE = IRI(RDF + "type")
SUBCLASS_OF = IRI(RDFS + "subClassOf")
DOMAIN = IRI(RDFS + "domain")
RANGE = IRI(RDFS + "range")
LABEL = IRI(RDFS + "label")
PROPERTY_TYPES = {IRI(OWL + "ObjectProperty"), IRI(OWL + "DatatypeProperty"), IRI(RDF + "Property")}

_BUILTIN_NS = (RDF, RDFS, OWL, XSD)
_CAMEL = re.compile(r"^[A-Z][A-Za-z0-9]*$")
_LOWER_CAMEL = re.compile(r"^[a-z][A-Za-z0-9]*$")


class UnknownClassError(KeyError):
    pass


def local_name(iri: str) -> str:
    cut = max(iri.rfind("#"), iri.rfind("/"), iri.rfind(":"))
    return iri[cut + 1:]


@dataclass
class Taxonomy:
    classes: Set[str]
    edges: Dict[str, Set[str]]  # child -> direct parents
    closure: Dict[str, Set[str]] = field(default_factory=dict)  # class -> all superclasses, itself included
    root: str = OWL_THING

    def parents(self, c: str) -> Set[str]:
        return self.edges.get(c, set())

    def children(self, c: str) -> Set[str]:
        return {x for x, ps in self.edges.items() if c in ps}

    def edge_list(self) -> List[Tuple[str, str]]:
        return sorted((c, p) for c, ps in self.edges.items() for p in ps)


def compute_closure(classes: Iterable[str], edges: Dict[str, Set[str]]) -> Dict[str, Set[str]]:
    """Reflexive-transitive closure by BFS from every node. Cycles are fine."""
    closure = {}
    for c in classes:
        seen = {c}
        todo = deque([c])
        while todo:
            x = todo.popleft()
            for p in edges.get(x, ()):
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        closure[c] = seen
    return closure


def build_taxonomy(graph: Graph) -> Taxonomy:
    classes = {OWL_THING}
    edges: Dict[str, Set[str]] = {}
    for t in graph.match(None, SUBCLASS_OF, None):
        if not (t.subject.is_iri and t.object.is_iri):
            continue
        classes.update((t.subject.value, t.object.value))
        edges.setdefault(t.subject.value, set()).add(t.object.value)
    for t in graph.match(None, RDF_TYPE, OWL_CLASS):
        if t.subject.is_iri:
            classes.add(t.subject.value)
    tax = Taxonomy(classes, edges)
    tax.closure = compute_closure(classes, edges)
    return tax


def is_subclass_of(tax: Taxonomy, a: str, b: str) -> bool:
    for c in (a, b):
        if c not in tax.classes:
            raise UnknownClassError(c)
    return b in tax.closure[a]


def types_of(graph: Graph, x: Term) -> Set[str]:
    return {t.object.value for t in graph.match(x, RDF_TYPE, None) if t.object.is_iri}


def instances_of(graph: Graph, tax: Taxonomy, c: str) -> Set[Term]:
    """Every x typed with ``c`` or any subclass of it."""
    if c not in tax.classes:
        raise UnknownClassError(c)
    out = set()
    for t in graph.match(None, RDF_TYPE, None):
        d = t.object
        if d.is_iri and d.value in tax.classes and c in tax.closure[d.value]:
            out.add(t.subject)
    return out


@dataclass
class PropertyDecl:
    domain: Optional[str] = None
    range: Optional[str] = None


def build_schema(graph: Graph) -> Dict[str, PropertyDecl]:
    schema: Dict[str, PropertyDecl] = {}
    for pred, attr in ((DOMAIN, "domain"), (RANGE, "range")):
        # several declarations for one property: the bytewise smallest wins, deterministically
        for t in sorted(graph.match(None, pred, None), key=lambda t: t.n3()):
            if t.subject.is_iri and t.object.is_iri:
                decl = schema.setdefault(t.subject.value, PropertyDecl())
                if getattr(decl, attr) is None:
                    setattr(decl, attr, t.object.value)
    return schema


@dataclass(frozen=True)
class Finding:
    code: str
    severity: str
    subjects: Tuple[str, ...]
    message: str

    def sort_key(self):
        return (self.code, self.subjects, self.message)

    def line(self) -> str:
        return "\t".join((self.code, self.severity, " ".join(self.subjects), self.message))


@dataclass
class LintReport:
    findings: List[Finding] = field(default_factory=list)

    def __post_init__(self):
        self.findings = sorted(set(self.findings), key=Finding.sort_key)

    def __len__(self):
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)

    def by_code(self, code: str) -> List[Finding]:
        return [f for f in self.findings if f.code == code]

    @property
    def errors(self) -> List[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> List[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    def to_lines(self) -> str:
        """Machine-readable ``code<TAB>severity<TAB>subjects<TAB>message`` lines."""
        return "".join(f.line() + "\n" for f in self.findings)

    def to_table(self) -> str:
        header = ("CODE", "SEVERITY", "SUBJECTS", "MESSAGE")
        rows = [header] + [(f.code, f.severity, " ".join(f.subjects), f.message) for f in self.findings]
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        out = []
        for r in rows:
            out.append("  ".join(r[i].ljust(widths[i]) for i in range(3)) + "  " + r[3])
        out.append(f"{len(self.errors)} error(s), {len(self.warnings)} warning(s)")
        return "\n".join(out) + "\n"


def _conforms(tax: Taxonomy, types: Set[str], required: str) -> bool:
    for t in types:
        if t == required:
            return True
        if t in tax.classes and required in tax.closure[t]:
            return True
    return False


def validate_domain_range(graph: Graph, tax: Taxonomy, schema: Dict[str, PropertyDecl]) -> List[Finding]:
    findings: List[Finding] = []
    for prop, decl in schema.items():
        for slot, required, code in ((0, decl.domain, "DOMAIN_VIOLATION"), (2, decl.range, "RANGE_VIOLATION")):
            if required is None:
                continue
            what = "domain" if slot == 0 else "range"
            if required not in tax.classes and not required.startswith(XSD) and required != RDFS + "Literal":
                findings.append(Finding(code, "warning", (prop, required),
                                        f"declared {what} {required} is not a known class"))
            for t in graph.match(None, IRI(prop), None):
                node = t.subject if slot == 0 else t.object
                if node.is_literal:
                    dt = node.datatype or XSD_STRING
                    if required in (dt, RDFS + "Literal"):
                        continue
                    findings.append(Finding(code, "error", (prop, node.n3()),
                                            f"literal of type {dt} where {what} {required} is required"))
                    continue
                types = types_of(graph, node)
                if not types:
                    findings.append(Finding(code, "warning", (prop, node.value),
                                            f"untyped {'subject' if slot == 0 else 'object'}; {what} {required} cannot be checked"))
                elif not _conforms(tax, types, required):
                    findings.append(Finding(code, "error", (prop, node.value),
                                            f"types {', '.join(sorted(types))} are not subclasses of {what} {required}"))
    return findings


def strongly_connected(tax: Taxonomy) -> Dict[str, FrozenSet[str]]:
    """Map each class to its strongly connected component (read off the closure)."""
    comp = {}
    for c in tax.classes:
        comp[c] = frozenset(d for d in tax.closure[c] if c in tax.closure[d])
    return comp


def cycle_findings(tax: Taxonomy) -> List[Finding]:
    comp = strongly_connected(tax)
    out = []
    for members in set(comp.values()):
        if len(members) > 1:
            names = tuple(sorted(members))
            out.append(Finding("CYCLE", "error", names, f"subclass cycle among {len(names)} classes"))
    for c, ps in tax.edges.items():
        if c in ps:
            out.append(Finding("CYCLE", "error", (c,), "class is declared a subclass of itself"))
    return out


def redundant_edges(tax: Taxonomy) -> List[Tuple[str, str]]:
    """Subclass edges whose removal (all together) leaves the closure unchanged.

    Works on the component DAG: an edge between two components is redundant
    when the parent component is reachable through another direct parent
    component, or when an earlier edge already links the same pair. Edges
    inside a cycle are left to the CYCLE check.
    """
    comp = strongly_connected(tax)
    links: Dict[Tuple[FrozenSet[str], FrozenSet[str]], List[Tuple[str, str]]] = {}
    succ: Dict[FrozenSet[str], Set[FrozenSet[str]]] = {}
    for c, p in tax.edge_list():
        a, b = comp[c], comp[p]
        if a == b:
            continue
        links.setdefault((a, b), []).append((c, p))
        succ.setdefault(a, set()).add(b)
    rep = {members: next(iter(members)) for members in set(comp.values())}
    out = []
    for (a, b), realised in links.items():
        implied = any(
            other != b and next(iter(b)) in tax.closure[rep[other]]
            for other in succ[a]
        )
        out.extend(realised if implied else realised[1:])
    return sorted(out)


def orphan_findings(tax: Taxonomy) -> List[Finding]:
    return [
        Finding("ORPHAN_CLASS", "warning", (c,), "no subclass path to owl:Thing")
        for c in tax.classes
        if c != tax.root and tax.root not in tax.closure[c]
    ]


def label_findings(graph: Graph, tax: Taxonomy) -> List[Finding]:
    by_label: Dict[str, Set[str]] = {}
    for t in graph.match(None, LABEL, None):
        if t.subject.is_iri and t.subject.value in tax.classes and t.object.is_literal:
            by_label.setdefault(t.object.value.strip().casefold(), set()).add(t.subject.value)
    return [
        Finding("DUPLICATE_LABEL", "warning", tuple(sorted(cs)), f"classes share the label {label!r}")
        for label, cs in by_label.items()
        if len(cs) > 1
    ]


def _builtin(iri: str) -> bool:
    return iri.startswith(_BUILTIN_NS)


def declared_properties(graph: Graph, schema: Dict[str, PropertyDecl]) -> Set[str]:
    props = set(schema)
    for ptype in PROPERTY_TYPES:
        props.update(t.subject.value for t in graph.match(None, RDF_TYPE, ptype) if t.subject.is_iri)
    return props


def naming_findings(graph: Graph, tax: Taxonomy, schema: Dict[str, PropertyDecl]) -> List[Finding]:
    out = []
    for c in tax.classes:
        if not _builtin(c) and not _CAMEL.match(local_name(c)):
            out.append(Finding("NAMING", "warning", (c,), "class name is not CamelCase"))
    for p in declared_properties(graph, schema):
        if not _builtin(p) and not _LOWER_CAMEL.match(local_name(p)):
            out.append(Finding("NAMING", "warning", (p,), "property name is not lowerCamelCase"))
    return out


def consistency_report(graph: Graph) -> LintReport:
    tax = build_taxonomy(graph)
    schema = build_schema(graph)
    findings = cycle_findings(tax)
    findings += [
        Finding("REDUNDANT_EDGE", "warning", (c, p), "edge is implied by other subclass edges")
        for c, p in redundant_edges(tax)
    ]
    findings += label_findings(graph, tax)
    findings += orphan_findings(tax)
    findings += naming_findings(graph, tax, schema)
    findings += validate_domain_range(graph, tax, schema)
    return LintReport(findings)
