"""Load the bundled Arabidopsis ontology, ask it a question, and lint it."""

import viewgate
from viewgate.ontology import build_taxonomy, consistency_report, instances_of
from viewgate.ntriples import FIXTURE_NS

g = viewgate.load_fixture()
print(f"{len(g)} triples in graph {g.graph_id!r}")

# which classes sit directly under BiologicalProperty?
q = viewgate.parse_query("SELECT ?c WHERE { ?c rdfs:subClassOf :BiologicalProperty }")
rows = viewgate.evaluate(q, g)
print(viewgate.serialize_results(rows, "csv"), end="")

# the planner reorders patterns; results do not depend on the order
q2 = viewgate.parse_query("""
    SELECT ?plant ?part ?kind WHERE {
        ?part a ?kind .
        ?plant :hasPart ?part .
        ?plant a :Plant .
    }""")
print("plan:", *viewgate.plan(q2), sep="\n  ")
for plant, part, kind in viewgate.evaluate(q2, g).rows:
    print(" ", plant.value.removeprefix(FIXTURE_NS), part.value.removeprefix(FIXTURE_NS),
          kind.value.removeprefix(FIXTURE_NS))

# reasoning over the taxonomy: instances of a class include its subclasses' members
tax = build_taxonomy(g)
structures = instances_of(g, tax, FIXTURE_NS + "PlantStructure")
print("plant structures:", sorted(t.value.removeprefix(FIXTURE_NS) for t in structures))

print(consistency_report(g).to_table(), end="")

# break it: a back edge makes a cycle, a shortcut edge is redundant
broken = g.copy()
sub = viewgate.IRI("http://www.w3.org/2000/01/rdf-schema#subClassOf")
ex = lambda n: viewgate.IRI(FIXTURE_NS + n)  # noqa: E731
broken.insert(viewgate.Triple(ex("BiologicalProperty"), sub, ex("Tolerance")))
broken.insert(viewgate.Triple(ex("Ecotype"), sub, viewgate.IRI("http://www.w3.org/2002/07/owl#Thing")))
print(consistency_report(broken).to_table(), end="")
