"""Access-controlled view layer over RDF graphs, with a hash-chained audit ledger."""

from importlib import resources

from .gateway import Gateway, QueryRequest, QueryResponse, WriteResponse, authenticate
from .ledger import (
    AccessControlState,
    Chain,
    Transaction,
    append_block,
    authorize_tx,
    canonical_tx_bytes,
    check_access,
    genesis,
    replay_state,
    verify_chain,
)
from .ntriples import DEFAULT_PREFIXES, FIXTURE_NS, canonical_serialize, expand_prefixes, load_graph, parse_ntriples
from .ontology import build_taxonomy, consistency_report, instances_of, is_subclass_of
from .query import evaluate, parse_query, plan, serialize_results
from .rdf import IRI, BNode, Graph, Literal, Term, Triple, TriplePattern, Variable, match_pattern
from .views import ViewCatalog, ViewDefinition, materialize

__version__ = "0.1.0"

FIXTURE_GRAPH_ID = "arabidopsis"


def fixture_text() -> str:
    """The shipped Arabidopsis ontology, in prefixed N-Triples."""
    return resources.files(__package__).joinpath("data/arabidopsis.nt").read_text(encoding="utf-8")


def fixture_catalog() -> str:
    return resources.files(__package__).joinpath("data/views.json").read_text(encoding="utf-8")


def load_fixture(graph_id: str = FIXTURE_GRAPH_ID) -> Graph:
    return load_graph(fixture_text(), graph_id, DEFAULT_PREFIXES)
