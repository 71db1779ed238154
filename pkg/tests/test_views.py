import random

import pytest

from oracles import external_sha256, make_vocab, materialize_oracle, random_pattern, random_triples
from viewgate.query import parse_bgp
from viewgate.rdf import Graph, IRI, Literal, Triple, TriplePattern, Variable
from viewgate.views import (
    UnknownViewError, ViewCatalog, ViewDefinition, ViewError, dump_catalog, fingerprint, materialize, parse_catalog,
)
from viewgate.ntriples import canonical_serialize

S, P, O = Variable("s"), Variable("p"), Variable("o")
SPO = (TriplePattern(S, P, O),)


def view(vid, sources, construct, where):
    return ViewDefinition(vid, vid, tuple(sources), tuple(parse_bgp(construct)), tuple(parse_bgp(where)))


def catalog_with(**graphs):
    return ViewCatalog({gid: Graph(gid, ts) for gid, ts in graphs.items()})


class TestMaterialize:
    def test_identity_view_copies_the_source(self, fixture_graph):
        cat = ViewCatalog({"f": fixture_graph})
        cat.define_view(ViewDefinition("all", "all", ("f",), SPO, SPO))
        assert cat.get_view_snapshot("all").triples.triples() == fixture_graph.triples()

    def test_no_solutions_gives_empty_view(self, fixture_graph):
        cat = ViewCatalog({"f": fixture_graph})
        cat.define_view(view("none", ["f"], "?s <urn:x> ?o", "?s <urn:nothing> ?o"))
        snap = cat.get_view_snapshot("none")
        assert len(snap.triples) == 0 and snap.version == 1

    def test_reverse_edges(self):
        a, b, p = IRI("urn:a"), IRI("urn:b"), IRI("urn:p")
        cat = catalog_with(g=[Triple(a, p, b)])
        cat.define_view(view("rev", ["g"], "?o <urn:inv> ?s", "?s <urn:p> ?o"))
        assert cat.get_view_snapshot("rev").triples.triples() == {Triple(b, IRI("urn:inv"), a)}

    def test_ill_formed_instantiations_are_skipped(self):
        cat = catalog_with(g=[Triple(IRI("urn:a"), IRI("urn:p"), Literal("x"))])
        cat.define_view(view("flip", ["g"], "?o <urn:q> ?s", "?s <urn:p> ?o"))
        assert len(cat.views["flip"]) == 0 and cat.views["flip"].skipped == 1

    def test_against_brute_force(self):
        rng = random.Random(12)
        for _ in range(120):
            vocab = make_vocab(rng, rng.randint(2, 7))
            g1 = random_triples(rng, vocab, rng.randint(0, 30))
            g2 = random_triples(rng, vocab, rng.randint(0, 30))
            names = ["x", "y", "z"]
            where = [random_pattern(rng, vocab, names) for _ in range(rng.randint(1, 2))]
            bound = sorted({v for pat in where for v in pat.variables()})
            pool = bound or names
            template = [random_pattern(rng, vocab, pool, p_const=0.5 if bound else 1.0) for _ in range(2)]
            d = ViewDefinition("v", "v", ("a", "b"), template, where)
            got = materialize(d, {"a": Graph("a", g1), "b": Graph("b", g2)}).graph.triples()
            assert got == materialize_oracle(template, where, g1 + g2)

    def test_sources_outside_the_view_are_invisible(self):
        rng = random.Random(5)
        for _ in range(50):
            vocab = make_vocab(rng, 6)
            clean = random_triples(rng, vocab, 20)
            poison = [Triple(IRI(f"urn:poison{i}"), IRI("urn:t0"), IRI("urn:t1")) for i in range(5)]
            cat = catalog_with(clean=clean, dirty=poison + clean[:3])
            cat.define_view(ViewDefinition("v", "v", ("clean",), SPO, SPO))
            seen = {t.subject.value for t in cat.get_view_snapshot("v").triples.triples()}
            assert not any(s.startswith("urn:poison") for s in seen)


class TestCatalog:
    @pytest.mark.parametrize("construct, where, fragment", [
        ("?s <urn:p> ?free", "?s <urn:p> ?o", "not bound"),
        ("?s <urn:p> ?o", "", "empty WHERE"),
    ])
    def test_invalid_definitions(self, construct, where, fragment):
        cat = catalog_with(g=[])
        d = ViewDefinition("v", "v", ("g",), tuple(parse_bgp(construct)), tuple(parse_bgp(where)) if where else ())
        with pytest.raises(ViewError, match=fragment):
            cat.define_view(d)

    def test_unknown_source_and_duplicate_id(self):
        cat = catalog_with(g=[])
        with pytest.raises(ViewError, match="unknown source"):
            cat.define_view(ViewDefinition("v", "v", ("h",), SPO, SPO))
        cat.define_view(ViewDefinition("v", "v", ("g",), SPO, SPO))
        with pytest.raises(ViewError, match="already defined"):
            cat.define_view(ViewDefinition("v", "v", ("g",), SPO, SPO))

    def test_unknown_view(self):
        with pytest.raises(UnknownViewError):
            catalog_with(g=[]).get_view_snapshot("missing")

    def test_staleness_and_versions(self):
        a, p = IRI("urn:a"), IRI("urn:p")
        cat = catalog_with(g=[Triple(a, p, a)], h=[])
        cat.define_view(ViewDefinition("on-g", "x", ("g",), SPO, SPO))
        cat.define_view(ViewDefinition("on-h", "y", ("h",), SPO, SPO))
        before = cat.get_view_snapshot("on-g")
        cat.store["g"].insert(Triple(a, p, IRI("urn:b")))
        assert cat.mark_stale("g") == ["on-g"]
        after = cat.get_view_snapshot("on-g")
        assert after.version == before.version + 1
        assert after.fingerprint != before.fingerprint
        # refresh without an intervening change is a no-op
        assert cat.get_view_snapshot("on-g") == after
        assert cat.get_view_snapshot("on-h").version == 1

    def test_snapshot_is_frozen(self, fixture_graph):
        cat = ViewCatalog({"f": fixture_graph})
        cat.define_view(ViewDefinition("all", "all", ("f",), SPO, SPO))
        with pytest.raises(RuntimeError):
            cat.get_view_snapshot("all").triples.insert(Triple(IRI("urn:a"), IRI("urn:b"), IRI("urn:c")))

    def test_dependents_index_can_be_rebuilt(self):
        cat = ViewCatalog({"a": Graph("a"), "b": Graph("b")})
        for d in parse_catalog('{"views": [{"id": "x", "sources": ["a", "b"], "construct": "?s ?p ?o",'
                               ' "where": "?s ?p ?o"}, {"id": "y", "sources": ["b"], "construct": "?s ?p ?o",'
                               ' "where": "?s ?p ?o"}]}'):
            cat.define_view(d)
        assert cat.rebuild_dependents() == cat.dependents == {"a": {"x"}, "b": {"x", "y"}}

    def test_dump_and_parse_round_trip(self):
        import viewgate
        defs = parse_catalog(viewgate.fixture_catalog())
        assert [d.view_id for d in defs] == ["subclass-edges", "class-labels", "plant-facts"]
        assert parse_catalog(dump_catalog(defs), prefixes={}) == defs

    def test_catalog_errors(self):
        with pytest.raises(ViewError, match="valid JSON"):
            parse_catalog("{")
        with pytest.raises(ViewError, match="missing field"):
            parse_catalog('{"views": [{"id": "v"}]}')
        with pytest.raises(ViewError, match="undeclared prefix"):
            parse_catalog('{"views": [{"id": "v", "sources": [], "construct": "?s ?p ?o", "where": "?s no:p ?o"}]}')


class TestFingerprint:
    def test_matches_external_sha256(self, fixture_graph):
        expected = external_sha256(canonical_serialize(fixture_graph).encode("utf-8"))
        if expected is None:
            pytest.skip("sha256sum is not installed")
        assert fingerprint(fixture_graph) == expected

    def test_empty_graph_hash(self):
        assert fingerprint(Graph()) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"

    def test_changes_iff_triple_set_changes(self):
        rng = random.Random(21)
        vocab = make_vocab(rng, 8)
        for _ in range(100):
            a = set(random_triples(rng, vocab, rng.randint(0, 12)))
            b = set(random_triples(rng, vocab, rng.randint(0, 12))) if rng.random() < 0.5 else set(a)
            assert (fingerprint(a) == fingerprint(b)) == (a == b)
