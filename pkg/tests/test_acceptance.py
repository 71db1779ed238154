"""Acceptance checks, one test per criterion.

Each test records a single ``[PASS]``/``[FAIL]`` line; the lines are printed
in the pytest terminal summary (see conftest.py) and, when this file is run
directly with ``python3 tests/test_acceptance.py``, to stdout.
"""

import json
import random
import sys
import time

import pytest

import viewgate
from conftest import TOKENS, Deployment
from oracles import access_oracle, brute_force_rows, make_vocab, materialize_oracle, random_pattern, random_triples
from viewgate import ledger as L
from viewgate.ntriples import FIXTURE_NS, canonical_serialize, parse_ntriples
from viewgate.query import Filter, Query, evaluate, parse_query
from viewgate.rdf import Graph, IRI, Literal, Triple, TriplePattern, Variable
from viewgate.views import dump_catalog, ViewDefinition

RESULTS = []
SUBCLASS_QUERY = "SELECT ?c WHERE { ?c rdfs:subClassOf :BiologicalProperty }"
FIVE = ["GeneticResistance", "RegenerativeAbility", "SeedCompatibility", "Tolerance", "Viability"]


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{number} {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# -- 1 ------------------------------------------------------------------------

def test_ac1_query_oracle_equivalence():
    rng = random.Random(20240601)
    mismatches, spent = 0, 0.0
    for case in range(1000):
        vocab = make_vocab(rng, rng.randint(1, 10))
        triples = random_triples(rng, vocab, rng.randint(0, 200))
        names = ["x", "y", "z", "w"][: rng.randint(1, 4)]
        pats = [random_pattern(rng, vocab, names) for _ in range(rng.randint(1, 3))]
        q = Query(None, pats)
        if rng.random() < 0.3:
            q.filters = [Filter(rng.choice(q.bgp_vars()), rng.choice(["=", "!="]), rng.choice(vocab))] \
                if q.bgp_vars() else []
        g = Graph("g", triples)
        t0 = time.perf_counter()
        rows = evaluate(q, g).rows
        spent += time.perf_counter() - t0
        expected = brute_force_rows(triples, pats, q.projection(), q.filters)
        if set(rows) != expected or len(rows) != len(set(rows)):
            mismatches += 1
    report(1, "query oracle equivalence", mismatches == 0 and spent < 60,
           f"1000 cases, {mismatches} mismatches, evaluate() total {spent:.2f} s (< 60 s)")


# -- 2 ------------------------------------------------------------------------

def test_ac2_fixture_reproduction():
    g = viewgate.load_fixture()
    got = [t.value.removeprefix(FIXTURE_NS) for t in evaluate(parse_query(SUBCLASS_QUERY), g).column("c")]
    lint = viewgate.consistency_report(g)
    report(2, "fixture reproduction", got == FIVE and not lint.errors,
           f"subclasses {got}; lint {len(lint.errors)} errors, {len(lint.warnings)} warnings")


# -- 3 ------------------------------------------------------------------------

def fixture_chain(blocks=20):
    """A deterministic chain of ``blocks`` blocks after genesis, mixing every transaction kind."""
    clock = iter(range(1_700_000_000, 1_800_000_000)).__next__
    chain = L.genesis(["root"], clock())
    ledger = L.Ledger(chain, block_size=3, clock=clock)
    mk = ledger.make_tx
    ledger.submit([mk(L.REGISTER_USER, "root", {"user": u}) for u in ("ann", "ben", "cyd")]
                  + [mk(L.REGISTER_RESOURCE, "root", {"resource": "v1", "resource_kind": "view"}),
                     mk(L.REGISTER_RESOURCE, "root", {"resource": "g1", "resource_kind": "graph"})])
    ledger.submit([mk(L.ASSIGN_PRIVILEGE, "root", {"role": "reader", "privilege": {"action": "READ", "resource": "v1"}}),
                   mk(L.ASSIGN_PRIVILEGE, "root", {"role": "lead", "privilege": {"action": "DELEGATE", "resource": "reader"}})])
    ledger.submit([mk(L.GRANT_ROLE, "root", {"user": "ann", "role": "lead"})])
    ledger.submit([mk(L.GRANT_ROLE, "ann", {"user": "ben", "role": "reader"})])
    i = 0
    while chain.height < blocks:
        user = ("ann", "ben", "cyd")[i % 3]
        if i % 5 == 4:
            kind = L.REVOKE_ROLE if (i // 5) % 2 == 0 else L.GRANT_ROLE
            ledger.submit([mk(kind, "ann", {"user": "cyd", "role": "reader"})])
        else:
            decision = "allow" if L.check_access(chain.state, user, "READ", "v1") else "deny"
            ledger.record(mk(L.ACCESS_RECORD, "root", {"user": user, "query_hash": f"{i:064x}",
                                                       "view_ids": ["v1"], "decision": decision}))
        i += 1
    ledger.pending.clear()
    return chain


def test_ac3_tamper_evidence():
    chain = fixture_chain(20)
    data = L.serialize_chain(chain)
    assert L.verify_bytes(data) and chain.height == 20
    rng = random.Random(3)
    positions = range(len(data)) if len(data) <= 1 << 20 else rng.sample(range(len(data)), 10_000)
    false_passes = []
    tried = 0
    for pos in positions:
        # two distinct replacement values per byte: a low-bit flip and a random other value
        for delta in {0x01, rng.randint(1, 255)}:
            mutated = bytearray(data)
            mutated[pos] ^= delta
            tried += 1
            if L.verify_bytes(bytes(mutated)):
                false_passes.append(pos)
    report(3, "tamper evidence", not false_passes,
           f"{len(data)} bytes, 20 blocks, {tried} single-byte mutations, {len(false_passes)} false passes")


# -- 4 ------------------------------------------------------------------------

def test_ac4_access_control_oracle():
    rng = random.Random(4)
    checked = mismatches = 0
    for _ in range(1000):
        users = [f"u{i}" for i in range(rng.randint(1, 10))]
        roles = [f"r{i}" for i in range(rng.randint(1, 10))]
        n_res = rng.randint(1, 10)
        views = [f"v{i}" for i in range(rng.randint(0, n_res))]
        graphs = [f"g{i}" for i in range(n_res - len(views))]
        supers = set(rng.sample(users, rng.randint(0, min(2, len(users)))))
        targets = {"READ": views, "WRITE": graphs, "DELEGATE": roles}
        members = {r: set(rng.sample(users, rng.randint(0, len(users)))) for r in roles}
        privs = {}
        for r in roles:
            pool = [(a, x) for a, xs in targets.items() for x in xs]
            privs[r] = set(rng.sample(pool, rng.randint(0, min(6, len(pool)))))
        state = L.AccessControlState(
            frozenset(supers), set(users) - supers, {"view": set(views), "graph": set(graphs)},
            {r: set(m) for r, m in members.items()},
            {r: {L.Privilege(a, x) for a, x in ps} for r, ps in privs.items()},
        )
        for user in users + ["outsider"]:
            for action, resources in targets.items():
                for res in resources + ["unregistered"]:
                    checked += 1
                    if bool(L.check_access(state, user, action, res)) != access_oracle(
                            supers, members, privs, user, action, res):
                        mismatches += 1
    report(4, "access-control oracle", mismatches == 0,
           f"1000 states, {checked} (user, action, resource) checks, {mismatches} mismatches")


# -- 5 ------------------------------------------------------------------------

def grant(gw, user, views, role):
    admin = ("admin", TOKENS["admin"])
    for v in views:
        gw.admin_grant(*admin, "privilege", {"role": role, "action": "READ", "resource": v})
    gw.admin_grant(*admin, "role", {"user": user, "role": role})


def test_ac5_differential_results(tmp_path_factory):
    gw = Deployment(tmp_path_factory.mktemp("ac5")).open()
    grant(gw, "alice", ["subclass-edges"], "one-view")
    grant(gw, "bob", ["subclass-edges", "class-labels"], "two-views")
    q = "SELECT * WHERE { ?s ?p ?o }"
    a = set(gw.query("alice", TOKENS["alice"], q).results.rows)
    b = set(gw.query("bob", TOKENS["bob"], q).results.rows)
    gw.close()
    strict = a < b

    rng = random.Random(55)
    leaked = 0
    for k in range(100):
        leaked += poison_trial(rng, tmp_path_factory.mktemp(f"ac5-{k}"))
    report(5, "differential results per credential", strict and leaked == 0,
           f"A {len(a)} rows, B {len(b)} rows, A strict subset of B: {strict}; "
           f"100 poison configurations, {leaked} leaked triples")


def poison_trial(rng, root):
    """Random graphs (one of them full of poison terms), random views, random READ grants.

    Returns the number of returned triples outside the union of the granted views' oracle materializations.
    """
    vocab = make_vocab(rng, 6)
    poison = [IRI(f"urn:poison:{i}") for i in range(3)]
    graphs = {f"g{i}": random_triples(rng, vocab, rng.randint(0, 15)) for i in range(3)}
    graphs["secret"] = random_triples(rng, vocab[:2] + poison, 8) + [Triple(poison[0], vocab[0], poison[1])]
    defs = []
    for i in range(rng.randint(2, 4)):
        sources = tuple(sorted(rng.sample(sorted(graphs), rng.randint(1, 2))))
        where = [TriplePattern(Variable("s"), Variable("p"), Variable("o"))]
        if rng.random() < 0.5:
            # catalogs take no blank nodes in patterns
            where.append(random_pattern(rng, [t for t in vocab if not t.is_blank], ["s", "o"]))
        template = [TriplePattern(Variable("s"), Variable("p"), Variable("o"))]
        defs.append(ViewDefinition(f"view{i}", f"view {i}", sources, template, where))
    texts = {gid: canonical_serialize(ts) for gid, ts in graphs.items()}
    dep = Deployment(root, graphs=texts, catalog=dump_catalog(defs))
    gw = dep.open()
    granted = [d for d in defs if rng.random() < 0.5] or defs[:1]
    grant(gw, "alice", [d.view_id for d in granted], "r")
    resp = gw.query("alice", TOKENS["alice"], "SELECT * WHERE { ?s ?p ?o }")
    gw.close()
    allowed = set()
    for d in granted:
        source = [t for gid in d.source_graph_ids for t in graphs[gid]]
        allowed |= materialize_oracle(d.construct_template, d.where_bgp, source)
    returned = {Triple(*row) for row in resp.results.rows}
    leaks = returned - allowed
    if not any("secret" in d.source_graph_ids for d in granted):
        leaks |= {t for t in returned if set(t) & set(poison)}
    return len(leaks)


# -- 6 ------------------------------------------------------------------------

def test_ac6_audit_completeness(tmp_path_factory):
    dep = Deployment(tmp_path_factory.mktemp("ac6"), block_size=7)
    gw = dep.open()
    grant(gw, "alice", ["subclass-edges"], "reader")
    gw.admin_grant("admin", TOKENS["admin"], "privilege",
                   {"role": "editor", "action": "WRITE", "resource": "arabidopsis"})
    gw.admin_grant("admin", TOKENS["admin"], "role", {"user": "carol", "role": "editor"})
    before = {t["tx_id"] for t in gw.audit_list("admin", TOKENS["admin"])}

    rng = random.Random(6)
    responses = []
    for i in range(50):
        user = rng.choice(["alice", "bob", "carol", "mallory"])
        token = TOKENS[user] if rng.random() < 0.85 else "0" * 64
        if rng.random() < 0.7:
            text = SUBCLASS_QUERY if rng.random() < 0.9 else "SELECT ?c WHERE {"
            r = gw.query(user, token, text)
        else:
            line = f"<urn:x:s{i}> <urn:x:p> <urn:x:o{i}> .\n"
            r = gw.handle_write(user, token, "arabidopsis", inserts=line)
        responses.append(r)
    recs = [t for t in gw.audit_list("admin", TOKENS["admin"])
            if t["tx_id"] not in before and t["kind"] in (L.ACCESS_RECORD, L.WRITE_RECORD)]
    matched = [r.tx_id for r in responses] == [t["tx_id"] for t in recs]
    decisions = [("allow" if r.http_status == 200 else "deny") for r in responses] == [t["decision"] for t in recs]
    allowed = sum(r.http_status == 200 for r in responses)
    gw.close()
    state = gw.state.canonical_bytes()

    restarted = dep.open()
    replayed = L.replay_state(L.deserialize_chain(dep.chain_path.read_bytes())).canonical_bytes()
    same = restarted.state.canonical_bytes() == state == replayed
    ok = len(recs) == 50 and matched and decisions and same
    report(6, "audit completeness", ok,
           f"50 requests ({allowed} allowed, {50 - allowed} denied), {len(recs)} records on chain, "
           f"tx ids match: {matched}; state after restart bit-identical: {same}")


# -- 7 ------------------------------------------------------------------------

def test_ac7_view_freshness(tmp_path_factory):
    rng = random.Random(7)
    vocab = make_vocab(rng, 8)
    graphs = {"left": random_triples(rng, vocab, 12), "right": random_triples(rng, vocab, 12)}
    s, p, o, x = Variable("s"), Variable("p"), Variable("o"), Variable("x")
    defs = [
        ViewDefinition("copy-left", "copy", ("left",), [TriplePattern(s, p, o)], [TriplePattern(s, p, o)]),
        ViewDefinition("join-both", "join", ("left", "right"), [TriplePattern(s, vocab[0], x)],
                       [TriplePattern(s, vocab[0], o), TriplePattern(o, vocab[1], x)]),
        ViewDefinition("rev-right", "rev", ("right",), [TriplePattern(o, IRI("urn:inv"), s)],
                       [TriplePattern(s, vocab[2], o)]),
    ]
    dep = Deployment(tmp_path_factory.mktemp("ac7"),
                     graphs={g: canonical_serialize(ts) for g, ts in graphs.items()}, catalog=dump_catalog(defs))
    gw = dep.open()
    admin = ("admin", TOKENS["admin"])
    current = {g: set(ts) for g, ts in graphs.items()}
    failures = []
    bumps = 0
    for step in range(100):
        gid = rng.choice(["left", "right"])
        versions = {v: gw.catalog.views[v].version for v in gw.catalog.view_ids()}
        # toggle 1-3 triples drawn from a fixed universe, so every write changes the graph
        picks = set(random_triples(rng, vocab, rng.randint(1, 3)))
        rem = sorted(picks & current[gid], key=Triple.n3)
        ins = sorted(picks - current[gid], key=Triple.n3)
        resp = gw.handle_write(*admin, gid, inserts=ins, removes=rem)
        current[gid] = (current[gid] - set(rem)) | set(ins)
        for d in defs:
            snap = gw.catalog.get_view_snapshot(d.view_id)
            dependent = gid in d.source_graph_ids
            want_version = versions[d.view_id] + (1 if dependent else 0)
            expected = materialize_oracle(d.construct_template, d.where_bgp,
                                          [t for g in d.source_graph_ids for t in current[g]])
            bumps += dependent
            if resp.http_status != 200 or snap.version != want_version or snap.triples.triples() != expected:
                failures.append((step, d.view_id))
    gw.close()
    report(7, "view freshness", not failures,
           f"100 writes, {bumps} dependent-view reads checked (version +1 and oracle match), "
           f"{len(failures)} failures")


# -- 8 ------------------------------------------------------------------------

def test_ac8_round_trips(tmp_path_factory):
    checks = {}
    fixture = viewgate.load_fixture()
    doc = canonical_serialize(fixture)
    checks["fixture N-Triples"] = canonical_serialize(parse_ntriples(doc)) == doc and set(parse_ntriples(doc)) == fixture.triples()

    escapes = Graph("e", [
        Triple(IRI("urn:a"), IRI("urn:p"), Literal('tab\tquote"back\\slash\nnewline é \U0001F331')),
        Triple(IRI("urn:a"), IRI("urn:p"), Literal("x", lang="en-gb")),
        Triple(IRI("urn:a"), IRI("urn:p"), Literal("5", "http://www.w3.org/2001/XMLSchema#integer")),
    ])
    edoc = canonical_serialize(escapes)
    checks["escaped literals"] = canonical_serialize(parse_ntriples(edoc)) == edoc

    chain = fixture_chain(20)
    data = L.serialize_chain(chain)
    checks["20-block chain"] = L.serialize_chain(L.deserialize_chain(data)) == data
    checks["chain JSON export"] = L.serialize_chain(L.import_json(L.export_json(chain))) == data

    dep = Deployment(tmp_path_factory.mktemp("ac8"))
    gw = dep.open()
    gw.query("bob", TOKENS["bob"], SUBCLASS_QUERY)
    gw.close()
    on_disk = dep.chain_path.read_bytes()
    checks["gateway chain file"] = L.serialize_chain(L.deserialize_chain(on_disk)) == on_disk
    ok = all(checks.values())
    report(8, "round-trips", ok, ", ".join(f"{k} {'bit-exact' if v else 'DIFFERS'}" for k, v in checks.items()))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
