"""End to end: a deployment with two analysts who see different views of the same ontology."""

import json
import tempfile
from pathlib import Path

import viewgate
from viewgate.config import new_token
from viewgate.gateway import Gateway

root = Path(tempfile.mkdtemp(prefix="viewgate-demo-"))
(root / "graphs").mkdir()
(root / "graphs" / "arabidopsis.nt").write_text(viewgate.fixture_text())
(root / "views.json").write_text(viewgate.fixture_catalog())
tokens = {u: new_token() for u in ("curator", "ana", "ben")}
(root / "viewgate.json").write_text(json.dumps({
    "graphs": {"arabidopsis": "graphs/arabidopsis.nt"},
    "catalog": "views.json",
    "credentials": tokens,
    "super_users": ["curator"],
    "chain": "chain.bin",
}))

gw = Gateway.open(str(root / "viewgate.json"))
print("views:", [v["id"] for v in gw.view_metadata()])

cur = ("curator", tokens["curator"])
gw.admin_grant(*cur, "privilege", {"role": "taxonomist", "action": "READ", "resource": "subclass-edges"})
for view in ("subclass-edges", "class-labels"):
    gw.admin_grant(*cur, "privilege", {"role": "editor", "action": "READ", "resource": view})
gw.admin_grant(*cur, "privilege", {"role": "editor", "action": "WRITE", "resource": "arabidopsis"})
gw.admin_grant(*cur, "role", {"user": "ana", "role": "taxonomist"})
gw.admin_grant(*cur, "role", {"user": "ben", "role": "editor"})

# same text, different answers: each user's query runs only over views they may read
text = "SELECT ?s ?o WHERE { ?s ?p ?o }"
for user in ("ana", "ben"):
    r = gw.query(user, tokens[user], text)
    print(f"{user}: {len(r.results)} rows from {r.view_ids}")

print("wrong token ->", gw.query("ana", "0" * 64, text).http_status)
print("ana names a view she lacks ->", gw.query("ana", tokens["ana"], text, view_ids=["class-labels"]).http_status)

# a write by ben refreshes every view built on the graph
w = gw.handle_write("ben", tokens["ben"], "arabidopsis", inserts=(
    f"<{viewgate.FIXTURE_NS}DroughtTolerance> <http://www.w3.org/2000/01/rdf-schema#subClassOf> "
    f"<{viewgate.FIXTURE_NS}Tolerance> .\n"))
print("write:", w.to_json())
r = gw.query("ana", tokens["ana"], "SELECT ?c WHERE { ?c rdfs:subClassOf :Tolerance }")
print("ana now sees:", [t.value.removeprefix(viewgate.FIXTURE_NS) for t in r.results.column("c")])

for rec in gw.audit_list(*cur, kind="ACCESS_RECORD"):
    print(f"  h{rec['height']} {rec['user'] or '?':8} {rec['decision']:5} {rec['view_ids']}")
print("verify:", gw.audit_verify(*cur).to_json())
gw.close()

# a restart replays the chain to the same state
again = Gateway.open(str(root / "viewgate.json"))
print("restart state identical:", again.state.canonical_bytes() == gw.state.canonical_bytes())
print("files in", root)
