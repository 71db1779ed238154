"""Build a small access-control ledger, persist it, then flip one byte and watch verification fail."""

from viewgate import ledger as L

clock = iter(range(1_700_000_000, 1_800_000_000)).__next__
chain = L.genesis(["root"], clock())
ledger = L.Ledger(chain, block_size=2, clock=clock)
tx = ledger.make_tx

ledger.submit([
    tx(L.REGISTER_USER, "root", {"user": "ann"}),
    tx(L.REGISTER_USER, "root", {"user": "ben"}),
    tx(L.REGISTER_RESOURCE, "root", {"resource": "labels", "resource_kind": "view"}),
])
ledger.submit([tx(L.ASSIGN_PRIVILEGE, "root", {"role": "reader", "privilege": {"action": "READ", "resource": "labels"}})])
ledger.submit([tx(L.GRANT_ROLE, "root", {"user": "ann", "role": "reader"})])

for user in ("ann", "ben", "ann"):
    decision = L.check_access(chain.state, user, "READ", "labels")
    ledger.record(tx(L.ACCESS_RECORD, "root", {
        "user": user, "query_hash": "0" * 64, "view_ids": ["labels"], "decision": decision.label}))
ledger.flush()

# ben is not a super-user and holds no DELEGATE privilege: the contract rejects the whole block
try:
    ledger.submit([tx(L.GRANT_ROLE, "ben", {"user": "ben", "role": "reader"})])
except L.Unauthorized as e:
    print("rejected:", e.reason)

for block in chain:
    print(f"block {block.height}  {block.hash[:16]}  prev {block.header.prev_hash[:16]}  {len(block.txs)} tx")
print("state:", chain.state.to_json())

data = L.serialize_chain(chain)
print(f"{len(data)} bytes on disk, verify:", L.verify_bytes(data).to_json())

# turn ben's "deny" into something else in the record block
pos = data.rindex(b'"decision":"deny"') + len('"decision":"')
tampered = bytearray(data)
tampered[pos] ^= 0x20
print("after flipping byte", pos, "->", L.verify_bytes(bytes(tampered)).to_json())

# replay from bytes gives the same state the live chain holds
replayed = L.replay_state(L.deserialize_chain(data))
print("replay identical:", replayed.canonical_bytes() == chain.state.canonical_bytes())
