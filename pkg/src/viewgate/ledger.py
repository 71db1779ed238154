"""Hash-chained access-control ledger with fixed contract rules.

Transactions are hashed over their canonical bytes (UTF-8, key-sorted,
minified JSON of every field but ``tx_id``). A block header carries the
SHA-256 of the concatenated canonical bytes of its transactions and the
SHA-256 of the previous header; the genesis header additionally fixes the
super-user set. The access-control state is never stored: it is the fold
of all transactions from genesis.

Chain file layout (append-only)::

    file    := b"VGCHAIN1" record*
    record  := u32be(len(header)) header u32be(len(body)) body hash
    header  := canonical JSON object of the block header
    body    := canonical JSON array of transactions, tx_id included
    hash    := 64 lowercase hex ASCII bytes, SHA-256 of header

Decoding is strict: every JSON part must re-serialize to exactly the bytes
read, so any byte change surfaces either as a decode failure or as a hash
mismatch.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

REGISTER_USER = "REGISTER_USER"
REGISTER_RESOURCE = "REGISTER_RESOURCE"
GRANT_ROLE = "GRANT_ROLE"
REVOKE_ROLE = "REVOKE_ROLE"
ASSIGN_PRIVILEGE = "ASSIGN_PRIVILEGE"
REVOKE_PRIVILEGE = "REVOKE_PRIVILEGE"
ACCESS_RECORD = "ACCESS_RECORD"
WRITE_RECORD = "WRITE_RECORD"

TX_KINDS = (
    REGISTER_USER, REGISTER_RESOURCE, GRANT_ROLE, REVOKE_ROLE,
    ASSIGN_PRIVILEGE, REVOKE_PRIVILEGE, ACCESS_RECORD, WRITE_RECORD,
)
RECORD_KINDS = (ACCESS_RECORD, WRITE_RECORD)

READ = "READ"
WRITE = "WRITE"
DELEGATE = "DELEGATE"
ACTIONS = (READ, WRITE, DELEGATE)
# resource kind each action applies to
ACTION_RESOURCE = {READ: "view", WRITE: "graph", DELEGATE: "role"}

BLOCK_VERSION = 1
ZERO_HASH = "0" * 64
MAGIC = b"VGCHAIN1"


class LedgerError(Exception):
    pass


class TransactionError(LedgerError, ValueError):
    pass


class Unauthorized(LedgerError):
    def __init__(self, tx: "Transaction", reason: str):
        self.tx = tx
        self.reason = reason
        super().__init__(f"{tx.kind} by {tx.actor!r} rejected: {reason}")


class ChainDecodeError(LedgerError):
    def __init__(self, height: int, reason: str):
        self.height = height
        self.reason = reason
        super().__init__(f"height {height}: {reason}")


class InvalidChainError(LedgerError):
    def __init__(self, verification: "Verification"):
        self.verification = verification
        super().__init__(f"chain invalid at height {verification.height}: {verification.reason}")


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_str(x) -> bool:
    return isinstance(x, str) and x != ""


_HEX64 = re.compile(r"[0-9a-f]{64}")


def _is_hex64(x) -> bool:
    return isinstance(x, str) and _HEX64.fullmatch(x) is not None


@dataclass(frozen=True)
class Privilege:
    action: str
    resource: str

    def to_json(self) -> dict:
        return {"action": self.action, "resource": self.resource}

    @classmethod
    def from_json(cls, obj) -> "Privilege":
        if not isinstance(obj, dict) or set(obj) != {"action", "resource"}:
            raise TransactionError("privilege must be {action, resource}")
        if obj["action"] not in ACTIONS or not _is_str(obj["resource"]):
            raise TransactionError(f"bad privilege {obj!r}")
        return cls(obj["action"], obj["resource"])


def _check_decision(v):
    if v not in ("allow", "deny"):
        raise TransactionError("decision must be 'allow' or 'deny'")


def validate_payload(kind: str, payload) -> None:
    if not isinstance(payload, dict):
        raise TransactionError("payload must be an object")
    keys = set(payload)

    def need(*names):
        if keys != set(names):
            raise TransactionError(f"{kind} payload needs exactly {sorted(names)}, got {sorted(keys)}")

    if kind == REGISTER_USER:
        need("user")
        if not _is_str(payload["user"]):
            raise TransactionError("user must be a non-empty string")
    elif kind == REGISTER_RESOURCE:
        need("resource", "resource_kind")
        if not _is_str(payload["resource"]) or payload["resource_kind"] not in ("view", "graph"):
            raise TransactionError("resource must be a non-empty id of kind 'view' or 'graph'")
    elif kind in (GRANT_ROLE, REVOKE_ROLE):
        need("user", "role")
        if not (_is_str(payload["user"]) and _is_str(payload["role"])):
            raise TransactionError("user and role must be non-empty strings")
    elif kind in (ASSIGN_PRIVILEGE, REVOKE_PRIVILEGE):
        need("role", "privilege")
        if not _is_str(payload["role"]):
            raise TransactionError("role must be a non-empty string")
        Privilege.from_json(payload["privilege"])
    elif kind == ACCESS_RECORD:
        need("user", "query_hash", "view_ids", "decision")
        if not isinstance(payload["user"], str) or not _is_hex64(payload["query_hash"]):
            raise TransactionError("bad access record")
        if not isinstance(payload["view_ids"], list) or not all(_is_str(v) for v in payload["view_ids"]):
            raise TransactionError("view_ids must be a list of ids")
        _check_decision(payload["decision"])
    elif kind == WRITE_RECORD:
        need("user", "graph_id", "inserted_count", "removed_count", "decision")
        if not isinstance(payload["user"], str) or not isinstance(payload["graph_id"], str):
            raise TransactionError("bad write record")
        for k in ("inserted_count", "removed_count"):
            if not _is_int(payload[k]) or payload[k] < 0:
                raise TransactionError(f"{k} must be a non-negative integer")
        _check_decision(payload["decision"])
    else:
        raise TransactionError(f"unknown transaction kind {kind!r}")


@dataclass(frozen=True)
class Transaction:
    kind: str
    actor: str
    payload: dict
    timestamp: int
    tx_id: str = ""

    @classmethod
    def create(cls, kind: str, actor: str, payload: dict, timestamp: int) -> "Transaction":
        if kind not in TX_KINDS:
            raise TransactionError(f"unknown transaction kind {kind!r}")
        if not _is_str(actor):
            raise TransactionError("actor must be a non-empty string")
        if not _is_int(timestamp) or timestamp < 0:
            raise TransactionError("timestamp must be a non-negative integer")
        validate_payload(kind, payload)
        body = {"kind": kind, "actor": actor, "payload": payload, "timestamp": timestamp}
        # round-trip so the stored payload is a private, JSON-normal copy
        payload = json.loads(canonical_json(payload))
        return cls(kind, actor, payload, timestamp, sha256_hex(canonical_json(body)))

    def content(self) -> dict:
        return {"actor": self.actor, "kind": self.kind, "payload": self.payload, "timestamp": self.timestamp}

    def to_json(self) -> dict:
        d = self.content()
        d["tx_id"] = self.tx_id
        return d

    @classmethod
    def from_json(cls, obj) -> "Transaction":
        if not isinstance(obj, dict) or set(obj) != {"actor", "kind", "payload", "timestamp", "tx_id"}:
            raise TransactionError("transaction must have exactly actor, kind, payload, timestamp, tx_id")
        if obj["kind"] not in TX_KINDS or not _is_str(obj["actor"]) or not _is_int(obj["timestamp"]):
            raise TransactionError("bad transaction fields")
        if not _is_hex64(obj["tx_id"]):
            raise TransactionError("tx_id must be 64 lowercase hex characters")
        validate_payload(obj["kind"], obj["payload"])
        return cls(obj["kind"], obj["actor"], obj["payload"], obj["timestamp"], obj["tx_id"])

    @property
    def user(self) -> Optional[str]:
        return self.payload.get("user")


def canonical_tx_bytes(tx: Transaction) -> bytes:
    return canonical_json(tx.content())


def compute_tx_id(tx: Transaction) -> str:
    return sha256_hex(canonical_tx_bytes(tx))


def data_hash(txs: Sequence[Transaction]) -> str:
    h = hashlib.sha256()
    for tx in txs:
        h.update(canonical_tx_bytes(tx))
    return h.hexdigest()


@dataclass(frozen=True)
class BlockHeader:
    version: int
    height: int
    prev_hash: str
    timestamp: int
    data_hash: str
    super_users: Optional[Tuple[str, ...]] = None  # genesis only

    def to_json(self) -> dict:
        d = {
            "version": self.version,
            "height": self.height,
            "prev_hash": self.prev_hash,
            "timestamp": self.timestamp,
            "data_hash": self.data_hash,
        }
        if self.super_users is not None:
            d["super_users"] = list(self.super_users)
        return d

    @classmethod
    def from_json(cls, obj) -> "BlockHeader":
        base = {"version", "height", "prev_hash", "timestamp", "data_hash"}
        if not isinstance(obj, dict) or set(obj) not in (base, base | {"super_users"}):
            raise LedgerError("header has unexpected fields")
        for k in ("version", "height", "timestamp"):
            if not _is_int(obj[k]):
                raise LedgerError(f"header {k} must be an integer")
        if not (_is_hex64(obj["prev_hash"]) and _is_hex64(obj["data_hash"])):
            raise LedgerError("header hashes must be 64 lowercase hex characters")
        su = obj.get("super_users")
        if su is not None:
            if not isinstance(su, list) or not all(_is_str(u) for u in su):
                raise LedgerError("super_users must be a list of ids")
            su = tuple(su)
        return cls(obj["version"], obj["height"], obj["prev_hash"], obj["timestamp"], obj["data_hash"], su)

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.to_json())


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: Tuple[Transaction, ...]
    hash: str  # as recorded; verify_chain recomputes it

    @classmethod
    def seal(cls, header: BlockHeader, txs: Sequence[Transaction]) -> "Block":
        return cls(header, tuple(txs), sha256_hex(header.canonical_bytes()))

    @property
    def height(self) -> int:
        return self.header.height

    def to_json(self) -> dict:
        return {"hash": self.hash, "header": self.header.to_json(), "txs": [tx.to_json() for tx in self.txs]}


@dataclass
class AccessControlState:
    super_users: frozenset = frozenset()
    users: Set[str] = field(default_factory=set)
    resources: Dict[str, Set[str]] = field(default_factory=lambda: {"view": set(), "graph": set()})
    role_members: Dict[str, Set[str]] = field(default_factory=dict)
    role_privileges: Dict[str, Set[Privilege]] = field(default_factory=dict)

    def copy(self) -> "AccessControlState":
        return AccessControlState(
            self.super_users,
            set(self.users),
            {k: set(v) for k, v in self.resources.items()},
            {k: set(v) for k, v in self.role_members.items()},
            {k: set(v) for k, v in self.role_privileges.items()},
        )

    def known(self, user: str) -> bool:
        return user in self.users or user in self.super_users

    def roles_of(self, user: str) -> Set[str]:
        return {r for r, members in self.role_members.items() if user in members}

    def to_json(self) -> dict:
        return {
            "super_users": sorted(self.super_users),
            "users": sorted(self.users),
            "resources": {k: sorted(v) for k, v in sorted(self.resources.items())},
            "role_members": {r: sorted(m) for r, m in sorted(self.role_members.items()) if m},
            "role_privileges": {
                r: sorted(([p.action, p.resource] for p in ps))
                for r, ps in sorted(self.role_privileges.items()) if ps
            },
        }

    def canonical_bytes(self) -> bytes:
        return canonical_json(self.to_json())


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str = ""

    def __bool__(self):
        return self.allowed

    @property
    def label(self) -> str:
        return "allow" if self.allowed else "deny"


ALLOW = Decision(True)


def deny(reason: str) -> Decision:
    return Decision(False, reason)


def check_access(state: AccessControlState, user: str, action: str, resource: str) -> Decision:
    """Allow iff ``user`` is a super-user or some role of theirs holds (action, resource)."""
    if user in state.super_users:
        return ALLOW
    if user not in state.users:
        return deny(f"unknown user {user!r}")
    wanted = Privilege(action, resource)
    for role, members in state.role_members.items():
        if user in members and wanted in state.role_privileges.get(role, ()):
            return ALLOW
    return deny(f"{user!r} holds no role with {action} on {resource!r}")


def authorize_tx(state: AccessControlState, tx: Transaction) -> Decision:
    """The contract rule function: may ``tx`` enter the ledger given ``state``?"""
    if not state.known(tx.actor):
        return deny(f"unknown actor {tx.actor!r}")
    kind, p = tx.kind, tx.payload
    is_super = tx.actor in state.super_users
    if kind in RECORD_KINDS:
        return ALLOW
    if kind in (REGISTER_USER, REGISTER_RESOURCE):
        return ALLOW if is_super else deny("only super-users register users and resources")
    if kind in (GRANT_ROLE, REVOKE_ROLE):
        if not state.known(p["user"]):
            return deny(f"unknown user {p['user']!r}")
        if is_super or check_access(state, tx.actor, DELEGATE, p["role"]):
            return ALLOW
        return deny(f"{tx.actor!r} may not delegate role {p['role']!r}")
    if kind in (ASSIGN_PRIVILEGE, REVOKE_PRIVILEGE):
        if not is_super:
            return deny("only super-users assign or revoke privileges")
        priv = Privilege.from_json(p["privilege"])
        rkind = ACTION_RESOURCE[priv.action]
        if kind == ASSIGN_PRIVILEGE and rkind != "role" and priv.resource not in state.resources[rkind]:
            return deny(f"{priv.action} needs a registered {rkind}; {priv.resource!r} is not one")
        return ALLOW
    return deny(f"unknown transaction kind {kind!r}")


def apply_tx(state: AccessControlState, tx: Transaction) -> None:
    """Fold one transaction into ``state`` in place. Records leave it untouched."""
    p = tx.payload
    if tx.kind == REGISTER_USER:
        state.users.add(p["user"])
    elif tx.kind == REGISTER_RESOURCE:
        state.resources[p["resource_kind"]].add(p["resource"])
    elif tx.kind == GRANT_ROLE:
        state.role_members.setdefault(p["role"], set()).add(p["user"])
    elif tx.kind == REVOKE_ROLE:
        state.role_members.get(p["role"], set()).discard(p["user"])
    elif tx.kind == ASSIGN_PRIVILEGE:
        state.role_privileges.setdefault(p["role"], set()).add(Privilege.from_json(p["privilege"]))
    elif tx.kind == REVOKE_PRIVILEGE:
        state.role_privileges.get(p["role"], set()).discard(Privilege.from_json(p["privilege"]))


def _now() -> int:
    return int(time.time())


class Chain:
    """Blocks from genesis to tip, plus the state replayed through the tip."""

    def __init__(self, blocks: Sequence[Block], state: Optional[AccessControlState] = None):
        self.blocks: List[Block] = list(blocks)
        self._state = state

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.height

    @property
    def super_users(self) -> Tuple[str, ...]:
        return self.blocks[0].header.super_users or ()

    @property
    def state(self) -> AccessControlState:
        if self._state is None:
            self._state = replay_state(self)
        return self._state

    def transactions(self) -> Iterable[Tuple[int, Transaction]]:
        for b in self.blocks:
            for tx in b.txs:
                yield b.height, tx


def genesis(super_users: Sequence[str], timestamp: Optional[int] = None) -> Chain:
    su = tuple(sorted(set(super_users)))
    if not su or not all(_is_str(u) for u in su):
        raise LedgerError("genesis needs at least one super-user")
    ts = _now() if timestamp is None else timestamp
    header = BlockHeader(BLOCK_VERSION, 0, ZERO_HASH, ts, data_hash(()), su)
    return Chain([Block.seal(header, ())], AccessControlState(frozenset(su)))


def append_block(chain: Chain, txs: Sequence[Transaction], timestamp: Optional[int] = None) -> Block:
    """Authorize ``txs`` in order against the tip state and append them as one block.

    All or nothing: one unauthorized transaction rejects the whole batch.
    """
    if not txs:
        raise LedgerError("cannot append an empty block")
    state = chain.state.copy()
    for tx in txs:
        if tx.tx_id != compute_tx_id(tx):
            raise TransactionError(f"tx_id mismatch for {tx.kind}")
        decision = authorize_tx(state, tx)
        if not decision:
            raise Unauthorized(tx, decision.reason)
        apply_tx(state, tx)
    ts = max(tx.timestamp for tx in txs) if timestamp is None else timestamp
    tip = chain.tip
    header = BlockHeader(BLOCK_VERSION, tip.height + 1, tip.hash, ts, data_hash(txs))
    block = Block.seal(header, txs)
    chain.blocks.append(block)
    chain._state = state
    return block


@dataclass(frozen=True)
class Verification:
    ok: bool
    height: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        if self.ok:
            return {"ok": True}
        return {"ok": False, "height": self.height, "reason": self.reason}


OK = Verification(True)


def _walk(blocks: Sequence[Block]) -> Tuple[Verification, Optional[AccessControlState]]:
    if not blocks:
        return Verification(False, 0, "empty chain"), None
    state: Optional[AccessControlState] = None
    prev: Optional[Block] = None
    for i, b in enumerate(blocks):
        h = b.header
        fail = lambda reason: (Verification(False, i, reason), None)  # noqa: E731
        if sha256_hex(h.canonical_bytes()) != b.hash:
            return fail("block hash mismatch")
        if i == 0:
            if h.prev_hash != ZERO_HASH:
                return fail("genesis prev_hash must be all zeros")
        elif h.prev_hash != prev.hash:
            return fail("prev_hash does not link to the previous block")
        if data_hash(b.txs) != h.data_hash:
            return fail("data_hash mismatch")
        if h.height != i:
            return fail(f"height {h.height} out of sequence")
        if h.version != BLOCK_VERSION:
            return fail(f"unsupported block version {h.version}")
        for tx in b.txs:
            if compute_tx_id(tx) != tx.tx_id:
                return fail("tx_id mismatch")
        if i == 0:
            if b.txs:
                return fail("genesis block must be empty")
            if not h.super_users:
                return fail("genesis lists no super-users")
            state = AccessControlState(frozenset(h.super_users))
            prev = b
            continue
        if h.super_users is not None:
            return fail("only genesis may fix super-users")
        if not b.txs:
            return fail("empty block")
        for tx in b.txs:
            decision = authorize_tx(state, tx)
            if not decision:
                return fail(f"rule violation in {tx.kind} {tx.tx_id[:12]}: {decision.reason}")
            apply_tx(state, tx)
        prev = b
    return OK, state


def verify_chain(chain) -> Verification:
    """First failure, checking per block: hash linkage, data hash, height, tx ids, then contract rules."""
    blocks = chain.blocks if isinstance(chain, Chain) else chain
    return _walk(blocks)[0]


def replay_state(chain) -> AccessControlState:
    blocks = chain.blocks if isinstance(chain, Chain) else chain
    result, state = _walk(blocks)
    if not result:
        raise InvalidChainError(result)
    return state


# -- persistence --------------------------------------------------------------

def encode_block(block: Block) -> bytes:
    header = block.header.canonical_bytes()
    body = canonical_json([tx.to_json() for tx in block.txs])
    return (
        struct.pack(">I", len(header)) + header
        + struct.pack(">I", len(body)) + body
        + block.hash.encode("ascii")
    )


def serialize_chain(chain: Chain) -> bytes:
    return MAGIC + b"".join(encode_block(b) for b in chain.blocks)


def _strict_json(raw: bytes, height: int, what: str):
    def no_dupes(pairs):
        d = dict(pairs)
        if len(d) != len(pairs):
            raise ValueError("duplicate key")
        return d

    def no_constants(name):
        raise ValueError(f"non-finite number {name}")

    try:
        obj = json.loads(raw.decode("utf-8"), object_pairs_hook=no_dupes, parse_constant=no_constants)
    except (UnicodeDecodeError, ValueError) as e:
        raise ChainDecodeError(height, f"{what} is not valid JSON: {e}") from None
    if canonical_json(obj) != raw:
        raise ChainDecodeError(height, f"{what} is not in canonical form")
    return obj


def deserialize_chain(data: bytes) -> Chain:
    if not data.startswith(MAGIC):
        raise ChainDecodeError(0, "bad magic")
    pos = len(MAGIC)
    blocks = []
    n = len(data)

    def take(count: int, height: int, what: str) -> bytes:
        nonlocal pos
        if pos + count > n:
            raise ChainDecodeError(height, f"truncated {what}")
        chunk = data[pos:pos + count]
        pos += count
        return chunk

    while pos < n:
        height = len(blocks)
        (hlen,) = struct.unpack(">I", take(4, height, "header length"))
        header_raw = take(hlen, height, "header")
        (blen,) = struct.unpack(">I", take(4, height, "body length"))
        body_raw = take(blen, height, "body")
        stored = take(64, height, "block hash").decode("ascii", errors="replace")
        header_obj = _strict_json(header_raw, height, "header")
        body_obj = _strict_json(body_raw, height, "body")
        try:
            header = BlockHeader.from_json(header_obj)
            if not isinstance(body_obj, list):
                raise LedgerError("body must be a list")
            txs = tuple(Transaction.from_json(t) for t in body_obj)
        except LedgerError as e:
            raise ChainDecodeError(height, str(e)) from None
        if not _is_hex64(stored):
            raise ChainDecodeError(height, "block hash must be 64 lowercase hex characters")
        blocks.append(Block(header, txs, stored))
    if not blocks:
        raise ChainDecodeError(0, "no blocks")
    return Chain(blocks)


def verify_bytes(data: bytes) -> Verification:
    """Decode and verify a persisted chain; decode problems are reported as failures."""
    try:
        chain = deserialize_chain(data)
    except ChainDecodeError as e:
        return Verification(False, e.height, e.reason)
    return verify_chain(chain)


def export_json(chain: Chain) -> str:
    return canonical_json({"blocks": [b.to_json() for b in chain.blocks]}).decode("utf-8")


def import_json(doc: str) -> Chain:
    data = json.loads(doc)
    blocks = []
    for i, b in enumerate(data["blocks"]):
        try:
            blocks.append(Block(
                BlockHeader.from_json(b["header"]),
                tuple(Transaction.from_json(t) for t in b["txs"]),
                b["hash"],
            ))
        except (LedgerError, KeyError, TypeError) as e:
            raise ChainDecodeError(i, str(e)) from None
    return Chain(blocks)


class ChainFile:
    """Append-only on-disk chain. The caller is the only appender."""

    def __init__(self, path: str):
        self.path = path

    def exists(self) -> bool:
        return os.path.exists(self.path) and os.path.getsize(self.path) > 0

    def read_bytes(self) -> bytes:
        with open(self.path, "rb") as fh:
            return fh.read()

    def load(self) -> Chain:
        return deserialize_chain(self.read_bytes())

    def create(self, chain: Chain) -> None:
        tmp = self.path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(serialize_chain(chain))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)

    def append(self, block: Block) -> None:
        with open(self.path, "ab") as fh:
            fh.write(encode_block(block))
            fh.flush()
            os.fsync(fh.fileno())


class Ledger:
    """A chain bound to an optional file, with a buffer of pending decision records.

    Records (ACCESS_RECORD / WRITE_RECORD) are buffered and written out in
    blocks of at most ``block_size``; any other transaction first flushes the
    buffer and then goes into a block of its own.
    """

    def __init__(self, chain: Chain, file: Optional[ChainFile] = None, block_size: int = 100,
                 clock: Callable[[], int] = _now):
        if block_size < 1:
            raise ValueError("block_size must be positive")
        self.chain = chain
        self.file = file
        self.block_size = block_size
        self.clock = clock
        self.pending: List[Transaction] = []

    @property
    def state(self) -> AccessControlState:
        return self.chain.state

    def make_tx(self, kind: str, actor: str, payload: dict) -> Transaction:
        return Transaction.create(kind, actor, payload, self.clock())

    def _append(self, txs: Sequence[Transaction]) -> Block:
        block = append_block(self.chain, txs)
        if self.file is not None:
            try:
                self.file.append(block)
            except OSError:
                self.chain.blocks.pop()
                self.chain._state = None
                raise
        return block

    def submit(self, txs: Sequence[Transaction]) -> Block:
        self.flush()
        return self._append(txs)

    def record(self, tx: Transaction) -> str:
        if tx.kind not in RECORD_KINDS:
            raise LedgerError("only decision records can be buffered")
        self.pending.append(tx)
        if len(self.pending) >= self.block_size:
            self.flush()
        return tx.tx_id

    def flush(self) -> Optional[Block]:
        last = None
        while self.pending:
            batch = self.pending[:self.block_size]
            last = self._append(batch)
            del self.pending[:len(batch)]
        return last
