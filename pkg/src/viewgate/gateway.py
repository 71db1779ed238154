"""The coordinator: authenticate, consult the ledger state, answer from authorized views, record every decision.

Users never see source graphs. A query runs over the union of the view
snapshots the caller may READ (or the subset they name explicitly), so
restricting the triple source is how queries get reformulated per
credential. Every handled query or write leaves exactly one
ACCESS_RECORD / WRITE_RECORD on the ledger, whatever its outcome.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import os
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Union

from . import ledger as L
from .config import Config
from .ntriples import NTriplesError, canonical_serialize, load_graph, parse_ntriples
from .query import QuerySyntaxError, ResultSet, evaluate, parse_query, serialize_results
from .rdf import Graph, Triple, UnionSource
from .views import UnknownViewError, ViewCatalog, ViewDefinition, ViewError, dump_catalog, parse_catalog

log = logging.getLogger(__name__)


class GatewayError(Exception):
    status = 500

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)


class AuthenticationError(GatewayError):
    status = 401

    def __init__(self):
        # one opaque message whatever went wrong
        super().__init__("authentication failed")


class BadRequest(GatewayError):
    status = 400


class Forbidden(GatewayError):
    status = 403


class NotFound(GatewayError):
    status = 404


class LedgerUnavailable(GatewayError):
    status = 503


@dataclass(frozen=True)
class Principal:
    user: str
    super_user: bool = False


_DUMMY = b"0" * 64


def authenticate(credentials: Mapping[str, str], user: str, token: str, super_users: Iterable[str] = ()) -> Principal:
    """Check a (user, token) pair in constant time; unknown users and bad tokens fail identically."""
    expected = credentials.get(user) if isinstance(user, str) else None
    given = token.encode("utf-8") if isinstance(token, str) else b""
    ok = hmac.compare_digest(given, expected.encode("utf-8") if expected else _DUMMY)
    if not (ok and expected and given):
        raise AuthenticationError()
    return Principal(user, user in set(super_users))


def query_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class QueryRequest:
    user: str
    token: str
    query: str
    view_ids: Optional[Sequence[str]] = None
    format: str = "sparql-json"


@dataclass
class QueryResponse:
    status: str  # ok | denied | error
    http_status: int
    view_ids: List[str] = field(default_factory=list)
    document: str = ""
    tx_id: Optional[str] = None
    error: Optional[str] = None
    results: Optional[ResultSet] = None

    def to_json(self) -> dict:
        d = {"status": self.status, "views": self.view_ids, "result": self.document, "tx_id": self.tx_id}
        if self.error:
            d["error"] = self.error
        return d


@dataclass
class WriteResponse:
    status: str
    http_status: int
    graph_id: str
    inserted: int = 0
    removed: int = 0
    tx_id: Optional[str] = None
    error: Optional[str] = None
    stale_views: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        d = {
            "status": self.status, "graph": self.graph_id, "inserted_count": self.inserted,
            "removed_count": self.removed, "tx_id": self.tx_id, "stale_views": self.stale_views,
        }
        if self.error:
            d["error"] = self.error
        return d


def _write_atomic(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class Gateway:
    """Store, view catalog and ledger behind one mutation lock."""

    def __init__(self, config: Config, clock=None):
        self.config = config
        self._lock = threading.RLock()
        self.store: Dict[str, Graph] = {}
        for gid, path in config.graphs.items():
            if path and os.path.exists(path):
                with open(path, encoding="utf-8") as fh:
                    self.store[gid] = load_graph(fh.read(), gid, config.prefixes)
            else:
                self.store[gid] = Graph(gid)
        self.catalog = ViewCatalog(self.store)
        if config.catalog and os.path.exists(config.catalog):
            with open(config.catalog, encoding="utf-8") as fh:
                for d in parse_catalog(fh.read(), config.prefixes):
                    self.catalog.define_view(d)
        self.chain_file = L.ChainFile(config.chain)
        self.failure: Optional[L.Verification] = None
        self.ledger: Optional[L.Ledger] = None
        kwargs = {} if clock is None else {"clock": clock}
        if self.chain_file.exists():
            result = L.verify_bytes(self.chain_file.read_bytes())
            if not result:
                log.error("chain file %s failed verification at height %s: %s",
                          config.chain, result.height, result.reason)
                self.failure = result
                return
            chain = self.chain_file.load()
            if sorted(chain.super_users) != sorted(set(config.super_users)):
                raise GatewayError("configured super-users differ from the chain's genesis")
        else:
            chain = L.genesis(config.super_users, (clock or L._now)())
            self.chain_file.create(chain)
        self.ledger = L.Ledger(chain, self.chain_file, config.block_size, **kwargs)
        self._bootstrap()

    @classmethod
    def open(cls, path: Optional[str] = None, clock=None) -> "Gateway":
        from .config import load_config
        return cls(load_config(path), clock=clock)

    # -- plumbing -------------------------------------------------------------

    def _require_ledger(self) -> L.Ledger:
        if self.ledger is None:
            raise LedgerUnavailable(
                f"ledger failed verification at height {self.failure.height}: {self.failure.reason}")
        return self.ledger

    def _bootstrap(self) -> None:
        """Register configured users, graphs and views the chain does not know yet."""
        ledger = self.ledger
        state = ledger.state
        actor = self.config.node_actor
        txs = []
        for user in sorted(self.config.credentials):
            if user not in state.super_users and user not in state.users:
                txs.append(ledger.make_tx(L.REGISTER_USER, actor, {"user": user}))
        for gid in sorted(self.store):
            if gid not in state.resources["graph"]:
                txs.append(ledger.make_tx(L.REGISTER_RESOURCE, actor, {"resource": gid, "resource_kind": "graph"}))
        for vid in self.catalog.view_ids():
            if vid not in state.resources["view"]:
                txs.append(ledger.make_tx(L.REGISTER_RESOURCE, actor, {"resource": vid, "resource_kind": "view"}))
        if txs:
            ledger.submit(txs)

    def authenticate(self, user: str, token: str) -> Principal:
        return authenticate(self.config.credentials, user, token, self.config.super_users)

    def _record(self, kind: str, payload: dict) -> str:
        ledger = self._require_ledger()
        return ledger.record(ledger.make_tx(kind, self.config.node_actor, payload))

    def _record_access(self, user, qhash: str, view_ids: Sequence[str], decision: str) -> str:
        return self._record(L.ACCESS_RECORD, {
            "user": user if isinstance(user, str) else "",
            "query_hash": qhash,
            "view_ids": list(view_ids),
            "decision": decision,
        })

    def _record_write(self, user, graph_id, inserted: int, removed: int, decision: str) -> str:
        return self._record(L.WRITE_RECORD, {
            "user": user if isinstance(user, str) else "",
            "graph_id": graph_id if isinstance(graph_id, str) else "",
            "inserted_count": inserted,
            "removed_count": removed,
            "decision": decision,
        })

    def flush(self) -> None:
        with self._lock:
            if self.ledger is not None:
                self.ledger.flush()

    def close(self) -> None:
        self.flush()

    def reload_credentials(self) -> None:
        """Re-read the credential table (token rotation) and register any new users."""
        from .config import load_config
        if self.config.path is None:
            return
        fresh = load_config(self.config.path)
        with self._lock:
            self.config.credentials = fresh.credentials
            if self.ledger is not None:
                self._bootstrap()

    @property
    def state(self) -> L.AccessControlState:
        return self._require_ledger().state

    def authorized_views(self, user: str) -> List[str]:
        state = self.state
        return [v for v in self.catalog.view_ids() if L.check_access(state, user, L.READ, v)]

    # -- queries ----------------------------------------------------------------

    def handle_query(self, req: QueryRequest) -> QueryResponse:
        qhash = query_hash(req.query if isinstance(req.query, str) else "")
        with self._lock:
            self._require_ledger()
            try:
                principal = self.authenticate(req.user, req.token)
            except AuthenticationError as e:
                tx = self._record_access(req.user, qhash, [], "deny")
                return QueryResponse("error", 401, tx_id=tx, error=e.message)
            user = principal.user
            try:
                if req.format not in ("csv", "sparql-json"):
                    raise BadRequest(f"unsupported result format {req.format!r}")
                query = parse_query(req.query, self.config.prefixes)
            except (QuerySyntaxError, BadRequest) as e:
                tx = self._record_access(user, qhash, [], "deny")
                return QueryResponse("error", 400, tx_id=tx, error=str(e))
            state = self.state
            if req.view_ids:
                views = sorted(set(req.view_ids))
                unknown = [v for v in views if v not in self.catalog]
                if unknown:
                    tx = self._record_access(user, qhash, views, "deny")
                    return QueryResponse("error", 404, views, tx_id=tx, error=f"unknown view {unknown[0]!r}")
                refused = [v for v in views if not L.check_access(state, user, L.READ, v)]
                if refused:
                    tx = self._record_access(user, qhash, views, "deny")
                    return QueryResponse("denied", 403, views, tx_id=tx,
                                         error=f"no READ privilege on view {refused[0]!r}")
            else:
                views = self.authorized_views(user)
                if not views:
                    tx = self._record_access(user, qhash, [], "deny")
                    return QueryResponse("denied", 403, [], tx_id=tx, error="no readable views")
            snapshots = [self.catalog.get_view_snapshot(v) for v in views]
            tx = self._record_access(user, qhash, views, "allow")
        # snapshots are frozen, so evaluation runs outside the lock
        results = evaluate(query, UnionSource(s.triples for s in snapshots))
        return QueryResponse("ok", 200, views, serialize_results(results, req.format), tx, results=results)

    def query(self, user: str, token: str, text: str, view_ids=None, format: str = "sparql-json") -> QueryResponse:
        return self.handle_query(QueryRequest(user, token, text, view_ids, format))

    # -- writes -----------------------------------------------------------------

    def handle_write(self, user: str, token: str, graph_id: str,
                     inserts: Union[str, Sequence[Triple]] = (),
                     removes: Union[str, Sequence[Triple]] = ()) -> WriteResponse:
        """Apply removes then inserts to one graph if the caller holds WRITE on it.

        ``inserts``/``removes`` are triples or N-Triples text. The new graph is
        persisted before it replaces the old one, so a failed write changes nothing.
        """
        with self._lock:
            self._require_ledger()
            try:
                principal = self.authenticate(user, token)
            except AuthenticationError as e:
                tx = self._record_write(user, graph_id, 0, 0, "deny")
                return WriteResponse("error", 401, str(graph_id), tx_id=tx, error=e.message)
            try:
                ins = parse_ntriples(inserts) if isinstance(inserts, str) else list(inserts)
                rem = parse_ntriples(removes) if isinstance(removes, str) else list(removes)
                if not all(isinstance(t, Triple) for t in ins + rem):
                    raise BadRequest("inserts and removes must be triples")
            except (NTriplesError, BadRequest) as e:
                tx = self._record_write(principal.user, graph_id, 0, 0, "deny")
                return WriteResponse("error", 400, str(graph_id), tx_id=tx, error=str(e))
            if graph_id not in self.store:
                tx = self._record_write(principal.user, graph_id, 0, 0, "deny")
                return WriteResponse("error", 404, str(graph_id), tx_id=tx, error=f"unknown graph {graph_id!r}")
            decision = L.check_access(self.state, principal.user, L.WRITE, graph_id)
            if not decision:
                tx = self._record_write(principal.user, graph_id, 0, 0, "deny")
                return WriteResponse("denied", 403, graph_id, tx_id=tx, error=decision.reason)
            updated = self.store[graph_id].copy()
            removed = sum(updated.remove(t) for t in rem)
            inserted = sum(updated.insert(t) for t in ins)
            stale: List[str] = []
            if inserted or removed:
                path = self.config.graphs.get(graph_id)
                if path:
                    _write_atomic(path, canonical_serialize(updated))
                self.store[graph_id] = updated
                stale = self.catalog.mark_stale(graph_id)
            tx = self._record_write(principal.user, graph_id, inserted, removed, "allow")
            return WriteResponse("ok", 200, graph_id, inserted, removed, tx, stale_views=stale)

    # -- administration -----------------------------------------------------------

    def _admin_tx(self, actor: str, token: str, grant: bool, kind: str, payload: dict) -> str:
        principal = self.authenticate(actor, token)
        if not isinstance(payload, dict):
            raise BadRequest("payload must be an object")
        if kind == "role":
            tx_kind = L.GRANT_ROLE if grant else L.REVOKE_ROLE
            body = {"user": payload.get("user"), "role": payload.get("role")}
        elif kind == "privilege":
            tx_kind = L.ASSIGN_PRIVILEGE if grant else L.REVOKE_PRIVILEGE
            priv = payload.get("privilege") or {"action": payload.get("action"), "resource": payload.get("resource")}
            body = {"role": payload.get("role"), "privilege": priv}
        else:
            raise BadRequest(f"kind must be 'role' or 'privilege', not {kind!r}")
        with self._lock:
            ledger = self._require_ledger()
            try:
                tx = ledger.make_tx(tx_kind, principal.user, body)
            except L.TransactionError as e:
                raise BadRequest(str(e)) from None
            try:
                ledger.submit([tx])
            except L.Unauthorized as e:
                raise Forbidden(e.reason) from None
            return tx.tx_id

    def admin_grant(self, actor: str, token: str, kind: str, payload: dict) -> str:
        return self._admin_tx(actor, token, True, kind, payload)

    def admin_revoke(self, actor: str, token: str, kind: str, payload: dict) -> str:
        return self._admin_tx(actor, token, False, kind, payload)

    def define_views(self, actor: str, token: str, definitions: Sequence[ViewDefinition]) -> List[str]:
        """Add views to the catalog, register them on the ledger and persist the catalog file."""
        principal = self.authenticate(actor, token)
        if not principal.super_user:
            raise Forbidden("only super-users define views")
        with self._lock:
            ledger = self._require_ledger()
            probe = ViewCatalog(self.store)
            probe.definitions = dict(self.catalog.definitions)
            for d in definitions:
                try:
                    probe.validate(d)
                except ViewError as e:
                    raise BadRequest(str(e)) from None
                probe.definitions[d.view_id] = d
            txs = [
                ledger.make_tx(L.REGISTER_RESOURCE, principal.user, {"resource": d.view_id, "resource_kind": "view"})
                for d in definitions if d.view_id not in ledger.state.resources["view"]
            ]
            if txs:
                ledger.submit(txs)
            for d in definitions:
                self.catalog.define_view(d)
            if self.config.catalog:
                all_defs = [self.catalog.definitions[v] for v in self.catalog.view_ids()]
                _write_atomic(self.config.catalog, dump_catalog(all_defs))
            return [d.view_id for d in definitions]

    def view_metadata(self) -> List[Dict[str, str]]:
        return self.catalog.metadata()

    # -- audit ------------------------------------------------------------------------

    def _auditor(self, actor: str, token: str) -> Principal:
        principal = self.authenticate(actor, token)
        if not principal.super_user:
            raise Forbidden("audit requires a super-user")
        return principal

    def audit_verify(self, actor: str, token: str) -> L.Verification:
        self._auditor(actor, token)
        with self._lock:
            if self.ledger is not None:
                self.ledger.flush()
            return L.verify_bytes(self.chain_file.read_bytes())

    def audit_list(self, actor: str, token: str, user: Optional[str] = None, kind: Optional[str] = None,
                   from_height: Optional[int] = None, to_height: Optional[int] = None) -> List[dict]:
        self._auditor(actor, token)
        with self._lock:
            ledger = self._require_ledger()
            ledger.flush()
            out = []
            for height, tx in ledger.chain.transactions():
                if from_height is not None and height < from_height:
                    continue
                if to_height is not None and height > to_height:
                    continue
                if kind is not None and tx.kind != kind:
                    continue
                if user is not None and tx.payload.get("user") != user and tx.actor != user:
                    continue
                summary = {"height": height, "tx_id": tx.tx_id, "kind": tx.kind, "actor": tx.actor,
                           "timestamp": tx.timestamp}
                for key in ("user", "role", "decision", "graph_id", "view_ids", "resource"):
                    if key in tx.payload:
                        summary[key] = tx.payload[key]
                if "privilege" in tx.payload:
                    summary["privilege"] = tx.payload["privilege"]
                out.append(summary)
            return out

    def audit_export(self, actor: str, token: str) -> str:
        self._auditor(actor, token)
        with self._lock:
            ledger = self._require_ledger()
            ledger.flush()
            return L.export_json(ledger.chain)
