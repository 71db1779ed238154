"""HTTP front end for a Gateway (stdlib ``http.server``; put TLS in a proxy in front).

Routes, all bodies UTF-8 JSON:

    POST /query                {user, token, query, views?, format?}
    POST /graphs/{id}/write    {user, token, inserts, removes}   N-Triples text or list of lines
    POST /admin/grant          {actor, token, kind: role|privilege, payload}
    POST /admin/revoke         same shape as grant
    GET  /audit/verify         credentials in X-Viewgate-User / X-Viewgate-Token headers
    GET  /audit/txs?user=&kind=&from=&to=
    GET  /audit/export
    GET  /views                public: ids and names only

Status codes: 200 ok, 400 parse/malformed, 401 authentication, 403 denied,
404 unknown resource, 503 ledger failed verification.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Tuple
from urllib.parse import parse_qs, unquote, urlsplit

from .gateway import BadRequest, Gateway, GatewayError, NotFound, QueryRequest

log = logging.getLogger(__name__)

USER_HEADER = "X-Viewgate-User"
TOKEN_HEADER = "X-Viewgate-Token"
MAX_BODY = 16 * 1024 * 1024


def _lines(value) -> str:
    if value is None:
        return ""
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return "\n".join(value)
    if isinstance(value, str):
        return value
    raise BadRequest("inserts/removes must be N-Triples text or a list of lines")


def _int_param(params, name) -> Optional[int]:
    if name not in params:
        return None
    try:
        return int(params[name][0])
    except ValueError:
        raise BadRequest(f"query parameter {name!r} must be an integer") from None


class Handler(BaseHTTPRequestHandler):
    server_version = "viewgate"
    gateway: Gateway  # set on the subclass built by make_server

    def log_message(self, format, *args):
        log.info("%s %s", self.address_string(), format % args)

    def _send(self, status: int, body, content_type: str = "application/json; charset=utf-8"):
        data = body if isinstance(body, bytes) else json.dumps(body, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise BadRequest("request body too large")
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw.decode("utf-8") or "{}")
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise BadRequest(f"body is not JSON: {e}") from None
        if not isinstance(data, dict):
            raise BadRequest("body must be a JSON object")
        return data

    def _creds(self) -> Tuple[str, str]:
        return self.headers.get(USER_HEADER, ""), self.headers.get(TOKEN_HEADER, "")

    def _dispatch(self, method: str):
        url = urlsplit(self.path)
        parts = [unquote(p) for p in url.path.strip("/").split("/") if p]
        gw = self.gateway
        try:
            if method == "POST" and parts == ["query"]:
                b = self._body()
                views = b.get("views")
                if views is not None and not (isinstance(views, list) and all(isinstance(v, str) for v in views)):
                    raise BadRequest("views must be a list of view ids")
                resp = gw.handle_query(QueryRequest(
                    b.get("user", ""), b.get("token", ""), b.get("query", ""), views, b.get("format", "sparql-json")))
                return self._send(resp.http_status, resp.to_json())
            if method == "POST" and len(parts) == 3 and parts[0] == "graphs" and parts[2] == "write":
                b = self._body()
                resp = gw.handle_write(b.get("user", ""), b.get("token", ""), parts[1],
                                       _lines(b.get("inserts")), _lines(b.get("removes")))
                return self._send(resp.http_status, resp.to_json())
            if method == "POST" and parts in (["admin", "grant"], ["admin", "revoke"]):
                b = self._body()
                op = gw.admin_grant if parts[1] == "grant" else gw.admin_revoke
                actor = b.get("actor", b.get("user", ""))
                tx_id = op(actor, b.get("token", ""), b.get("kind", ""), b.get("payload"))
                return self._send(200, {"status": "ok", "tx_id": tx_id})
            if method == "GET" and parts == ["views"]:
                return self._send(200, {"views": gw.view_metadata()})
            if method == "GET" and len(parts) == 2 and parts[0] == "audit":
                user, token = self._creds()
                params = parse_qs(url.query)
                if parts[1] == "verify":
                    result = gw.audit_verify(user, token)
                    return self._send(200, result.to_json())
                if parts[1] == "txs":
                    txs = gw.audit_list(
                        user, token,
                        user=params.get("user", [None])[0],
                        kind=params.get("kind", [None])[0],
                        from_height=_int_param(params, "from"),
                        to_height=_int_param(params, "to"),
                    )
                    return self._send(200, {"txs": txs})
                if parts[1] == "export":
                    return self._send(200, gw.audit_export(user, token).encode("utf-8"))
            raise NotFound(f"no route for {method} {url.path}")
        except GatewayError as e:
            return self._send(e.status, {"status": "error", "error": e.message})
        except Exception:
            log.exception("unhandled error for %s %s", method, url.path)
            return self._send(500, {"status": "error", "error": "internal error"})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_server(gateway: Gateway, host: str = "127.0.0.1", port: int = 3030) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (Handler,), {"gateway": gateway})
    return ThreadingHTTPServer((host, port), handler)


class PeriodicFlusher(threading.Thread):
    """Writes buffered decision records to the chain every ``interval`` seconds."""

    def __init__(self, gateway: Gateway, interval: float):
        super().__init__(daemon=True, name="viewgate-flusher")
        self.gateway = gateway
        self.interval = interval
        self._stop_event = threading.Event()

    def run(self):
        while not self._stop_event.wait(self.interval):
            try:
                self.gateway.flush()
            except Exception:
                log.exception("periodic flush failed")

    def stop(self):
        self._stop_event.set()


def serve(gateway: Gateway, host: str, port: int) -> None:
    httpd = make_server(gateway, host, port)
    flusher = PeriodicFlusher(gateway, gateway.config.flush_interval)
    flusher.start()
    log.info("listening on http://%s:%d", host, port)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        flusher.stop()
        httpd.server_close()
        gateway.close()
