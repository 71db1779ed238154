"""``viewgate`` command line.

Operator commands (``load``, ``defview``, ``lint``, ``init``) act as the
gateway's node identity and need only file access to the config. User
commands (``query``, ``grant``, ``revoke``) take explicit credentials.
Don't run mutating commands against files a live ``serve`` process owns.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import ConfigError, load_config, new_token, parse_listen
from .gateway import Gateway, GatewayError
from .ledger import TX_KINDS
from .ntriples import NTriplesError, expand_prefixes, parse_ntriples
from .ontology import consistency_report
from .views import ViewError, parse_catalog


def _gateway(args) -> Gateway:
    return Gateway.open(args.config)


def _node_creds(gw: Gateway):
    actor = gw.config.node_actor
    return actor, gw.config.credentials[actor]


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_init(args):
    os.makedirs(args.dir, exist_ok=True)
    path = os.path.join(args.dir, "viewgate.json")
    if os.path.exists(path) and not args.force:
        raise ConfigError(f"{path} exists; pass --force to overwrite")
    users = list(dict.fromkeys(args.super_user + args.user))
    config = {
        "graphs": {g: f"graphs/{g}.nt" for g in args.graph},
        "catalog": "views.json",
        "credentials": {u: new_token() for u in users},
        "super_users": args.super_user,
        "chain": "chain.bin",
        "block_size": 100,
        "flush_interval": 1.0,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    os.chmod(path, 0o600)
    print(path)
    return 0


def cmd_serve(args):
    from .server import serve
    host, port = parse_listen(args.listen)
    serve(_gateway(args), host, port)
    return 0


def cmd_load(args):
    gw = _gateway(args)
    try:
        triples = parse_ntriples(expand_prefixes(_read(args.file), gw.config.prefixes))
        resp = gw.handle_write(*_node_creds(gw), args.graph, triples, ())
    finally:
        gw.close()
    if resp.status != "ok":
        print(f"error: {resp.error}", file=sys.stderr)
        return 1
    print(f"{args.graph}: {resp.inserted} inserted ({len(triples) - resp.inserted} already present), tx {resp.tx_id}")
    return 0


def cmd_defview(args):
    gw = _gateway(args)
    try:
        defs = parse_catalog(_read(args.file), gw.config.prefixes)
        ids = gw.define_views(*_node_creds(gw), defs)
    finally:
        gw.close()
    for vid in ids:
        print(f"defined {vid} (version {gw.catalog.views[vid].version}, {len(gw.catalog.views[vid])} triples)")
    return 0


def cmd_query(args):
    gw = _gateway(args)
    try:
        resp = gw.query(args.user, args.token, _read(args.file), args.view or None, args.format)
    finally:
        gw.close()
    if resp.status != "ok":
        print(f"{resp.status} ({resp.http_status}): {resp.error}; recorded as {resp.tx_id}", file=sys.stderr)
        return 1
    sys.stdout.write(resp.document)
    if not resp.document.endswith("\n"):
        sys.stdout.write("\n")
    print(f"views: {', '.join(resp.view_ids)}; tx {resp.tx_id}", file=sys.stderr)
    return 0


def _admin_payload(args) -> dict:
    if args.kind == "role":
        return {"user": args.target, "role": args.role}
    return {"role": args.target, "action": args.action, "resource": args.resource}


def cmd_admin(args):
    gw = _gateway(args)
    try:
        op = gw.admin_grant if args.command == "grant" else gw.admin_revoke
        tx_id = op(args.actor, args.token, args.kind, _admin_payload(args))
    finally:
        gw.close()
    print(tx_id)
    return 0


def cmd_audit(args):
    gw = _gateway(args)
    user, token = args.user, args.token
    if user is None:
        user, token = _node_creds(gw)
    try:
        if args.action == "verify":
            result = gw.audit_verify(user, token)
            if result:
                print(f"ok: {len(gw.ledger.chain) if gw.ledger else '?'} blocks")
                return 0
            print(f"FAILED at height {result.height}: {result.reason}")
            return 1
        if args.action == "export":
            sys.stdout.write(gw.audit_export(user, token) + "\n")
            return 0
        txs = gw.audit_list(user, token, user=args.filter_user, kind=args.kind,
                            from_height=args.from_height, to_height=args.to_height)
        for tx in txs:
            print(json.dumps(tx, sort_keys=True))
        return 0
    finally:
        gw.close()


def cmd_lint(args):
    gw = _gateway(args)
    if args.graph not in gw.store:
        print(f"error: unknown graph {args.graph!r}", file=sys.stderr)
        return 1
    report = consistency_report(gw.store[args.graph])
    sys.stdout.write(report.to_lines() if args.format == "lines" else report.to_table())
    return 1 if report.errors else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (default: $VIEWGATE_CONFIG)")

    p = argparse.ArgumentParser(prog="viewgate", description="Access-controlled view layer over RDF graphs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init", help="write a starter config with fresh tokens")
    s.add_argument("dir")
    s.add_argument("--super-user", action="append", default=[], required=True)
    s.add_argument("--user", action="append", default=[])
    s.add_argument("--graph", action="append", default=[])
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("serve", parents=[common], help="run the HTTP endpoint")
    s.add_argument("--listen", help="host:port (default: $VIEWGATE_LISTEN or 127.0.0.1:3030)")
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("load", parents=[common], help="insert an N-Triples file into a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("file")
    s.set_defaults(func=cmd_load)

    s = sub.add_parser("defview", parents=[common], help="add views from a catalog file")
    s.add_argument("file")
    s.set_defaults(func=cmd_defview)

    s = sub.add_parser("query", parents=[common], help="run a query file as a user")
    s.add_argument("--user", required=True)
    s.add_argument("--token", required=True)
    s.add_argument("--view", action="append", default=[])
    s.add_argument("--format", choices=("csv", "sparql-json"), default="csv")
    s.add_argument("file")
    s.set_defaults(func=cmd_query)

    for name in ("grant", "revoke"):
        s = sub.add_parser(name, parents=[common], help=f"{name} a role or a privilege")
        s.add_argument("--actor", required=True)
        s.add_argument("--token", required=True)
        kinds = s.add_subparsers(dest="kind", required=True)
        k = kinds.add_parser("role", help="ROLE to/from USER")
        k.add_argument("target", metavar="USER")
        k.add_argument("role", metavar="ROLE")
        k = kinds.add_parser("privilege", help="ACTION on RESOURCE to/from ROLE")
        k.add_argument("target", metavar="ROLE")
        k.add_argument("action", choices=("READ", "WRITE", "DELEGATE"))
        k.add_argument("resource", metavar="RESOURCE")
        s.set_defaults(func=cmd_admin)

    s = sub.add_parser("audit", parents=[common], help="verify, list or export the ledger")
    s.add_argument("action", choices=("verify", "list", "export"))
    s.add_argument("--user", help="super-user id (default: the node identity)")
    s.add_argument("--token")
    s.add_argument("--filter-user")
    s.add_argument("--kind", choices=TX_KINDS)
    s.add_argument("--from", dest="from_height", type=int)
    s.add_argument("--to", dest="to_height", type=int)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("lint", parents=[common], help="ontology consistency report for a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--format", choices=("table", "lines"), default="table")
    s.set_defaults(func=cmd_lint)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GatewayError as e:
        print(f"error ({e.status}): {e.message}", file=sys.stderr)
        return 1
    except (ConfigError, ViewError, NTriplesError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
