import itertools
import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import viewgate  # noqa: E402
from viewgate.gateway import Gateway  # noqa: E402

TOKENS = {
    "admin": "a" * 64,
    "alice": "b" * 64,
    "bob": "c" * 64,
    "carol": "d" * 64,
    "mallory": "e" * 64,
}


class Deployment:
    """A config + data directory on disk, and a way to (re)open gateways on it."""

    def __init__(self, root, graphs=None, catalog=None, block_size=100):
        self.root = root
        os.makedirs(root / "graphs", exist_ok=True)
        if graphs is None:
            graphs = {"arabidopsis": viewgate.fixture_text()}
        for gid, text in graphs.items():
            (root / "graphs" / f"{gid}.nt").write_text(text, encoding="utf-8")
        (root / "views.json").write_text(catalog if catalog is not None else viewgate.fixture_catalog())
        self.config = {
            "graphs": {gid: f"graphs/{gid}.nt" for gid in graphs},
            "catalog": "views.json",
            "credentials": dict(TOKENS),
            "super_users": ["admin"],
            "chain": "chain.bin",
            "block_size": block_size,
        }
        self.config_path = root / "viewgate.json"
        self.config_path.write_text(json.dumps(self.config))
        self._ticks = itertools.count(1_700_000_000)

    def clock(self):
        return next(self._ticks)

    def open(self) -> Gateway:
        return Gateway.open(str(self.config_path), clock=self.clock)

    @property
    def chain_path(self):
        return self.root / "chain.bin"

    def token(self, user):
        return TOKENS[user]


@pytest.fixture
def fixture_graph():
    return viewgate.load_fixture()


@pytest.fixture
def deployment(tmp_path):
    return Deployment(tmp_path)


@pytest.fixture
def gateway(deployment):
    gw = deployment.open()
    yield gw
    gw.close()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
