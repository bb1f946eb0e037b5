import json
import socket
import threading

import pytest

from cogledger import keys
from cogledger.keys import KeyFile
from cogledger.ledger import ChainState, ValidatorSet, make_genesis
from cogledger.node import NodeService, create_app, owner_request_message
from cogledger.records import ActivityKind, make_activity
from cogledger.encoding import sha256

SHELL = sha256(b"test-shell")


class FakeClock:
    """Deterministic wall clock for services under test."""

    def __init__(self, start: float = 1_700_000_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


@pytest.fixture
def keyfile():
    return KeyFile(keys.generate_key(), keys.generate_key())


@pytest.fixture
def validator_set(keyfile):
    return ValidatorSet.from_pubkeys([(keys.public_bytes(keyfile.validator_key), 1)])


@pytest.fixture
def chain(keyfile, validator_set):
    genesis = make_genesis(validator_set, keyfile.validator_key)
    return ChainState(validator_set, genesis, keyfile.account_id)


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def service(tmp_path, keyfile, validator_set, clock):
    svc = NodeService(tmp_path / "node", keyfile, validator_set, clock=clock)
    yield svc
    svc.close()


@pytest.fixture
def client(service):
    from fastapi.testclient import TestClient

    return TestClient(create_app(service), raise_server_exceptions=False)


class OwnerSession:
    """Signs requests with the owner account key, the way the wallet does."""

    def __init__(self, client, keyfile):
        self.client = client
        self.keyfile = keyfile

    def headers(self, method: str, path: str, body: bytes = b"") -> dict:
        msg = owner_request_message(method, path, body)
        return {
            "x-owner-pubkey": keys.public_bytes(self.keyfile.account_key).hex(),
            "x-owner-signature": keys.sign(self.keyfile.account_key, msg).hex(),
        }

    def get(self, path: str):
        return self.client.get(path, headers=self.headers("GET", path))

    def post(self, path: str, body: dict | None = None):
        raw = json.dumps(body or {}).encode()
        headers = self.headers("POST", path, raw)
        headers["content-type"] = "application/json"
        return self.client.post(path, content=raw, headers=headers)


@pytest.fixture
def owner(client, keyfile):
    return OwnerSession(client, keyfile)


def page_visit(actor, url="https://example.com/a", title="example page", ts=1000, **kw):
    return make_activity(
        actor=actor, kind=ActivityKind.PAGE_VISIT, shell_id=SHELL,
        captured_at=ts, url=url, title=title, **kw,
    )


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


@pytest.fixture
def live_node(tmp_path, keyfile, validator_set, clock):
    """A real HTTP server for CLI tests."""
    import uvicorn

    svc = NodeService(tmp_path / "live", keyfile, validator_set, clock=clock)
    port = free_port()
    config = uvicorn.Config(
        create_app(svc), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    import time as _time

    for _ in range(200):
        if server.started:
            break
        _time.sleep(0.02)
    yield f"http://127.0.0.1:{port}", svc
    server.should_exit = True
    thread.join(timeout=5)
    svc.close()
