import contextlib
import random
import shutil
import socket
import sys
import threading
import time
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
import uvicorn

sys.path.insert(0, str(Path(__file__).parent))

from vamp.binding import bind_minibatches, bind_static
from vamp.crypto import generate_keypair, issue_certificate, read_certificate, read_private_key
from vamp.manifest import Manifest, ObjectType
from vamp.registry import Registry, create_app

CORPUS = Path(__file__).parent / "corpus"


@pytest.fixture(scope="session")
def corpus() -> Path:
    return CORPUS


class Pki:
    """A root, an intermediate-free publisher, and the trust store holding the root."""

    def __init__(self, root_key, root_cert, key, cert):
        self.root_key, self.root_cert = root_key, root_cert
        self.key, self.cert = key, cert
        self.chain = [cert, root_cert]
        self.trust = {root_cert}


@pytest.fixture(scope="session")
def fixed_pki() -> Pki:
    return Pki(
        read_private_key(CORPUS / "root.key"),
        read_certificate(CORPUS / "root.cert"),
        read_private_key(CORPUS / "publisher.key"),
        read_certificate(CORPUS / "publisher.cert"),
    )


def make_pki(subject="DatasetPublisher", algorithm="ed25519") -> Pki:
    rk, rp = generate_keypair(algorithm)
    root = issue_certificate("TestRoot", rp, rk)
    k, p = generate_keypair(algorithm)
    return Pki(rk, root, k, issue_certificate(subject, p, rk, root))


@pytest.fixture(scope="session")
def pki() -> Pki:
    return make_pki()


def make_manifest(object_id="d1", payload=b"a,b\n1,2\n3,4\n", object_type="dataset", **extra) -> Manifest:
    fields = dict(
        object_id=object_id,
        object_type=ObjectType(object_type),
        encoding_information="CSV",
        created_at="2024-01-01T00:00:00Z",
        bindings=(bind_static(payload), bind_minibatches(payload, 2)),
    )
    fields.update(extra)
    return Manifest(**fields)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240101)


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@contextlib.contextmanager
def live_registry(data_dir, trust, log_key):
    """Run a registry on a background uvicorn thread; yields its base URL."""
    port = free_port()
    app = create_app(Registry(data_dir, trust, log_key))
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("registry did not start")
        time.sleep(0.02)
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(10)


@pytest.fixture
def graph4(tmp_path) -> Path:
    dst = tmp_path / "graph4"
    shutil.copytree(CORPUS / "graph4", dst)
    return dst


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


def later(days: int) -> datetime:
    return datetime.now(timezone.utc) + timedelta(days=days)
